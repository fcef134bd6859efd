"""Equilibrium prices: closed forms, fixed points and a numeric solver."""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import least_squares
from scipy.special import softmax
import voluptuous as vol

from .behavior import BehaviorSpec, proportion, stockholding
from .const import (
    CONF_DAMPING,
    CONF_MAX_ITERATIONS,
    CONF_TOLERANCE,
    DEFAULT_DAMPING,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    KIND_CONSTANT_BET,
    KIND_EXP_UTILITY,
    KIND_ISOELASTIC_UTILITY,
    KIND_LOG_UTILITY,
    LOG_FLOOR,
    METHOD_ANALYTIC,
    METHOD_AUTO,
    METHOD_FIXED_POINT,
    METHOD_ISOELASTIC,
    METHOD_NUMERIC,
    METHOD_PARIMUTUEL,
    MIN_DAMPING,
    SOLVER_CONFIG_SCHEMA,
)
from .core import Agent, MarketSpec, OutcomeSpace, PriceVector, frozen_array
from .exceptions import (
    MarketDomainError,
    NonConvergenceError,
    SingularPriceError,
    UnsupportedAnalyticError,
    UnsupportedBehaviorError,
    WrongClearingRuleError,
)
from .marginal import marginal_demand

_LOGGER = getLogger(__name__)

ANALYTIC_KINDS = (KIND_LOG_UTILITY, KIND_CONSTANT_BET, KIND_EXP_UTILITY)

# least_squares rejects tolerances below machine epsilon
LSQ_TOLERANCE = 1e-15
# Residual returned where a trial price underflows to zero
SINGULAR_PENALTY = 1e150


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and step size shared by the iterative solvers."""

    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    damping: float = DEFAULT_DAMPING

    def __post_init__(self) -> None:
        """Validate the configuration."""
        try:
            SOLVER_CONFIG_SCHEMA(
                {
                    CONF_TOLERANCE: self.tolerance,
                    CONF_MAX_ITERATIONS: self.max_iterations,
                    CONF_DAMPING: self.damping,
                }
            )
        except vol.Invalid as err:
            raise MarketDomainError(f"invalid solver configuration: {err}") from err


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Prices returned by a solver with their equilibrium certificate."""

    prices: PriceVector
    score: float
    iterations: int
    method: str

    def __post_init__(self) -> None:
        """Freeze the prices."""
        object.__setattr__(self, "prices", frozen_array(self.prices))


def _as_prices(spec: MarketSpec, prices: ArrayLike) -> NDArray[np.float64]:
    price = np.asarray(prices, dtype=float)
    if price.shape != (spec.num_goods,):
        raise MarketDomainError(
            f"expected {spec.num_goods} prices, got shape {price.shape}"
        )
    return price


def _uniform(spec: MarketSpec) -> NDArray[np.float64]:
    return np.full(spec.num_goods, 1.0 / spec.num_goods)


def _total_wealth(spec: MarketSpec) -> float:
    total = float(spec.wealths.sum())
    if not total > 0:
        raise MarketDomainError("no agent has positive wealth")
    return total


def excess_demand(spec: MarketSpec, prices: ArrayLike) -> NDArray[np.float64]:
    """Return the aggregate demand of all agents at ``prices``."""
    betting = [agent.id for agent in spec.agents if agent.behavior.is_betting]
    if betting:
        raise WrongClearingRuleError(
            f"agents {', '.join(betting)} use betting functions, which clear "
            "parimutuel-style rather than by excess demand"
        )

    price = _as_prices(spec, prices)
    total = np.zeros(spec.num_goods)
    for agent in spec.agents:
        total += marginal_demand(spec.space, agent, price)
    return total


def equilibrium_score(spec: MarketSpec, prices: ArrayLike) -> float:
    """Return E(c), the squared norm of the excess demand."""
    excess = excess_demand(spec, prices)
    return float(excess @ excess)


def _stakes(spec: MarketSpec, price: NDArray[np.float64]) -> NDArray[np.float64]:
    total = np.zeros(spec.num_goods)
    for agent in spec.agents:
        total += agent.wealth * proportion(agent.behavior, agent.belief, price)
    return total


def _check_parimutuel(spec: MarketSpec) -> None:
    utility = [agent.id for agent in spec.agents if not agent.behavior.is_betting]
    if utility:
        raise WrongClearingRuleError(
            f"agents {', '.join(utility)} use utilities, which clear by excess demand"
        )
    if not spec.is_full_scope:
        raise UnsupportedBehaviorError("betting functions are undefined on marginal goods")


def parimutuel_score(spec: MarketSpec, prices: ArrayLike) -> float:
    """Return how far stakes are from balancing prices in a betting market.

    Each good's stake should equal its price share of the whole pool.
    """
    _check_parimutuel(spec)
    price = _as_prices(spec, prices)
    stakes = _stakes(spec, price)
    imbalance = stakes - price * stakes.sum()
    return float(imbalance @ imbalance)


def _analytic_kind(spec: MarketSpec) -> str | None:
    if not spec.agents or not spec.is_homogeneous or not spec.is_full_scope:
        return None
    kind = spec.kinds[0]
    return kind if kind in ANALYTIC_KINDS else None


def _support_score(spec: MarketSpec, prices: NDArray[np.float64]) -> float:
    """Score a closed-form price, ignoring goods priced at exactly zero."""
    support = prices > 0
    excess = np.zeros(int(support.sum()))
    for agent in spec.agents:
        if agent.behavior.is_betting:
            return parimutuel_score(spec, prices)
        excess += stockholding(
            agent.behavior, agent.wealth, agent.belief[support], prices[support]
        )
    return float(excess @ excess)


def solve_analytic(spec: MarketSpec) -> EquilibriumResult:
    """Return the closed-form equilibrium of a homogeneous market.

    Logarithmic utilities and constant bets price at the wealth-weighted mean
    belief; exponential utilities at the normalized geometric mean belief.
    """
    kind = _analytic_kind(spec)
    if kind is None:
        raise UnsupportedAnalyticError(
            "closed forms exist only for homogeneous full-scope markets of "
            f"{', '.join(ANALYTIC_KINDS)} agents"
        )

    beliefs = spec.beliefs
    if kind == KIND_EXP_UTILITY:
        prices = softmax(np.log(np.maximum(beliefs, LOG_FLOOR)).mean(axis=0))
    else:
        prices = spec.wealths @ beliefs / _total_wealth(spec)

    score = _support_score(spec, prices)
    _LOGGER.debug("Closed-form %s equilibrium with score %g", kind, score)
    return EquilibriumResult(prices, score, 0, METHOD_ANALYTIC)


def _damped_fixed_point(
    image: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    score: Callable[[NDArray[np.float64]], float],
    initial: NDArray[np.float64],
    config: SolverConfig,
) -> EquilibriumResult:
    """Iterate c <- (1 - d) c + d T(c) until the score drops below tolerance.

    The undamped image is accepted outright when it already clears. Otherwise
    the step starts at the configured damping and is halved until the score
    decreases.
    """
    prices = initial
    current = score(prices)
    if current < config.tolerance:
        return EquilibriumResult(prices, current, 0, METHOD_FIXED_POINT)

    for iteration in range(1, config.max_iterations + 1):
        target = image(prices)
        target_score = score(target)
        if target_score < config.tolerance:
            _LOGGER.debug(
                "Fixed point reached after %d iterations, score %g",
                iteration,
                target_score,
            )
            return EquilibriumResult(target, target_score, iteration, METHOD_FIXED_POINT)

        step = config.damping
        while True:
            candidate = (1.0 - step) * prices + step * target
            candidate_score = score(candidate)
            if candidate_score < current:
                break
            step /= 2
            if step < MIN_DAMPING:
                _LOGGER.warning(
                    "Fixed point stalled at iteration %d with score %g",
                    iteration,
                    current,
                )
                raise NonConvergenceError(
                    f"fixed point stalled with score {current:g}",
                    prices,
                    current,
                    iteration,
                    METHOD_FIXED_POINT,
                )

        prices, current = candidate, candidate_score
        if current < config.tolerance:
            _LOGGER.debug(
                "Fixed point reached after %d iterations, score %g", iteration, current
            )
            return EquilibriumResult(prices, current, iteration, METHOD_FIXED_POINT)

    _LOGGER.warning(
        "Fixed point did not converge in %d iterations, score %g",
        config.max_iterations,
        current,
    )
    raise NonConvergenceError(
        f"no convergence in {config.max_iterations} iterations, score {current:g}",
        prices,
        current,
        config.max_iterations,
        METHOD_FIXED_POINT,
    )


def solve_isoelastic(
    spec: MarketSpec, config: SolverConfig | None = None
) -> EquilibriumResult:
    """Return the equilibrium of a market of isoelastic agents.

    The price relation has no closed form. Its map
    T(c)_k = c_k * sum_i W_i g_ik(c) / sum_i W_i, with
    g_ik = (P_i(k) / c_k)^(1/eta_i) / sum_j c_j (P_i(j) / c_j)^(1/eta_i),
    stays on the simplex and is iterated with damping from uniform prices.
    Agents may hold different eta values.
    """
    config = config or SolverConfig()
    if not spec.is_full_scope or any(kind != KIND_ISOELASTIC_UTILITY for kind in spec.kinds):
        raise MarketDomainError(
            "the isoelastic fixed point needs full-scope isoelastic agents only"
        )

    wealths = spec.wealths
    total = _total_wealth(spec)
    log_beliefs = np.log(np.maximum(spec.beliefs, LOG_FLOOR))
    inverse_eta = np.array([1.0 / agent.behavior.eta for agent in spec.agents])

    def image(prices: NDArray[np.float64]) -> NDArray[np.float64]:
        scaled = np.exp((log_beliefs - np.log(prices)) * inverse_eta[:, None])
        relative = scaled / (scaled @ prices)[:, None]
        target = prices * (wealths @ relative) / total
        return target / target.sum()

    return _damped_fixed_point(
        image, lambda prices: equilibrium_score(spec, prices), _uniform(spec), config
    )


def solve_parimutuel(
    spec: MarketSpec, config: SolverConfig | None = None
) -> EquilibriumResult:
    """Return the parimutuel clearing prices of a betting market.

    Prices are the fixed point of c_k = stake on k / total stake. Constant bets
    do not depend on prices, so they clear in one step at the wealth-weighted
    mean belief. An empty pool leaves prices where they are.
    """
    config = config or SolverConfig()
    _check_parimutuel(spec)
    _total_wealth(spec)

    def image(prices: NDArray[np.float64]) -> NDArray[np.float64]:
        stakes = _stakes(spec, prices)
        pool = stakes.sum()
        return prices if pool <= 0 else stakes / pool

    return _damped_fixed_point(
        image, lambda prices: parimutuel_score(spec, prices), _uniform(spec), config
    )


def solve_numeric(
    spec: MarketSpec, config: SolverConfig | None = None
) -> EquilibriumResult:
    """Minimize E(c) over the open simplex.

    Prices are the softmax of N_G - 1 free logits with the last logit fixed at
    0, starting from uniform prices. Levenberg-Marquardt works on the excess
    demand residuals, whose squared norm is E(c).
    """
    config = config or SolverConfig()
    if spec.has_betting:
        raise WrongClearingRuleError(
            "betting markets clear parimutuel-style, use solve_parimutuel"
        )

    def prices_of(logits: NDArray[np.float64]) -> NDArray[np.float64]:
        return softmax(np.append(logits, 0.0))

    def residual(logits: NDArray[np.float64]) -> NDArray[np.float64]:
        try:
            return excess_demand(spec, prices_of(logits))
        except SingularPriceError:
            return np.full(spec.num_goods, SINGULAR_PENALTY)

    fit = least_squares(
        residual,
        np.zeros(spec.num_goods - 1),
        method="lm",
        ftol=LSQ_TOLERANCE,
        xtol=LSQ_TOLERANCE,
        gtol=max(config.tolerance * 1e-2, LSQ_TOLERANCE),
        max_nfev=config.max_iterations,
    )
    prices = prices_of(fit.x)
    excess = residual(fit.x)
    score = float(excess @ excess)

    if not score < config.tolerance:
        _LOGGER.warning(
            "Numeric solver stopped with score %g after %d evaluations: %s",
            score,
            fit.nfev,
            fit.message,
        )
        raise NonConvergenceError(
            f"numeric solver stopped with score {score:g}: {fit.message}",
            prices,
            score,
            fit.nfev,
            METHOD_NUMERIC,
        )

    _LOGGER.debug("Numeric equilibrium after %d evaluations, score %g", fit.nfev, score)
    return EquilibriumResult(prices, score, fit.nfev, METHOD_NUMERIC)


def solve(
    spec: MarketSpec, config: SolverConfig | None = None, method: str = METHOD_AUTO
) -> EquilibriumResult:
    """Clear a market with the named method, or pick one.

    ``auto`` uses parimutuel clearing for betting markets, the closed form
    where one exists, the isoelastic fixed point for isoelastic markets and
    the numeric solver otherwise.
    """
    config = config or SolverConfig()
    if method == METHOD_AUTO:
        if spec.has_betting:
            method = METHOD_PARIMUTUEL
        elif _analytic_kind(spec) is not None:
            method = METHOD_ANALYTIC
        elif spec.is_full_scope and set(spec.kinds) == {KIND_ISOELASTIC_UTILITY}:
            method = METHOD_ISOELASTIC
        else:
            method = METHOD_NUMERIC
        _LOGGER.debug("Clearing market with the %s method", method)

    if method == METHOD_ANALYTIC:
        return solve_analytic(spec)
    if method == METHOD_ISOELASTIC:
        return solve_isoelastic(spec, config)
    if method == METHOD_PARIMUTUEL:
        return solve_parimutuel(spec, config)
    if method == METHOD_NUMERIC:
        return solve_numeric(spec, config)
    raise MarketDomainError(f"unknown solve method {method}")


def aggregate_beliefs(
    beliefs: ArrayLike,
    wealths: ArrayLike | None = None,
    behavior: BehaviorSpec | None = None,
    config: SolverConfig | None = None,
) -> PriceVector:
    """Pool beliefs by clearing a homogeneous market of their holders.

    Wealths default to uniform and behavior to logarithmic utility.
    """
    rows = np.atleast_2d(np.asarray(beliefs, dtype=float))
    weights = (
        np.full(rows.shape[0], 1.0 / rows.shape[0])
        if wealths is None
        else np.asarray(wealths, dtype=float)
    )
    behavior = behavior or BehaviorSpec(KIND_LOG_UTILITY)
    spec = MarketSpec(
        OutcomeSpace.single(rows.shape[1]),
        tuple(
            Agent(f"agent_{index}", weight, row, behavior)
            for index, (weight, row) in enumerate(zip(weights, rows))
        ),
    )
    return solve(spec, config).prices
