"""Demand of utility-maximizing and betting agents."""
from __future__ import annotations

from dataclasses import dataclass
from logging import getLogger
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import (
    ALL_KINDS,
    BETTING_KINDS,
    DEFAULT_EPSILON,
    DEFAULT_JACOBIAN_STEP,
    KIND_AGGRESSIVE_BET,
    KIND_CONSTANT_BET,
    KIND_EXP_UTILITY,
    KIND_ISOELASTIC_UTILITY,
    KIND_LINEAR_BET,
    KIND_LOG_UTILITY,
    LOG_FLOOR,
    UTILITY_KINDS,
    WEALTH_PROPORTIONAL_KINDS,
)
from .exceptions import MarketDomainError, SingularPriceError

if TYPE_CHECKING:
    from .core import Agent, ProportionVector, StockholdingVector

_LOGGER = getLogger(__name__)


@dataclass(frozen=True)
class BehaviorSpec:
    """How an agent turns wealth, belief and prices into a stockholding."""

    kind: str
    eta: float | None = None
    epsilon: float | None = None

    @property
    def is_utility(self) -> bool:
        """Return whether demand comes from expected-utility maximization."""
        return self.kind in UTILITY_KINDS

    @property
    def is_betting(self) -> bool:
        """Return whether demand is a direct betting function."""
        return self.kind in BETTING_KINDS

    @property
    def is_wealth_proportional(self) -> bool:
        """Return whether demand scales with wealth."""
        return self.kind in WEALTH_PROPORTIONAL_KINDS

    @property
    def effective_epsilon(self) -> float:
        """Return the aggressive-bet ramp width."""
        return DEFAULT_EPSILON if self.epsilon is None else self.epsilon

    def violations(self) -> list[str]:
        """Describe every parameter invariant this behavior breaks."""
        if self.kind not in ALL_KINDS:
            return [f"unknown kind {self.kind}"]

        problems = []
        if self.kind == KIND_ISOELASTIC_UTILITY and not (
            self.eta is not None and np.isfinite(self.eta) and self.eta > 0
        ):
            problems.append("eta must be positive for isoelastic_utility")
        if self.kind == KIND_AGGRESSIVE_BET and not 0 < self.effective_epsilon <= 1:
            problems.append("epsilon must lie in (0, 1] for aggressive_bet")
        return problems


def utility_value(kind: str, eta: float | None, x: ArrayLike) -> float | NDArray:
    """Evaluate the utility of wealth ``x`` for a utility kind.

    Logarithmic utility is -inf for non-positive wealth. Isoelastic utility is
    evaluated through expm1 so it stays accurate as eta approaches 1, and
    eta == 1 is the logarithmic case.
    """
    if kind not in UTILITY_KINDS:
        raise MarketDomainError(f"{kind} is not a utility kind")

    wealth = np.asarray(x, dtype=float)
    positive = wealth > 0
    safe = np.where(positive, wealth, 1.0)

    with np.errstate(over="ignore"):
        if kind == KIND_EXP_UTILITY:
            value = -np.exp(-wealth)
        elif kind == KIND_LOG_UTILITY or eta == 1:
            value = np.where(positive, np.log(safe), -np.inf)
        else:
            if eta is None or not eta > 0:
                raise MarketDomainError("eta must be positive for isoelastic_utility")
            exponent = 1.0 - eta
            value = np.where(positive, np.expm1(exponent * np.log(safe)) / exponent, -np.inf)
            if eta < 1:
                value = np.where(wealth == 0, -1.0 / exponent, value)

    return float(value) if value.ndim == 0 else value


def proportion(
    behavior: BehaviorSpec, belief: ArrayLike, prices: ArrayLike
) -> ProportionVector:
    """Return the fraction of wealth a betting agent stakes on each good."""
    if not behavior.is_betting:
        raise MarketDomainError(f"{behavior.kind} is not a betting kind")

    probabilities = np.asarray(belief, dtype=float)
    price = np.asarray(prices, dtype=float)

    if behavior.kind == KIND_CONSTANT_BET:
        fractions = probabilities.copy()
    elif behavior.kind == KIND_LINEAR_BET:
        fractions = (1.0 - price) * probabilities
    else:
        fractions = np.clip((probabilities - price) / behavior.effective_epsilon, 0.0, 1.0)

    # One shared budget: an agent cannot stake more than its wealth
    total = fractions.sum()
    if total > 1.0:
        fractions = fractions / total
    return fractions


def stockholding(
    behavior: BehaviorSpec, wealth: float, belief: ArrayLike, prices: ArrayLike
) -> StockholdingVector:
    """Return the demanded holding for a belief and prices over the same goods.

    Betting kinds return currency staked per good. Utility kinds return
    contracts and satisfy the gauge ``holding @ prices == 0``.
    """
    probabilities = np.asarray(belief, dtype=float)
    price = np.asarray(prices, dtype=float)
    if probabilities.shape != price.shape:
        raise MarketDomainError(
            f"belief has {probabilities.size} entries but prices have {price.size}"
        )

    if behavior.is_betting:
        return wealth * proportion(behavior, probabilities, price)

    if behavior.kind not in UTILITY_KINDS:
        raise MarketDomainError(f"unknown kind {behavior.kind}")
    if np.any(price <= 0):
        raise SingularPriceError(
            f"{behavior.kind} demand is undefined at zero price for goods "
            f"{np.flatnonzero(price <= 0).tolist()}"
        )

    if behavior.kind == KIND_LOG_UTILITY:
        return wealth * (probabilities - price) / price

    log_ratio = np.log(np.maximum(probabilities, LOG_FLOOR)) - np.log(price)
    if behavior.kind == KIND_EXP_UTILITY:
        return log_ratio - price @ log_ratio

    scaled = np.exp(log_ratio / behavior.eta)
    return wealth * (scaled / (price @ scaled) - 1.0)


def demand(agent: Agent, prices: ArrayLike) -> StockholdingVector:
    """Return the stockholding a full-scope agent demands at ``prices``."""
    if agent.subspace is not None:
        raise MarketDomainError(
            f"agent {agent.id} trades marginal goods, use marginal_demand"
        )
    return stockholding(agent.behavior, agent.wealth, agent.belief, prices)


def demand_jacobian_check(
    agent: Agent, prices: ArrayLike, h: float = DEFAULT_JACOBIAN_STEP
) -> float:
    """Measure how far the analytic demand is from the first-order condition.

    At the optimum P(k) U'(W + s_k) / c_k is the same multiplier for every good.
    U' is taken by central differences with step ``h``, absolute for the
    exponential kind and relative to the wealth argument otherwise. The
    difference is taken around 0 or 1 and carried to the wealth by the
    translation or scaling law of each utility, which keeps it free of
    cancellation at small wealths. Goods the agent gives zero probability sit
    at a corner and are skipped. A log or isoelastic agent without wealth
    holds nothing and reports 0.
    """
    behavior = agent.behavior
    if not behavior.is_utility:
        raise MarketDomainError(
            f"agent {agent.id} uses {behavior.kind}, which has no utility"
        )

    price = np.asarray(prices, dtype=float)
    holding = demand(agent, price)
    if behavior.is_wealth_proportional and agent.wealth == 0:
        # No wealth, no trade: nothing to certify
        _LOGGER.debug("Agent %s has no wealth, stationarity is trivial", agent.id)
        return 0.0
    support = agent.belief > 0
    wealth = agent.wealth + holding[support]

    if behavior.kind == KIND_EXP_UTILITY:
        # U(x + t) = exp(-x) U(t)
        centre, scale = 0.0, np.exp(-wealth)
    else:
        # U(x t) - U(x u) = x^(1 - eta) (U(t) - U(u))
        eta = 1.0 if behavior.kind == KIND_LOG_UTILITY else behavior.eta
        centre, scale = 1.0, wealth ** (-eta)
    unit = (
        utility_value(behavior.kind, behavior.eta, centre + h)
        - utility_value(behavior.kind, behavior.eta, centre - h)
    ) / (2 * h)
    marginal = scale * unit

    ratios = agent.belief[support] * marginal / price[support]
    deviation = float(np.max(np.abs(ratios - ratios.mean())))
    _LOGGER.debug("Stationarity deviation for agent %s: %g", agent.id, deviation)
    return deviation
