"""Wealth updating of log-utility markets from labeled instances."""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import softmax

from .const import KIND_LOG_UTILITY, MODE_BATCH, MODE_ONLINE
from .core import MarketSpec, PriceVector, frozen_array, normalize_belief
from .equilibrium import SolverConfig, solve, solve_analytic
from .exceptions import (
    DegenerateDataError,
    DegeneratePriceError,
    MarketDomainError,
    UnsupportedBehaviorError,
)

_LOGGER = getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrainingInstance:
    """Beliefs every agent holds for one example and the realized good."""

    beliefs: NDArray[np.float64]
    label: int

    def __post_init__(self) -> None:
        """Check and freeze the belief rows."""
        rows = np.asarray(self.beliefs, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise MarketDomainError("instance beliefs must be one row per agent")
        if int(self.label) != self.label or self.label < 0:
            raise MarketDomainError(f"label {self.label} is not a good index")
        if self.label >= rows.shape[1]:
            raise MarketDomainError(
                f"label {self.label} outside [0, {rows.shape[1]})"
            )
        object.__setattr__(
            self, "beliefs", frozen_array([normalize_belief(row) for row in rows])
        )
        object.__setattr__(self, "label", int(self.label))

    @property
    def likelihoods(self) -> NDArray[np.float64]:
        """Return the probability each agent gave the realized good."""
        return self.beliefs[:, self.label]

    def check(self, spec: MarketSpec) -> None:
        """Raise unless the instance fits the market's agents and goods."""
        if self.beliefs.shape != (spec.num_agents, spec.num_goods):
            raise MarketDomainError(
                f"instance has beliefs of shape {self.beliefs.shape}, market needs "
                f"({spec.num_agents}, {spec.num_goods})"
            )


@dataclass(frozen=True, eq=False)
class WealthTrace:
    """Wealths before and after every instance, with the prices that settled it.

    ``wealths`` has one row per step, the initial wealths first. ``prices``
    has one row per instance.
    """

    wealths: NDArray[np.float64]
    prices: NDArray[np.float64]
    labels: tuple[int, ...]
    mode: str

    def __post_init__(self) -> None:
        """Freeze the recorded arrays."""
        object.__setattr__(self, "wealths", frozen_array(self.wealths))
        object.__setattr__(self, "prices", frozen_array(self.prices))
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def num_steps(self) -> int:
        """Return T, the number of instances."""
        return len(self.labels)

    @property
    def final_wealths(self) -> NDArray[np.float64]:
        """Return the wealths after the last instance."""
        return self.wealths[-1]

    @property
    def label_prices(self) -> NDArray[np.float64]:
        """Return the price of the realized good at every instance."""
        return self.prices[np.arange(self.num_steps), list(self.labels)]


def _check_trainable(spec: MarketSpec) -> None:
    for kind in spec.kinds:
        if kind != KIND_LOG_UTILITY:
            raise UnsupportedBehaviorError(f"training undefined for behavior {kind}")
    if not spec.is_full_scope:
        raise UnsupportedBehaviorError("training undefined for marginal agents")
    if not np.all(spec.wealths > 0):
        raise MarketDomainError("training needs strictly positive initial wealths")


def _settle(
    spec: MarketSpec,
    wealths: NDArray[np.float64],
    instance: TrainingInstance,
    step: int,
) -> PriceVector:
    """Clear one instance's market and return its prices."""
    instance.check(spec)
    market = spec.with_wealths(wealths).with_beliefs(instance.beliefs)
    prices = solve_analytic(market).prices
    if not prices[instance.label] > 0:
        raise DegeneratePriceError(
            f"step {step}: every agent gave the realized good {instance.label} "
            "probability 0",
            step,
        )
    return prices


def _empty_prices(spec: MarketSpec) -> NDArray[np.float64]:
    return np.empty((0, spec.num_goods))


def train_online(spec: MarketSpec, data: Iterable[TrainingInstance]) -> WealthTrace:
    """Update wealths after every instance.

    Each instance is priced at the current wealths, then every wealth is
    multiplied by the agent's probability of the realized good over its price.
    Total wealth is conserved.
    """
    _check_trainable(spec)
    wealths = spec.wealths
    rows, prices, labels = [wealths], [], []

    for step, instance in enumerate(data, start=1):
        settled = _settle(spec, wealths, instance, step)
        wealths = wealths * instance.likelihoods / settled[instance.label]
        rows.append(wealths)
        prices.append(settled)
        labels.append(instance.label)
        _LOGGER.debug(
            "Online step %d, label %d priced %g, wealths %s",
            step,
            instance.label,
            settled[instance.label],
            wealths,
        )

    return WealthTrace(
        np.array(rows),
        np.array(prices) if prices else _empty_prices(spec),
        labels,
        MODE_ONLINE,
    )


def train_batch(spec: MarketSpec, data: Iterable[TrainingInstance]) -> WealthTrace:
    """Settle every instance at the initial wealths, one wealth piece each.

    The final wealth of agent i is W_i / T times the sum over instances of its
    likelihood-to-price ratio. Trace row t holds the pieces settled after t
    instances plus the unsettled pieces at initial wealth, so every row keeps
    the total.
    """
    _check_trainable(spec)
    initial = spec.wealths
    prices, labels, ratios = [], [], []

    for step, instance in enumerate(data, start=1):
        settled = _settle(spec, initial, instance, step)
        prices.append(settled)
        labels.append(instance.label)
        ratios.append(instance.likelihoods / settled[instance.label])

    steps = len(ratios)
    if not steps:
        return WealthTrace(initial[None, :], _empty_prices(spec), labels, MODE_BATCH)

    piece = initial / steps
    settled_pieces = np.vstack([np.zeros_like(initial), np.cumsum(ratios, axis=0)])
    unsettled = (steps - np.arange(steps + 1))[:, None] * piece
    rows = unsettled + piece * settled_pieces
    _LOGGER.debug("Batch training over %d instances, wealths %s", steps, rows[-1])
    return WealthTrace(rows, np.array(prices), labels, MODE_BATCH)


def bayesian_posterior(
    prior: ArrayLike, data: Iterable[TrainingInstance]
) -> NDArray[np.float64]:
    """Return each agent's posterior probability of having generated the labels.

    The posterior is proportional to prior_i times the product of the
    probabilities agent i gave every realized good, computed in log space.
    ``prior`` may be unnormalized, so wealths can be passed directly.
    """
    weights = np.asarray(prior, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise MarketDomainError("prior must be a non-empty vector")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise MarketDomainError("prior must be finite and strictly positive")

    log_posterior = np.log(weights / weights.sum())
    with np.errstate(divide="ignore"):
        for instance in data:
            if instance.beliefs.shape[0] != weights.size:
                raise MarketDomainError(
                    f"instance has {instance.beliefs.shape[0]} agents, prior has {weights.size}"
                )
            log_posterior = log_posterior + np.log(instance.likelihoods)

    if not np.any(np.isfinite(log_posterior)):
        raise DegenerateDataError("every agent gave some realized label probability 0")
    return softmax(log_posterior)


def market_log_loss(
    spec: MarketSpec,
    data: Iterable[TrainingInstance],
    config: SolverConfig | None = None,
) -> float | None:
    """Return the mean negative log price of the realized goods.

    Prices come from clearing each instance at the market's wealths. An empty
    dataset has no loss.
    """
    losses = []
    for instance in data:
        instance.check(spec)
        prices = solve(spec.with_beliefs(instance.beliefs), config).prices
        price = prices[instance.label]
        losses.append(-np.log(price) if price > 0 else np.inf)
    return float(np.mean(losses)) if losses else None


def with_uniform_wealths(spec: MarketSpec) -> MarketSpec:
    """Return the market with every wealth set to 1 / N_A."""
    return spec.with_wealths(np.full(spec.num_agents, 1.0 / spec.num_agents))
