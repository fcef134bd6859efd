"""Closed-form opinion pools, kept independent of the equilibrium solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import BeliefVector, frozen_array
from .exceptions import DegenerateDataError, MarketDomainError


@dataclass(frozen=True, eq=False)
class PoolInput:
    """Beliefs and the nonnegative weight each one carries."""

    beliefs: NDArray[np.float64]
    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        """Check shapes and weights."""
        beliefs = np.atleast_2d(np.asarray(self.beliefs, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if weights.ndim != 1 or beliefs.shape[0] != weights.size:
            raise MarketDomainError(
                f"{beliefs.shape[0]} beliefs but {weights.size} weights"
            )
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise MarketDomainError("weights must be finite and nonnegative")
        if not weights.sum() > 0:
            raise MarketDomainError("at least one weight must be positive")
        object.__setattr__(self, "beliefs", frozen_array(beliefs))
        object.__setattr__(self, "weights", frozen_array(weights))


def weighted_average_pool(pool: PoolInput) -> BeliefVector:
    """Return sum_i w_i P_i / sum_i w_i."""
    return pool.weights @ pool.beliefs / pool.weights.sum()


def product_pool(beliefs: ArrayLike, exponent: float) -> BeliefVector:
    """Return the normalized product of the beliefs, each raised to ``exponent``."""
    rows = np.atleast_2d(np.asarray(beliefs, dtype=float))
    if rows.shape[0] == 0:
        raise MarketDomainError("product pool needs at least one belief")
    if not exponent > 0:
        raise MarketDomainError(f"exponent must be positive, got {exponent}")

    product = np.prod(rows**exponent, axis=0)
    total = product.sum()
    if not total > 0:
        raise DegenerateDataError("the beliefs share no good with positive probability")
    return product / total


def gated_pool(gates: ArrayLike, beliefs: ArrayLike) -> BeliefVector:
    """Mix expert beliefs with instance-dependent gate weights.

    One gate vector mixes one belief matrix. Stacked gates (instances x experts)
    with stacked beliefs (instances x experts x goods) return one pooled row
    per instance.
    """
    weights = np.asarray(gates, dtype=float)
    rows = np.asarray(beliefs, dtype=float)
    if weights.ndim == 1:
        return weighted_average_pool(PoolInput(rows, weights))
    if rows.ndim != 3 or rows.shape[0] != weights.shape[0]:
        raise MarketDomainError(
            f"gates of shape {weights.shape} do not match beliefs of shape {rows.shape}"
        )
    return np.array(
        [weighted_average_pool(PoolInput(row, gate)) for gate, row in zip(weights, rows)]
    )
