"""Marginal agents: beliefs and trades on a subset of the variables.

A marginal good is a bundle paying 1 on every full outcome whose projection
onto the subspace equals that marginal outcome, so its price is the sum of the
full prices it covers. Subspace tables are enumerated lexicographically in the
order the subspace lists its variables.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from logging import getLogger

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .behavior import demand, stockholding
from .core import Agent, BeliefVector, OutcomeSpace, frozen_array
from .exceptions import MarketDomainError, UnsupportedBehaviorError

_LOGGER = getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SubspaceBelief:
    """A belief table over the joint outcomes of a variable subset."""

    subspace: tuple[str, ...]
    table: BeliefVector

    def __post_init__(self) -> None:
        """Freeze the table."""
        object.__setattr__(self, "subspace", tuple(self.subspace))
        object.__setattr__(self, "table", frozen_array(self.table))

    @classmethod
    def of(cls, agent: Agent) -> SubspaceBelief:
        """Return the subspace belief a marginal agent holds."""
        if agent.subspace is None:
            raise MarketDomainError(f"agent {agent.id} holds a full-space belief")
        return cls(agent.subspace, agent.belief)


def _positions(space: OutcomeSpace, subspace: Sequence[str]) -> list[int]:
    if not subspace:
        raise MarketDomainError("subspace must name at least one variable")
    if len(set(subspace)) != len(subspace):
        raise MarketDomainError(f"subspace {list(subspace)} repeats a variable")
    return [space.position(name) for name in subspace]


def subspace_space(space: OutcomeSpace, subspace: Sequence[str]) -> OutcomeSpace:
    """Return the outcome space spanned by a variable subset."""
    return OutcomeSpace(tuple(space.variables[pos] for pos in _positions(space, subspace)))


def projection(space: OutcomeSpace, subspace: Sequence[str]) -> NDArray[np.intp]:
    """Return, for every full good, the index of the marginal outcome it maps to."""
    positions = _positions(space, subspace)
    shape = tuple(space.shape[pos] for pos in positions)
    return np.ravel_multi_index(tuple(space.assignments[positions]), shape)


def marginal_price(
    space: OutcomeSpace, prices: ArrayLike, subspace: Sequence[str]
) -> NDArray[np.float64]:
    """Sum full prices over every good consistent with each marginal outcome."""
    price = np.asarray(prices, dtype=float)
    if price.shape != (space.num_goods,):
        raise MarketDomainError(
            f"expected {space.num_goods} prices, got shape {price.shape}"
        )
    size = subspace_space(space, subspace).num_goods
    return np.bincount(projection(space, subspace), weights=price, minlength=size)


def expand_stockholding(
    space: OutcomeSpace, subspace: Sequence[str], marginal_shares: ArrayLike
) -> NDArray[np.float64]:
    """Return the full-space holding equivalent to holding marginal bundles."""
    shares = np.asarray(marginal_shares, dtype=float)
    size = subspace_space(space, subspace).num_goods
    if shares.shape != (size,):
        raise MarketDomainError(
            f"subspace {list(subspace)} has {size} outcomes, got shape {shares.shape}"
        )
    return shares[projection(space, subspace)]


def marginal_demand(
    space: OutcomeSpace, agent: Agent, prices: ArrayLike
) -> NDArray[np.float64]:
    """Return the full-space demand of an agent, marginal or not.

    A marginal agent optimizes over its bundle goods at marginal prices, the
    full-space rule applied on the subspace; the result is then expanded.
    """
    if agent.subspace is None:
        return demand(agent, prices)
    if agent.behavior.is_betting:
        raise UnsupportedBehaviorError(
            f"marginal agent {agent.id} uses {agent.behavior.kind}; "
            "betting functions are undefined on marginal goods"
        )

    bundle_prices = marginal_price(space, prices, agent.subspace)
    shares = stockholding(agent.behavior, agent.wealth, agent.belief, bundle_prices)
    return expand_stockholding(space, agent.subspace, shares)
