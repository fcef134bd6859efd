"""Helpers for building markets in market pool tests."""
from __future__ import annotations

import numpy as np

from market_pool.behavior import BehaviorSpec
from market_pool.const import KIND_ISOELASTIC_UTILITY, KIND_LOG_UTILITY
from market_pool.core import Agent, MarketSpec, OutcomeSpace


def make_market(beliefs, wealths=None, kind=KIND_LOG_UTILITY, eta=None, space=None):
    """Return a full-scope homogeneous market."""
    rows = np.asarray(beliefs, dtype=float)
    wealths = np.ones(len(rows)) if wealths is None else wealths
    if eta is None and kind == KIND_ISOELASTIC_UTILITY:
        eta = 1.0
    behavior = BehaviorSpec(kind, eta)
    return MarketSpec(
        space or OutcomeSpace.single(rows.shape[1]),
        tuple(
            Agent(f"agent_{index}", wealth, row, behavior)
            for index, (wealth, row) in enumerate(zip(wealths, rows))
        ),
    )


def interior_beliefs(rng, num_agents, num_goods):
    """Return random beliefs bounded away from the simplex faces."""
    raw = rng.dirichlet(np.ones(num_goods), size=num_agents)
    return 0.9 * raw + 0.1 / num_goods


def random_market(seed, kind=KIND_LOG_UTILITY, eta=None, max_agents=6, max_goods=8):
    """Return a random homogeneous market drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    num_agents = int(rng.integers(1, max_agents + 1))
    num_goods = int(rng.integers(2, max_goods + 1))
    return make_market(
        interior_beliefs(rng, num_agents, num_goods),
        rng.uniform(0.1, 10.0, num_agents),
        kind,
        eta,
    )
