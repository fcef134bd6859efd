"""Test closed-form opinion pools."""
from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from market_pool.const import KIND_LOG_UTILITY
from market_pool.equilibrium import solve
from market_pool.exceptions import DegenerateDataError, MarketDomainError
from market_pool.pools import PoolInput, gated_pool, product_pool, weighted_average_pool

from .common import interior_beliefs, make_market
from .const import BELIEF_A, BELIEF_B, EXP_BELIEF_A, EXP_BELIEF_B, GEOMETRIC_MEAN


def test_weighted_average_pool() -> None:
    """Test the weighted average."""
    assert weighted_average_pool(
        PoolInput([BELIEF_A, BELIEF_B], [1, 1])
    ) == pytest.approx([0.6, 0.4])
    assert weighted_average_pool(
        PoolInput([[1.0, 0.0], [0.0, 1.0]], [3, 1])
    ) == pytest.approx([0.75, 0.25])
    assert weighted_average_pool(PoolInput([BELIEF_A], [2])) == pytest.approx(BELIEF_A)


@pytest.mark.parametrize(
    "beliefs,weights",
    [
        ([BELIEF_A, BELIEF_B], [0, 0]),
        ([BELIEF_A, BELIEF_B], [1]),
        ([BELIEF_A], [-1]),
    ],
)
def test_pool_input_invalid(beliefs, weights) -> None:
    """Test unusable weights are refused."""
    with pytest.raises(MarketDomainError):
        PoolInput(beliefs, weights)


def test_product_pool() -> None:
    """Test the normalized product."""
    assert product_pool([[0.8, 0.2], [0.2, 0.8]], 0.5) == pytest.approx([0.5, 0.5])
    assert product_pool([BELIEF_A], 1.0) == pytest.approx(BELIEF_A)
    assert product_pool([EXP_BELIEF_A, EXP_BELIEF_B], 0.5) == pytest.approx(
        GEOMETRIC_MEAN
    )


def test_product_pool_degenerate() -> None:
    """Test beliefs with disjoint support have no product."""
    with pytest.raises(DegenerateDataError):
        product_pool([[1.0, 0.0], [0.0, 1.0]], 0.5)
    with pytest.raises(MarketDomainError):
        product_pool([BELIEF_A], 0.0)


def test_gated_pool() -> None:
    """Test instance-dependent gates."""
    experts = [[0.6, 0.4], [0.2, 0.8]]
    assert gated_pool([1, 0], experts) == pytest.approx([0.6, 0.4])
    assert gated_pool([0.5, 0.5], experts) == pytest.approx([0.4, 0.6])
    assert gated_pool([0.9, 0.1], experts) == pytest.approx([0.56, 0.44])

    stacked = gated_pool([[1, 0], [0.9, 0.1]], [experts, experts])
    assert stacked == pytest.approx(np.array([[0.6, 0.4], [0.56, 0.44]]))

    with pytest.raises(MarketDomainError):
        gated_pool([[1, 0]], [experts, experts])


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_gated_pool_is_gated_market(seed) -> None:
    """Test per-instance log markets with gate wealths match the gated pool."""
    rng = np.random.default_rng(seed)
    num_instances = int(rng.integers(1, 5))
    num_experts = int(rng.integers(1, 7))
    num_goods = int(rng.integers(2, 9))
    gates = rng.dirichlet(np.ones(num_experts), size=num_instances)
    beliefs = np.array(
        [interior_beliefs(rng, num_experts, num_goods) for _ in range(num_instances)]
    )

    pooled = gated_pool(gates, beliefs)
    for gate, rows, expected in zip(gates, beliefs, pooled):
        market = make_market(rows, gate, KIND_LOG_UTILITY)
        np.testing.assert_allclose(solve(market).prices, expected, atol=1e-9)
        assert expected.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(expected >= 0)
