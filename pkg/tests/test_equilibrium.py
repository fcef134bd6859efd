"""Test equilibrium solvers."""
from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from market_pool.behavior import BehaviorSpec
from market_pool.const import (
    KIND_AGGRESSIVE_BET,
    KIND_CONSTANT_BET,
    KIND_EXP_UTILITY,
    KIND_ISOELASTIC_UTILITY,
    KIND_LINEAR_BET,
    KIND_LOG_UTILITY,
    METHOD_ANALYTIC,
    METHOD_FIXED_POINT,
    METHOD_NUMERIC,
)
from market_pool.core import Agent, MarketSpec, OutcomeSpace
from market_pool.equilibrium import (
    SolverConfig,
    aggregate_beliefs,
    equilibrium_score,
    excess_demand,
    parimutuel_score,
    solve,
    solve_analytic,
    solve_isoelastic,
    solve_numeric,
    solve_parimutuel,
)
from market_pool.exceptions import (
    MarketDomainError,
    NonConvergenceError,
    UnsupportedAnalyticError,
    WrongClearingRuleError,
)
from market_pool.pools import PoolInput, product_pool, weighted_average_pool

from .common import make_market, random_market
from .const import BELIEF_A, BELIEF_B, EXP_BELIEF_A, EXP_BELIEF_B, GEOMETRIC_MEAN

seeds = st.integers(min_value=0, max_value=2**32 - 1)
TIGHT = SolverConfig(tolerance=1e-20)


def test_excess_demand(log_market) -> None:
    """Test aggregate demand of the two-agent market."""
    assert excess_demand(log_market, [0.6, 0.4]) == pytest.approx([0.0, 0.0], abs=1e-12)
    assert excess_demand(log_market, [0.5, 0.5]) == pytest.approx([0.4, -0.4])


def test_excess_demand_rejects_betting() -> None:
    """Test betting markets do not clear by excess demand."""
    spec = make_market([BELIEF_A, BELIEF_B], kind=KIND_CONSTANT_BET)
    with pytest.raises(WrongClearingRuleError):
        excess_demand(spec, [0.5, 0.5])
    with pytest.raises(WrongClearingRuleError):
        solve_numeric(spec)


def test_equilibrium_score() -> None:
    """Test the score is the squared norm of excess demand."""
    single = make_market([BELIEF_A])
    assert equilibrium_score(single, [0.5, 0.5]) == pytest.approx(0.72)
    assert equilibrium_score(single, BELIEF_A) == pytest.approx(0.0)
    twins = make_market([BELIEF_B, BELIEF_B])
    assert equilibrium_score(twins, BELIEF_B) == pytest.approx(0.0)

    with pytest.raises(MarketDomainError):
        equilibrium_score(single, [1.0])


def test_solve_analytic_log(log_market) -> None:
    """Test the weighted mean closed form."""
    result = solve_analytic(log_market)
    assert result.prices == pytest.approx([0.6, 0.4])
    assert result.score < 1e-18
    assert result.method == METHOD_ANALYTIC
    assert result.iterations == 0
    assert not result.prices.flags.writeable


def test_solve_analytic_exp(exp_market) -> None:
    """Test the geometric mean closed form."""
    assert solve_analytic(exp_market).prices == pytest.approx(GEOMETRIC_MEAN)
    symmetric = make_market([[0.8, 0.2], [0.2, 0.8]], kind=KIND_EXP_UTILITY)
    assert solve_analytic(symmetric).prices == pytest.approx([0.5, 0.5])


def test_solve_analytic_zero_price() -> None:
    """Test a good nobody believes in prices at zero."""
    spec = make_market([[0.5, 0.5, 0.0], [0.2, 0.8, 0.0]], wealths=[1.0, 3.0])
    result = solve_analytic(spec)
    assert result.prices == pytest.approx([0.275, 0.725, 0.0])
    assert result.score < 1e-18


def test_solve_analytic_unsupported() -> None:
    """Test markets without a closed form are refused."""
    mixed = MarketSpec(
        OutcomeSpace.single(2),
        (
            Agent("a", 1, BELIEF_A, BehaviorSpec(KIND_LOG_UTILITY)),
            Agent("b", 1, BELIEF_B, BehaviorSpec(KIND_EXP_UTILITY)),
        ),
    )
    with pytest.raises(UnsupportedAnalyticError):
        solve_analytic(mixed)
    with pytest.raises(UnsupportedAnalyticError):
        solve_analytic(make_market([BELIEF_A], kind=KIND_ISOELASTIC_UTILITY, eta=2.0))


def test_solve_numeric_mixed() -> None:
    """Test a market with no closed form."""
    mixed = MarketSpec(
        OutcomeSpace.single(2),
        (
            Agent("a", 1, BELIEF_A, BehaviorSpec(KIND_LOG_UTILITY)),
            Agent("b", 1, BELIEF_B, BehaviorSpec(KIND_EXP_UTILITY)),
        ),
    )
    result = solve_numeric(mixed)
    assert result.method == METHOD_NUMERIC
    assert equilibrium_score(mixed, result.prices) < 1e-10
    assert 0.4 < result.prices[0] < 0.8


@pytest.mark.parametrize(
    "kind", [KIND_LOG_UTILITY, KIND_EXP_UTILITY, KIND_ISOELASTIC_UTILITY]
)
def test_solve_numeric_single_agent(kind) -> None:
    """Test a lone agent clears at its own belief."""
    spec = make_market([[0.5, 0.3, 0.2]], kind=kind, eta=2.0)
    assert solve_numeric(spec).prices == pytest.approx([0.5, 0.3, 0.2], abs=1e-6)


def test_solve_numeric_nonconvergence(log_market) -> None:
    """Test the best iterate is reported when evaluations run out."""
    with pytest.raises(NonConvergenceError) as err:
        solve_numeric(log_market, SolverConfig(max_iterations=1))
    assert err.value.method == METHOD_NUMERIC
    assert err.value.prices.sum() == pytest.approx(1.0)
    assert err.value.score > 0


def test_solve_isoelastic() -> None:
    """Test the isoelastic fixed point."""
    unit = make_market([BELIEF_A, BELIEF_B], kind=KIND_ISOELASTIC_UTILITY, eta=1.0)
    result = solve_isoelastic(unit)
    assert result.prices == pytest.approx([0.6, 0.4], abs=1e-6)
    assert result.method == METHOD_FIXED_POINT
    assert result.iterations == 1

    symmetric = make_market(
        [[0.9, 0.1], [0.1, 0.9]], kind=KIND_ISOELASTIC_UTILITY, eta=2.0
    )
    assert solve_isoelastic(symmetric).prices == pytest.approx([0.5, 0.5])

    consensus = make_market(
        [[0.2, 0.3, 0.5]] * 3, [1.0, 4.0, 0.5], KIND_ISOELASTIC_UTILITY, eta=3.0
    )
    assert solve_isoelastic(consensus).prices == pytest.approx([0.2, 0.3, 0.5], abs=1e-4)


def test_solve_isoelastic_mixed_eta() -> None:
    """Test agents with different eta share one fixed point."""
    spec = MarketSpec(
        OutcomeSpace.single(3),
        (
            Agent("a", 1, [0.6, 0.3, 0.1], BehaviorSpec(KIND_ISOELASTIC_UTILITY, 1.5)),
            Agent("b", 2, [0.2, 0.3, 0.5], BehaviorSpec(KIND_ISOELASTIC_UTILITY, 3.0)),
        ),
    )
    result = solve_isoelastic(spec)
    assert equilibrium_score(spec, result.prices) < 1e-10
    assert result.prices.sum() == pytest.approx(1.0)


def test_solve_isoelastic_rejects_other_kinds(log_market) -> None:
    """Test the isoelastic solver needs isoelastic agents."""
    with pytest.raises(MarketDomainError):
        solve_isoelastic(log_market)


def test_solve_isoelastic_nonconvergence() -> None:
    """Test running out of iterations keeps the best iterate."""
    spec = make_market(
        [[0.7, 0.2, 0.1], [0.1, 0.2, 0.7]], kind=KIND_ISOELASTIC_UTILITY, eta=3.0
    )
    with pytest.raises(NonConvergenceError) as err:
        solve_isoelastic(spec, SolverConfig(tolerance=1e-300, max_iterations=2))
    assert err.value.method == METHOD_FIXED_POINT
    assert err.value.prices.sum() == pytest.approx(1.0)


def test_solve_parimutuel_constant() -> None:
    """Test constant bets clear at the wealth-weighted mean in one step."""
    spec = make_market([BELIEF_A, BELIEF_B], kind=KIND_CONSTANT_BET)
    result = solve_parimutuel(spec)
    assert result.prices == pytest.approx([0.6, 0.4], abs=1e-12)
    assert result.iterations == 1

    lopsided = make_market([[1.0, 0.0], [0.0, 1.0]], [3.0, 1.0], KIND_CONSTANT_BET)
    assert solve_parimutuel(lopsided).prices == pytest.approx([0.75, 0.25], abs=1e-12)


def test_solve_parimutuel_linear() -> None:
    """Test linear bets satisfy the clearing relation."""
    spec = make_market([[0.7, 0.2, 0.1], [0.2, 0.5, 0.3]], [1.0, 2.0], KIND_LINEAR_BET)
    result = solve_parimutuel(spec)
    assert parimutuel_score(spec, result.prices) < 1e-10
    assert result.prices.sum() == pytest.approx(1.0)


def test_solve_parimutuel_aggressive() -> None:
    """Test a lone aggressive bettor drives prices to its belief."""
    spec = make_market([[0.7, 0.3]], kind=KIND_AGGRESSIVE_BET)
    result = solve_parimutuel(spec)
    assert parimutuel_score(spec, result.prices) < 1e-10
    assert result.prices == pytest.approx([0.7, 0.3], abs=1e-4)


def test_linear_bet_consensus_on_uniform_belief() -> None:
    """Test linear bets on a shared uniform belief clear at that belief."""
    spec = make_market([[0.25] * 4] * 2, kind=KIND_LINEAR_BET)
    assert solve_parimutuel(spec).prices == pytest.approx([0.25] * 4)


def test_parimutuel_rejects_utility(log_market) -> None:
    """Test utility markets do not clear parimutuel-style."""
    with pytest.raises(WrongClearingRuleError):
        solve_parimutuel(log_market)


def test_solve_dispatch(log_market) -> None:
    """Test the automatic method choice."""
    assert solve(log_market).method == METHOD_ANALYTIC
    iso = make_market([BELIEF_A, BELIEF_B], kind=KIND_ISOELASTIC_UTILITY, eta=2.0)
    assert solve(iso).method == METHOD_FIXED_POINT
    bets = make_market([BELIEF_A, BELIEF_B], kind=KIND_LINEAR_BET)
    assert solve(bets).method == METHOD_FIXED_POINT
    assert solve(log_market, method="numeric").method == METHOD_NUMERIC

    with pytest.raises(MarketDomainError):
        solve(log_market, method="simplex")


def test_solver_config_validation() -> None:
    """Test solver settings are checked."""
    with pytest.raises(MarketDomainError):
        SolverConfig(tolerance=0)
    with pytest.raises(MarketDomainError):
        SolverConfig(damping=1.5)
    with pytest.raises(MarketDomainError):
        SolverConfig(max_iterations=0)


def test_aggregate_beliefs() -> None:
    """Test pooling beliefs through a market."""
    assert aggregate_beliefs([BELIEF_A, BELIEF_B]) == pytest.approx([0.6, 0.4])
    assert aggregate_beliefs(
        [EXP_BELIEF_A, EXP_BELIEF_B], behavior=BehaviorSpec(KIND_EXP_UTILITY)
    ) == pytest.approx(GEOMETRIC_MEAN)


@given(seed=seeds)
@settings(max_examples=200, deadline=None)
def test_log_market_is_weighted_average(seed) -> None:
    """Test homogeneous log markets price at the weighted average pool."""
    spec = random_market(seed, KIND_LOG_UTILITY)
    prices = solve(spec).prices
    oracle = weighted_average_pool(PoolInput(spec.beliefs, spec.wealths))
    np.testing.assert_allclose(prices, oracle, atol=1e-9, rtol=0)
    assert prices.sum() == pytest.approx(1.0, abs=1e-12)


@given(seed=seeds)
@settings(max_examples=200, deadline=None)
def test_exp_market_is_product_pool(seed) -> None:
    """Test homogeneous exp markets price at the product pool."""
    spec = random_market(seed, KIND_EXP_UTILITY)
    prices = solve(spec).prices
    oracle = product_pool(spec.beliefs, 1.0 / spec.num_agents)
    np.testing.assert_allclose(prices, oracle, atol=1e-9, rtol=0)


@given(seed=seeds, kind=st.sampled_from([KIND_LOG_UTILITY, KIND_EXP_UTILITY]))
@settings(max_examples=100, deadline=None)
def test_numeric_matches_analytic(seed, kind) -> None:
    """Test the numeric solver finds the closed-form prices."""
    spec = random_market(seed, kind)
    numeric = solve_numeric(spec)
    np.testing.assert_allclose(
        numeric.prices, solve_analytic(spec).prices, atol=1e-6, rtol=0
    )
    assert numeric.score < 1e-10


@given(seed=seeds)
@settings(max_examples=50, deadline=None)
def test_isoelastic_unit_eta_limit(seed) -> None:
    """Test isoelastic markets approach the log market as eta nears 1."""
    spec = random_market(seed, KIND_ISOELASTIC_UTILITY, eta=1.0)
    log_prices = solve_analytic(spec.with_behavior(BehaviorSpec(KIND_LOG_UTILITY))).prices
    np.testing.assert_allclose(solve_isoelastic(spec).prices, log_prices, atol=1e-4)

    for eta in (0.99, 1.01):
        nearby = spec.with_behavior(BehaviorSpec(KIND_ISOELASTIC_UTILITY, eta))
        prices = solve_isoelastic(nearby).prices
        assert np.max(np.abs(prices - log_prices)) < 5e-2


@given(seed=seeds)
@settings(max_examples=100, deadline=None)
def test_constant_bets_clear_in_one_step(seed) -> None:
    """Test constant bets clear at the weighted mean after one iteration."""
    spec = random_market(seed, KIND_CONSTANT_BET)
    result = solve_parimutuel(spec)
    assert result.iterations == 1
    np.testing.assert_allclose(
        result.prices, spec.wealths @ spec.beliefs / spec.wealths.sum(), atol=1e-12
    )


@given(
    seed=seeds,
    kind=st.sampled_from(
        [KIND_LOG_UTILITY, KIND_EXP_UTILITY, KIND_ISOELASTIC_UTILITY, KIND_CONSTANT_BET]
    ),
    factor=st.floats(min_value=0.1, max_value=10.0),
)
@settings(max_examples=100, deadline=None)
def test_invariances(seed, kind, factor) -> None:
    """Test prices ignore wealth scale and agent order."""
    spec = random_market(seed, kind, eta=2.0, max_agents=4, max_goods=5)
    prices = solve(spec, TIGHT).prices

    scaled = solve(spec.with_wealths(spec.wealths * factor), TIGHT).prices
    np.testing.assert_allclose(scaled, prices, atol=1e-8)

    shuffled = MarketSpec(spec.space, spec.agents[::-1])
    np.testing.assert_allclose(solve(shuffled, TIGHT).prices, prices, atol=1e-8)


@given(
    seed=seeds,
    kind=st.sampled_from(
        [KIND_LOG_UTILITY, KIND_EXP_UTILITY, KIND_ISOELASTIC_UTILITY, KIND_CONSTANT_BET]
    ),
)
@settings(max_examples=50, deadline=None)
def test_consensus(seed, kind) -> None:
    """Test a market of agents sharing a belief prices at that belief."""
    rng = np.random.default_rng(seed)
    belief = 0.9 * rng.dirichlet(np.ones(4)) + 0.025
    spec = make_market([belief] * 3, rng.uniform(0.5, 5.0, 3), kind, eta=1.7)
    np.testing.assert_allclose(solve(spec, TIGHT).prices, belief, atol=1e-9)
    if kind != KIND_CONSTANT_BET:
        np.testing.assert_allclose(solve_numeric(spec).prices, belief, atol=1e-6)
