"""Belief aggregation by prediction-market equilibrium."""
from .behavior import (
    BehaviorSpec,
    demand,
    demand_jacobian_check,
    proportion,
    stockholding,
    utility_value,
)
from .core import (
    Agent,
    MarketSpec,
    OutcomeSpace,
    good_assignment,
    good_index,
    normalize_belief,
    validate_market,
)
from .equilibrium import (
    EquilibriumResult,
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
from .exceptions import (
    DegenerateDataError,
    DegeneratePriceError,
    MarketDomainError,
    MarketError,
    MarketFileError,
    NonConvergenceError,
    SingularPriceError,
    UnsupportedAnalyticError,
    UnsupportedBehaviorError,
    WrongClearingRuleError,
)
from .formats import dump_market, iter_dataset, load_market, market_to_dict, parse_market
from .marginal import (
    SubspaceBelief,
    expand_stockholding,
    marginal_demand,
    marginal_price,
    projection,
    subspace_space,
)
from .pools import PoolInput, gated_pool, product_pool, weighted_average_pool
from .training import (
    TrainingInstance,
    WealthTrace,
    bayesian_posterior,
    market_log_loss,
    train_batch,
    train_online,
    with_uniform_wealths,
)

__all__ = [
    "Agent",
    "BehaviorSpec",
    "DegenerateDataError",
    "DegeneratePriceError",
    "EquilibriumResult",
    "MarketDomainError",
    "MarketError",
    "MarketFileError",
    "MarketSpec",
    "NonConvergenceError",
    "OutcomeSpace",
    "PoolInput",
    "SingularPriceError",
    "SolverConfig",
    "SubspaceBelief",
    "TrainingInstance",
    "UnsupportedAnalyticError",
    "UnsupportedBehaviorError",
    "WealthTrace",
    "WrongClearingRuleError",
    "aggregate_beliefs",
    "bayesian_posterior",
    "demand",
    "demand_jacobian_check",
    "dump_market",
    "equilibrium_score",
    "excess_demand",
    "expand_stockholding",
    "gated_pool",
    "good_assignment",
    "good_index",
    "iter_dataset",
    "load_market",
    "marginal_demand",
    "marginal_price",
    "market_log_loss",
    "market_to_dict",
    "normalize_belief",
    "parimutuel_score",
    "parse_market",
    "product_pool",
    "projection",
    "proportion",
    "solve",
    "solve_analytic",
    "solve_isoelastic",
    "solve_numeric",
    "solve_parimutuel",
    "stockholding",
    "subspace_space",
    "train_batch",
    "train_online",
    "utility_value",
    "validate_market",
    "weighted_average_pool",
    "with_uniform_wealths",
]
