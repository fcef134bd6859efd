"""Outcome spaces, agents and market specifications."""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property
from logging import getLogger
import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .behavior import BehaviorSpec
from .const import BELIEF_TOLERANCE, MAX_GOODS
from .exceptions import MarketDomainError

_LOGGER = getLogger(__name__)

BeliefVector = NDArray[np.float64]
PriceVector = NDArray[np.float64]
StockholdingVector = NDArray[np.float64]
ProportionVector = NDArray[np.float64]

OUTCOME_VARIABLE = "outcome"


def frozen_array(values: ArrayLike) -> NDArray[np.float64]:
    """Return a read-only float copy of ``values``."""
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def normalize_belief(values: ArrayLike) -> BeliefVector:
    """Return ``values`` as a belief, renormalizing rounding noise away.

    Inputs must already sum to 1 within the belief tolerance; only sums that
    are off by more than float rounding are rescaled, so normalizing an
    already normalized belief leaves it unchanged.
    """
    belief = np.array(values, dtype=float)
    if belief.ndim != 1 or belief.size == 0:
        raise MarketDomainError("belief must be a non-empty vector")
    if not np.all(np.isfinite(belief)):
        raise MarketDomainError("belief has non-finite entries")
    if np.any(belief < 0):
        raise MarketDomainError("belief has negative entries")

    total = belief.sum()
    if abs(total - 1.0) > BELIEF_TOLERANCE:
        raise MarketDomainError(f"belief sums to {total!r}, not 1")
    if abs(total - 1.0) > belief.size * np.finfo(float).eps:
        belief = belief / total
    return frozen_array(belief)


@dataclass(frozen=True)
class OutcomeSpace:
    """Mutually exclusive goods, the joint outcomes of named finite variables.

    Goods are enumerated lexicographically in variable declaration order, the
    first variable varying slowest.
    """

    variables: tuple[tuple[str, int], ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        """Store variables and labels as tuples."""
        object.__setattr__(
            self, "variables", tuple((str(name), int(card)) for name, card in self.variables)
        )
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))

    @classmethod
    def single(cls, cardinality: int, name: str = OUTCOME_VARIABLE) -> OutcomeSpace:
        """Return the space of one unlabelled variable."""
        return cls(((name, cardinality),))

    @classmethod
    def from_outcomes(cls, labels: Sequence[str]) -> OutcomeSpace:
        """Return the space of one variable with labelled outcomes."""
        return cls(((OUTCOME_VARIABLE, len(labels)),), labels=tuple(labels))

    @property
    def names(self) -> tuple[str, ...]:
        """Return the variable names."""
        return tuple(name for name, _ in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        """Return the variable cardinalities."""
        return tuple(card for _, card in self.variables)

    @property
    def num_goods(self) -> int:
        """Return N_G, the number of joint outcomes."""
        return math.prod(self.shape)

    def position(self, name: str) -> int:
        """Return the declaration position of a variable."""
        try:
            return self.names.index(name)
        except ValueError as err:
            raise MarketDomainError(f"unknown variable {name}") from err

    @cached_property
    def assignments(self) -> NDArray[np.intp]:
        """Return the per-variable values of every good, one row per variable."""
        table = np.indices(self.shape).reshape(len(self.variables), -1)
        table.setflags(write=False)
        return table

    @property
    def good_labels(self) -> tuple[str, ...]:
        """Return a printable name for every good."""
        if self.labels is not None:
            return self.labels
        if len(self.variables) == 1:
            return tuple(str(index) for index in range(self.num_goods))
        return tuple(
            ";".join(f"{name}={value}" for name, value in zip(self.names, column))
            for column in self.assignments.T
        )


def good_index(space: OutcomeSpace, assignment: Sequence[int] | Mapping[str, int]) -> int:
    """Return the lexicographic good index of a full variable assignment."""
    if isinstance(assignment, Mapping):
        missing = [name for name in space.names if name not in assignment]
        if missing:
            raise MarketDomainError(f"assignment misses variables {missing}")
        values = [assignment[name] for name in space.names]
    else:
        values = list(assignment)

    if len(values) != len(space.variables):
        raise MarketDomainError(
            f"assignment has {len(values)} values for {len(space.variables)} variables"
        )
    for (name, card), value in zip(space.variables, values):
        if int(value) != value or not 0 <= value < card:
            raise MarketDomainError(
                f"value {value} out of range for variable {name} of cardinality {card}"
            )
    return int(np.ravel_multi_index(tuple(int(value) for value in values), space.shape))


def good_assignment(space: OutcomeSpace, index: int) -> tuple[int, ...]:
    """Return the per-variable values of a good, the inverse of good_index."""
    if int(index) != index or not 0 <= index < space.num_goods:
        raise MarketDomainError(f"good index {index} outside [0, {space.num_goods})")
    return tuple(int(value) for value in np.unravel_index(int(index), space.shape))


@dataclass(frozen=True, eq=False)
class Agent:
    """A trader: wealth, a belief over its scope and a behavior.

    ``subspace`` is None for agents whose belief covers the full space;
    otherwise it names the variables the belief table is defined on.
    """

    id: str
    wealth: float
    belief: BeliefVector
    behavior: BehaviorSpec
    subspace: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        """Freeze the belief and normalize scalar fields."""
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "wealth", float(self.wealth))
        object.__setattr__(self, "belief", frozen_array(self.belief))
        if self.subspace is not None:
            object.__setattr__(self, "subspace", tuple(self.subspace))

    def __eq__(self, other: object) -> bool:
        """Compare field by field, beliefs exactly."""
        if not isinstance(other, Agent):
            return NotImplemented
        return (
            self.id == other.id
            and self.wealth == other.wealth
            and self.behavior == other.behavior
            and self.subspace == other.subspace
            and np.array_equal(self.belief, other.belief)
        )

    @property
    def is_marginal(self) -> bool:
        """Return whether the agent trades marginal goods."""
        return self.subspace is not None


@dataclass(frozen=True)
class MarketSpec:
    """An outcome space and the agents trading on it."""

    space: OutcomeSpace
    agents: tuple[Agent, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        """Store the agents as a tuple."""
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def num_agents(self) -> int:
        """Return N_A."""
        return len(self.agents)

    @property
    def num_goods(self) -> int:
        """Return N_G."""
        return self.space.num_goods

    @property
    def ids(self) -> tuple[str, ...]:
        """Return the agent ids in order."""
        return tuple(agent.id for agent in self.agents)

    @property
    def wealths(self) -> NDArray[np.float64]:
        """Return the agent wealths in order."""
        return np.array([agent.wealth for agent in self.agents], dtype=float)

    @property
    def kinds(self) -> tuple[str, ...]:
        """Return the behavior kind of every agent."""
        return tuple(agent.behavior.kind for agent in self.agents)

    @property
    def is_homogeneous(self) -> bool:
        """Return whether all agents share one behavior kind."""
        return len(set(self.kinds)) == 1

    @property
    def is_full_scope(self) -> bool:
        """Return whether no agent trades marginal goods."""
        return not any(agent.is_marginal for agent in self.agents)

    @property
    def has_betting(self) -> bool:
        """Return whether any agent uses a betting function."""
        return any(agent.behavior.is_betting for agent in self.agents)

    @property
    def beliefs(self) -> NDArray[np.float64]:
        """Return the N_A x N_G belief matrix of a full-scope market."""
        if not self.is_full_scope:
            raise MarketDomainError("marginal agents have no full-space belief row")
        return np.array([agent.belief for agent in self.agents], dtype=float)

    def with_wealths(self, wealths: ArrayLike) -> MarketSpec:
        """Return the market with new agent wealths."""
        values = np.asarray(wealths, dtype=float)
        if values.shape != (self.num_agents,):
            raise MarketDomainError(
                f"expected {self.num_agents} wealths, got shape {values.shape}"
            )
        return replace(
            self,
            agents=tuple(
                replace(agent, wealth=float(value))
                for agent, value in zip(self.agents, values)
            ),
        )

    def with_beliefs(self, beliefs: ArrayLike) -> MarketSpec:
        """Return the market with a new belief row for every agent."""
        rows = np.asarray(beliefs, dtype=float)
        if rows.shape[0] != self.num_agents:
            raise MarketDomainError(
                f"expected {self.num_agents} belief rows, got {rows.shape[0]}"
            )
        return replace(
            self,
            agents=tuple(
                replace(agent, belief=row) for agent, row in zip(self.agents, rows)
            ),
        )

    def with_behavior(self, behavior: BehaviorSpec) -> MarketSpec:
        """Return the market with every agent switched to ``behavior``."""
        return replace(
            self,
            agents=tuple(replace(agent, behavior=behavior) for agent in self.agents),
        )


def _space_violations(space: OutcomeSpace) -> list[str]:
    violations = []
    if not space.variables:
        return ["space has no variables"]

    for name, card in space.variables:
        if card < 2:
            violations.append(f"cardinality of variable {name} below 2")
    if len(set(space.names)) != len(space.names):
        violations.append("variable names are not unique")

    num_goods = space.num_goods
    if num_goods < 2:
        violations.append("space has fewer than 2 goods")
    elif num_goods > MAX_GOODS:
        violations.append(f"space has {num_goods} goods, above the cap of {MAX_GOODS}")
    if space.labels is not None and len(space.labels) != num_goods:
        violations.append("outcome labels do not match the number of goods")
    return violations


def _agent_violations(space: OutcomeSpace, agent: Agent) -> list[str]:
    violations = []
    name = agent.id

    if not np.isfinite(agent.wealth):
        violations.append(f"wealth of {name} is not finite")
    elif agent.wealth < 0:
        violations.append(f"wealth of {name} negative")

    violations.extend(f"behavior of {name}: {problem}" for problem in agent.behavior.violations())

    expected = None
    if agent.subspace is None:
        expected = space.num_goods
    elif not agent.subspace:
        violations.append(f"subspace of {name} is empty")
    elif len(set(agent.subspace)) != len(agent.subspace):
        violations.append(f"subspace of {name} repeats a variable")
    else:
        cards = dict(space.variables)
        unknown = [var for var in agent.subspace if var not in cards]
        if unknown:
            violations.append(f"subspace of {name} names unknown variables {unknown}")
        else:
            expected = math.prod(cards[var] for var in agent.subspace)
        if agent.behavior.is_betting:
            violations.append(f"marginal agent {name} uses betting behavior {agent.behavior.kind}")

    belief = agent.belief
    if belief.ndim != 1:
        violations.append(f"belief of {name} is not a vector")
        return violations
    if expected is not None and belief.size != expected:
        violations.append(f"belief of {name} has {belief.size} entries, expected {expected}")
    if not np.all(np.isfinite(belief)):
        violations.append(f"belief of {name} has non-finite entries")
    elif np.any(belief < 0):
        violations.append(f"belief of {name} has negative entries")
    elif abs(belief.sum() - 1.0) > BELIEF_TOLERANCE:
        violations.append(f"belief of {name} does not sum to 1")
    return violations


def validate_market(spec: MarketSpec) -> list[str]:
    """Return a description of every invariant the market breaks.

    An empty list means the market is well formed. Nothing is raised.
    """
    violations = _space_violations(spec.space)

    if not spec.agents:
        violations.append("market has no agents")
        return violations

    ids = spec.ids
    for agent_id in sorted({agent_id for agent_id in ids if ids.count(agent_id) > 1}):
        violations.append(f"agent id {agent_id} is not unique")

    for agent in spec.agents:
        violations.extend(_agent_violations(spec.space, agent))

    behaviors = [agent.behavior for agent in spec.agents]
    if any(b.is_betting for b in behaviors) and any(b.is_utility for b in behaviors):
        violations.append("market mixes betting and utility behaviors")
    if any(b.is_wealth_proportional for b in behaviors) and not any(
        agent.wealth > 0 for agent in spec.agents
    ):
        violations.append("no agent has positive wealth")

    if violations:
        _LOGGER.debug("Market has %d violations: %s", len(violations), violations)
    return violations
