"""Market files, dataset files and result records."""
from __future__ import annotations

from collections.abc import Iterator, Mapping, Sequence
import csv
from dataclasses import replace
import json
from logging import getLogger
import math
from pathlib import Path
from typing import IO, Any

import numpy as np
import voluptuous as vol

from .behavior import BehaviorSpec
from .const import (
    ATTR_AGENTS,
    ATTR_BEHAVIOR,
    ATTR_BELIEF,
    ATTR_BELIEFS,
    ATTR_CARDINALITY,
    ATTR_EPSILON,
    ATTR_ETA,
    ATTR_FORMAT_VERSION,
    ATTR_ID,
    ATTR_KIND,
    ATTR_LABEL,
    ATTR_NAME,
    ATTR_OUTCOMES,
    ATTR_SPACE,
    ATTR_SUBSPACE,
    ATTR_TABLE,
    ATTR_VARIABLES,
    ATTR_WEALTH,
    DATASET_RECORD_SCHEMA,
    FORMAT_VERSION,
    MARKET_FILE_SCHEMA,
    PRICE_DIGITS,
    TRACE_COLUMNS,
)
from .core import Agent, MarketSpec, OutcomeSpace, normalize_belief, validate_market
from .exceptions import MarketDomainError, MarketFileError
from .training import TrainingInstance, WealthTrace

_LOGGER = getLogger(__name__)


def _field_path(err: vol.Invalid) -> str | None:
    return ".".join(str(part) for part in err.path) or None


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise MarketFileError(f"cannot read file: {err.strerror}", str(path)) from err


def _parse_space(config: Mapping[str, Any]) -> OutcomeSpace:
    if ATTR_OUTCOMES in config:
        return OutcomeSpace.from_outcomes(config[ATTR_OUTCOMES])
    return OutcomeSpace(
        tuple(
            (variable[ATTR_NAME], variable[ATTR_CARDINALITY])
            for variable in config[ATTR_VARIABLES]
        )
    )


def _parse_agent(config: Mapping[str, Any]) -> Agent:
    behavior = config[ATTR_BEHAVIOR]
    belief = config[ATTR_BELIEF]
    return Agent(
        config[ATTR_ID],
        config[ATTR_WEALTH],
        np.array(belief[ATTR_TABLE], dtype=float),
        BehaviorSpec(
            behavior[ATTR_KIND], behavior.get(ATTR_ETA), behavior.get(ATTR_EPSILON)
        ),
        belief.get(ATTR_SUBSPACE),
    )


def parse_market(data: Any, path: str | None = None) -> MarketSpec:
    """Build a validated market from a decoded market file.

    Belief tables within tolerance of 1 are renormalized once here.
    """
    try:
        config = MARKET_FILE_SCHEMA(data)
    except vol.Invalid as err:
        raise MarketFileError(err.msg, path, field=_field_path(err)) from err

    spec = MarketSpec(
        _parse_space(config[ATTR_SPACE]),
        tuple(_parse_agent(agent) for agent in config[ATTR_AGENTS]),
    )
    violations = validate_market(spec)
    if violations:
        raise MarketFileError("; ".join(violations), path)

    return replace(
        spec,
        agents=tuple(
            replace(agent, belief=normalize_belief(agent.belief))
            for agent in spec.agents
        ),
    )


def load_market(path: str | Path) -> MarketSpec:
    """Read and validate a market file."""
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise MarketFileError(err.msg, str(path), err.lineno) from err

    spec = parse_market(data, str(path))
    _LOGGER.debug(
        "Loaded market %s: %d agents, %d goods", path, spec.num_agents, spec.num_goods
    )
    return spec


def market_to_dict(spec: MarketSpec) -> dict[str, Any]:
    """Return the market file contents describing ``spec``."""
    space = spec.space
    if space.labels is not None:
        space_config: dict[str, Any] = {ATTR_OUTCOMES: list(space.labels)}
    else:
        space_config = {
            ATTR_VARIABLES: [
                {ATTR_NAME: name, ATTR_CARDINALITY: card}
                for name, card in space.variables
            ]
        }

    agents = []
    for agent in spec.agents:
        behavior: dict[str, Any] = {ATTR_KIND: agent.behavior.kind}
        if agent.behavior.eta is not None:
            behavior[ATTR_ETA] = float(agent.behavior.eta)
        if agent.behavior.epsilon is not None:
            behavior[ATTR_EPSILON] = float(agent.behavior.epsilon)

        belief: dict[str, Any] = {ATTR_TABLE: agent.belief.tolist()}
        if agent.subspace is not None:
            belief = {ATTR_SUBSPACE: list(agent.subspace), **belief}

        agents.append(
            {
                ATTR_ID: agent.id,
                ATTR_WEALTH: agent.wealth,
                ATTR_BEHAVIOR: behavior,
                ATTR_BELIEF: belief,
            }
        )

    return {
        ATTR_FORMAT_VERSION: FORMAT_VERSION,
        ATTR_SPACE: space_config,
        ATTR_AGENTS: agents,
    }


def dump_market(spec: MarketSpec, path: str | Path) -> None:
    """Write ``spec`` as a market file."""
    Path(path).write_text(
        json.dumps(market_to_dict(spec), indent=2) + "\n", encoding="utf-8"
    )


def iter_dataset(
    path: str | Path, spec: MarketSpec | None = None
) -> Iterator[TrainingInstance]:
    """Yield the training instances of a dataset file one line at a time.

    Blank lines are skipped. With ``spec`` every instance is checked against
    the market's agents and goods.
    """
    try:
        stream = Path(path).open(encoding="utf-8")
    except OSError as err:
        raise MarketFileError(f"cannot read file: {err.strerror}", str(path)) from err

    with stream:
        for line_number, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                record = DATASET_RECORD_SCHEMA(json.loads(line))
                instance = TrainingInstance(record[ATTR_BELIEFS], record[ATTR_LABEL])
                if spec is not None:
                    instance.check(spec)
            except json.JSONDecodeError as err:
                raise MarketFileError(err.msg, str(path), line_number) from err
            except vol.Invalid as err:
                raise MarketFileError(
                    err.msg, str(path), line_number, _field_path(err)
                ) from err
            except MarketDomainError as err:
                raise MarketFileError(str(err), str(path), line_number) from err
            yield instance


def round_number(value: float) -> float | None:
    """Round to the output precision; negative zero becomes 0."""
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.{PRICE_DIGITS}g}") + 0.0


def render_number(value: float) -> str:
    """Format a number the way every output file writes it."""
    rounded = round_number(value)
    return "" if rounded is None else f"{rounded:.{PRICE_DIGITS}g}"


def round_vector(values: Sequence[float] | np.ndarray) -> list[float | None]:
    """Round every entry of a vector to the output precision."""
    return [round_number(value) for value in values]


def render_record(record: Mapping[str, Any]) -> str:
    """Return a result record as JSON text, one trailing newline."""
    return json.dumps(record, indent=2) + "\n"


def write_trace(trace: WealthTrace, ids: Sequence[str], stream: IO[str]) -> None:
    """Write a wealth trace as CSV, one row per step and agent.

    Step 0 holds the initial wealths and has no realized price.
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    label_prices = trace.label_prices
    for step, wealths in enumerate(trace.wealths):
        price = render_number(label_prices[step - 1]) if step else ""
        for agent_id, wealth in zip(ids, wealths):
            writer.writerow([step, agent_id, render_number(wealth), price])


def write_sweep(
    rows: Sequence[tuple[float, Sequence[float], str]],
    labels: Sequence[str],
    stream: IO[str],
) -> None:
    """Write eta sweep results as CSV with a status column."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["eta", *(f"price_{label}" for label in labels), "status"])
    for eta, prices, status in rows:
        writer.writerow(
            [render_number(eta), *(render_number(price) for price in prices), status]
        )
