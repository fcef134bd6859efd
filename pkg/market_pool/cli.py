"""Command-line interface: clear, train, compare and sweep market files."""
from __future__ import annotations

import argparse
from collections.abc import Sequence
import io
import logging
from logging import getLogger
from pathlib import Path
import sys
from typing import Any

import numpy as np

from .behavior import BehaviorSpec
from .const import (
    DEFAULT_DAMPING,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    EXIT_INPUT_ERROR,
    EXIT_NUMERIC_FAILURE,
    EXIT_OK,
    GAP_THRESHOLD,
    KIND_CONSTANT_BET,
    KIND_EXP_UTILITY,
    KIND_ISOELASTIC_UTILITY,
    KIND_LOG_UTILITY,
    METHOD_AUTO,
    MODE_BATCH,
    MODE_ONLINE,
    ORACLE_PRODUCT,
    ORACLE_WEIGHTED_AVERAGE,
    SOLVE_METHODS,
)
from .core import MarketSpec
from .equilibrium import SolverConfig, solve, solve_isoelastic
from .exceptions import (
    DegenerateDataError,
    DegeneratePriceError,
    MarketError,
    NonConvergenceError,
)
from .formats import (
    iter_dataset,
    load_market,
    render_record,
    round_number,
    round_vector,
    write_sweep,
    write_trace,
)
from .pools import PoolInput, product_pool, weighted_average_pool
from .training import market_log_loss, train_batch, train_online, with_uniform_wealths

_LOGGER = getLogger(__name__)

ORACLE_KINDS = {
    ORACLE_WEIGHTED_AVERAGE: (KIND_LOG_UTILITY, KIND_CONSTANT_BET),
    ORACLE_PRODUCT: (KIND_EXP_UTILITY,),
}

STATUS_OK = "ok"
STATUS_NONCONVERGED = "nonconverged"


class UsageError(MarketError):
    """A command was asked for something its inputs do not support."""


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(args.tolerance, args.max_iter, args.damping)


def _eta_range(value: str) -> np.ndarray:
    """Parse ``lo:hi:steps`` into the eta grid."""
    try:
        low, high, steps = value.split(":")
        grid = np.linspace(float(low), float(high), int(steps))
    except ValueError as err:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:steps, got {value!r}"
        ) from err
    if grid.size == 0 or not np.all(grid > 0):
        raise argparse.ArgumentTypeError("eta values must be positive and steps at least 1")
    return grid


def cmd_clear(args: argparse.Namespace) -> int:
    """Clear a market and report its prices."""
    spec = load_market(args.market)
    record: dict[str, Any] = {"outcomes": list(spec.space.good_labels)}
    try:
        result = solve(spec, _solver_config(args), args.method)
    except NonConvergenceError as err:
        _LOGGER.error("%s", err)
        record.update(
            method=err.method,
            converged=False,
            prices=round_vector(err.prices),
            score=round_number(err.score),
            iterations=err.iterations,
        )
        _emit(render_record(record), args.out)
        return EXIT_NUMERIC_FAILURE

    record.update(
        method=result.method,
        converged=True,
        prices=round_vector(result.prices),
        score=round_number(result.score),
        iterations=result.iterations,
    )
    _emit(render_record(record), args.out)
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    """Train wealths on a dataset and report them."""
    spec = load_market(args.market)
    if args.uniform_start:
        spec = with_uniform_wealths(spec)

    train = train_online if args.mode == MODE_ONLINE else train_batch
    trace = train(spec, iter_dataset(args.data, spec))
    trained = spec.with_wealths(trace.final_wealths)

    record = {
        "mode": args.mode,
        "agents": list(spec.ids),
        "steps": trace.num_steps,
        "initial_wealths": round_vector(spec.wealths),
        "final_wealths": round_vector(trace.final_wealths),
        "log_loss_before": _round_optional(
            market_log_loss(spec, iter_dataset(args.data, spec))
        ),
        "log_loss_after": _round_optional(
            market_log_loss(trained, iter_dataset(args.data, spec))
        ),
    }
    _emit(render_record(record), args.out)

    if args.trace is not None:
        buffer = io.StringIO()
        write_trace(trace, spec.ids, buffer)
        Path(args.trace).write_text(buffer.getvalue(), encoding="utf-8")
    return EXIT_OK


def _round_optional(value: float | None) -> float | None:
    return None if value is None else round_number(value)


def _oracle_prices(spec: MarketSpec, oracle: str) -> np.ndarray:
    if oracle == ORACLE_PRODUCT:
        return product_pool(spec.beliefs, 1.0 / spec.num_agents)
    return weighted_average_pool(PoolInput(spec.beliefs, spec.wealths))


def cmd_compare(args: argparse.Namespace) -> int:
    """Compare market prices with a closed-form pool.

    Exits 0 when the pairing is eligible and the gap is below threshold, 3 when
    an eligible pairing misses, and 2 for an ineligible pairing.
    """
    spec = load_market(args.market)
    if not spec.is_full_scope:
        raise UsageError("compare needs a market without marginal agents")

    eligible = spec.is_homogeneous and spec.kinds[0] in ORACLE_KINDS[args.oracle]
    if not eligible:
        _LOGGER.error(
            "The %s oracle does not describe a market of %s agents",
            args.oracle,
            ", ".join(sorted(set(spec.kinds))),
        )

    market = oracle = gap = None
    try:
        market = solve(spec, _solver_config(args)).prices
        oracle = _oracle_prices(spec, args.oracle)
        gap = float(np.max(np.abs(market - oracle)))
    except MarketError as err:
        _LOGGER.error("%s", err)

    record = {
        "oracle": args.oracle,
        "eligible": eligible,
        "outcomes": list(spec.space.good_labels),
        "market_prices": None if market is None else round_vector(market),
        "oracle_prices": None if oracle is None else round_vector(oracle),
        "max_gap": _round_optional(gap),
    }
    _emit(render_record(record), args.out)

    if not eligible:
        return EXIT_INPUT_ERROR
    if gap is None or gap >= GAP_THRESHOLD:
        _LOGGER.error("Market and %s oracle differ by %s", args.oracle, gap)
        return EXIT_NUMERIC_FAILURE
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Clear the market with isoelastic agents over a range of eta."""
    spec = load_market(args.market)
    if not spec.is_full_scope or spec.has_betting:
        raise UsageError("sweep needs a full-scope market of utility agents")

    config = _solver_config(args)
    rows = []
    for eta in args.eta:
        market = spec.with_behavior(BehaviorSpec(KIND_ISOELASTIC_UTILITY, float(eta)))
        try:
            rows.append((eta, solve_isoelastic(market, config).prices, STATUS_OK))
        except NonConvergenceError as err:
            _LOGGER.warning("eta %g: %s", eta, err)
            rows.append((eta, err.prices, STATUS_NONCONVERGED))

    buffer = io.StringIO()
    write_sweep(rows, spec.space.good_labels, buffer)
    _emit(buffer.getvalue(), args.out)

    if any(status != STATUS_OK for _, _, status in rows):
        return EXIT_NUMERIC_FAILURE
    return EXIT_OK


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    parser.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITERATIONS)
    parser.add_argument("--damping", type=float, default=DEFAULT_DAMPING)


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser for every command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    common.add_argument("--out", help="write the result here instead of stdout")

    parser = argparse.ArgumentParser(
        prog="market-pool", description="Aggregate beliefs by clearing prediction markets."
    )
    commands = parser.add_subparsers(dest="command", required=True)

    clear = commands.add_parser("clear", parents=[common], help="clear a market")
    clear.add_argument("market")
    clear.add_argument("--method", choices=SOLVE_METHODS, default=METHOD_AUTO)
    _add_solver_flags(clear)
    clear.set_defaults(handler=cmd_clear)

    train = commands.add_parser("train", parents=[common], help="train agent wealths")
    train.add_argument("market")
    train.add_argument("data")
    train.add_argument("--mode", choices=[MODE_ONLINE, MODE_BATCH], default=MODE_ONLINE)
    train.add_argument("--trace", metavar="PATH", help="write the wealth trace as CSV")
    train.add_argument(
        "--uniform-start", action="store_true", help="start from wealths 1 / N_A"
    )
    train.set_defaults(handler=cmd_train)

    compare = commands.add_parser(
        "compare", parents=[common], help="compare prices with an opinion pool"
    )
    compare.add_argument("market")
    compare.add_argument(
        "--oracle", choices=list(ORACLE_KINDS), default=ORACLE_WEIGHTED_AVERAGE
    )
    _add_solver_flags(compare)
    compare.set_defaults(handler=cmd_compare)

    sweep = commands.add_parser(
        "sweep", parents=[common], help="sweep isoelastic eta over a range"
    )
    sweep.add_argument("market")
    sweep.add_argument("--eta", type=_eta_range, required=True, metavar="LO:HI:STEPS")
    _add_solver_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run a command and return its exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_INPUT_ERROR if err.code else EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args)
    except (DegeneratePriceError, DegenerateDataError) as err:
        _LOGGER.error("%s", err)
        return EXIT_NUMERIC_FAILURE
    except NonConvergenceError as err:
        _LOGGER.error("%s", err)
        return EXIT_NUMERIC_FAILURE
    except MarketError as err:
        _LOGGER.error("%s", err)
        return EXIT_INPUT_ERROR
