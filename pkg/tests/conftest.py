"""Fixtures for market pool tests."""
import json

from pytest import fixture

from market_pool.formats import parse_market

from .const import EXP_MARKET, LOG_MARKET, TRAINING_MARKET


@fixture(name="log_market")
def log_market_fixture():
    """Return the two-agent log-utility market."""
    return parse_market(LOG_MARKET)


@fixture(name="exp_market")
def exp_market_fixture():
    """Return the two-agent exp-utility market."""
    return parse_market(EXP_MARKET)


@fixture(name="training_market")
def training_market_fixture():
    """Return the log-utility market with wealths (0.5, 0.5)."""
    return parse_market(TRAINING_MARKET)


@fixture(name="write_market")
def write_market_fixture(tmp_path):
    """Return a helper writing a market file."""

    def write(data, name="market.json"):
        path = tmp_path / name
        text = data if isinstance(data, str) else json.dumps(data, indent=2)
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


@fixture(name="write_dataset")
def write_dataset_fixture(tmp_path):
    """Return a helper writing a line-delimited dataset file."""

    def write(records, name="data.jsonl"):
        path = tmp_path / name
        lines = [
            record if isinstance(record, str) else json.dumps(record)
            for record in records
        ]
        path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        return str(path)

    return write
