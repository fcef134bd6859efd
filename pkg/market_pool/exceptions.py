"""Errors raised by the market pool engine."""
from __future__ import annotations

import numpy as np


class MarketError(Exception):
    """Base class for market pool errors."""


class MarketDomainError(MarketError, ValueError):
    """An argument lies outside the domain of an operation."""


class SingularPriceError(MarketError):
    """A price needed by a demand function is zero."""


class WrongClearingRuleError(MarketError):
    """Betting agents were passed to an operation that clears by excess demand."""


class UnsupportedAnalyticError(MarketError):
    """The market has no closed-form equilibrium."""


class UnsupportedBehaviorError(MarketError):
    """The operation is undefined for an agent's behavior kind."""


class NonConvergenceError(MarketError):
    """A solver stopped before reaching its tolerance."""

    def __init__(
        self, message: str, prices: np.ndarray, score: float, iterations: int, method: str
    ) -> None:
        """Keep the best iterate so callers can still report it."""
        super().__init__(message)
        self.prices = prices
        self.score = score
        self.iterations = iterations
        self.method = method


class DegeneratePriceError(MarketError):
    """The realized outcome of a training instance has price zero."""

    def __init__(self, message: str, step: int) -> None:
        """Initialize with the 1-based training step."""
        super().__init__(message)
        self.step = step


class DegenerateDataError(MarketError):
    """Data leaves no probability mass to normalize."""


class MarketFileError(MarketError):
    """A market or dataset file could not be parsed."""

    def __init__(
        self,
        message: str,
        path: str | None = None,
        line: int | None = None,
        field: str | None = None,
    ) -> None:
        """Initialize with the location of the problem."""
        self.path = path
        self.line = line
        self.field = field
        location = ":".join(str(part) for part in (path, line) if part is not None)
        if field:
            message = f"{message} (field: {field})"
        super().__init__(f"{location}: {message}" if location else message)
