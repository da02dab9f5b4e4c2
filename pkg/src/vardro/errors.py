"""Shared exception types."""


class VardroError(Exception):
    """Base class for all package-specific errors."""


class InvalidBudgetError(VardroError, ValueError):
    """A robustness budget vector is negative, non-finite, or mis-sized."""


class NonFiniteLossError(VardroError, ValueError):
    """A loss value or loss vector contains NaN or infinities."""


class BisectionError(VardroError, RuntimeError):
    """Dual bisection failed to bracket or converge within its iteration cap."""


class DivergenceError(VardroError, RuntimeError):
    """Training produced a non-finite loss; carries the epoch/batch location."""

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class OutputIoError(VardroError, OSError):
    """A result file could not be written; message includes the path."""
