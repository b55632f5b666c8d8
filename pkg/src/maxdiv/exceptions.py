"""Exception hierarchy shared across the package."""


class MaxDivError(Exception):
    """Base class for all package errors."""


class DataError(MaxDivError, ValueError):
    """Malformed or inconsistent input data (prices, returns, config)."""


class SchaiblePositivityError(MaxDivError, ValueError):
    """Raised when a ratio problem is built with a nonpositive asset risk."""


class UndefinedRatioError(MaxDivError, ValueError):
    """Raised when the diversification ratio has a nonpositive denominator."""


class TargetUnattainableError(MaxDivError):
    """The requested target return cannot be reached on the simplex."""


class SolverError(MaxDivError):
    """The backend failed to return an optimal solution."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
