"""Exception hierarchy."""


class SqueezeSimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SqueezeSimError, ValueError):
    """Invalid grid, parameter, or run configuration."""


class DomainViolationError(SqueezeSimError, ValueError):
    """Field outside the admissible set (e.g. non-positive gap)."""


class QuenchError(SqueezeSimError):
    """The gap fell below the quench threshold."""

    def __init__(self, message, time=float("nan"), location=None, min_gap=float("nan")):
        super().__init__(message)
        self.time = time
        self.location = location
        self.min_gap = min_gap


class IterationFailure(SqueezeSimError):
    """A fixed-point iteration did not converge."""

    def __init__(self, message, last_ratio=float("nan"), iterations=0):
        super().__init__(message)
        self.last_ratio = last_ratio
        self.iterations = iterations


class OracleFailure(SqueezeSimError):
    """A reference oracle could not produce a trustworthy answer."""
