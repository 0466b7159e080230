"""Shared exception types."""


class PointOutsideChart(ValueError):
    """A spatial point failed the chart membership test."""


class InvalidEpsilon(ValueError):
    """Regularisation parameter outside (0, 1]."""


class UnknownProfile(ValueError):
    """No built-in wave profile with the requested name."""


class InvalidParams(ValueError):
    """Parameters violate a documented precondition."""


class NoConvergence(RuntimeError):
    """An iterative solver ran out of iterations.

    Carries the iteration count and the last contraction measure so
    callers can tell "interval too long" from "tolerance too tight".
    """

    def __init__(self, message, iterations=None, last_delta=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_delta = last_delta


class ConfigError(ValueError):
    """Malformed or unknown keys in a run configuration."""
