"""Exception types shared across the package."""

from .lattice import GeometryError


class CapacityError(MemoryError):
    """Requested object does not fit the addressable budget."""


class ParameterError(ValueError):
    """A percolation parameter is outside the range the field supports."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class NoPathError(LookupError):
    """The two endpoints are not connected by an open path."""


class HypothesisError(RuntimeError):
    """A sample violates the hypotheses of the bypass construction.

    Such samples are censored and counted, never silently dropped.
    """


class PreconditionError(ValueError):
    """Caller-side precondition of a construction step does not hold."""


class ConsistencyError(AssertionError):
    """An internal invariant failed although the hypotheses held."""


class EstimationError(RuntimeError):
    """Monte Carlo estimate could not be formed (e.g. all samples censored)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


__all__ = [
    "CapacityError",
    "ConsistencyError",
    "DomainError",
    "EstimationError",
    "GeometryError",
    "HypothesisError",
    "NoPathError",
    "ParameterError",
    "PreconditionError",
]
