"""Chemical-distance time constants of supercritical Bernoulli bond percolation.

Coupled edge fields, cluster and chemical-distance computation, the
coarse-grained good/bad box classification, the path modification that
routes closed edges around bad regions, and Monte Carlo estimators for
the time constant and its modulus of continuity.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError, ConsistencyError, DomainError, EstimationError, HypothesisError,
    NoPathError, ParameterError, PreconditionError,
)
from .field import MONOTONE, TWO_SOURCE, CoupledEdgeField, sample_field  # noqa: E402
from .lattice import LatticeWindow, Region  # noqa: E402

__all__ = [
    "__version__", "CapacityError", "ConsistencyError", "DomainError", "EstimationError",
    "HypothesisError", "NoPathError", "ParameterError", "PreconditionError",
    "MONOTONE", "TWO_SOURCE", "CoupledEdgeField", "sample_field", "LatticeWindow", "Region",
]
