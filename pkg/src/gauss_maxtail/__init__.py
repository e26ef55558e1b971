"""Lower-tail and small-ball probabilities for maxima of correlated Gaussians.

Exact quadrature for the equicorrelated model, a catalog of classical and
sharp bounds, seeded Monte Carlo for arbitrary correlation matrices, and
numerical Slepian-comparison checks.
"""

__version__ = "0.1.0"

from .corrmodel import (
    CorrelationError,
    DenseCorrelation,
    Equicorrelated,
    build_equicorrelated,
    from_matrix,
    identity,
    load_csv,
)
from .exact import (
    AccuracyNotReached,
    QuadratureResult,
    lower_tail_exact,
    median_exact,
    moments_exact,
    small_ball_exact,
    threshold,
)
from .montecarlo import estimate_lower_tail, estimate_small_ball, estimate_statistics
from .slepian import check_comparison, dominates

__all__ = [
    "AccuracyNotReached",
    "CorrelationError",
    "DenseCorrelation",
    "Equicorrelated",
    "QuadratureResult",
    "build_equicorrelated",
    "check_comparison",
    "dominates",
    "estimate_lower_tail",
    "estimate_small_ball",
    "estimate_statistics",
    "from_matrix",
    "identity",
    "load_csv",
    "lower_tail_exact",
    "median_exact",
    "moments_exact",
    "small_ball_exact",
    "threshold",
]
