"""Structured shape-matrix estimation for elliptical data.

Sample covariance, Tyler's M-estimator, norm projection onto a convex
structure set, and the convex moment-matching relaxation (COCA), together
with the conic solver they rest on and a Monte Carlo benchmark harness.
"""

__version__ = "0.1.0"

from .core import align_scale, eig_sym, frobenius_norm, spectral_norm, trace_normalize  # noqa: E402
from .estimators import (EstimatorResult, coca, moment_map, project_estimator,  # noqa: E402
                         relaxation_gap, sample_covariance, tyler)
from .sampler import SampleSet, TextureLaw, derive_seed, sample_elliptical  # noqa: E402
from .structures import StructureSpec, make_banded_target, make_toeplitz_target  # noqa: E402

__all__ = [
    "__version__", "align_scale", "eig_sym", "frobenius_norm", "spectral_norm", "trace_normalize",
    "EstimatorResult", "coca", "moment_map", "project_estimator", "relaxation_gap",
    "sample_covariance", "tyler", "SampleSet", "TextureLaw", "derive_seed", "sample_elliptical",
    "StructureSpec", "make_banded_target", "make_toeplitz_target",
]
