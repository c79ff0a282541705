"""Dense symmetric-matrix primitives.

Symmetric matrices are plain ``numpy.ndarray`` objects of shape ``(p, p)``.
:func:`as_symmetric` is the single validation gate; every public function in
the package funnels matrix arguments through it.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegenerateScale, InvalidInput

__all__ = [
    "EigenPair",
    "as_symmetric",
    "eig_sym",
    "spectral_norm",
    "frobenius_norm",
    "trace_normalize",
    "align_scale",
]

# relative asymmetry accepted before symmetrizing
_SYM_RTOL = 1e-8


class EigenPair(NamedTuple):
    """Eigenvalues in nondecreasing order and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def as_symmetric(M, name: str = "M") -> np.ndarray:
    """Validate ``M`` and return an exactly symmetric float copy.

    The lower triangle is authoritative: the result mirrors it into the upper
    triangle so that ``out[i, j] == out[j, i]`` bit for bit.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInput(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > _SYM_RTOL * scale:
        raise InvalidInput(f"{name} is not symmetric")
    lower = np.tril(A)
    return lower + np.tril(A, -1).T


def eig_sym(M) -> EigenPair:
    """Eigendecomposition of a real symmetric matrix (LAPACK ``syevd``)."""
    A = as_symmetric(M)
    values, vectors = np.linalg.eigh(A)
    return EigenPair(values, vectors)


def spectral_norm(M) -> float:
    """Largest eigenvalue magnitude."""
    values = np.linalg.eigvalsh(as_symmetric(M))
    return float(np.max(np.abs(values)))


def frobenius_norm(M) -> float:
    return float(np.linalg.norm(as_symmetric(M), "fro"))


def trace_normalize(M) -> np.ndarray:
    """Rescale ``M`` to unit trace.

    Raises
    ------
    DegenerateScale
        If ``trace(M) <= 0``.
    """
    A = as_symmetric(M)
    tr = float(np.trace(A))
    if not tr > 0:
        raise DegenerateScale(f"trace must be positive, got {tr!r}")
    return A / tr


def align_scale(estimate, truth) -> np.ndarray:
    """Rescale ``estimate`` so that its trace equals ``trace(truth)``."""
    E = as_symmetric(estimate, "estimate")
    T = as_symmetric(truth, "truth")
    if E.shape != T.shape:
        raise InvalidInput(f"dimension mismatch: {E.shape} vs {T.shape}")
    tr_e = float(np.trace(E))
    tr_t = float(np.trace(T))
    if not (tr_e > 0 and tr_t > 0):
        raise DegenerateScale(f"traces must be positive, got {tr_e!r} and {tr_t!r}")
    return E * (tr_t / tr_e)
