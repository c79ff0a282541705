"""Cone bookkeeping: scaled vectorization and Euclidean cone projections.

Rows of a conic constraint are laid out as ``[zero | nonneg | psd_0 | psd_1 ...]``.
Each PSD block of side ``d`` occupies ``d(d+1)/2`` rows holding ``svec`` of the
block, lower triangle in column-major order with off-diagonals scaled by sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import InvalidInput

__all__ = ["ConeSpec", "svec", "smat", "svec_stack", "smat_stack", "tri_dim", "side_from_len",
           "ConeProjector", "project_cone"]

SQRT2 = np.sqrt(2.0)


def tri_dim(d: int) -> int:
    return d * (d + 1) // 2


def side_from_len(m: int) -> int:
    d = int(round((np.sqrt(8 * m + 1) - 1) / 2))
    if d < 1 or tri_dim(d) != m:
        raise InvalidInput(f"length {m} is not a triangular number")
    return d


@lru_cache(maxsize=None)
def _tri_index(d: int):
    # column-major lower triangle: (i, j) with i >= j, j outer
    cols, rows = np.triu_indices(d)
    weights = np.where(rows == cols, 1.0, SQRT2)
    return rows, cols, weights


def svec(M) -> np.ndarray:
    """Scaled vectorization preserving the Frobenius inner product."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"svec needs a square matrix, got shape {A.shape}")
    rows, cols, w = _tri_index(A.shape[0])
    return A[rows, cols] * w


def smat(v) -> np.ndarray:
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInput("smat needs a vector")
    return smat_stack(v[None, :])[0]


def svec_stack(Ms: np.ndarray) -> np.ndarray:
    """``svec`` applied to a stack of shape ``(k, d, d)``."""
    rows, cols, w = _tri_index(Ms.shape[-1])
    return Ms[:, rows, cols] * w


def smat_stack(V: np.ndarray) -> np.ndarray:
    """``smat`` applied to each row of a ``(k, d(d+1)/2)`` array."""
    k, m = V.shape
    d = side_from_len(m)
    rows, cols, w = _tri_index(d)
    out = np.zeros((k, d, d))
    vals = V / w
    out[:, rows, cols] = vals
    out[:, cols, rows] = vals
    return out


@dataclass(frozen=True)
class ConeSpec:
    """Cartesian product of a zero cone, a nonnegative orthant and PSD blocks."""

    zero: int = 0
    nonneg: int = 0
    psd: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "psd", tuple(int(d) for d in self.psd))
        if self.zero < 0 or self.nonneg < 0 or any(d < 1 for d in self.psd):
            raise InvalidInput(f"invalid cone dimensions {self}")

    @property
    def dim(self) -> int:
        return self.zero + self.nonneg + sum(tri_dim(d) for d in self.psd)

    def to_dict(self) -> dict:
        return {"zero": self.zero, "nonneg": self.nonneg, "psd": list(self.psd)}


class ConeProjector:
    """Precomputed index layout for projecting onto a :class:`ConeSpec`.

    PSD blocks sharing a side length are projected together with one batched
    ``eigh`` call; results are written back into fixed slots so the outcome does
    not depend on grouping.
    """

    def __init__(self, cone: ConeSpec):
        self.cone = cone
        self.m = cone.dim
        start = cone.zero + cone.nonneg
        groups: dict[int, list[int]] = {}
        for d in cone.psd:
            groups.setdefault(d, []).append(start)
            start += tri_dim(d)
        # for each side length: (side, index matrix of shape (blocks, tri_dim))
        self.groups = []
        for d, starts in groups.items():
            idx = np.asarray(starts)[:, None] + np.arange(tri_dim(d))[None, :]
            self.groups.append((d, idx))

    def project(self, s: np.ndarray, dual: bool = False) -> np.ndarray:
        """Euclidean projection onto the cone, or onto its dual when ``dual``.

        All cones here are self-dual except the zero cone, whose dual is the
        whole space.
        """
        s = np.asarray(s, dtype=float)
        if s.shape != (self.m,):
            raise InvalidInput(f"expected vector of length {self.m}, got {s.shape}")
        out = s.copy()
        z, nn = self.cone.zero, self.cone.nonneg
        if not dual:
            out[:z] = 0.0
        np.maximum(out[z:z + nn], 0.0, out=out[z:z + nn])
        for d, idx in self.groups:
            out[idx] = _project_psd_stack(s[idx])
        return out


def _project_psd_stack(V: np.ndarray) -> np.ndarray:
    if V.shape[1] == 1:
        return np.maximum(V, 0.0)
    mats = smat_stack(V)
    lam, vec = np.linalg.eigh(mats)
    if np.all(lam >= 0):
        return V.copy()
    lam = np.maximum(lam, 0.0)
    proj = (vec * lam[:, None, :]) @ vec.transpose(0, 2, 1)
    return svec_stack(proj)


def project_cone(s, cone: ConeSpec, dual: bool = False) -> np.ndarray:
    """Project ``s`` onto ``cone`` (zero, nonneg, PSD blocks)."""
    return ConeProjector(cone).project(s, dual=dual)
