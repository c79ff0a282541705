"""Convex structure sets for shape matrices.

A :class:`StructureSpec` is declarative; :func:`compile_constraints` turns it
into linear equalities/inequalities over ``svec(C)`` plus auxiliary variables
with their cone memberships, ready for the conic solver.  Toeplitz and banded
sets are linear subspaces and also get closed-form Frobenius projections.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .conic.cones import _tri_index, svec, tri_dim
from .core import as_symmetric
from .errors import InvalidSpec, UnsupportedSpec

logger = logging.getLogger(__name__)

UNCONSTRAINED = "unconstrained"
TOEPLITZ = "toeplitz"
BANDED = "banded"
LOW_RANK = "low_rank_plus_noise"
LINEAR = "linear_param"
KINDS = (UNCONSTRAINED, TOEPLITZ, BANDED, LOW_RANK, LINEAR)


@dataclass(frozen=True)
class StructureSpec:
    """A convex subset of the PSD cone.

    Use the classmethod constructors rather than filling fields by hand.
    """

    kind: str = UNCONSTRAINED
    bandwidth: int | None = None
    noise_variance: float | None = None
    nuclear_bound: float | None = None
    atoms: tuple | None = None
    l1_bound: float | None = None

    @classmethod
    def unconstrained(cls):
        return cls(UNCONSTRAINED)

    @classmethod
    def toeplitz(cls):
        return cls(TOEPLITZ)

    @classmethod
    def banded(cls, bandwidth: int):
        return cls(BANDED, bandwidth=int(bandwidth))

    @classmethod
    def low_rank_plus_noise(cls, noise_variance: float, nuclear_bound: float):
        return cls(LOW_RANK, noise_variance=float(noise_variance), nuclear_bound=float(nuclear_bound))

    @classmethod
    def linear_param(cls, atoms, l1_bound: float):
        atoms = tuple(tuple(float(v) for v in a) for a in atoms)
        return cls(LINEAR, atoms=atoms, l1_bound=float(l1_bound))

    def validate(self, p: int) -> None:
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown structure kind {self.kind!r}")
        if p < 1:
            raise InvalidSpec("dimension must be positive")
        if self.kind == BANDED:
            if self.bandwidth is None or not 0 <= self.bandwidth <= p - 1:
                raise InvalidSpec(f"bandwidth must lie in [0, {p - 1}], got {self.bandwidth}")
        elif self.kind == LOW_RANK:
            if self.noise_variance is None or self.noise_variance < 0:
                raise InvalidSpec("noise_variance must be >= 0")
            if self.nuclear_bound is None or not self.nuclear_bound > 0:
                raise InvalidSpec("nuclear_bound must be > 0")
        elif self.kind == LINEAR:
            if not self.atoms:
                raise InvalidSpec("linear_param needs at least one atom")
            if self.l1_bound is None or not self.l1_bound > 0:
                raise InvalidSpec("l1_bound must be > 0")
            for a in self.atoms:
                if len(a) != p:
                    raise InvalidSpec(f"atom of length {len(a)} for dimension {p}")
                if not np.any(np.asarray(a)):
                    raise InvalidSpec("atoms must be nonzero")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == BANDED:
            out["bandwidth"] = self.bandwidth
        elif self.kind == LOW_RANK:
            out.update(noise_variance=self.noise_variance, nuclear_bound=self.nuclear_bound)
        elif self.kind == LINEAR:
            out.update(atoms=[list(a) for a in self.atoms], l1_bound=self.l1_bound)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StructureSpec":
        kind = d.get("kind")
        try:
            return cls._from_fields(kind, d)
        except KeyError as exc:
            raise InvalidSpec(f"structure {kind!r} is missing field {exc.args[0]!r}") from exc

    @classmethod
    def _from_fields(cls, kind, d):
        if kind == UNCONSTRAINED:
            return cls.unconstrained()
        if kind == TOEPLITZ:
            return cls.toeplitz()
        if kind == BANDED:
            return cls.banded(d["bandwidth"])
        if kind == LOW_RANK:
            return cls.low_rank_plus_noise(d["noise_variance"], d["nuclear_bound"])
        if kind == LINEAR:
            return cls.linear_param(d["atoms"], d["l1_bound"])
        raise InvalidSpec(f"unknown structure kind {kind!r}")


@dataclass
class AffineConstraintSet:
    """Linear description of a structure set over ``(svec(C), aux)``.

    Equalities read ``eq_C @ svec(C) + eq_aux @ aux == eq_rhs`` and
    inequalities ``ineq_C @ svec(C) + ineq_aux @ aux <= ineq_rhs``.  Auxiliary
    variables are free unless listed in ``aux_nonneg`` (``(offset, count)``
    runs) or ``aux_psd`` (``(offset, side)`` svec blocks).  Equality rows are
    expressed in matrix-entry units, so a residual of ``1e-12`` means an entry
    is off by ``1e-12``.
    """

    p: int
    n_aux: int
    eq_C: sp.csr_matrix
    eq_aux: sp.csr_matrix
    eq_rhs: np.ndarray
    ineq_C: sp.csr_matrix
    ineq_aux: sp.csr_matrix
    ineq_rhs: np.ndarray
    aux_nonneg: list = field(default_factory=list)
    aux_psd: list = field(default_factory=list)

    @property
    def n_eq(self) -> int:
        return self.eq_C.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq_C.shape[0]

    @property
    def empty(self) -> bool:
        return self.n_aux == 0 and self.n_eq == 0 and self.n_ineq == 0


def _svec_position(p: int) -> dict:
    rows, cols, w = _tri_index(p)
    return {(int(r), int(c)): (k, float(w[k])) for k, (r, c) in enumerate(zip(rows, cols))}


def _entry_rows(p: int, kind: str, bandwidth: int | None):
    """Equality rows (in entry units) for the linear-subspace structures."""
    pos = _svec_position(p)
    data, ri, ci = [], [], []
    row = 0
    for k in range(p):
        for i in range(p - k):
            r, c = i + k, i
            if kind == TOEPLITZ and i == 0:
                continue
            if kind == BANDED and k <= bandwidth:
                continue
            idx, w = pos[(r, c)]
            ri.append(row); ci.append(idx); data.append(1.0 / w)
            if kind == TOEPLITZ:
                idx0, w0 = pos[(k, 0)]
                ri.append(row); ci.append(idx0); data.append(-1.0 / w0)
            row += 1
    return sp.csr_matrix((data, (ri, ci)), shape=(row, tri_dim(p)))


def compile_constraints(spec: StructureSpec, p: int) -> AffineConstraintSet:
    """Compile ``spec`` for dimension ``p`` into an :class:`AffineConstraintSet`."""
    spec.validate(p)
    m = tri_dim(p)

    def empty(rows, cols):
        return sp.csr_matrix((rows, cols))

    if spec.kind == UNCONSTRAINED:
        return AffineConstraintSet(p, 0, empty(0, m), empty(0, 0), np.zeros(0),
                                   empty(0, m), empty(0, 0), np.zeros(0))
    if spec.kind in (TOEPLITZ, BANDED):
        G = _entry_rows(p, spec.kind, spec.bandwidth)
        k = G.shape[0]
        return AffineConstraintSet(p, 0, G, empty(k, 0), np.zeros(k),
                                   empty(0, m), empty(0, 0), np.zeros(0))
    if spec.kind == LOW_RANK:
        # C - X = sigma^2 I, X psd, trace(X) <= beta (nuclear norm of a psd matrix)
        eye = svec(np.eye(p))
        return AffineConstraintSet(
            p, m,
            eq_C=sp.identity(m, format="csr"),
            eq_aux=-sp.identity(m, format="csr"),
            eq_rhs=spec.noise_variance * eye,
            ineq_C=empty(1, m),
            ineq_aux=sp.csr_matrix(eye[None, :]),
            ineq_rhs=np.array([spec.nuclear_bound]),
            aux_psd=[(0, p)],
        )
    # LINEAR: C = sum_i coef_i a_i a_i^T, coef >= 0, sum coef <= beta
    atoms = np.asarray(spec.atoms, dtype=float)
    k = atoms.shape[0]
    V = np.stack([svec(np.outer(a, a)) for a in atoms], axis=1)
    return AffineConstraintSet(
        p, k,
        eq_C=sp.identity(m, format="csr"),
        eq_aux=sp.csr_matrix(-V),
        eq_rhs=np.zeros(m),
        ineq_C=empty(1, m),
        ineq_aux=sp.csr_matrix(np.ones((1, k))),
        ineq_rhs=np.array([spec.l1_bound]),
        aux_nonneg=[(0, k)],
    )


def project_frobenius(spec: StructureSpec, M) -> np.ndarray:
    """Closed-form Frobenius projection onto the linear span of the structure.

    Toeplitz averages each diagonal; banded zeroes everything outside the band.
    The PSD cone is ignored.
    """
    A = as_symmetric(M)
    p = A.shape[0]
    spec.validate(p)
    if spec.kind == UNCONSTRAINED:
        return A
    if spec.kind == TOEPLITZ:
        out = np.empty_like(A)
        for k in range(p):
            val = np.diagonal(A, -k).mean()
            idx = np.arange(p - k)
            out[idx + k, idx] = val
            out[idx, idx + k] = val
        return out
    if spec.kind == BANDED:
        i, j = np.indices(A.shape)
        return np.where(np.abs(i - j) <= spec.bandwidth, A, 0.0)
    raise UnsupportedSpec(f"no closed-form projection for {spec.kind}")


def contains(spec: StructureSpec, M, tol: float = 1e-10) -> bool:
    """Whether ``M`` satisfies the structure's constraints to within ``tol``.

    Positive semidefiniteness of ``M`` itself is not checked; it is enforced
    separately wherever ``C`` is a decision variable.
    """
    A = as_symmetric(M)
    p = A.shape[0]
    spec.validate(p)
    if spec.kind == UNCONSTRAINED:
        return True
    if spec.kind in (TOEPLITZ, BANDED):
        cs = compile_constraints(spec, p)
        if cs.n_eq == 0:
            return True
        return bool(np.max(np.abs(cs.eq_C @ svec(A) - cs.eq_rhs)) <= tol)
    if spec.kind == LOW_RANK:
        X = A - spec.noise_variance * np.eye(p)
        lam = np.linalg.eigvalsh(X)
        return bool(lam[0] >= -tol and np.trace(X) <= spec.nuclear_bound + tol)
    return _linear_param_feasible(spec, A, tol)


def _linear_param_feasible(spec: StructureSpec, A: np.ndarray, tol: float) -> bool:
    # LP: min r  s.t.  |sum_i coef_i a_i a_i^T - A|_entries <= r, coef >= 0, sum coef <= beta
    from scipy.optimize import linprog

    p = A.shape[0]
    atoms = np.asarray(spec.atoms, dtype=float)
    k = len(atoms)
    iu = np.tril_indices(p)
    V = np.stack([np.outer(a, a)[iu] for a in atoms], axis=1)
    target = A[iu]
    q = len(target)
    cost = np.r_[np.zeros(k), 1.0]
    ones = np.ones((q, 1))
    A_ub = np.vstack([np.hstack([V, -ones]), np.hstack([-V, -ones]), np.r_[np.ones(k), 0.0][None, :]])
    b_ub = np.r_[target, -target, spec.l1_bound]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * (k + 1), method="highs")
    if res.status != 0:
        return False
    coef = np.maximum(res.x[:k], 0.0)
    if coef.sum() > spec.l1_bound:
        coef *= spec.l1_bound / coef.sum()
    return bool(np.max(np.abs(V @ coef - target)) <= tol)


def make_toeplitz_target(p: int, rho: float) -> np.ndarray:
    """AR(1)-type Toeplitz matrix ``C[i, j] = rho**|i - j|``."""
    if p < 1:
        raise InvalidSpec("dimension must be positive")
    if not 0 < rho < 1:
        raise InvalidSpec(f"rho must lie in (0, 1), got {rho}")
    i, j = np.indices((p, p))
    return rho ** np.abs(i - j).astype(float)


def make_banded_target(p: int = 20, return_shift: bool = False):
    """Pentadiagonal benchmark matrix.

    Diagonal ``21, 22, ..., 20 + p``; first sub-diagonal ``1, ..., p - 1``;
    second sub-diagonal ``1, ..., p - 2``.  For ``p <= 20`` this is the leading
    principal block of the 20-dimensional matrix.  If the result is not safely
    positive definite a multiple of the identity is added so that the smallest
    eigenvalue becomes ``1e-3``; the shift is logged and, with
    ``return_shift=True``, returned alongside the matrix.

    The smallest eigenvalue is about 5.2024 at ``p = 20`` and 15.161 at
    ``p = 10``, so no shift happens for ``p <= 20``.
    """
    if p < 1:
        raise InvalidSpec("dimension must be positive")
    M = np.diag(np.arange(21, 21 + p, dtype=float))
    if p > 1:
        v = np.arange(1, p, dtype=float)
        M += np.diag(v, -1) + np.diag(v, 1)
    if p > 2:
        v = np.arange(1, p - 1, dtype=float)
        M += np.diag(v, -2) + np.diag(v, 2)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    shift = 0.0
    if lam_min < 1e-8 * np.linalg.norm(M, 2):
        shift = max(0.0, 1e-3 - lam_min)
        logger.warning("banded target (p=%d) has min eigenvalue %.3e; adding %.3e * I", p, lam_min, shift)
        M += shift * np.eye(p)
    return (M, shift) if return_shift else M
