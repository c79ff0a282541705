"""First-order conic solver on the homogeneous self-dual embedding.

Solves

    minimize    c'x
    subject to  A x + s = b,   s in K

together with its dual ``maximize -b'y s.t. A'y + c = 0, y in K*`` by
Douglas-Rachford splitting applied to the embedding ``v = M u``, ``u in C``,
``v in C*``, ``u'v = 0`` with ``u = (x, y, tau)`` and ``C = R^n x K* x R_+``.
Every iteration is one solve with the static matrix ``R + M`` (reduced to a
cached Cholesky factor of ``rho_x I + A' R_y^{-1} A``) and one cone projection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from ..errors import InvalidInput
from .cones import ConeProjector, ConeSpec, tri_dim

logger = logging.getLogger(__name__)

__all__ = ["SolverOptions", "ConicProblem", "ConicSolution", "Residuals", "solve",
           "kkt_residuals", "OPTIMAL", "MAX_ITERS", "INFEASIBLE", "UNBOUNDED"]

OPTIMAL = "optimal"
MAX_ITERS = "max_iters"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class SolverOptions:
    eps_abs: float = 1e-7
    eps_rel: float = 1e-6
    eps_infeas: float = 1e-7
    max_iters: int = 50_000
    # initial dual-step scale; R_y = 1 / scale on cone rows
    scale: float = 1.0
    adaptive_scale: bool = True
    alpha: float = 1.5
    rho_x: float = 1e-6
    equilibrate_iters: int = 25
    check_every: int = 10
    adapt_every: int = 100

    def updated(self, **kwargs) -> "SolverOptions":
        return replace(self, **kwargs)


@dataclass
class ConicProblem:
    """``minimize c'z  s.t.  A z + s = b, s in cone``.

    ``var_map`` names slices of ``z`` (for instance ``"C"`` for svec of the
    shape matrix) so callers can read the solution back.
    """

    c: np.ndarray
    A: sp.csc_matrix
    b: np.ndarray
    cone: ConeSpec
    var_map: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.A = sp.csc_matrix(self.A, dtype=float)
        m, n = self.A.shape
        if self.c.shape != (n,) or self.b.shape != (m,):
            raise InvalidInput(f"inconsistent sizes: A {self.A.shape}, b {self.b.shape}, c {self.c.shape}")
        if self.cone.dim != m:
            raise InvalidInput(f"cone dimension {self.cone.dim} != row count {m}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.A.data))):
            raise InvalidInput("problem data must be finite")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def var(self, z: np.ndarray, name: str) -> np.ndarray:
        return z[self.var_map[name]]


class Residuals(NamedTuple):
    primal: float
    dual: float
    gap: float


@dataclass
class ConicSolution:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    status: str
    residuals: Residuals
    iterations: int
    objective: float
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def kkt_residuals(problem: ConicProblem, sol: ConicSolution) -> Residuals:
    """Absolute KKT residuals of ``sol``, recomputed from the problem data.

    Returns ``(||Ax + s - b||_inf, ||A'y + c||_inf, |c'x + b'y|)``.
    """
    A = problem.A.toarray()
    x, s, y = (np.asarray(v, dtype=float) for v in (sol.x, sol.s, sol.y))
    primal = float(np.max(np.abs(A @ x + s - problem.b), initial=0.0))
    dual = float(np.max(np.abs(A.T @ y + problem.c), initial=0.0))
    gap = float(abs(problem.c @ x + problem.b @ y))
    return Residuals(primal, dual, gap)


def kkt_tolerances(problem: ConicProblem, sol: ConicSolution, opts: SolverOptions | None = None) -> Residuals:
    """Stopping thresholds ``eps_abs + eps_rel * scale`` for ``sol``, recomputed densely.

    Pairs with :func:`kkt_residuals`: a solution is within tolerance when each
    residual is at most the matching entry here.
    """
    opts = opts or SolverOptions()
    A = problem.A.toarray()
    x, s, y = (np.asarray(v, dtype=float) for v in (sol.x, sol.s, sol.y))
    pscale = max(np.max(np.abs(A @ x), initial=0.0), np.max(np.abs(s), initial=0.0),
                 np.max(np.abs(problem.b), initial=0.0))
    dscale = max(np.max(np.abs(A.T @ y), initial=0.0), np.max(np.abs(problem.c), initial=0.0))
    gscale = max(abs(problem.c @ x), abs(problem.b @ y))
    return Residuals(*(float(opts.eps_abs + opts.eps_rel * sc) for sc in (pscale, dscale, gscale)))


def _equilibrate(A: sp.csc_matrix, cone: ConeSpec, iters: int):
    """Ruiz-style factors ``D``, ``E`` balancing the row and column 2-norms of ``D A E``.

    Row factors are shared across every row of a PSD block (root-mean-square of
    the block's row norms) so the scaled slack stays in the same cone.  The
    2-norm matters here: epigraph rows couple every ``d_i`` with small weights,
    and max-norm balancing leaves them badly underweighted.
    """
    m, n = A.shape
    D = np.ones(m)
    E = np.ones(n)
    blocks = []
    start = cone.zero + cone.nonneg
    for d in cone.psd:
        blocks.append(slice(start, start + tri_dim(d)))
        start += tri_dim(d)
    sq = A.multiply(A).tocsr()
    for _ in range(iters):
        S = sp.diags(D**2) @ sq @ sp.diags(E**2)
        rows = np.sqrt(np.asarray(S.sum(axis=1)).ravel())
        for blk in blocks:
            rows[blk] = np.sqrt(np.mean(rows[blk] ** 2))
        cols = np.sqrt(np.asarray(S.sum(axis=0)).ravel())
        rows = np.where(rows > 0, rows, 1.0)
        cols = np.where(cols > 0, cols, 1.0)
        D = np.clip(D / np.sqrt(rows), 1e-4, 1e4)
        E = np.clip(E / np.sqrt(cols), 1e-4, 1e4)
    return D, E


def _bounded_inv(x: float) -> float:
    return 1.0 if x < 1e-12 else float(np.clip(1.0 / x, 1e-4, 1e4))


def _inf(v) -> float:
    return float(np.max(np.abs(v), initial=0.0))


class _Workspace:
    """Scaled problem data plus the cached factorization of the linear step."""

    def __init__(self, problem: ConicProblem, opts: SolverOptions):
        self.problem = problem
        self.opts = opts
        cone = problem.cone
        self.n, self.m = problem.n, problem.m
        self.D, self.E = _equilibrate(problem.A, cone, opts.equilibrate_iters)
        self.A = (sp.diags(self.D) @ problem.A @ sp.diags(self.E)).tocsc()
        self.AT = self.A.T.tocsc()
        b = self.D * problem.b
        c = self.E * problem.c
        self.sigma_b = _bounded_inv(_inf(b))
        self.sigma_c = _bounded_inv(_inf(c))
        self.b = b * self.sigma_b
        self.c = c * self.sigma_c
        self.projector = ConeProjector(cone)
        self.zero = cone.zero
        self.scale = opts.scale
        self._factor()

    def _factor(self):
        o = self.opts
        ry = np.full(self.m, 1.0 / self.scale)
        ry[: self.zero] /= 1000.0
        self.ry = ry
        AtRA = (self.AT @ sp.diags(1.0 / ry) @ self.A).toarray()
        AtRA[np.diag_indices_from(AtRA)] += o.rho_x
        chol = sla.cho_factor(AtRA, lower=True, check_finite=False)
        # the reduced matrix is small and reused every iteration: keep its inverse
        self.reduced_inv = sla.cho_solve(chol, np.eye(self.n), check_finite=False)
        p = self._kinv(self.c, self.b)
        self.g = p
        self.denom = 1.0 + self.c @ p[0] + self.b @ p[1]

    def _kinv(self, a, e):
        rhs = a - self.AT @ (e / self.ry)
        zx = self.reduced_inv @ rhs
        zy = (e + self.A @ zx) / self.ry
        return zx, zy

    def rmul(self, w):
        n = self.n
        out = np.empty_like(w)
        out[:n] = self.opts.rho_x * w[:n]
        out[n:-1] = self.ry * w[n:-1]
        out[-1] = w[-1]
        return out

    def rinv(self, v):
        n = self.n
        out = np.empty_like(v)
        out[:n] = v[:n] / self.opts.rho_x
        out[n:-1] = v[n:-1] / self.ry
        out[-1] = v[-1]
        return out

    def linsolve(self, q):
        """Solve ``(R + M) z = q``."""
        n = self.n
        px, py = self._kinv(q[:n], q[n:-1])
        gx, gy = self.g
        tau = (q[-1] + self.c @ px + self.b @ py) / self.denom
        out = np.empty_like(q)
        out[:n] = px - tau * gx
        out[n:-1] = py - tau * gy
        out[-1] = tau
        return out

    def project(self, q):
        n = self.n
        out = q.copy()
        out[n:-1] = self.projector.project(q[n:-1], dual=True)
        out[-1] = max(q[-1], 0.0)
        return out

    def unscale(self, xh, yh, sh):
        x = self.E * xh / self.sigma_b
        y = self.D * yh / self.sigma_c
        s = sh / self.D / self.sigma_b
        return x, y, s

    def step(self, w):
        """One relaxed Douglas-Rachford step; returns ``(w_next, u, tmp)``."""
        ut = self.linsolve(self.rmul(w))
        tmp = 2.0 * ut - w
        u = self.project(tmp)
        return w + self.opts.alpha * (u - ut), u, tmp

    def rescale(self, new_scale: float):
        self.scale = new_scale
        self._factor()


def _residuals(problem: ConicProblem, x, y, s, opts: SolverOptions):
    A, b, c = problem.A, problem.b, problem.c
    Ax = A @ x
    Aty = A.T @ y
    cx = float(c @ x)
    by = float(b @ y)
    pres = _inf(Ax + s - b)
    dres = _inf(Aty + c)
    gap = abs(cx + by)
    pscale = max(_inf(Ax), _inf(s), _inf(b))
    dscale = max(_inf(Aty), _inf(c))
    gscale = max(abs(cx), abs(by))
    tols = tuple(opts.eps_abs + opts.eps_rel * sc for sc in (pscale, dscale, gscale))
    relative = (pres / max(pscale, 1e-300), dres / max(dscale, 1e-300))
    return Residuals(pres, dres, gap), tols, relative


def solve(problem: ConicProblem, opts: SolverOptions | None = None, **overrides) -> ConicSolution:
    """Solve a conic program; see the module docstring for the problem form.

    Parameters
    ----------
    problem : ConicProblem
    opts : SolverOptions, optional
        Defaults to ``SolverOptions()``; keyword ``overrides`` replace fields.

    Returns
    -------
    ConicSolution
        ``status`` is ``"optimal"`` only when all three residuals are within
        ``eps_abs + eps_rel * scale``. On ``"max_iters"`` the iterate with the
        smallest tolerance-normalized residual is returned.
    """
    opts = (opts or SolverOptions()).updated(**overrides) if overrides else (opts or SolverOptions())
    ws = _Workspace(problem, opts)
    n, m = ws.n, ws.m
    w = np.zeros(n + m + 1)
    w[-1] = 1.0
    best = None
    best_score = np.inf
    x = y = s = res = None
    log_p = log_d = 0.0
    n_log = 0
    scale_updates = 0
    u = v = None
    status = MAX_ITERS
    it = 0
    for it in range(1, opts.max_iters + 1):
        w, u, tmp = ws.step(w)
        if it % opts.check_every and it != opts.max_iters:
            continue
        v = ws.rmul(u - tmp)
        tau, kappa = u[-1], v[-1]
        xh, yh, sh = u[:n], u[n:-1], v[n:-1]
        if tau > 1e-12:
            x, y, s = ws.unscale(xh / tau, yh / tau, sh / tau)
            res, tols, (rel_p, rel_d) = _residuals(problem, x, y, s, opts)
            score = max(r / t for r, t in zip(res, tols))
            if score < best_score:
                best_score = score
                best = (x, y, s, res)
            if score <= 1.0:
                status = OPTIMAL
                break
            if opts.adaptive_scale:
                # geometric mean of the primal/dual imbalance since the last update
                if rel_p > 0 and rel_d > 0:
                    log_p += np.log(rel_p)
                    log_d += np.log(rel_d)
                    n_log += 1
                if it % opts.adapt_every == 0 and n_log:
                    factor = np.exp(0.5 * (log_p - log_d) / n_log)
                    log_p = log_d = 0.0
                    n_log = 0
                    if factor > 3.0 or factor < 1.0 / 3.0:
                        new_scale = float(np.clip(ws.scale * factor, 1e-6, 1e6))
                        ws.rescale(new_scale)
                        w = u + ws.rinv(v)
                        scale_updates += 1
        # normalized certificates: y in K*, A'y = 0, b'y < 0  /  s in K, Ax + s = 0, c'x < 0
        xc, yc, sc = ws.unscale(xh, yh, sh)
        by = float(problem.b @ yc)
        if by < 0 and _inf(problem.A.T @ yc) / -by <= opts.eps_infeas:
            status = INFEASIBLE
            break
        cx = float(problem.c @ xc)
        if cx < 0 and _inf(problem.A @ xc + sc) / -cx <= opts.eps_infeas:
            status = UNBOUNDED
            break

    info = {"scale": ws.scale, "scale_updates": scale_updates}
    if status == OPTIMAL or (status == MAX_ITERS and best is not None):
        x, y, s, res = best if status == MAX_ITERS else (x, y, s, res)
        return ConicSolution(x, s, y, status, res, it, float(problem.c @ x), info)
    xh, yh, sh = u[:n], u[n:-1], v[n:-1]
    xc, yc, sc = ws.unscale(xh, yh, sh)
    if status == INFEASIBLE:
        yc = yc / -float(problem.b @ yc)
        x = np.full(n, np.nan)
        s = np.full(m, np.nan)
        res = Residuals(np.inf, _inf(problem.A.T @ yc), np.inf)
        return ConicSolution(x, s, yc, status, res, it, np.inf, info)
    if status == UNBOUNDED:
        scale = -float(problem.c @ xc)
        xc, sc = xc / scale, sc / scale
        res = Residuals(_inf(problem.A @ xc + sc), np.inf, np.inf)
        return ConicSolution(xc, sc, np.full(m, np.nan), status, res, it, -np.inf, info)
    # max_iters with tau never positive
    nanres = Residuals(np.inf, np.inf, np.inf)
    return ConicSolution(np.full(n, np.nan), np.full(m, np.nan), np.full(m, np.nan),
                         MAX_ITERS, nanres, it, np.nan, info)
