"""Shape-matrix estimators for elliptical data.

Four estimators share :class:`EstimatorResult`: the sample covariance,
Tyler's fixed point, the norm projection of a pilot estimate onto a structure
set, and the convex moment-matching relaxation (:func:`coca`).  All reported
shapes are PSD with unit trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .conic import OPTIMAL, INFEASIBLE, SolverOptions, kkt_residuals, kkt_tolerances, smat, solve
from .core import as_symmetric, trace_normalize
from .errors import (DegenerateData, DegenerateScale, Infeasible, InvalidInput, NoConvergence, NotExist,
                     SingularMatrix, SolverFailure)
from .programs import SPECTRAL, check_norm, coca_problem, projection_problem
from .sampler import as_samples
from .structures import StructureSpec

logger = logging.getLogger(__name__)

__all__ = ["EstimatorResult", "sample_covariance", "moment_map", "tyler", "project_estimator",
           "coca", "relaxation_gap"]


@dataclass
class EstimatorResult:
    shape: np.ndarray
    objective: float | None = None
    d_values: np.ndarray | None = None
    iterations: int = 0
    status: str = OPTIMAL
    diagnostics: dict = field(default_factory=dict)


def _psd_part(M: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(M)
    if lam[0] >= 0:
        return M
    return as_symmetric((V * np.maximum(lam, 0.0)) @ V.T)


def sample_covariance(X) -> EstimatorResult:
    """``(1/n) sum x_i x_i'``, reported with unit trace."""
    S = as_samples(X)
    C = as_symmetric(S.T @ S / S.shape[0])
    tr = float(np.trace(C))
    return EstimatorResult(trace_normalize(C), diagnostics={"trace": tr})


def _cholesky(C: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(C)
    if not lam[0] > 1e-12 * max(abs(lam[-1]), 1e-300):
        raise SingularMatrix(f"matrix is not positive definite (eigenvalues {lam[0]:.3e}..{lam[-1]:.3e})")
    return np.linalg.cholesky(C)


def _quad_inv(C: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``x_i' C^{-1} x_i`` for each row of ``S``."""
    L = _cholesky(C)
    Z = np.linalg.solve(L, S.T)
    return np.einsum("ij,ij->j", Z, Z)


def moment_map(C, X) -> np.ndarray:
    """``f(C) = (p/n) sum_i x_i x_i' / (x_i' C^{-1} x_i)``.

    ``f`` is homogeneous of degree one in ``C``; Tyler's estimate is its fixed
    point on the unit-trace slice.

    Raises
    ------
    SingularMatrix
        If ``C`` is not numerically positive definite.
    """
    C = as_symmetric(C, "C")
    S = as_samples(X)
    n, p = S.shape
    if C.shape != (p, p):
        raise InvalidInput(f"C has shape {C.shape}, samples have dimension {p}")
    q = _quad_inv(C, S)
    if np.any(q <= 0):
        raise InvalidInput("zero sample in moment map")
    return as_symmetric((p / n) * (S.T / q) @ S)


def tyler(X, tol: float = 1e-10, max_iter: int = 10_000) -> EstimatorResult:
    """Tyler's M-estimator of shape by normalized fixed-point iteration.

    Starting from ``I/p``, iterates ``C <- f(C) / trace(f(C))`` until successive
    iterates are within ``tol`` in Frobenius norm and the fixed-point residual
    ``||C - f(C)/trace(f(C))||_F`` is itself below ``tol``.

    Raises
    ------
    NotExist
        If ``n < p``.  ``n == p`` is accepted, but the fixed point is then not
        unique; the condition number lands in ``diagnostics``.
    DegenerateData
        If the samples span a proper subspace.
    NoConvergence
        After ``max_iter`` iterations; the last iterate is attached.
    """
    S = as_samples(X)
    n, p = S.shape
    if n < p:
        raise NotExist(f"Tyler's estimator needs n >= p samples (n={n}, p={p})")
    norms = np.linalg.norm(S, axis=1)
    if np.any(norms == 0):
        raise DegenerateData("zero sample")
    U = S / norms[:, None]
    if p == 1:
        return EstimatorResult(np.ones((1, 1)), iterations=0, diagnostics={"residual": 0.0})
    if np.linalg.matrix_rank(U) < p:
        raise DegenerateData("samples lie in a proper subspace")

    def step(C):
        try:
            return trace_normalize(moment_map(C, U))
        except SingularMatrix as exc:
            raise DegenerateData(f"iterate became singular: {exc}") from exc

    C = np.eye(p) / p
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = step(C)
        diff = np.linalg.norm(nxt - C)
        C = nxt
        if diff <= tol:
            residual = float(np.linalg.norm(C - step(C)))
            if residual <= tol:
                break
    else:
        res = EstimatorResult(C, iterations=max_iter, status="max_iters",
                              diagnostics={"residual": float(np.linalg.norm(C - step(C)))})
        raise NoConvergence(f"Tyler iteration did not converge in {max_iter} steps", res)
    diag = {"residual": residual, "condition": float(np.linalg.cond(C))}
    if n == p:
        diag["warning"] = "n == p: fixed point is not unique"
    return EstimatorResult(C, iterations=it, diagnostics=diag)


def _finish(problem, sol, what: str):
    if sol.status == INFEASIBLE:
        raise Infeasible(f"{what}: structure set is infeasible", sol)
    if sol.status != OPTIMAL:
        raise SolverFailure(f"{what}: solver ended with status {sol.status!r} "
                            f"after {sol.iterations} iterations", sol)
    return smat(problem.var(sol.x, "C"))


def project_estimator(Chat, spec: StructureSpec | None = None, norm: str = SPECTRAL,
                      opts: SolverOptions | None = None) -> EstimatorResult:
    """Nearest PSD matrix in ``spec`` to the pilot ``Chat`` in the given norm.

    ``diagnostics["minimizer"]`` keeps the unnormalized minimizer; ``shape`` is
    its (PSD part, trace-normalized) version.

    Raises
    ------
    DegenerateScale
        If the minimizer is numerically zero (for instance when ``Chat`` is
        negative definite), so no shape can be reported.
    """
    Chat = as_symmetric(Chat, "Chat")
    spec = spec or StructureSpec.unconstrained()
    problem = projection_problem(Chat, spec, norm)
    sol = solve(problem, opts)
    M = as_symmetric(_finish(problem, sol, "projection"))
    P = _psd_part(M)
    if np.trace(P) <= 1e-6 * max(1.0, np.linalg.norm(Chat)):
        raise DegenerateScale(f"projection is numerically zero (trace {np.trace(P):.3e})")
    return EstimatorResult(
        trace_normalize(P),
        objective=sol.objective,
        iterations=sol.iterations,
        status=sol.status,
        diagnostics={"minimizer": M, "kkt": kkt_residuals(problem, sol),
                     "kkt_tol": kkt_tolerances(problem, sol, opts), "norm": check_norm(norm)},
    )


def coca(X, spec: StructureSpec | None = None, norm: str = SPECTRAL,
         opts: SolverOptions | None = None, return_problem: bool = False):
    """Convexly constrained moment-matching estimate of the shape matrix.

    Solves::

        minimize_{C, d}  || C - (1/n) sum_i d_i x_i x_i' ||
        subject to       C in spec,  trace(C) = 1,
                         C - (d_i/p) x_i x_i' >= 0,  d_i >= 0.

    The program is defined for any ``n >= 1``.  Samples are scaled to unit norm
    before the solve (the program is invariant to per-sample scaling); the
    reported ``d_values`` refer to the original samples.

    Raises
    ------
    Infeasible
        If ``spec`` has no unit-trace PSD member.
    SolverFailure
        If the solver stops without a certified optimum.
    """
    S = as_samples(X)
    n, p = S.shape
    spec = spec or StructureSpec.unconstrained()
    norms = np.linalg.norm(S, axis=1)
    if np.any(norms == 0):
        raise DegenerateData("zero sample")
    U = S / norms[:, None]
    problem = coca_problem(U, spec, norm)
    sol = solve(problem, opts)
    C = as_symmetric(_finish(problem, sol, "coca"))
    d_unit = np.maximum(problem.var(sol.x, "d"), 0.0)
    shape = trace_normalize(_psd_part(C))
    resid = shape - (U.T * d_unit) @ U / n
    norm = check_norm(norm)
    at_output = (np.linalg.norm(resid, 2) if norm == SPECTRAL else np.linalg.norm(resid))
    result = EstimatorResult(
        shape,
        objective=sol.objective,
        d_values=d_unit / norms**2,
        iterations=sol.iterations,
        status=sol.status,
        diagnostics={"kkt": kkt_residuals(problem, sol), "kkt_tol": kkt_tolerances(problem, sol, opts),
                     "objective_at_output": float(at_output),
                     "solver_residuals": sol.residuals, "norm": norm},
    )
    return (result, problem, sol) if return_problem else result


def relaxation_gap(result: EstimatorResult, X) -> np.ndarray:
    """Slack ``p / (x_i' C^{-1} x_i) - d_i`` of each relaxed moment equality."""
    if result.d_values is None:
        raise InvalidInput("relaxation_gap needs a result carrying d_values")
    S = as_samples(X)
    p = S.shape[1]
    q = _quad_inv(as_symmetric(result.shape), S)
    return p / q - result.d_values
