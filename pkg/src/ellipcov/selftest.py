"""Fast invariant checks runnable from an installed package (``ellipcov selftest``).

Each check returns ``(ok, detail)``; none of them needs the test suite.
"""

from __future__ import annotations

import time

import numpy as np

from .conic import ConeSpec, ConicProblem, kkt_residuals, solve, svec
from .core import align_scale
from .estimators import coca, moment_map, tyler
from .sampler import TextureLaw, sample_elliptical
from .structures import StructureSpec, make_toeplitz_target


def _samples(p, n, seed):
    return sample_elliptical(make_toeplitz_target(p, 0.7), TextureLaw.chi_square(), n, seed).samples


def check_tyler_fixed_point():
    X = _samples(5, 50, 1)
    C = tyler(X).shape
    f = moment_map(C, X)
    r = float(np.linalg.norm(C - f / np.trace(f)))
    return r <= 1e-10, f"fixed-point residual {r:.2e}"


def check_tyler_scale_invariance():
    X = _samples(5, 50, 2)
    c = np.exp(np.random.default_rng(0).uniform(-3, 3, size=50))
    d = float(np.max(np.abs(tyler(X).shape - tyler(X * c[:, None]).shape)))
    return d <= 1e-8, f"max entry change {d:.2e}"


def check_solver_min_eigenvalue():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((4, 4))
    M = (G + G.T) / 2
    A = np.vstack([svec(np.eye(4)), -np.eye(10)])
    prob = ConicProblem(svec(M), A, np.r_[1.0, np.zeros(10)], ConeSpec(zero=1, psd=(4,)))
    sol = solve(prob, eps_abs=1e-9, eps_rel=1e-9)
    err = abs(sol.objective - np.linalg.eigvalsh(M)[0])
    kkt = max(kkt_residuals(prob, sol))
    return err <= 1e-5 and kkt <= 1e-6, f"objective error {err:.2e}, kkt {kkt:.2e}"


def check_coca_matches_tyler():
    X = _samples(4, 16, 4)
    res = coca(X)
    T = tyler(X).shape
    rel = float(np.linalg.norm(align_scale(res.shape, T) - T) / np.linalg.norm(T))
    return rel <= 1e-3 and res.objective <= 1e-6, f"relative gap {rel:.2e}, objective {res.objective:.2e}"


def check_coca_below_dimension():
    X = _samples(6, 3, 5)
    res = coca(X, StructureSpec.toeplitz())
    lam = np.linalg.eigvalsh(res.shape)[0]
    ok = res.status == "optimal" and lam >= -1e-10 and abs(np.trace(res.shape) - 1) <= 1e-10
    return ok, f"status {res.status}, min eigenvalue {lam:.2e}"


def check_determinism():
    X = _samples(3, 5, 6)
    a = coca(X, StructureSpec.toeplitz()).shape
    b = coca(X, StructureSpec.toeplitz()).shape
    return a.tobytes() == b.tobytes(), "repeat solve bit-identical" if a.tobytes() == b.tobytes() else "differs"


CHECKS = {
    "tyler-fixed-point": check_tyler_fixed_point,
    "tyler-scale-invariance": check_tyler_scale_invariance,
    "solver-min-eigenvalue": check_solver_min_eigenvalue,
    "coca-equals-tyler": check_coca_matches_tyler,
    "coca-below-dimension": check_coca_below_dimension,
    "determinism": check_determinism,
}


def run_selftest(echo=print) -> bool:
    """Run every check, report one line each, return overall success."""
    all_ok = True
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed selftest
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<24} {detail} ({time.perf_counter() - t0:.2f}s)")
    return all_ok
