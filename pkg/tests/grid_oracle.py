"""Brute-force reference for the 3x3 Toeplitz, two-sample COCA program.

The trace constraint pins the main diagonal at 1/3, leaving the two
off-diagonal parameters ``(c1, c2)``.  For fixed ``C`` each ``d_i`` ranges over
``[0, p / (x_i' C^{-1} x_i)]``.  The optimal value over ``d`` is a convex
function of ``(c1, c2)`` (partial minimization of a jointly convex program),
so nested coarse-to-fine grids are reliable.  Every evaluated point is
feasible, hence the returned value is an upper bound of the true optimum that
converges as the final resolution shrinks.
"""
import numpy as np

P = 3


def _toeplitz(c1, c2):
    c0 = 1.0 / P
    return np.array([[c0, c1, c2], [c1, c0, c1], [c2, c1, c0]])


def _refine(fn, lo, hi, steps=20, resolution=1e-3):
    """Minimize a convex ``fn`` over the box ``[lo, hi]`` by shrinking grids.

    ``fn`` takes an ``(k, 2)`` array of points and returns ``k`` values.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    box_lo, box_hi = lo.copy(), hi.copy()
    while True:
        h = (hi - lo) / steps
        g1 = np.linspace(lo[0], hi[0], steps + 1)
        g2 = np.linspace(lo[1], hi[1], steps + 1)
        pts = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
        vals = fn(pts)
        k = int(np.argmin(vals))
        best, val = pts[k], vals[k]
        if np.all(h <= resolution):
            return val, best
        lo = np.maximum(box_lo, best - 2 * h)
        hi = np.minimum(box_hi, best + 2 * h)


def inner_value(C, U):
    """``min_d ||C - (1/n) sum d_i u_i u_i'||_2`` over the feasible box, by grid."""
    Cinv = np.linalg.inv(C)
    bounds = P / np.einsum("ij,jk,ik->i", U, Cinv, U)
    outer = np.einsum("ni,nj->nij", U, U)
    n = len(U)

    def f(d):
        R = C[None] - np.einsum("kn,nij->kij", d, outer) / n
        return np.max(np.abs(np.linalg.eigvalsh(R)), axis=1)

    return _refine(f, [0.0, 0.0], bounds)


def coca_grid_value(X, resolution=1e-3):
    """Grid-search optimum of the COCA program for ``p = 3``, Toeplitz, ``n = 2``."""
    U = np.asarray(X, float)
    U = U / np.linalg.norm(U, axis=1, keepdims=True)

    def outer_fn(pts):
        out = np.full(len(pts), np.inf)
        for k, (c1, c2) in enumerate(pts):
            C = _toeplitz(c1, c2)
            if np.linalg.eigvalsh(C)[0] <= 1e-9:
                continue
            out[k] = inner_value(C, U)[0]
        return out

    lim = 1.0 / P
    return _refine(outer_fn, [-lim, -lim], [lim, lim], resolution=resolution)
