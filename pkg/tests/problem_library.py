"""Small conic programs whose optimal values are known in closed form.

Each entry is ``(name, problem, optimal_value)``.  The oracles are
eigenvalue formulas or hand-solved LP vertices, independent of the solver.
"""
import numpy as np
import scipy.sparse as sp

from ellipcov.conic import ConeSpec, ConicProblem, svec
from ellipcov.conic.cones import tri_dim


def _sym(seed, p):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((p, p))
    return (G + G.T) / 2


def _psd_var(p):
    """Rows ``-I z + s = 0`` forcing ``smat(z)`` psd."""
    return -sp.identity(tri_dim(p), format="csc")


def _eig_program(M, sign):
    """min sign*<M, X>  s.t. trace X = 1, X psd."""
    p = M.shape[0]
    A = sp.vstack([sp.csc_matrix(svec(np.eye(p))[None, :]), _psd_var(p)])
    b = np.r_[1.0, np.zeros(tri_dim(p))]
    return ConicProblem(sign * svec(M), A, b, ConeSpec(zero=1, psd=(p,)))


def _spectral_epigraph(M):
    """min t  s.t. tI - M psd, tI + M psd."""
    e = svec(np.eye(M.shape[0]))[:, None]
    p = M.shape[0]
    return ConicProblem([1.0], np.vstack([-e, -e]), np.r_[-svec(M), svec(M)], ConeSpec(psd=(p, p)))


def _spectral_psd_distance(M):
    """min t over (X, t): -tI <= X - M <= tI, X psd.  Optimum max(0, -lambda_min(M))."""
    p = M.shape[0]
    k = tri_dim(p)
    e = svec(np.eye(p))[:, None]
    I = np.eye(k)
    z = np.zeros((k, 1))
    A = np.vstack([np.hstack([I, -e]), np.hstack([-I, -e]), np.hstack([-I, z])])
    b = np.r_[svec(M), -svec(M), np.zeros(k)]
    return ConicProblem(np.r_[np.zeros(k), 1.0], A, b, ConeSpec(psd=(p, p, p)))


def _frobenius_psd_distance(M):
    """min t over (X, t) with ||X - M||_F <= t as an arrow block, X psd.

    Optimum is the 2-norm of the negative eigenvalues of ``M``.
    """
    p = M.shape[0]
    k = tri_dim(p)
    m = k + 1  # arrow block side: [[t, r'], [r, t I]]
    q = tri_dim(m)
    rows, cols = np.tril_indices(m)
    order = np.lexsort((rows, cols))  # column-major lower triangle
    rows, cols = rows[order], cols[order]
    A_arrow = np.zeros((q, k + 1))
    b_arrow = np.zeros(q)
    r = svec(M)
    for idx, (i, j) in enumerate(zip(rows, cols)):
        if i == j:
            A_arrow[idx, k] = -1.0
        elif j == 0:
            # off-diagonal entry (i, 0) equals r_{i-1} = (X - M) svec component, scaled by sqrt 2
            A_arrow[idx, i - 1] = -np.sqrt(2)
            b_arrow[idx] = -np.sqrt(2) * r[i - 1]
    A = np.vstack([A_arrow, np.hstack([-np.eye(k), np.zeros((k, 1))])])
    b = np.r_[b_arrow, np.zeros(k)]
    return ConicProblem(np.r_[np.zeros(k), 1.0], A, b, ConeSpec(psd=(m, p)))


def _trace_over_psd_part(M):
    """min trace X  s.t. X - M psd, X psd.  Optimum is the sum of positive eigenvalues."""
    p = M.shape[0]
    k = tri_dim(p)
    I = np.eye(k)
    A = np.vstack([-I, -I])
    b = np.r_[-svec(M), np.zeros(k)]
    return ConicProblem(svec(np.eye(p)), A, b, ConeSpec(psd=(p, p)))


def analytic_problems():
    probs = []
    probs.append(("lp_bound", ConicProblem([1.0], [[-1.0]], [-1.0], ConeSpec(nonneg=1)), 1.0))
    probs.append(("lp_cover", ConicProblem([1.0, 2.0], [[-1, -1], [-1, 0], [0, -1]], [-1, 0, 0],
                                           ConeSpec(nonneg=3)), 1.0))
    # max x1 + x2, x1 + 2 x2 <= 4, 3 x1 + x2 <= 6, x >= 0; vertex (1.6, 1.2)
    probs.append(("lp_vertex", ConicProblem([-1.0, -1.0], [[1, 2], [3, 1], [-1, 0], [0, -1]],
                                            [4, 6, 0, 0], ConeSpec(nonneg=4)), -2.8))
    probs.append(("lp_simplex", ConicProblem([2.0, 3.0, 1.0], np.vstack([np.ones((1, 3)), -np.eye(3)]),
                                             [1, 0, 0, 0], ConeSpec(zero=1, nonneg=3)), 1.0))
    probs.append(("sdp_min_eig_diag", _eig_program(np.diag([1.0, 2.0]), 1.0), 1.0))
    M4 = _sym(1, 4)
    probs.append(("sdp_min_eig_rand4", _eig_program(M4, 1.0), float(np.linalg.eigvalsh(M4)[0])))
    M5 = _sym(2, 5)
    probs.append(("sdp_max_eig_rand5", _eig_program(M5, -1.0), -float(np.linalg.eigvalsh(M5)[-1])))
    probs.append(("spectral_diag", _spectral_epigraph(np.diag([3.0, -4.0])), 4.0))
    M3 = _sym(3, 3)
    probs.append(("spectral_rand3", _spectral_epigraph(M3), float(np.max(np.abs(np.linalg.eigvalsh(M3))))))
    M3b = _sym(4, 3)
    probs.append(("spectral_psd_distance", _spectral_psd_distance(M3b),
                  max(0.0, -float(np.linalg.eigvalsh(M3b)[0]))))
    M3c = _sym(5, 3)
    lam = np.linalg.eigvalsh(M3c)
    probs.append(("frobenius_psd_distance", _frobenius_psd_distance(M3c),
                  float(np.linalg.norm(np.minimum(lam, 0.0)))))
    M4b = _sym(6, 4)
    probs.append(("trace_psd_part", _trace_over_psd_part(M4b),
                  float(np.sum(np.maximum(np.linalg.eigvalsh(M4b), 0.0)))))
    probs.append(("sdp_trace_identity", _trace_over_psd_part(np.eye(3)), 3.0))
    return probs
