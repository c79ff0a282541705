"""Conic formulations of the structured estimation programs.

Norm epigraphs use only zero/nonnegative/PSD cones:

* spectral: ``||R||_2 <= t``  iff  ``t I - R >= 0`` and ``t I + R >= 0``;
* Frobenius: ``||R||_F <= t``  iff  the arrow matrix
  ``[[t I_m, svec(R)], [svec(R)', t]]`` is PSD (one block of side
  ``p(p+1)/2 + 1``).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .conic.cones import ConeSpec, _tri_index, svec, tri_dim
from .conic.solver import ConicProblem
from .errors import InvalidInput
from .structures import AffineConstraintSet, StructureSpec, compile_constraints

SPECTRAL = "spectral"
FROBENIUS = "frobenius"
NORMS = (SPECTRAL, FROBENIUS)


def check_norm(norm: str) -> str:
    norm = str(norm).lower()
    if norm not in NORMS:
        raise InvalidInput(f"norm must be one of {NORMS}, got {norm!r}")
    return norm


class ProblemBuilder:
    """Accumulates named variables and constraints ``rhs - sum_v G_v z_v in K``."""

    def __init__(self):
        self.n = 0
        self.var_map: dict[str, slice] = {}
        self._rows = {"zero": [], "nonneg": [], "psd": []}

    def var(self, name: str, size: int) -> slice:
        slc = slice(self.n, self.n + int(size))
        self.var_map[name] = slc
        self.n += int(size)
        return slc

    def add(self, cone: str, terms: dict, rhs, side: int | None = None):
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        blocks = {}
        for name, G in terms.items():
            G = sp.csr_matrix(G)
            if G.shape != (rhs.size, self.var_map[name].stop - self.var_map[name].start):
                raise InvalidInput(f"term {name!r} has shape {G.shape}")
            blocks[name] = G
        if cone == "psd" and tri_dim(side) != rhs.size:
            raise InvalidInput("psd block size mismatch")
        self._rows[cone].append((blocks, rhs, side))

    def build(self, objective: dict) -> ConicProblem:
        c = np.zeros(self.n)
        for name, vec in objective.items():
            c[self.var_map[name]] = vec
        ri, ci, vals, rhs = [], [], [], []
        row = 0
        for kind in ("zero", "nonneg", "psd"):
            for blocks, r, _ in self._rows[kind]:
                for name, G in blocks.items():
                    G = G.tocoo()
                    ri.append(G.row + row)
                    ci.append(G.col + self.var_map[name].start)
                    vals.append(G.data)
                rhs.append(r)
                row += r.size
        cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
        A = sp.csc_matrix((cat(vals, float), (cat(ri, int), cat(ci, int))), shape=(row, self.n))
        b = cat(rhs, float)
        cone = ConeSpec(
            zero=sum(r.size for _, r, _ in self._rows["zero"]),
            nonneg=sum(r.size for _, r, _ in self._rows["nonneg"]),
            psd=tuple(side for _, _, side in self._rows["psd"]),
        )
        return ConicProblem(c, A, b, cone, dict(self.var_map))


def _arrow_maps(m: int):
    """``svec`` of the arrow matrix as ``P_t * t + P_r @ r`` for ``r`` of length ``m``."""
    rows, cols, w = _tri_index(m + 1)
    k = tri_dim(m + 1)
    P_t = np.where((rows == cols), 1.0, 0.0)
    sel = (rows == m) & (cols < m)
    idx = np.flatnonzero(sel)
    P_r = sp.csr_matrix((w[idx], (idx, cols[idx])), shape=(k, m))
    return P_t, P_r


def add_norm_epigraph(builder: ProblemBuilder, p: int, terms: dict, const: np.ndarray, norm: str,
                      t_name: str = "t"):
    """Constrain ``||smat(sum_v G_v z_v + const)|| <= t``."""
    m = tri_dim(p)
    if norm == SPECTRAL:
        e = svec(np.eye(p))[:, None]
        builder.add("psd", {t_name: -e, **terms}, -const, side=p)
        builder.add("psd", {t_name: -e, **{k: -sp.csr_matrix(G) for k, G in terms.items()}}, const, side=p)
    else:
        P_t, P_r = _arrow_maps(m)
        arrow_terms = {t_name: -P_t[:, None]}
        for k, G in terms.items():
            arrow_terms[k] = -(P_r @ sp.csr_matrix(G))
        builder.add("psd", arrow_terms, P_r @ const, side=m + 1)


def add_structure(builder: ProblemBuilder, cs: AffineConstraintSet, c_name: str = "C"):
    if cs.n_aux:
        builder.var("aux", cs.n_aux)
    if cs.n_eq:
        terms = {c_name: cs.eq_C}
        if cs.n_aux:
            terms["aux"] = cs.eq_aux
        builder.add("zero", terms, cs.eq_rhs)
    if cs.n_ineq:
        terms = {c_name: cs.ineq_C}
        if cs.n_aux:
            terms["aux"] = cs.ineq_aux
        builder.add("nonneg", terms, cs.ineq_rhs)
    for off, k in cs.aux_nonneg:
        G = sp.csr_matrix((-np.ones(k), (np.arange(k), off + np.arange(k))), shape=(k, cs.n_aux))
        builder.add("nonneg", {"aux": G}, np.zeros(k))
    for off, d in cs.aux_psd:
        q = tri_dim(d)
        G = sp.csr_matrix((-np.ones(q), (np.arange(q), off + np.arange(q))), shape=(q, cs.n_aux))
        builder.add("psd", {"aux": G}, np.zeros(q), side=d)


def coca_problem(S: np.ndarray, spec: StructureSpec, norm: str = SPECTRAL) -> ConicProblem:
    """Relaxed moment-matching program for samples ``S`` (rows).

    Variables ``C`` (svec), ``d`` (one weight per sample), ``t`` (norm
    epigraph) and structure auxiliaries ``aux``::

        minimize    t
        subject to  trace(C) = 1,  C in structure,
                    C - (d_i / p) x_i x_i' >= 0,  d_i >= 0,
                    || C - (1/n) sum_i d_i x_i x_i' || <= t
    """
    norm = check_norm(norm)
    n, p = S.shape
    m = tri_dim(p)
    cs = compile_constraints(spec, p)
    V = np.stack([svec(np.outer(x, x)) for x in S], axis=1)  # m x n
    b = ProblemBuilder()
    b.var("C", m)
    b.var("d", n)
    b.var("t", 1)
    b.add("zero", {"C": svec(np.eye(p))[None, :]}, [1.0])
    add_structure(b, cs)
    b.add("nonneg", {"d": -sp.identity(n)}, np.zeros(n))
    eye_m = sp.identity(m, format="csr")
    for i in range(n):
        col = sp.csr_matrix((V[:, i] / p, (np.arange(m), np.full(m, i))), shape=(m, n))
        b.add("psd", {"C": -eye_m, "d": col}, np.zeros(m), side=p)
    add_norm_epigraph(b, p, {"C": eye_m, "d": sp.csr_matrix(-V / n)}, np.zeros(m), norm)
    return b.build({"t": [1.0]})


def projection_problem(Chat: np.ndarray, spec: StructureSpec, norm: str = SPECTRAL) -> ConicProblem:
    """``minimize ||M - Chat||  s.t.  M in structure, M >= 0`` with variables ``M`` (svec), ``t``."""
    norm = check_norm(norm)
    p = Chat.shape[0]
    m = tri_dim(p)
    cs = compile_constraints(spec, p)
    b = ProblemBuilder()
    b.var("C", m)
    b.var("t", 1)
    add_structure(b, cs)
    b.add("psd", {"C": -sp.identity(m)}, np.zeros(m), side=p)
    add_norm_epigraph(b, p, {"C": sp.identity(m, format="csr")}, -svec(Chat), norm)
    return b.build({"t": [1.0]})


def membership_problem(C: np.ndarray, spec: StructureSpec) -> ConicProblem:
    """Feasibility program: do structure auxiliaries exist for the fixed matrix ``C``?"""
    p = C.shape[0]
    m = tri_dim(p)
    cs = compile_constraints(spec, p)
    b = ProblemBuilder()
    b.var("C", m)
    b.add("zero", {"C": sp.identity(m)}, svec(C))
    add_structure(b, cs)
    return b.build({})
