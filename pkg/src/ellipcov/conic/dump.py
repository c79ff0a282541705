"""Plain-text dump of a :class:`ConicProblem` for cross-checking elsewhere.

Format (one token group per line, ``#`` lines are comments)::

    ellipcov-conic 1
    dims <n> <m>
    cone <zero> <nonneg> <k> <d_1> ... <d_k>
    var <name> <start> <stop>          (repeated)
    c                                   followed by n lines, one value each
    b                                   followed by m lines
    A <nnz>                             followed by nnz lines "<row> <col> <value>"

Indices are zero-based; PSD rows hold svec (lower triangle, column-major,
off-diagonals scaled by sqrt(2)). Floats use ``repr`` so they round-trip.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import InvalidInput
from .cones import ConeSpec
from .solver import ConicProblem

MAGIC = "ellipcov-conic 1"


def write_problem(problem: ConicProblem, path) -> None:
    A = problem.A.tocoo()
    cone = problem.cone
    lines = [MAGIC, f"dims {problem.n} {problem.m}",
             " ".join(map(str, ["cone", cone.zero, cone.nonneg, len(cone.psd), *cone.psd]))]
    for name, slc in problem.var_map.items():
        lines.append(f"var {name} {slc.start} {slc.stop}")
    lines.append("c")
    lines.extend(repr(float(v)) for v in problem.c)
    lines.append("b")
    lines.extend(repr(float(v)) for v in problem.b)
    lines.append(f"A {A.nnz}")
    lines.extend(f"{r} {c} {float(v)!r}" for r, c, v in zip(A.row, A.col, A.data))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_problem(path) -> ConicProblem:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != MAGIC:
        raise InvalidInput(f"{path}: not an ellipcov conic dump")
    it = iter(lines[1:])
    _, n, m = next(it).split()
    n, m = int(n), int(m)
    parts = next(it).split()
    k = int(parts[3])
    cone = ConeSpec(int(parts[1]), int(parts[2]), tuple(int(d) for d in parts[4:4 + k]))
    var_map = {}
    line = next(it)
    while line.startswith("var "):
        _, name, a, b = line.split()
        var_map[name] = slice(int(a), int(b))
        line = next(it)
    c = np.array([float(next(it)) for _ in range(n)])
    assert next(it) == "b"
    b = np.array([float(next(it)) for _ in range(m)])
    nnz = int(next(it).split()[1])
    trip = [next(it).split() for _ in range(nnz)]
    rows = [int(t[0]) for t in trip]
    cols = [int(t[1]) for t in trip]
    vals = [float(t[2]) for t in trip]
    A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
    return ConicProblem(c, A, b, cone, var_map)
