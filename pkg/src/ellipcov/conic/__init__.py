"""ADMM conic solver for zero, nonnegative and PSD cones."""

from .cones import ConeProjector, ConeSpec, project_cone, smat, svec
from .dump import read_problem, write_problem
from .solver import (INFEASIBLE, MAX_ITERS, OPTIMAL, UNBOUNDED, ConicProblem, ConicSolution,
                     Residuals, SolverOptions, kkt_residuals, kkt_tolerances, solve)

__all__ = [
    "ConeProjector", "ConeSpec", "project_cone", "smat", "svec",
    "read_problem", "write_problem",
    "ConicProblem", "ConicSolution", "Residuals", "SolverOptions", "kkt_residuals",
    "kkt_tolerances", "solve",
    "OPTIMAL", "MAX_ITERS", "INFEASIBLE", "UNBOUNDED",
]
