"""Monte Carlo benchmark harness: squared shape error against sample count.

A run is described by an :class:`ExperimentConfig` (JSON-serialisable, see
:data:`CONFIG_SCHEMA`).  For every ``n`` in the grid and every trial index the
samples are drawn from a seed derived from ``(base_seed, n, trial)``, so each
trial is an independent work unit and the table does not depend on how the
trials are distributed over workers.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .conic import SolverOptions
from .core import align_scale, as_symmetric, spectral_norm
from .errors import EllipcovError, InvalidInput, InvalidSpec
from .estimators import coca, project_estimator, sample_covariance, tyler
from .programs import FROBENIUS, SPECTRAL, check_norm
from .sampler import TextureLaw, derive_seed, sample_elliptical
from .structures import StructureSpec, make_banded_target, make_toeplitz_target

logger = logging.getLogger(__name__)

ESTIMATORS = ("sample", "tyler", "proj", "coca")
METRICS = ("frobenius", "spectral")
CSV_COLUMNS = ("estimator", "n", "trials", "mse_mean", "mse_median", "mse_stderr", "failures")

#: Solver tolerances used by the shipped presets.  Looser than the library
#: default; the resulting shape error is far below the Monte Carlo spread.
BENCH_SOLVER = {"eps_abs": 1e-6, "eps_rel": 1e-5}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentConfig",
    "type": "object",
    "required": ["p", "target", "structure", "n_grid", "trials"],
    "additionalProperties": False,
    "properties": {
        "p": {"type": "integer", "minimum": 1},
        "target": {
            "oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind", "rho"],
                 "properties": {"kind": {"const": "toeplitz"},
                                "rho": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}},
                {"type": "object", "additionalProperties": False, "required": ["kind"],
                 "properties": {"kind": {"const": "banded_paper"}}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "matrix"],
                 "properties": {"kind": {"const": "explicit"},
                                "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}}},
            ]
        },
        "structure": {"type": "object", "required": ["kind"]},
        "texture": {"type": "object", "required": ["kind"]},
        "n_grid": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "trials": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "estimators": {"type": "array", "minItems": 1, "uniqueItems": True,
                       "items": {"enum": list(ESTIMATORS)}},
        "norm": {"enum": [SPECTRAL, FROBENIUS]},
        "metric": {"enum": list(METRICS)},
        "solver": {"type": "object",
                   "properties": {"eps_abs": {"type": "number", "exclusiveMinimum": 0},
                                  "eps_rel": {"type": "number", "minimum": 0},
                                  "eps_infeas": {"type": "number", "exclusiveMinimum": 0},
                                  "max_iters": {"type": "integer", "minimum": 1},
                                  "scale": {"type": "number", "exclusiveMinimum": 0},
                                  "adaptive_scale": {"type": "boolean"},
                                  "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2}},
                   "additionalProperties": False},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run.

    ``metric`` selects which squared error fills the CSV ``mse_*`` columns; the
    JSON output always carries both the Frobenius and spectral versions.
    """

    p: int
    target: dict
    structure: StructureSpec
    n_grid: tuple
    trials: int
    texture: TextureLaw = field(default_factory=TextureLaw.chi_square)
    base_seed: int = 0
    estimators: tuple = ESTIMATORS
    norm: str = SPECTRAL
    metric: str = "frobenius"
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "estimators", tuple(e for e in ESTIMATORS if e in self.estimators))
        try:
            jsonschema.validate(self.to_dict(), CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise InvalidSpec(f"invalid experiment config: {exc.message}") from exc
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidSpec(f"n_grid must be strictly ascending, got {list(self.n_grid)}")
        self.structure.validate(self.p)
        check_norm(self.norm)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "target": dict(self.target),
            "structure": self.structure.to_dict(),
            "texture": self.texture.to_dict(),
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "estimators": list(self.estimators),
            "norm": self.norm,
            "metric": self.metric,
            "solver": dict(self.solver),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise InvalidSpec(f"invalid experiment config: {exc.message}") from exc
        kw = dict(data)
        kw["target"] = dict(data["target"])
        kw["structure"] = StructureSpec.from_dict(data["structure"])
        if "texture" in data:
            kw["texture"] = TextureLaw.from_dict(data["texture"])
        return cls(**kw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def solver_options(self) -> SolverOptions:
        return SolverOptions().updated(**self.solver)

    def truth(self):
        """The target shape matrix and whether a diagonal shift was needed."""
        kind = self.target["kind"]
        if kind == "toeplitz":
            return make_toeplitz_target(self.p, self.target["rho"]), False
        if kind == "banded_paper":
            M, shift = make_banded_target(self.p, return_shift=True)
            return M, shift > 0
        M = as_symmetric(self.target["matrix"], "target")
        if M.shape != (self.p, self.p):
            raise InvalidSpec(f"explicit target has shape {M.shape}, expected ({self.p}, {self.p})")
        return M, False


def _desk(target, structure, **kw):
    base = dict(p=10, target=target, structure=structure, n_grid=(5, 10, 20, 40), trials=100,
                solver=dict(BENCH_SOLVER))
    base.update(kw)
    return ExperimentConfig(**base)


def presets() -> dict:
    """Named configurations.

    ``toeplitz-desk`` / ``banded-desk`` are the workstation-sized versions of
    the two published experiments; the ``*-paper`` presets use the published
    dimension and trial count.  ``consistency`` checks that the structured
    error shrinks with ``n``; ``smoke`` is a seconds-long sanity run.
    """
    toeplitz = {"kind": "toeplitz", "rho": 0.8}
    banded = {"kind": "banded_paper"}
    published_dim_grid = (10, 15, 20, 30, 40, 60, 80)
    return {
        "smoke": ExperimentConfig(p=3, target=toeplitz, structure=StructureSpec.toeplitz(),
                                  n_grid=(4,), trials=2, estimators=("sample",)),
        "toeplitz-desk": _desk(toeplitz, StructureSpec.toeplitz()),
        "banded-desk": _desk(banded, StructureSpec.banded(2)),
        "toeplitz-paper": _desk(toeplitz, StructureSpec.toeplitz(), p=20, trials=1000, n_grid=published_dim_grid),
        "banded-paper": _desk(banded, StructureSpec.banded(2), p=20, trials=1000, n_grid=published_dim_grid),
        "consistency": _desk(toeplitz, StructureSpec.toeplitz(), p=5, n_grid=(50, 200, 800), trials=50,
                             estimators=("coca",)),
    }


def get_preset(name: str) -> ExperimentConfig:
    table = presets()
    if name not in table:
        raise InvalidSpec(f"unknown preset {name!r}; choose from {sorted(table)}")
    return table[name]


def squared_error(estimate, truth, metric: str = "frobenius") -> float:
    """Squared distance to ``truth`` after aligning the trace of ``estimate``.

    >>> squared_error(np.diag([2.0, 0.0]), np.eye(2))
    2.0
    """
    if metric not in METRICS:
        raise InvalidInput(f"metric must be one of {METRICS}, got {metric!r}")
    T = as_symmetric(truth, "truth")
    R = align_scale(estimate, T) - T
    return float(spectral_norm(R) ** 2 if metric == "spectral" else np.sum(R * R))


# per-trial outcome codes
_ABSENT = "absent"
_FAILED = "failed"


def _coca_valid(result, opts: SolverOptions) -> bool:
    """Objective nonnegative and independently recomputed residuals within tolerance."""
    if result.objective is None or result.objective < -opts.eps_abs:
        return False
    kkt, tol = result.diagnostics["kkt"], result.diagnostics["kkt_tol"]
    # slack for the dense recomputation rounding differently from the solver loop
    return all(r <= t * (1 + 1e-6) for r, t in zip(kkt, tol))


def run_trial(config: ExperimentConfig, n: int, trial: int, truth: np.ndarray | None = None) -> dict:
    """Run every selected estimator on one seeded sample set.

    Returns ``{estimator: (frobenius_error, spectral_error) | "absent" | "failed"}``.
    """
    if truth is None:
        truth, _ = config.truth()
    p = config.p
    opts = config.solver_options()
    seed = derive_seed(config.base_seed, n, trial)
    X = sample_elliptical(truth, config.texture, n, seed).samples
    out = {}
    shapes = {}

    def attempt(name, fn):
        try:
            shapes[name] = fn()
        except EllipcovError as exc:
            logger.debug("n=%d trial=%d %s failed: %s", n, trial, name, exc)
            out[name] = _FAILED

    attempt("sample", lambda: sample_covariance(X).shape)
    wants = set(config.estimators)
    if "tyler" in wants or "proj" in wants:
        if n > p:
            attempt("tyler", lambda: tyler(X).shape)
        else:
            out["tyler"] = _ABSENT
    if "proj" in wants:
        if n > p:
            pilot = shapes.get("tyler")
        else:
            pilot = shapes.get("sample")
        if pilot is None:
            out["proj"] = _FAILED
        else:
            attempt("proj", lambda: project_estimator(pilot, config.structure, config.norm, opts).shape)
    if "coca" in wants:
        def run_coca():
            res = coca(X, config.structure, config.norm, opts)
            if not _coca_valid(res, opts):
                raise EllipcovError(f"COCA output failed validation: objective {res.objective}, "
                                    f"kkt {res.diagnostics['kkt']}")
            return res.shape
        attempt("coca", run_coca)
    for name, S in shapes.items():
        out[name] = (squared_error(S, truth, "frobenius"), squared_error(S, truth, "spectral"))
    return {k: out[k] for k in config.estimators if k in out}


def _work(args):
    config, truth, n, trial = args
    with threadpool_limits(1):
        return n, trial, run_trial(config, n, trial, truth)


@dataclass
class Cell:
    estimator: str
    n: int
    trials: int
    mse_mean: float
    mse_median: float
    mse_stderr: float
    failures: int
    spectral_mean: float
    spectral_median: float


@dataclass
class ResultTable:
    cells: list
    metadata: dict

    def cell(self, estimator: str, n: int) -> Cell | None:
        for c in self.cells:
            if c.estimator == estimator and c.n == n:
                return c
        return None

    def medians(self, estimator: str) -> dict:
        return {c.n: c.mse_median for c in self.cells if c.estimator == estimator}


def _stats(errors: np.ndarray):
    k = len(errors)
    if k == 0:
        return math.nan, math.nan, math.nan
    stderr = float(np.std(errors, ddof=1) / np.sqrt(k)) if k > 1 else math.nan
    return float(np.mean(errors)), float(np.median(errors)), stderr


def aggregate(config: ExperimentConfig, outcomes: dict, banded_shift: bool = False) -> ResultTable:
    """Fold per-trial outcomes ``{(n, trial): run_trial(...)}`` into a table.

    Trials are visited in index order, so the result does not depend on the
    order in which they were computed.
    """
    primary = METRICS.index(config.metric)
    cells = []
    for est in config.estimators:
        for n in config.n_grid:
            results = [outcomes[(n, t)].get(est, _ABSENT) for t in range(config.trials)]
            if all(r == _ABSENT for r in results):
                continue
            ok = np.array([r for r in results if isinstance(r, tuple)], dtype=float).reshape(-1, 2)
            failures = sum(r == _FAILED for r in results)
            mean, median, stderr = _stats(ok[:, primary])
            smean, smedian, _ = _stats(ok[:, 1])
            cells.append(Cell(est, n, len(ok), mean, median, stderr, failures, smean, smedian))
    meta = {"config": config.to_dict(), "version": __version__, "banded_shift_applied": banded_shift,
            "mse_metric": config.metric}
    return ResultTable(cells, meta)


def run_experiment(config: ExperimentConfig, threads: int = 1, progress=None) -> ResultTable:
    """Run the full Monte Carlo grid.

    Parameters
    ----------
    config : ExperimentConfig
    threads : int
        Worker processes.  ``1`` runs in-process.  The table is identical for
        any value.
    progress : callable, optional
        Called with ``(done, total)`` after each trial.
    """
    truth, shifted = config.truth()
    jobs = [(config, truth, n, t) for n in config.n_grid for t in range(config.trials)]
    outcomes = {}
    if threads <= 1:
        results = map(_work, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=threads)
        results = pool.map(_work, jobs, chunksize=max(1, len(jobs) // (8 * threads)))
    try:
        for k, (n, t, res) in enumerate(results, 1):
            outcomes[(n, t)] = res
            if progress is not None:
                progress(k, len(jobs))
    finally:
        if pool is not None:
            pool.shutdown()
    return aggregate(config, outcomes, shifted)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in table.cells:
        w.writerow([c.estimator, c.n, c.trials, _fmt(c.mse_mean), _fmt(c.mse_median), _fmt(c.mse_stderr),
                    c.failures])
    return buf.getvalue()


def _json_num(x: float):
    # shortest repr round-trips exactly, which is what 17 significant digits guarantee
    return None if math.isnan(x) else float(_fmt(x))


def to_json(table: ResultTable) -> str:
    rows = []
    for c in table.cells:
        rows.append({"estimator": c.estimator, "n": c.n, "trials": c.trials,
                     "mse_mean": _json_num(c.mse_mean), "mse_median": _json_num(c.mse_median),
                     "mse_stderr": _json_num(c.mse_stderr), "failures": c.failures,
                     "spectral_mse_mean": _json_num(c.spectral_mean),
                     "spectral_mse_median": _json_num(c.spectral_median)})
    return json.dumps({"metadata": table.metadata, "rows": rows}, indent=2) + "\n"


def table_from_json(text: str) -> ResultTable:
    data = json.loads(text)
    nan = lambda v: math.nan if v is None else v  # noqa: E731
    cells = [Cell(r["estimator"], r["n"], r["trials"], nan(r["mse_mean"]), nan(r["mse_median"]),
                  nan(r["mse_stderr"]), r["failures"], nan(r["spectral_mse_mean"]),
                  nan(r["spectral_mse_median"])) for r in data["rows"]]
    return ResultTable(cells, data["metadata"])


def emit(table: ResultTable, fmt: str, path) -> None:
    """Write ``table`` as ``csv`` or ``json``; ``path`` of ``"-"`` means stdout."""
    if fmt == "csv":
        text = to_csv(table)
    elif fmt == "json":
        text = to_json(table)
    else:
        raise InvalidInput(f"format must be 'csv' or 'json', got {fmt!r}")
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    """Copy of ``config`` with fields replaced (validated again)."""
    return replace(config, **kw)


__all__ = ["ExperimentConfig", "CONFIG_SCHEMA", "ResultTable", "Cell", "presets", "get_preset",
           "squared_error", "run_trial", "run_experiment", "aggregate", "emit", "to_csv", "to_json",
           "table_from_json", "with_overrides"]
