"""Command-line entry point: ``ellipcov run | solve-debug | selftest``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .bench import ExperimentConfig, emit, get_preset, presets, run_experiment
from .conic import solve, write_problem
from .errors import EllipcovError
from .programs import coca_problem
from .sampler import derive_seed, sample_elliptical
from .selftest import run_selftest

log = logging.getLogger("ellipcov")


def _config(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise EllipcovError("give either --config or --preset, not both")
    if args.config:
        return ExperimentConfig.from_json(args.config)
    return get_preset(args.preset or "smoke")


def cmd_run(args) -> int:
    cfg = _config(args)
    total_cells = len(cfg.n_grid) * cfg.trials

    def progress(done, total):
        if args.verbose and (done == total or done % max(1, total // 20) == 0):
            log.info("%d/%d trials", done, total)

    log.info("running %d trials on %d worker(s)", total_cells, args.threads)
    table = run_experiment(cfg, threads=args.threads, progress=progress)
    emit(table, args.format, args.out)
    failures = sum(c.failures for c in table.cells)
    if failures:
        log.warning("%d estimator failures recorded in the table", failures)
    return 0


def cmd_solve_debug(args) -> int:
    cfg = _config(args)
    n = args.n if args.n is not None else cfg.n_grid[0]
    truth, _ = cfg.truth()
    X = sample_elliptical(truth, cfg.texture, n, derive_seed(cfg.base_seed, n, args.trial)).samples
    U = X / (X**2).sum(axis=1, keepdims=True) ** 0.5
    problem = coca_problem(U, cfg.structure, cfg.norm)
    write_problem(problem, args.out)
    print(f"wrote COCA problem (n={n}, trial={args.trial}): {problem.n} variables, {problem.m} rows "
          f"-> {args.out}")
    if args.solve:
        sol = solve(problem, cfg.solver_options())
        print(f"status={sol.status} iterations={sol.iterations} objective={sol.objective:.10g} "
              f"residuals={tuple(float(r) for r in sol.residuals)}")
    return 0


def cmd_selftest(args) -> int:
    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ellipcov", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ellipcov {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p):
        p.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
        p.add_argument("--preset", choices=sorted(presets()), help="named configuration")

    run = sub.add_parser("run", help="run a Monte Carlo benchmark and write the result table")
    source(run)
    run.add_argument("--out", default="-", metavar="PATH", help="output file ('-' for stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes")
    run.set_defaults(func=cmd_run)

    dbg = sub.add_parser("solve-debug", help="dump the COCA conic program of one trial")
    source(dbg)
    dbg.add_argument("--n", type=int, help="sample count (default: first grid point)")
    dbg.add_argument("--trial", type=int, default=0)
    dbg.add_argument("--out", required=True, metavar="PATH")
    dbg.add_argument("--solve", action="store_true", help="also solve it and print the status")
    dbg.set_defaults(func=cmd_solve_debug)

    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (EllipcovError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
