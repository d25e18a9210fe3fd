"""Command line front-end: ``panvein <mode> --config <path> [options]``.

Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
4 I/O error.
"""
from __future__ import annotations

import argparse
import sys

from .errors import (
    ConditioningError,
    DivergenceError,
    IntegrationFailureError,
    InvalidArgumentError,
    NonConvergenceError,
    ParameterRegimeError,
    SingularMatrixError,
    ValidationError,
)
from .runner import MODES, load_config, parse_config, run

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4

_SOLVER_ERRORS = (NonConvergenceError, DivergenceError, ConditioningError,
                  ParameterRegimeError, SingularMatrixError,
                  IntegrationFailureError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panvein",
        description="Glucose-insulin transport scenarios along the pancreatic vein")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="flat key = value scenario file")
    parser.add_argument("--out", help="output directory for CSVs and reports")
    parser.add_argument("--grid-n", type=int, default=None,
                        help="override the node count")
    parser.add_argument("--tol", type=float, default=None,
                        help="override the solver tolerance")
    parser.add_argument("--workers", type=int, default=1,
                        help="concurrent sweep entries")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed recorded for randomized diagnostics")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"mode": args.mode, "grid_n": args.grid_n, "tol": args.tol}
    try:
        if args.config is not None:
            config = load_config(args.config, seed=args.seed,
                                 workers=args.workers, overrides=overrides)
        else:
            config = parse_config("", seed=args.seed, workers=args.workers,
                                  overrides=overrides)
    except (ValidationError, InvalidArgumentError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        result = run(config, out_dir=args.out)
    except (ValidationError, InvalidArgumentError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _SOLVER_ERRORS as exc:
        print(f"error: solver failed ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO

    for line in _headline(result):
        print(line)
    if args.out:
        print(f"wrote {len(result.manifest) + 1} file(s) to {args.out}")
    return EXIT_OK


def _headline(result) -> list[str]:
    payload = result.payload
    if result.mode == "equilibrium":
        eq = payload["equilibrium"]
        return [f"G* = {eq.G_star:.6g} mM, I* = {eq.I_star:.6g} pM",
                f"eigenvalues {eq.lambda1:.6g}, {eq.lambda2:.6g} (1/min)"]
    if result.mode in ("steady", "steady-eps"):
        prof = payload["profile"]
        return [f"steady profile: G(0) = {prof.G[0]:.6g} mM, "
                f"I(0) = {prof.I[0]:.6g} pM, I(L) = {prof.I[-1]:.6g} pM "
                f"({prof.method}, {prof.iterations} iterations)"]
    if result.mode == "stability":
        rep = payload["report"]
        return [f"[VERDICT] {rep.verdict}",
                f"roots |Lambda| = {abs(rep.roots[0]):.6g}, {abs(rep.roots[1]):.6g}"]
    if result.mode == "evolve":
        trace = payload["trace"]
        return [f"evolve: converged = {trace.converged}, final distance "
                f"{trace.distances[-1]:.4e} at t = {trace.times[-1]:.6g} min"]
    if result.mode == "eps-sweep":
        table = payload["table"]
        return [f"eps sweep order = {table.slope:.3f}; gaps "
                + ", ".join(f"{g:.3e}" for g in table.gap)]
    if result.mode == "velocity-sweep":
        lines = ["c (cm/min)  mean G (mM)  I(0) (pM)  I(L) (pM)"]
        for entry in payload["rows"]:
            lines.append(f"{entry['c']:<11g} {entry['mean_G']:<12.6g} "
                         f"{entry['I0']:<10.6g} {entry['IL']:.6g}")
        return lines
    return []


if __name__ == "__main__":
    raise SystemExit(main())
