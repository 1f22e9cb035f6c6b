"""Command-line driver for the convergence studies."""

import argparse
import csv
import json
import os
import sys

from .errors import (MixfemError, SingularMatrixError, SolverError, UnsupportedDegreeError,
                     UnsupportedElementError)
from .linalg import write_matrix_market
from .problems import run_poisson_lm, run_stokes_brinkman

DEFAULT_RESOLUTIONS = {"poisson-lm": "4,8,16,32", "stokes-brinkman": "8,16,32,64"}


class UsageError(Exception):
    pass


def _resolutions(text):
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid resolution list {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("resolutions must be positive integers")
    return sorted(set(values))


def build_parser():
    parser = argparse.ArgumentParser(prog="mixfem", description="Mixed-dimensional finite element demos.")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run a convergence study")
    run.add_argument("problem", choices=sorted(DEFAULT_RESOLUTIONS))
    run.add_argument("--dim", type=int, choices=(2, 3), default=2,
                     help="spatial dimension (poisson-lm only)")
    run.add_argument("--resolutions", type=_resolutions, default=None,
                     help="comma separated cells per side")
    run.add_argument("--degree", type=int, default=1,
                     help="polynomial degree k (stokes-brinkman: pressure degree)")
    run.add_argument("--solver", choices=("direct", "cg", "minres", "gmres"), default="direct")
    run.add_argument("--tol", type=float, default=1e-10)
    run.add_argument("--maxit", type=int, default=None)
    run.add_argument("--quadrature-degree", type=int, default=None)
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--dump-matrix", metavar="PATH", default=None,
                     help="write the finest monolithic matrix in Matrix Market format")
    run.add_argument("--export-solution", metavar="PATH", default=None,
                     help="write the finest solution as CSV (extra fields get a suffix)")
    return parser


def write_table(rows, fmt, stream):
    if fmt == "json":
        json.dump([r.as_dict() for r in rows], stream, indent=2)
        stream.write("\n")
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["n", "h", "var", "norm", "error", "rate"])
    for r in rows:
        writer.writerow([r.n, repr(r.h), r.var, r.norm, repr(r.error),
                         "" if r.rate is None else repr(r.rate)])


def _export(solution, path):
    stem, ext = os.path.splitext(path)
    for k, (name, func) in enumerate(solution.functions.items()):
        func.to_csv(path if k == 0 else f"{stem}_{name}{ext or '.csv'}")


def run(args, stdout):
    resolutions = args.resolutions or _resolutions(DEFAULT_RESOLUTIONS[args.problem])
    options = {"solver": args.solver, "tol": args.tol, "maxit": args.maxit,
               "quadrature_degree": args.quadrature_degree}
    if args.problem == "poisson-lm":
        if any(n % 2 for n in resolutions):
            raise UsageError("poisson-lm needs even resolutions so that x = 0.5 is a mesh plane")
        rows, sols = run_poisson_lm(args.dim, resolutions, args.degree, **options)
    else:
        if args.dim != 2:
            raise UsageError("stokes-brinkman is defined on the unit square only")
        if args.degree not in (1, 2):
            raise UsageError("stokes-brinkman supports --degree 1 or 2")
        rows, sols = run_stokes_brinkman(resolutions, args.degree, **options)
    finest = sols[-1]
    if args.dump_matrix:
        write_matrix_market(finest.monolithic, args.dump_matrix,
                            comment=f"{args.problem} n={finest.n}")
    if args.export_solution:
        _export(finest, args.export_solution)
    write_table(rows, args.format, stdout)


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command != "run":
        parser.print_help(stderr)
        return 2
    try:
        run(args, stdout)
    except (UsageError, UnsupportedDegreeError, UnsupportedElementError) as exc:
        print(f"mixfem: error: {exc}", file=stderr)
        return 2
    except (SolverError, SingularMatrixError) as exc:
        print(f"mixfem: numerical failure: {exc}", file=stderr)
        return 1
    except MixfemError as exc:
        print(f"mixfem: error: {exc}", file=stderr)
        return 1
    except OSError as exc:
        print(f"mixfem: cannot write output: {exc}", file=stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
