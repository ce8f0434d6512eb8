"""Command-line front end.

    cdsdr fit --input cars.csv --response mpg --q 2 --method dmave
    cdsdr simulate --model 1 --n 200 --p 10 --q 2 --methods dmave,sir --reps 50
    cdsdr curve --ns 200,400,800 --methods dmave,dopg --reps 30

Exit codes: 0 success, 1 usage error, 2 data/I-O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .dmave import DmaveConfig, dmave_fit
from .dopg import DopgConfig, dopg_fit
from .errors import DataError, NumericalError
from .models import SimModelSpec
from .preprocess import Dataset, backtransform_basis, standardize
from .simbench import METHODS, EstimatorConfig, consistency_curve, curve_to_csv, run_benchmark
from .smoothing import TrimConfig

log = logging.getLogger("cdsdr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_csv(path, response, dummies=()):
    """Read a numeric CSV with a header row.

    Columns named in ``dummies`` are expanded into 0/1 indicators for every
    level except the last (sorted) one.  Returns ``(Dataset, covariate names)``.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
            rows.append((lineno, [c.strip() for c in row]))
    if response not in header:
        raise DataError(f"{path}: response column {response!r} not found")
    for d in dummies:
        if d not in header:
            raise DataError(f"{path}: dummy column {d!r} not found")
        if d == response:
            raise DataError("the response cannot be dummy-coded")
    if not rows:
        raise DataError(f"{path}: no data rows")

    columns = {}
    for ci, name in enumerate(header):
        if name in dummies:
            columns[name] = [r[ci] for _, r in rows]
            continue
        vals = []
        for lineno, r in rows:
            try:
                vals.append(float(r[ci]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: column {name!r} has non-numeric value {r[ci]!r}") from None
        columns[name] = vals

    names, cols = [], []
    for name in header:
        if name == response:
            continue
        if name in dummies:
            levels = sorted(set(columns[name]))
            for lev in levels[:-1]:
                names.append(f"{name}={lev}")
                cols.append([1.0 if v == lev else 0.0 for v in columns[name]])
        else:
            names.append(name)
            cols.append(columns[name])
    if not cols:
        raise DataError(f"{path}: no covariate columns")
    x = np.array(cols, dtype=float).T
    y = np.array(columns[response], dtype=float)
    return Dataset(x, y), names


def _trim(args):
    if not args.min_window >= 0:
        raise UsageError("--min-window must be nonnegative")
    return TrimConfig(omega0=args.omega0, min_window=args.min_window)


def _configs(args):
    trim = _trim(args)
    dcfg = DopgConfig(trim=trim, c0=args.c0, tol=args.tol, max_iter=args.max_iter)
    mcfg = DmaveConfig(trim=trim, c0=args.c0, tol=args.tol, max_iter=args.max_iter, init_cfg=dcfg)
    return EstimatorConfig(dopg=dcfg, dmave=mcfg)


def _methods(text):
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s) {', '.join(bad) or text!r}; choose from {', '.join(METHODS)}")
    return methods


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_fit(args):
    method = args.method.lower()
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}")
    ds, names = read_csv(args.input, args.response, args.dummy or ())
    if not 1 <= args.q < ds.p:
        raise UsageError(f"q must satisfy 1 <= q < p = {ds.p}")
    cfg = _configs(args)
    iterations, converged = None, None
    if method == "dopg":
        res = dopg_fit(ds, args.q, cfg.dopg)
    elif method == "dmave":
        res = dmave_fit(ds, args.q, cfg.dmave)
    elif method == "rmave":
        res = baselines.rmave(ds, args.q, cfg.dmave)
    else:
        res = None
    if res is not None:
        basis, eig = res.basis, res.eigenvalues
        iterations, converged = res.iterations, res.converged
    else:
        std = standardize(ds)
        if method == "phd":
            mat, by_abs = baselines.phd_matrix(std), True
        else:
            fn = baselines.sir_matrix if method == "sir" else baselines.save_matrix
            mat, by_abs = fn(std), False
        vecs, eig = baselines.top_eigvecs(mat, args.q, by_abs=by_abs)
        basis = backtransform_basis(vecs, std)
    doc = {
        "method": method,
        "q": args.q,
        "covariates": names,
        "directions": [[float(v) for v in basis[:, k]] for k in range(args.q)],
        "eigenvalues": [float(v) for v in eig],
        "iterations": iterations,
        "converged": converged,
        "config": {
            "input": str(args.input),
            "response": args.response,
            "dummy": list(args.dummy or []),
            "c0": args.c0,
            "omega0": args.omega0,
            "min_window": args.min_window,
            "tol": args.tol,
            "max_iter": args.max_iter,
        },
    }
    _write(args.output, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_simulate(args):
    methods = _methods(args.methods)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    try:
        spec = SimModelSpec(
            args.model, args.n, args.p, d=args.d, q=args.q if args.model == 3 else None, variant=args.variant
        )
    except DataError as exc:
        raise UsageError(str(exc)) from None
    report = run_benchmark(spec, methods, args.q, args.reps, args.seed, _configs(args), n_jobs=args.jobs)
    if args.output:
        out = Path(args.output)
        Path(f"{out}.csv").write_text(report.to_csv(timing=args.timing), encoding="utf-8")
        Path(f"{out}.json").write_text(report.to_json(timing=args.timing), encoding="utf-8")
    print(report.table())
    return EXIT_OK


def cmd_curve(args):
    methods = _methods(args.methods)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    ns = _ints(args.ns)
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError("--ns must be strictly increasing")
    if args.model not in (1, 2, 3, 4):
        raise UsageError(f"unknown model {args.model}")
    try:
        rows = consistency_curve(ns, methods, args.reps, args.seed, args.model, args.p, args.q, _configs(args), args.jobs)
    except DataError as exc:
        raise UsageError(str(exc)) from None
    _write(args.output, curve_to_csv(rows))
    return EXIT_OK


def _common(p):
    p.add_argument("--c0", type=float, default=2.34, help="bandwidth constant")
    p.add_argument("--omega0", type=float, default=0.01, help="trimming threshold")
    p.add_argument(
        "--min-window", type=float, default=2.0,
        help="trim anchors whose local window has effective size below this multiple of d+1",
    )
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=25)


def _bench(p):
    p.add_argument("--methods", default="dmave,dopg,sir")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser():
    parser = _Parser(prog="cdsdr", description="Central subspace estimation by dOPG / dMAVE.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="estimate directions from a CSV file")
    p.add_argument("--input", required=True)
    p.add_argument("--response", required=True, help="name of the response column")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--method", default="dmave", help=f"one of {', '.join(METHODS)}")
    p.add_argument("--dummy", action="append", metavar="COL", help="dummy-code a categorical column")
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; fitting is deterministic")
    p.add_argument("--output", help="JSON output path (default stdout)")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte-Carlo benchmark on a synthetic model")
    p.add_argument("--model", type=int, required=True, choices=(1, 2, 3, 4))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=1, help="power of the mean term in model 2")
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--variant", default="literal", choices=("literal", "ring"), help="model 4 design")
    p.add_argument("--output", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.add_argument("--timing", action="store_true", help="record wall-clock runtimes (breaks byte-for-byte reproducibility)")
    _bench(p)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curve", help="errors and sqrt(n)-scaled errors over sample sizes")
    p.add_argument("--model", type=int, default=3)
    p.add_argument("--ns", default="200,400,800")
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--output", help="CSV output path (default stdout)")
    _bench(p)
    _common(p)
    p.set_defaults(func=cmd_curve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cdsdr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"cdsdr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"cdsdr: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
