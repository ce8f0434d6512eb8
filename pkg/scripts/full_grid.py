"""Offline run of the simulation grids (reduced replication count).

    python scripts/full_grid.py --reps 20 --output results/full_grid.csv
"""

import argparse
import csv
import sys
import time

from cdsdr.dmave import DmaveConfig
from cdsdr.dopg import DopgConfig
from cdsdr.models import SimModelSpec
from cdsdr.simbench import METHODS, EstimatorConfig, run_benchmark
from cdsdr.smoothing import TrimConfig

COLUMNS = ("table", "model", "variant", "d", "n", "p", "q", "config", "method", "reps", "mean", "sd", "failures")
KERNEL_METHODS = ("dopg", "dmave", "rmave")


def _min_window(mw):
    trim = TrimConfig(min_window=mw)
    dopg = DopgConfig(trim=trim)
    return EstimatorConfig(dopg=dopg, dmave=DmaveConfig(trim=trim, init_cfg=dopg))


def cells():
    default = ("default", EstimatorConfig(), METHODS)
    relaxed = ("min_window=1", _min_window(1.0), KERNEL_METHODS)
    for n in (100, 200, 300, 400):
        for p in (5, 10, 20):
            yield "1", SimModelSpec(1, n, p), default
            if p == 20:
                yield "1", SimModelSpec(1, n, p), relaxed
    for d in (1, 2):
        for n in (100, 200, 400):
            yield "2", SimModelSpec(2, n, 10, d=d), default
    for n in (200, 400):
        yield "3", SimModelSpec(4, n, 10), default
    for n in (200, 400, 600, 800, 1000):
        yield "3", SimModelSpec(4, n, 10, variant="ring"), default


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--output", default="results/full_grid.csv")
    args = ap.parse_args(argv)
    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for table, spec, (label, cfg, methods) in cells():
            t0 = time.perf_counter()
            rep = run_benchmark(spec, methods, reps=args.reps, seed=args.seed, cfg=cfg, n_jobs=args.jobs)
            for r in rep.rows:
                w.writerow((table, spec.model_id, spec.variant, spec.d, spec.n, spec.p, rep.q, label, r.method,
                            args.reps, f"{r.mean:.4f}", f"{r.sd:.4f}", r.failures))
            fh.flush()
            print(f"table {table} {label} {spec} done in {time.perf_counter() - t0:.0f}s", file=sys.stderr, flush=True)


if __name__ == "__main__":
    main()
