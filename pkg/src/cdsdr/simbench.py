"""Monte-Carlo replication harness over the synthetic models."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines
from .dmave import DmaveConfig, dmave_fit
from .dopg import DopgConfig, dopg_fit
from .errors import SDRError
from .metrics import estimation_error
from .models import DEFAULT_Q, SimModelSpec, generate
from .preprocess import standardize

__all__ = [
    "METHODS",
    "MethodSummary",
    "ReplicationReport",
    "rep_seed",
    "fit_method",
    "run_benchmark",
    "consistency_curve",
    "REPORT_COLUMNS",
    "CURVE_COLUMNS",
]

METHODS = ("dopg", "dmave", "rmave", "sir", "save", "phd")
REPORT_COLUMNS = ("model", "n", "p", "q", "method", "reps", "mean", "sd", "failures", "runtime_s")
CURVE_COLUMNS = ("model", "n", "p", "q", "method", "reps", "mean", "sd", "failures", "sqrt_n_scaled")


@dataclass(frozen=True)
class EstimatorConfig:
    dopg: DopgConfig = field(default_factory=DopgConfig)
    dmave: DmaveConfig = field(default_factory=DmaveConfig)


def rep_seed(master, rep):
    """Seed of replication ``rep``; depends only on ``(master, rep)``."""
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), int(rep)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fit_method(method, ds, q, cfg: EstimatorConfig = EstimatorConfig()):
    """Run one estimator and return its basis in original coordinates."""
    if method == "dopg":
        return dopg_fit(ds, q, cfg.dopg).basis
    if method == "dmave":
        return dmave_fit(ds, q, cfg.dmave).basis
    if method == "rmave":
        return baselines.rmave(ds, q, cfg.dmave).basis
    std = standardize(ds)
    if method == "sir":
        return baselines.sir(std, q)
    if method == "save":
        return baselines.save(std, q)
    if method == "phd":
        return baselines.phd(std, q)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


@dataclass
class MethodSummary:
    method: str
    errors: list
    failures: int
    runtime_s: float

    @property
    def n_ok(self):
        return len(self.errors)

    @property
    def mean(self):
        return float(np.mean(self.errors)) if self.errors else math.nan

    @property
    def sd(self):
        if len(self.errors) < 2:
            return 0.0 if self.errors else math.nan
        return float(np.std(self.errors, ddof=1))


@dataclass
class ReplicationReport:
    spec: SimModelSpec
    q: int
    reps: int
    seed: int
    rows: list

    def row(self, method):
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def records(self, timing=True):
        out = []
        for r in self.rows:
            out.append(
                dict(
                    model=self.spec.model_id,
                    n=self.spec.n,
                    p=self.spec.p,
                    q=self.q,
                    method=r.method,
                    reps=self.reps,
                    mean=r.mean,
                    sd=r.sd,
                    failures=r.failures,
                    runtime_s=r.runtime_s if timing else math.nan,
                )
            )
        return out

    def to_csv(self, timing=True):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in self.records(timing):
            w.writerow({k: _fmt(v) for k, v in rec.items()})
        return buf.getvalue()

    def to_json(self, timing=True):
        doc = {
            "model": self.spec.model_id,
            "n": self.spec.n,
            "p": self.spec.p,
            "d": self.spec.d,
            "q": self.q,
            "reps": self.reps,
            "seed": self.seed,
            "results": [
                dict(rec, errors=[float(e) for e in r.errors])
                for rec, r in zip(self.records(timing), self.rows)
            ],
        }
        return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"

    def table(self):
        head = f"model {self.spec.model_id}  n={self.spec.n}  p={self.spec.p}  q={self.q}  reps={self.reps}"
        lines = [head, "  ".join(f"{r.method:>12}" for r in self.rows)]
        cells = []
        for r in self.rows:
            cell = f"{r.mean:.2f}({r.sd:.2f})" if r.errors else "failed"
            if r.failures:
                cell += f"*{r.failures}"
            cells.append(f"{cell:>12}")
        lines.append("  ".join(cells))
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _one_rep(args):
    spec, methods, q, cfg = args
    ds, b_true = generate(spec)
    if b_true.shape[1] != q:
        raise ValueError(f"q={q} does not match the model's true dimension {b_true.shape[1]}")
    out = []
    for m in methods:
        t0 = time.perf_counter()
        try:
            err = estimation_error(b_true, fit_method(m, ds, q, cfg))
        except SDRError:
            err = None
        out.append((err, time.perf_counter() - t0))
    return out


def run_benchmark(spec: SimModelSpec, methods, q=None, reps=50, seed=0, cfg=EstimatorConfig(), n_jobs=1):
    """Replicate ``spec`` ``reps`` times and score every method.

    Replication r uses ``rep_seed(seed, r)`` (the seed in ``spec`` is
    ignored).  Failed fits are counted per method and left out of mean/sd.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    methods = list(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    q = q or (spec.q or DEFAULT_Q[spec.model_id])
    if spec.model_id == 3 and spec.q is None:
        spec = replace(spec, q=q)
    jobs = [(replace(spec, seed=rep_seed(seed, r)), methods, q, cfg) for r in range(reps)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(_one_rep, jobs))
    else:
        results = [_one_rep(j) for j in jobs]
    rows = []
    for i, m in enumerate(methods):
        errs = [res[i][0] for res in results if res[i][0] is not None]
        fails = sum(res[i][0] is None for res in results)
        rows.append(MethodSummary(m, errs, fails, sum(res[i][1] for res in results)))
    return ReplicationReport(spec=replace(spec, seed=seed), q=q, reps=reps, seed=seed, rows=rows)


def consistency_curve(ns, methods, reps, seed=0, model_id=3, p=10, q=None, cfg=EstimatorConfig(), n_jobs=1):
    """Mean errors and sqrt(n)-scaled mean errors over increasing sample sizes.

    Returns a list of dicts with the ``CURVE_COLUMNS`` keys, one per (n, method).
    """
    ns = list(ns)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("sample sizes must be strictly increasing")
    rows = []
    for n in ns:
        rep = run_benchmark(SimModelSpec(model_id, n, p, q=q if model_id == 3 else None), methods, q, reps, seed, cfg, n_jobs)
        for r in rep.rows:
            rows.append(
                dict(
                    model=model_id,
                    n=n,
                    p=p,
                    q=rep.q,
                    method=r.method,
                    reps=reps,
                    mean=r.mean,
                    sd=r.sd,
                    failures=r.failures,
                    sqrt_n_scaled=r.mean * math.sqrt(n),
                )
            )
    return rows


def curve_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CURVE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rec in rows:
        w.writerow({k: _fmt(v) for k, v in rec.items()})
    return buf.getvalue()
