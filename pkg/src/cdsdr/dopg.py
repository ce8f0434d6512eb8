"""Outer product of gradients on the double-kernel conditional density.

Each iteration fits, for every anchor pair ``(X_j, Y_k)``, a p-dimensional
local-linear regression of ``H_b(Y_i - Y_k)`` on ``X_i - X_j`` with weights
``K_h(Sigma^{1/2} (X_i - X_j))``, then averages the trimmed outer products
of the fitted slopes into a new ``Sigma``.  The leading eigenvectors of the
limit span the estimated central subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bandwidth import BandwidthSchedule, next_bandwidths
from .errors import DimensionError, FullyTrimmedError
from .kernels import k_multi_sq
from .preprocess import backtransform_basis, standardize, sym_inv_sqrt
from .results import FitResult
from .smoothing import (
    TrimConfig,
    dopg_density_factor,
    pairwise_sq_dists,
    response_kernel_table,
    solve_local_linear,
    trim_rho,
    window_guard,
)

__all__ = [
    "DopgConfig",
    "DopgState",
    "initial_state",
    "local_gradients",
    "dopg_iteration",
    "dopg_first_sigma",
    "dopg_fit",
]


@dataclass(frozen=True)
class DopgConfig:
    trim: TrimConfig = field(default_factory=TrimConfig)
    c0: float = 2.34
    tol: float = 1e-6
    max_iter: int = 25
    # Optional subsampling of response anchors Y_k, for large n.  None = all.
    n_response_anchors: int | None = None
    seed: int = 0
    # Scale of Sigma inside the kernel weights.  "truncated": keep the top-q
    # eigenpairs and rescale to trace metric_trace (None = q, i.e. unit
    # average scale per retained direction).  "trace": rescale the full
    # Sigma.  "none": raw Sigma with Sigma_(0) = I.  Except with "none",
    # Sigma_(0) = initial_trace / p * I.
    metric_scale: str = "truncated"
    metric_trace: float | None = None
    initial_trace: float = 2.0


@dataclass(frozen=True)
class DopgState:
    sigma: np.ndarray
    t: int
    h: float
    b: float
    eigvals: np.ndarray
    eigvecs: np.ndarray


def _eig_desc(sigma):
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def make_state(sigma, t, h, b):
    sigma = 0.5 * (sigma + sigma.T)
    vals, vecs = _eig_desc(sigma)
    return DopgState(sigma=sigma, t=t, h=h, b=b, eigvals=vals, eigvecs=vecs)


def initial_state(p, sched: BandwidthSchedule):
    h0, b0 = sched.initial()
    return make_state(np.eye(p), 0, h0, b0)


def weight_metric(sigma, scale="trace", target=1.0, q=None):
    """Symmetric square root of Sigma used inside the kernel weights.

    ``scale="truncated"`` first drops all but the top-q eigenpairs of Sigma.
    """
    if scale == "truncated":
        if q is None:
            raise ValueError("truncated metric needs q")
        vals, vecs = _eig_desc(sigma)
        vals, vecs = np.maximum(vals[:q], 0.0), vecs[:, :q]
        sigma = (vecs * vals) @ vecs.T
        scale = "trace"
    if scale == "trace":
        tr = np.trace(sigma)
        if tr > 0:
            sigma = sigma * (target / tr)
    elif scale != "none":
        raise ValueError(f"unknown metric scale {scale!r}")
    return sym_inv_sqrt(sigma, floor=1e-12, inverse=False)


def local_gradients(z, responses, metric, h):
    """Local-linear intercepts and slopes at every anchor ``X_j``.

    ``responses`` is n x m (column k holds the response family for the k-th
    response anchor).  Weights are ``K_h(metric (X_i - X_j))``.  Returns
    ``(intercepts, slopes, weights)`` with shapes (n, m), (n, p, m), (n, n);
    ``weights[i, j]`` is the weight of observation i at anchor j.
    """
    z = np.asarray(z, dtype=float)
    n, p = z.shape
    u = z @ metric
    weights = k_multi_sq(pairwise_sq_dists(u), h, p)
    m = responses.shape[1]
    intercepts = np.empty((n, m))
    slopes = np.empty((n, p, m))
    for j in range(n):
        idx = np.flatnonzero(weights[:, j])
        w = weights[idx, j]
        design = np.empty((idx.size, p + 1))
        design[:, 0] = 1.0
        design[:, 1:] = z[idx] - z[j]
        wd = design * w[:, None]
        # one Gram factorization per anchor j, shared by all response anchors
        coef, _ = solve_local_linear(design.T @ wd, wd.T @ responses[idx])
        intercepts[j] = coef[0]
        slopes[j] = coef[1:]
    return intercepts, slopes, weights


def _response_anchors(n, cfg, t):
    if cfg.n_response_anchors is None or cfg.n_response_anchors >= n:
        return np.arange(n)
    rng = np.random.default_rng([cfg.seed, t])
    return np.sort(rng.choice(n, size=cfg.n_response_anchors, replace=False))


def dopg_iteration(std, state: DopgState, sched: BandwidthSchedule, cfg: DopgConfig = DopgConfig()):
    """One refinement ``Sigma_(t) -> Sigma_(t+1)``; bandwidths then shrink."""
    z, y = std.z, std.y_std
    n, p = z.shape
    h, b = state.h, state.b
    if state.t == 0 and cfg.metric_scale != "none":
        metric = weight_metric(state.sigma, "trace", cfg.initial_trace)
    else:
        target = sched.q if cfg.metric_trace is None else cfg.metric_trace
        metric = weight_metric(state.sigma, cfg.metric_scale, target, sched.q)
    lam = np.linalg.eigvalsh(metric)

    ks = _response_anchors(n, cfg, state.t)
    table = response_kernel_table(y, b)
    resp = table[:, ks]
    _, slopes, weights = local_gradients(z, resp, metric, h)

    # trimming densities use the current metric
    fx = dopg_density_factor(lam, h, p) * (weights * h**p).sum(axis=0) / n
    fy = resp.mean(axis=0)
    rho_x = trim_rho(fx, cfg.trim) * window_guard(weights, p, cfg.trim)
    rho_y = trim_rho(fy, cfg.trim)
    if not (rho_x.any() and rho_y.any()):
        raise FullyTrimmedError(
            "every anchor pair was trimmed; increase n or lower omega0"
        )

    sigma = np.zeros((p, p))
    for j in np.flatnonzero(rho_x):
        s = slopes[j]
        sigma += rho_x[j] * ((s * rho_y) @ s.T)
    sigma /= n * ks.size
    h1, b1 = next_bandwidths(h, b, sched)
    return make_state(sigma, state.t + 1, h1, b1)


def _prepare(ds, q):
    std = ds if hasattr(ds, "z") else standardize(ds)
    p = std.p
    if not 1 <= q < p:
        raise DimensionError(f"need 1 <= q < p, got q={q}, p={p}")
    return std


def dopg_first_sigma(ds, q, cfg: DopgConfig = DopgConfig()):
    """State after a single iteration from the identity metric."""
    std = _prepare(ds, q)
    sched = BandwidthSchedule(std.n, std.p, q, cfg.c0)
    return dopg_iteration(std, initial_state(std.p, sched), sched, cfg)


def dopg_fit(ds, q, cfg: DopgConfig = DopgConfig()) -> FitResult:
    """Iterate until the spectral norm of the change in Sigma drops below tol.

    ``ds`` may be a raw :class:`Dataset` or an already standardized one.
    """
    std = _prepare(ds, q)
    sched = BandwidthSchedule(std.n, std.p, q, cfg.c0)
    state = initial_state(std.p, sched)
    history = []
    converged = False
    for _ in range(cfg.max_iter):
        new = dopg_iteration(std, state, sched, cfg)
        delta = float(np.linalg.norm(state.sigma - new.sigma, 2))
        history.append(new)
        state = new
        if delta < cfg.tol:
            converged = True
            break
    basis_std = state.eigvecs[:, :q]
    return FitResult(
        method="dopg",
        basis=backtransform_basis(basis_std, std),
        basis_std=basis_std,
        eigenvalues=state.eigvals.copy(),
        iterations=state.t,
        converged=converged,
        final_h=state.h,
        final_b=state.b,
        history=history,
    )
