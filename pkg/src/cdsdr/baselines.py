"""Reference estimators: SIR, SAVE, PHD and mean-regression MAVE (rMAVE).

The inverse-regression methods work on whitened covariates and return
bases in original coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bandwidth import BandwidthSchedule
from .dmave import DmaveConfig, run_mave
from .dopg import local_gradients, weight_metric
from .errors import DimensionError, FullyTrimmedError
from .kernels import K0_AT_ZERO
from .preprocess import backtransform_basis, standardize
from .smoothing import trim_rho, window_guard

__all__ = [
    "SliceSpec",
    "choose_slices",
    "make_slices",
    "sir_matrix",
    "save_matrix",
    "phd_matrix",
    "top_eigvecs",
    "sir",
    "save",
    "phd",
    "rmave",
]


@dataclass(frozen=True)
class SliceSpec:
    n_slices: int

    def __post_init__(self):
        if not 5 <= self.n_slices <= 30:
            raise ValueError(f"slice count must be in [5, 30], got {self.n_slices}")


def choose_slices(n, p):
    """Slice count closest to n / (2p), clamped to [5, 30]."""
    target = n / (2 * p)
    return SliceSpec(int(min(30, max(5, np.floor(target + 0.5)))))


def make_slices(y, n_slices):
    """Split observation indices into slices of (nearly) equal size by rank of y.

    Slices with fewer than two observations are merged into the previous
    one (or the next one, for the first slice).
    """
    order = np.argsort(np.asarray(y), kind="stable")
    parts = [s for s in np.array_split(order, min(n_slices, order.size)) if s.size]
    merged = []
    for part in parts:
        if merged and part.size < 2:
            merged[-1] = np.concatenate([merged[-1], part])
        else:
            merged.append(part)
    if len(merged) > 1 and merged[0].size < 2:
        merged[1] = np.concatenate([merged[0], merged[1]])
        merged.pop(0)
    return merged


def _slices_for(std, slices):
    if slices is None:
        slices = choose_slices(std.n, std.p)
    h = slices.n_slices if isinstance(slices, SliceSpec) else int(slices)
    return make_slices(std.y_std, h)


def sir_matrix(std, slices=None):
    """Proportion-weighted covariance of slice means of the whitened covariates."""
    z = std.z
    n, p = z.shape
    m = np.zeros((p, p))
    for idx in _slices_for(std, slices):
        mu = z[idx].mean(axis=0)
        m += (idx.size / n) * np.outer(mu, mu)
    return m


def save_matrix(std, slices=None):
    """Average of ``(I - V_h)^2`` over slices, V_h the within-slice covariance."""
    z = std.z
    n, p = z.shape
    eye = np.eye(p)
    m = np.zeros((p, p))
    for idx in _slices_for(std, slices):
        zc = z[idx] - z[idx].mean(axis=0)
        a = eye - zc.T @ zc / idx.size
        m += (idx.size / n) * (a @ a)
    return m


def phd_matrix(std):
    """Response-weighted second moment ``n^-1 sum (y_i - ybar) z_i z_i^T``."""
    y = std.y_std - std.y_std.mean()
    return (std.z * y[:, None]).T @ std.z / std.n


def top_eigvecs(m, q, by_abs=False):
    """Eigenvectors of a symmetric matrix for the q largest (|) eigenvalues."""
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    key = np.abs(vals) if by_abs else vals
    order = np.argsort(key, kind="stable")[::-1]
    return vecs[:, order[:q]], vals[order]


def _check_q(std, q):
    if not 1 <= q < std.p:
        raise DimensionError(f"need 1 <= q < p, got q={q}, p={std.p}")


def sir(std, q, slices=None):
    _check_q(std, q)
    vecs, _ = top_eigvecs(sir_matrix(std, slices), q)
    return backtransform_basis(vecs, std)


def save(std, q, slices=None):
    _check_q(std, q)
    vecs, _ = top_eigvecs(save_matrix(std, slices), q)
    return backtransform_basis(vecs, std)


def phd(std, q):
    _check_q(std, q)
    vecs, _ = top_eigvecs(phd_matrix(std), q, by_abs=True)
    return backtransform_basis(vecs, std)


def _mean_opg_init(std, q, sched, cfg):
    """Top-q eigenvectors of trimmed outer products of local mean gradients."""
    z, y = std.z, std.y_std
    n, p = z.shape
    init_cfg = cfg.init_cfg
    h, _ = sched.initial()
    scale = "none" if init_cfg.metric_scale == "none" else "trace"
    metric = weight_metric(np.eye(p), scale, init_cfg.initial_trace)
    _, slopes, weights = local_gradients(z, y[:, None], metric, h)
    # same density normalization as dOPG with no retained direction
    fx = (weights * h**p).sum(axis=0) / (n * K0_AT_ZERO)
    rho = trim_rho(fx, cfg.trim) * window_guard(weights, p, cfg.trim)
    if not rho.any():
        raise FullyTrimmedError("every anchor was trimmed in the rMAVE initializer")
    g = slopes[:, :, 0]
    sigma = (g * rho[:, None]).T @ g / n
    vals, vecs = np.linalg.eigh(sigma)
    return vecs[:, np.argsort(vals)[::-1][:q]]


def rmave(ds, q, cfg: DmaveConfig = DmaveConfig(), init=None):
    """MAVE for the conditional mean: regress ``Y_i`` itself, one response column."""
    std = ds if hasattr(ds, "z") else standardize(ds)
    _check_q(std, q)
    sched = BandwidthSchedule(std.n, std.p, q, cfg.c0)
    if init is None:
        init = _mean_opg_init(std, q, sched, cfg)
    resp = std.y_std[:, None]
    return run_mave(std, lambda b: resp, q, init, sched, cfg, "rmave", h_only=True)
