"""Local-linear solver, kernel density estimates and trimming weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyWindowError, InvalidBandwidthError
from .kernels import K0_AT_ZERO, ball_kernel_mass, h_scaled, k0, k_multi_sq

__all__ = [
    "TrimConfig",
    "window_guard",
    "LocalFit",
    "trim_rho",
    "density_y",
    "density_x_reduced",
    "density_x_dopg",
    "dopg_density_factor",
    "wls_linear_fit",
    "solve_local_linear",
    "pairwise_sq_dists",
    "response_kernel_table",
]

COND_LIMIT = 1e10


@dataclass(frozen=True)
class TrimConfig:
    """Trimming threshold ``omega0`` and width of the smooth ramp above it.

    ``ramp_width=None`` means "same as omega0".
    """

    omega0: float = 0.01
    ramp_width: float | None = None
    min_window: float = 2.0
    window_mode: str = "ess"

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.ramp_width is not None and not self.ramp_width > 0:
            raise ValueError(f"ramp_width must be positive, got {self.ramp_width}")

    @property
    def width(self):
        return self.omega0 if self.ramp_width is None else self.ramp_width


@dataclass(frozen=True)
class LocalFit:
    a: float
    grad: np.ndarray
    gram_condition: float


def trim_rho(v, cfg: TrimConfig = TrimConfig()):
    """Trimming weight: 0 up to ``omega0``, 1 above ``omega0 + width``.

    The ramp in between is the quintic smoothstep ``6s^5 - 15s^4 + 10s^3``,
    which has continuous first and second derivatives at both ends.
    """
    v = np.asarray(v, dtype=float)
    s = np.clip((v - cfg.omega0) / cfg.width, 0.0, 1.0)
    out = s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    out = np.where(v <= cfg.omega0, 0.0, out)
    return out if out.ndim else float(out)


def window_guard(weights, d, cfg: TrimConfig = TrimConfig()):
    """1 for anchors whose local window supports a d-slope fit, else 0.

    Column j of ``weights`` holds the kernel weights at anchor j.  The window
    must contain at least ``min_window * (d + 1)`` observations.
    """
    w = np.asarray(weights, dtype=float)
    if cfg.min_window <= 0:
        return np.ones(w.shape[1])
    if cfg.window_mode == "ess":
        s1 = w.sum(axis=0)
        s2 = (w * w).sum(axis=0)
        size = np.divide(s1 * s1, s2, out=np.zeros_like(s1), where=s2 > 0)
    else:
        size = (w > 0).sum(axis=0)
    return (size >= cfg.min_window * (d + 1)).astype(float)


def response_kernel_table(y, b):
    """``T[i, k] = H_b(y_i - y_k)``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return h_scaled(y[:, None] - y[None, :], b)


def pairwise_sq_dists(u, v=None):
    """Squared Euclidean distances between rows of ``u`` and rows of ``v``."""
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    d = np.sum(u * u, axis=1)[:, None] + np.sum(v * v, axis=1)[None, :] - 2.0 * (u @ v.T)
    np.maximum(d, 0.0, out=d)
    if v is u:
        np.fill_diagonal(d, 0.0)
    return d


def density_y(y_points, eval_at, b):
    """Kernel density estimate ``n^-1 sum_i H_b(y_i - y)`` at ``eval_at``."""
    y_points = np.asarray(y_points, dtype=float).reshape(-1)
    e = np.asarray(eval_at, dtype=float)
    out = h_scaled(y_points[:, None] - e.reshape(1, -1), b).mean(axis=0)
    return out.reshape(e.shape) if e.ndim else float(out[0])


def density_x_reduced(z, basis, eval_at, h):
    """q-dimensional KDE of ``B^T X`` evaluated at ``B^T eval_at``."""
    z = np.asarray(z, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    e = np.asarray(eval_at, dtype=float)
    single = e.ndim == 1
    e = np.atleast_2d(e)
    d2 = pairwise_sq_dists(z @ basis, e @ basis)
    out = k_multi_sq(d2, h, basis.shape[1]).mean(axis=0)
    return float(out[0]) if single else out


def dopg_density_factor(eigvals, h, p):
    """Normalizing factor ``h^p prod_{lam>h}(lam/h) / mu`` of the dOPG density.

    ``mu`` is the kernel mass in the ``m = #{lam > h}`` retained directions;
    with no retained direction the integral is taken over a point, ``K0(0)``.
    """
    eigvals = np.asarray(eigvals, dtype=float)
    keep = eigvals[eigvals > h]
    m = keep.size
    mu = ball_kernel_mass(m) if m else K0_AT_ZERO
    # h^p * K_h = K(u/h), so the h^p factor is folded into the kernel sum.
    return float(np.prod(keep / h)) / mu


def density_x_dopg(z, sigma_sqrt, eigvals, eval_at, h):
    """Eigenvalue-corrected density estimate used for dOPG trimming."""
    if not h > 0:
        raise InvalidBandwidthError(f"bandwidth must be positive, got {h}")
    z = np.asarray(z, dtype=float)
    n, p = z.shape
    e = np.asarray(eval_at, dtype=float)
    single = e.ndim == 1
    e = np.atleast_2d(e)
    d2 = pairwise_sq_dists(z @ sigma_sqrt, e @ sigma_sqrt)
    # h^p K_h(u) = K(u / h)
    ksum = k0(d2 / (h * h)).sum(axis=0)
    out = dopg_density_factor(eigvals, h, p) * ksum / n
    return float(out[0]) if single else out


def _default_ridge(gram):
    d = gram.shape[0] - 1
    if d == 0:
        return 0.0
    tr = np.trace(gram[1:, 1:]) / d
    return 1e-8 * tr if tr > 0 else 1e-8


def solve_local_linear(gram, rhs, ridge=None):
    """Solve ``gram @ coef = rhs`` for a (d+1)x(d+1) local-linear Gram matrix.

    When the condition number exceeds 1e10, ``ridge * I`` is added to the
    slope block first.  Returns ``(coef, condition)`` where ``condition`` is
    the pre-ridge estimate.
    """
    gram = np.asarray(gram, dtype=float)
    if not gram[0, 0] > 0:
        raise EmptyWindowError("all local weights are zero")
    cond = float(np.linalg.cond(gram))
    if not cond <= COND_LIMIT:
        lam = _default_ridge(gram) if ridge is None else float(ridge)
        gram = gram.copy()
        idx = np.arange(1, gram.shape[0])
        gram[idx, idx] += lam
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return coef, cond


def wls_linear_fit(anchors, responses, weights, ridge=None) -> LocalFit:
    """Weighted least squares of ``responses`` on ``(1, anchors)``.

    Minimizes ``sum_i w_i (r_i - a - b^T x_i)^2``.  ``ridge=None`` uses
    ``1e-8 * trace(slope block) / d`` when the Gram matrix is near singular.
    """
    x = np.asarray(anchors, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    r = np.asarray(responses, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(w > 0):
        raise EmptyWindowError("all local weights are zero")
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    wd = design * w[:, None]
    coef, cond = solve_local_linear(design.T @ wd, wd.T @ r, ridge=ridge)
    return LocalFit(a=float(coef[0]), grad=coef[1:], gram_condition=cond)
