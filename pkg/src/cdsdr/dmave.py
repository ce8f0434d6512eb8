"""Minimum average conditional-variance estimation on the conditional density.

The objective

    n^-3 sum_{j,k} rho_jk sum_i {H_b(Y_i - Y_k) - a_jk - d_jk^T B^T X_ij}^2 w_ij

is minimized by alternating two least-squares problems: the local
intercepts/slopes ``(a_jk, d_jk)`` with ``B`` fixed, then ``vec(B)`` with
the local fits fixed, followed by a polar orthonormalization of ``B``.

The same machinery with a single response column (``Y_i`` itself instead of
the kernel table) gives mean-regression MAVE, see :mod:`cdsdr.baselines`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bandwidth import BandwidthSchedule, next_bandwidths
from .dopg import DopgConfig, dopg_iteration, initial_state
from .errors import (
    DimensionError,
    FullyTrimmedError,
    IllPosedStepError,
    RankCollapseError,
)
from .kernels import k_multi_sq
from .preprocess import backtransform_basis, check_basis, standardize, sym_power
from .results import FitResult
from .smoothing import (
    COND_LIMIT,
    TrimConfig,
    pairwise_sq_dists,
    response_kernel_table,
    solve_local_linear,
    trim_rho,
    window_guard,
)

__all__ = [
    "DmaveConfig",
    "DmaveState",
    "InnerFits",
    "vectorize_basis",
    "unvectorize",
    "reduced_weights",
    "dmave_inner_fits",
    "dmave_outer_solve",
    "dmave_orthonormalize",
    "dmave_objective",
    "dmave_step",
    "dmave_fit",
]


@dataclass(frozen=True)
class DmaveConfig:
    trim: TrimConfig = field(default_factory=TrimConfig)
    c0: float = 2.34
    tol: float = 1e-6
    max_iter: int = 25
    # Hold bandwidths, kernel weights and trimming at their starting values.
    frozen: bool = False
    # settings for the default dOPG initializer (trim and c0 are taken from here)
    init_cfg: DopgConfig = field(default_factory=DopgConfig)


@dataclass(frozen=True)
class DmaveState:
    b_mat: np.ndarray
    t: int
    h: float
    b: float


@dataclass
class InnerFits:
    """Local fits for every anchor pair plus the per-anchor panels they share.

    ``a[j, k]`` and ``d[j, :, k]`` are the intercept and reduced slope at
    ``(X_j, Y_k)``.  ``gram_x[j] = sum_i w_ij X_ij X_ij^T``,
    ``panel[j] = sum_i w_ij X_ij r_i^T`` (p x m) and
    ``wsum_x[j] = sum_i w_ij X_ij``.
    """

    a: np.ndarray
    d: np.ndarray
    rho_x: np.ndarray
    rho_y: np.ndarray
    weights: np.ndarray
    gram_x: np.ndarray
    panel: np.ndarray
    wsum_x: np.ndarray

    @property
    def rho(self):
        return np.outer(self.rho_x, self.rho_y)


def vectorize_basis(b):
    """Stack the columns of ``b`` into one vector."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {b.shape}")
    return b.reshape(-1, order="F")


def unvectorize(v, p, q):
    """Inverse of :func:`vectorize_basis`."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != p * q:
        raise DimensionError(f"vector of length {v.size} cannot be shaped {p}x{q}")
    return v.reshape((p, q), order="F")


def reduced_weights(z, b_mat, h):
    """``W[i, j] = K_h(B^T (X_i - X_j))`` in the q-dimensional reduced space."""
    v = z @ b_mat
    return k_multi_sq(pairwise_sq_dists(v), h, b_mat.shape[1])


def dmave_inner_fits(z, responses, b_mat, h, trim: TrimConfig = TrimConfig(), weights=None, rho_y=None, rho_x=None):
    """Step 1: local-linear fits on ``B^T X_ij`` for every anchor pair.

    ``responses`` is n x m; for dMAVE column k is ``H_b(Y_i - Y_k)``.
    ``rho_y`` defaults to the trimmed response density (column means);
    pass ``weights``/``rho_x`` to freeze them.
    """
    z = np.asarray(z, dtype=float)
    n, p = z.shape
    q = b_mat.shape[1]
    if weights is None:
        weights = reduced_weights(z, b_mat, h)
    if rho_x is None:
        fx = weights.mean(axis=0)
        rho_x = trim_rho(fx, trim) * window_guard(weights, q, trim)
    if rho_y is None:
        rho_y = trim_rho(responses.mean(axis=0), trim)
    m = responses.shape[1]
    a = np.empty((n, m))
    d = np.empty((n, q, m))
    gram_x = np.empty((n, p, p))
    panel = np.empty((n, p, m))
    wsum_x = np.empty((n, p))
    for j in range(n):
        idx = np.flatnonzero(weights[:, j])
        w = weights[idx, j]
        xd = z[idx] - z[j]
        wx = xd * w[:, None]
        gram_x[j] = xd.T @ wx
        panel[j] = wx.T @ responses[idx]
        wsum_x[j] = wx.sum(axis=0)
        # (q+1)x(q+1) Gram in reduced coordinates, factorized once per j
        g = np.empty((q + 1, q + 1))
        g[0, 0] = w.sum()
        g[0, 1:] = g[1:, 0] = wsum_x[j] @ b_mat
        g[1:, 1:] = b_mat.T @ gram_x[j] @ b_mat
        rhs = np.empty((q + 1, m))
        rhs[0] = w @ responses[idx]
        rhs[1:] = b_mat.T @ panel[j]
        coef, _ = solve_local_linear(g, rhs)
        a[j] = coef[0]
        d[j] = coef[1:]
    if not (np.any(rho_x) and np.any(rho_y)):
        raise FullyTrimmedError("every anchor pair was trimmed; increase n or lower omega0")
    return InnerFits(a, d, np.asarray(rho_x, float), np.asarray(rho_y, float), weights, gram_x, panel, wsum_x)


def dmave_outer_solve(fits: InnerFits, ridge=None):
    """Step 2: weighted least squares for ``vec(B)`` given the local fits.

    The pq x pq normal matrix is ``sum_j (sum_k rho_jk d_jk d_jk^T) kron
    (sum_i w_ij X_ij X_ij^T)``, identical to summing ``X_ijk X_ijk^T`` with
    ``X_ijk = d_jk kron X_ij`` over all triples.
    """
    n, q, m = fits.d.shape
    p = fits.gram_x.shape[1]
    gram = np.zeros((p * q, p * q))
    rhs = np.zeros((p, q))
    for j in np.flatnonzero(fits.rho_x):
        r = fits.rho_x[j] * fits.rho_y
        dj = fits.d[j]
        gram += np.kron((dj * r) @ dj.T, fits.gram_x[j])
        resid = fits.panel[j] - np.outer(fits.wsum_x[j], fits.a[j])
        rhs += (resid * r) @ dj.T
    rhs = vectorize_basis(rhs)
    scale = np.trace(gram) / (p * q)
    if not scale > 0 or not np.isfinite(scale):
        raise IllPosedStepError("outer least-squares system is zero (all local slopes vanish)")
    cond = np.linalg.cond(gram)
    if not cond <= COND_LIMIT:
        gram = gram + (1e-8 * scale if ridge is None else ridge) * np.eye(p * q)
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllPosedStepError(f"outer least-squares system is singular: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise IllPosedStepError("outer least-squares solution is not finite")
    return sol


def dmave_orthonormalize(bvec, p, q):
    """Step 3: ``B = M (M^T M)^{-1/2}`` with ``M`` the reshaped solution."""
    mat = unvectorize(bvec, p, q)
    lam = mat.T @ mat
    vals = np.linalg.eigvalsh(lam)
    if not vals.min() > 1e-12 * max(vals.max(), 1e-300):
        raise RankCollapseError("updated directions are linearly dependent")
    return mat @ sym_power(lam, -0.5, floor=0.0)


def dmave_objective(z, responses, b_mat, fits: InnerFits, a=None, d=None):
    """Average weighted squared local residual, with the weights in ``fits``."""
    a = fits.a if a is None else a
    d = fits.d if d is None else d
    n = z.shape[0]
    total = 0.0
    rho = fits.rho
    for j in np.flatnonzero(fits.rho_x):
        idx = np.flatnonzero(fits.weights[:, j])
        w = fits.weights[idx, j]
        v = (z[idx] - z[j]) @ b_mat
        res = responses[idx] - a[j][None, :] - v @ d[j]
        total += float(((res * res) * w[:, None]).sum(axis=0) @ rho[j])
    return total / n**3


def dmave_step(z, responses, state: DmaveState, trim=TrimConfig(), weights=None, rho_y=None, rho_x=None):
    """One inner/outer/orthonormalize pass.  Returns ``(new_b, fits, lam)``."""
    p, q = state.b_mat.shape
    fits = dmave_inner_fits(z, responses, state.b_mat, state.h, trim, weights, rho_y, rho_x)
    bvec = dmave_outer_solve(fits)
    mat = unvectorize(bvec, p, q)
    new_b = dmave_orthonormalize(bvec, p, q)
    return new_b, fits, np.linalg.eigvalsh(mat.T @ mat)[::-1]


def _projection_distance(a, b):
    return float(np.linalg.norm(a @ a.T - b @ b.T, 2))


def run_mave(std, responses_for, q, init, sched, cfg, method, h_only=False):
    """Shared alternation loop for dMAVE and mean-regression MAVE.

    ``responses_for(b)`` builds the response table for bandwidth ``b``.
    With ``h_only`` the response is not smoothed, so no response trimming
    is applied.
    """
    h0, b0 = sched.initial()
    h, b = next_bandwidths(h0, b0, sched)
    b_mat = check_basis(init, tol=1e-8)
    frozen = {}
    history = []
    converged = False
    lam = np.ones(q)
    t = 0
    for t in range(1, cfg.max_iter + 1):
        resp = responses_for(b)
        state = DmaveState(b_mat, t, h, b)
        rho_y = np.ones(resp.shape[1]) if h_only else None
        if cfg.frozen:
            if not frozen:
                fits0 = dmave_inner_fits(std.z, resp, b_mat, h, cfg.trim, rho_y=rho_y)
                frozen = dict(weights=fits0.weights, rho_x=fits0.rho_x, rho_y=fits0.rho_y)
            new_b, fits, lam = dmave_step(std.z, resp, state, cfg.trim, **frozen)
        else:
            new_b, fits, lam = dmave_step(std.z, resp, state, cfg.trim, rho_y=rho_y)
        delta = _projection_distance(b_mat, new_b)
        history.append(state)
        b_mat = new_b
        if not cfg.frozen:
            h, b = next_bandwidths(h, b, sched)
        if delta < cfg.tol:
            converged = True
            break
    return FitResult(
        method=method,
        basis=backtransform_basis(b_mat, std),
        basis_std=b_mat,
        eigenvalues=lam,
        iterations=t,
        converged=converged,
        final_h=h,
        final_b=None if h_only else b,
        history=history,
    )


def dmave_fit(ds, q, cfg: DmaveConfig = DmaveConfig(), init=None) -> FitResult:
    """Fit dMAVE.

    ``init`` is an orthonormal p x q basis in *standardized* coordinates; by
    default the top-q eigenvectors after one dOPG iteration are used.
    """
    std = ds if hasattr(ds, "z") else standardize(ds)
    p = std.p
    if not 1 <= q < p:
        raise DimensionError(f"need 1 <= q < p, got q={q}, p={p}")
    sched = BandwidthSchedule(std.n, p, q, cfg.c0)
    if init is None:
        dcfg = replace(cfg.init_cfg, trim=cfg.trim, c0=cfg.c0)
        first = dopg_iteration(std, initial_state(p, sched), sched, dcfg)
        init = first.eigvecs[:, :q]
    init = np.asarray(init, dtype=float).reshape(p, q)
    return run_mave(std, lambda b: response_kernel_table(std.y_std, b), q, init, sched, cfg, "dmave")
