"""Data containers, whitening and back-transformation of directions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DataError,
    DegenerateResponseError,
    DimensionError,
    NotPSDError,
    RankDeficiencyError,
)

__all__ = [
    "Dataset",
    "StandardizedDataset",
    "standardize",
    "backtransform_basis",
    "sym_inv_sqrt",
    "sym_power",
    "check_basis",
    "orthonormalize",
    "projection",
]


@dataclass(frozen=True)
class Dataset:
    """Raw covariates ``x`` (n x p, rows are observations) and response ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, order="C")
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.ndim != 2:
            raise DimensionError(f"x must be a 2-d array, got shape {x.shape}")
        n, p = x.shape
        if y.shape[0] != n:
            raise DimensionError(f"x has {n} rows but y has {y.shape[0]} entries")
        if n < p + 2:
            raise DataError(f"need at least p+2={p + 2} observations, got {n}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("data contain non-finite values")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class StandardizedDataset:
    """Whitened covariates plus what is needed to map directions back."""

    z: np.ndarray
    y_std: np.ndarray
    x_mean: np.ndarray
    s_inv_sqrt: np.ndarray
    y_mean: float
    y_sd: float

    @property
    def n(self):
        return self.z.shape[0]

    @property
    def p(self):
        return self.z.shape[1]


def sym_power(m, power, floor=1e-12):
    """Symmetric matrix power via eigendecomposition.

    Eigenvalues below ``floor`` are clamped to ``floor`` before the power is
    taken.  Raises :class:`NotPSDError` if an eigenvalue is below -1e-8.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(m).max())):
        raise DataError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    if vals.size and vals.min() < -1e-8:
        raise NotPSDError(f"matrix has negative eigenvalue {vals.min():.3e}")
    vals = np.maximum(vals, floor)
    out = (vecs * vals**power) @ vecs.T
    return 0.5 * (out + out.T)


def sym_inv_sqrt(m, floor=1e-12, inverse=True):
    """``m**-1/2`` (or ``m**1/2`` with ``inverse=False``) of a symmetric PSD matrix."""
    return sym_power(m, -0.5 if inverse else 0.5, floor=floor)


def standardize(ds: Dataset) -> StandardizedDataset:
    """Center and whiten covariates, center and scale the response.

    Covariance and variance use the 1/n normalization.
    """
    x, y = ds.x, ds.y
    n = x.shape[0]
    x_mean = x.mean(axis=0)
    xc = x - x_mean
    cov = xc.T @ xc / n
    vals = np.linalg.eigvalsh(cov)
    tiny = 1e-10 * max(1.0, vals.max())
    if vals.min() <= tiny:
        raise RankDeficiencyError(
            f"covariate covariance is not positive definite (eigenvalue {vals.min():.3e})"
        )
    s_inv_sqrt = sym_inv_sqrt(cov, floor=0.0)
    z = xc @ s_inv_sqrt
    y_mean = float(y.mean())
    y_sd = float(np.sqrt(np.mean((y - y_mean) ** 2)))
    if not y_sd > 1e-12 * max(1.0, abs(y_mean)):
        raise DegenerateResponseError("response has zero variance")
    return StandardizedDataset(
        z=z,
        y_std=(y - y_mean) / y_sd,
        x_mean=x_mean,
        s_inv_sqrt=s_inv_sqrt,
        y_mean=y_mean,
        y_sd=y_sd,
    )


def orthonormalize(b):
    """Orthonormal basis of the column space of ``b`` (thin QR, sign-fixed)."""
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    q, r = np.linalg.qr(b)
    d = np.abs(np.diag(r))
    if d.size and d.min() <= 1e-12 * max(1.0, d.max()):
        raise RankDeficiencyError("basis columns are linearly dependent")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def check_basis(b, tol=1e-10):
    """Validate a p x q column-orthonormal basis with 1 <= q < p."""
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    p, q = b.shape
    if not 1 <= q < p:
        raise DimensionError(f"basis must have 1 <= q < p, got p={p}, q={q}")
    if np.abs(b.T @ b - np.eye(q)).max() > tol:
        raise DataError("basis columns are not orthonormal")
    return b


def projection(b):
    """Orthogonal projector ``B B^T`` onto the column span of an orthonormal ``b``."""
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    return b @ b.T


def backtransform_basis(basis_in_z, std: StandardizedDataset):
    """Map directions found in whitened coordinates back to original ones.

    Returns an orthonormal basis of ``span(S_X^{-1/2} B)``.
    """
    b = np.asarray(basis_in_z, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    return orthonormalize(std.s_inv_sqrt @ b)
