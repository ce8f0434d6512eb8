"""Quadratic (biweight) kernels used throughout the estimators.

The univariate kernel is ``H(v) = K0(v**2) = 15/16 (1 - v**2)**2`` on
``|v| < 1``; the multivariate kernel is radial, ``K(u) = K0(|u|**2)``.
Support is half-open: the kernel is exactly zero on the unit sphere.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, InvalidBandwidthError

__all__ = [
    "K0_AT_ZERO",
    "k0",
    "h_kernel",
    "h_scaled",
    "k_multi",
    "k_multi_sq",
    "ball_kernel_mass",
]

K0_AT_ZERO = 15.0 / 16.0


def _check_bandwidth(b):
    b = float(b)
    if not b > 0 or not math.isfinite(b):
        raise InvalidBandwidthError(f"bandwidth must be positive and finite, got {b}")
    return b


def k0(s):
    """Radial profile ``K0(s) = 15/16 (1 - s)**2`` for ``0 <= s < 1``, else 0."""
    s = np.asarray(s, dtype=float)
    out = np.where(s < 1.0, K0_AT_ZERO * (1.0 - s) ** 2, 0.0)
    return out if out.ndim else float(out)


def h_kernel(v):
    """Univariate quadratic kernel H(v)."""
    v = np.asarray(v, dtype=float)
    return k0(v * v)


def h_scaled(v, b):
    """Scaled kernel ``H_b(v) = H(v / b) / b``."""
    b = _check_bandwidth(b)
    return h_kernel(np.asarray(v, dtype=float) / b) / b


def k_multi(u, h):
    """Multivariate kernel ``K_h(u) = h**-d K0(|u / h|**2)``.

    ``u`` may be a single d-vector or an array whose last axis has length d.
    """
    h = _check_bandwidth(h)
    u = np.asarray(u, dtype=float)
    if u.ndim == 0 or u.shape[-1] == 0:
        raise DimensionError("k_multi needs a non-empty vector argument")
    d = u.shape[-1]
    return k_multi_sq(np.sum(u * u, axis=-1), h, d)


def k_multi_sq(sq_norm, h, d):
    """``K_h`` evaluated from precomputed squared norms of d-vectors."""
    h = _check_bandwidth(h)
    return k0(np.asarray(sq_norm, dtype=float) / (h * h)) * h ** (-d)


def ball_kernel_mass(m):
    """Integral of ``K0(|v|**2)`` over R^m.

    Radial integration gives ``15/16 * S_{m-1} * B(m/2, 3) / 2`` where
    ``S_{m-1} = 2 pi**(m/2) / Gamma(m/2)`` is the unit sphere area.
    """
    if int(m) != m or m < 1:
        raise DimensionError(f"dimension must be a positive integer, got {m}")
    m = int(m)
    # int_0^1 (1 - r^2)^2 r^(m-1) dr = B(m/2, 3) / 2
    radial = 0.5 * math.exp(math.lgamma(m / 2) + math.lgamma(3) - math.lgamma(m / 2 + 3))
    sphere = 2.0 * math.pi ** (m / 2) / math.gamma(m / 2)
    return K0_AT_ZERO * sphere * radial
