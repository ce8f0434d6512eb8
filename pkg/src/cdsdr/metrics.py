"""Distance between estimated and true subspaces."""

import numpy as np

from .errors import DimensionError

__all__ = ["estimation_error"]


def estimation_error(b_true, b_est):
    """Largest singular value of ``B0 B0^T - B B^T`` for orthonormal bases.

    Zero for identical column spaces, one as soon as one of the spaces
    contains a direction orthogonal to the other.
    """
    a = np.asarray(b_true, dtype=float)
    b = np.asarray(b_est, dtype=float)
    a = a[:, None] if a.ndim == 1 else a
    b = b[:, None] if b.ndim == 1 else b
    if a.shape != b.shape:
        raise DimensionError(f"basis shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a @ a.T - b @ b.T, 2))
