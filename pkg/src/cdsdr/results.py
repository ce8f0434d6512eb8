from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class FitResult:
    """Output of an iterative estimator.

    ``basis`` is in original covariate coordinates, ``basis_std`` in the
    whitened ones; both are column-orthonormal.
    """

    method: str
    basis: np.ndarray
    basis_std: np.ndarray
    eigenvalues: np.ndarray
    iterations: int
    converged: bool
    final_h: float
    final_b: float | None = None
    history: list = field(default_factory=list, repr=False)
