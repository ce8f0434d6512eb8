"""Synthetic regression models with known central subspaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SamplingStallError
from .preprocess import Dataset, orthonormalize

__all__ = ["SimModelSpec", "generate", "true_basis", "DEFAULT_Q", "MAX_PROPOSALS", "MODEL4_VARIANTS"]

DEFAULT_Q = {1: 2, 2: 2, 3: 4, 4: 2}
MAX_PROPOSALS = 10**6
MODEL4_VARIANTS = ("literal", "ring")


@dataclass(frozen=True)
class SimModelSpec:
    """One simulation design.

    ``d`` is the power in model 2's mean term.  ``q`` overrides the default
    dimension of the true subspace for model 3 (ignored elsewhere).

    ``variant`` only affects model 4.  ``"literal"`` draws exactly the stated
    design, whose conditional law of Y depends on ``beta_1^T X`` alone.
    ``"ring"`` moves the second index into the noise scale and the annulus
    constraint, ``Y = beta_1^T X / 2 + e (1 - (beta_2^T X)^2)^{1/2}``, so that
    both directions carry information about Y.
    """

    model_id: int
    n: int
    p: int = 10
    d: int = 1
    seed: int = 0
    q: int | None = None
    variant: str = "literal"

    def __post_init__(self):
        if self.variant not in MODEL4_VARIANTS:
            raise DimensionError(f"unknown variant {self.variant!r}; choose from {', '.join(MODEL4_VARIANTS)}")
        if self.model_id not in (1, 2, 3, 4):
            raise DimensionError(f"unknown model {self.model_id}")
        if self.model_id == 1 and self.p < 4:
            raise DimensionError("model 1 needs p >= 4")
        if self.model_id in (2, 3, 4) and self.p != 10:
            raise DimensionError(f"model {self.model_id} is defined for p = 10")
        if self.n < self.p + 2:
            raise DimensionError(f"n={self.n} too small for p={self.p}")
        if self.model_id == 3 and self.q is not None and self.q not in (3, 4):
            raise DimensionError("model 3 supports q = 3 or q = 4")


def _model1_betas(p):
    b1 = np.zeros(p)
    b1[:4] = 0.5
    b2 = np.zeros(p)
    b2[:4] = [0.5, -0.5, 0.5, -0.5]
    return b1, b2


def _model2_betas():
    b1 = np.array([1, 2, 0, 0, 0, 0, 0, 0, 0, 2], dtype=float) / 3
    b2 = np.array([0, 0, 3, 4, 0, 0, 0, 0, 0, 0], dtype=float) / 5
    return b1, b2


def true_basis(spec: SimModelSpec):
    """Orthonormal basis of the central subspace of a model."""
    p = spec.p
    if spec.model_id in (1, 4):
        cols = _model1_betas(p)
    elif spec.model_id == 2:
        cols = _model2_betas()
    else:
        eye = np.eye(p)
        if (spec.q or 4) == 4:
            cols = eye[:, :4].T
        else:
            # q=3 convention: x1, x2 and the single index x3 + x4
            cols = (eye[:, 0], eye[:, 1], eye[:, 2] + eye[:, 3])
    return orthonormalize(np.column_stack(cols))


def _model4_draw(n, p, rng, b1, b2, ring=False):
    xs = np.empty((n, p))
    es = np.empty(n)
    filled = 0
    proposals_since_accept = 0
    batch = max(256, 4 * n)
    while filled < n:
        x = rng.standard_normal((batch, p))
        e = rng.standard_normal(batch)
        u1 = x @ b1
        u2 = x @ b2
        u = u2 if ring else u1
        s = u**2 * (1 - e**2) + e**2
        ok = (np.abs(u1) <= 1) & (np.abs(u2) <= 1) & (s > 0.5) & (s <= 1)
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            proposals_since_accept += batch
            if proposals_since_accept > MAX_PROPOSALS:
                raise SamplingStallError("model 4 rejection sampler made no progress")
            continue
        proposals_since_accept = 0
        take = idx[: n - filled]
        xs[filled : filled + take.size] = x[take]
        es[filled : filled + take.size] = e[take]
        filled += take.size
    return xs, es


def generate(spec: SimModelSpec):
    """Draw ``(Dataset, true_basis)`` for a model; a pure function of ``spec``."""
    rng = np.random.default_rng(spec.seed)
    n, p = spec.n, spec.p
    mid = spec.model_id
    if mid == 1:
        b1, b2 = _model1_betas(p)
        x = rng.standard_normal((n, p))
        e1 = rng.standard_normal(n)
        e2 = rng.standard_normal(n)
        y = np.sign(2 * x @ b1 + e1) * np.log(np.abs(2 * x @ b2 + 4 + e2))
    elif mid == 2:
        b1, b2 = _model2_betas()
        x = rng.uniform(-np.sqrt(3), np.sqrt(3), size=(n, p))
        e = rng.standard_normal(n)
        y = 2 * (x @ b1) ** spec.d + 2 * np.exp(x @ b2) * e
    elif mid == 3:
        x = rng.standard_normal((n, p))
        e = rng.standard_normal(n)
        x1, x2, x3, x4 = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
        y = x1 / (0.5 + (1.5 + x2) ** 2) + x3 * (x3 + x4 + 1) + 0.1 * e
    else:
        b1, b2 = _model1_betas(p)
        ring = spec.variant == "ring"
        x, e = _model4_draw(n, p, rng, b1, b2, ring)
        u1 = x @ b1
        u = x @ b2 if ring else u1
        y = u1 / 2 + e * np.sqrt(np.maximum(1 - u**2, 0.0))
    return Dataset(x, y), true_basis(spec)
