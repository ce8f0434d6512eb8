"""Deterministic bandwidth schedule for the iterative estimators.

Initial bandwidths are deliberately larger than MISE-optimal and shrink
geometrically by ``r_n`` each iteration until they reach floors that
depend on the target dimension ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionError

__all__ = ["BandwidthSchedule", "initial_bandwidths", "next_bandwidths"]

SILVERMAN_C0 = 2.34


def initial_bandwidths(n, p, c0=SILVERMAN_C0):
    """``(h0, b0) = (c0 n^{-1/(p0+6)}, c0 n^{-1/(p0+5)})`` with ``p0 = max(p, 3)``."""
    p0 = max(p, 3)
    return c0 * n ** (-1.0 / (p0 + 6)), c0 * n ** (-1.0 / (p0 + 5))


@dataclass(frozen=True)
class BandwidthSchedule:
    n: int
    p: int
    q: int
    c0: float = SILVERMAN_C0

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise DimensionError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 1 <= self.q:
            raise DimensionError(f"q must be positive, got {self.q}")
        if not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")

    @property
    def p0(self):
        return max(self.p, 3)

    @property
    def r_n(self):
        return self.n ** (-1.0 / (2 * (self.p0 + 6)))

    @property
    def h_floor(self):
        return self.c0 * self.n ** (-1.0 / (self.q + 4))

    @property
    def b_floor(self):
        return max(self.c0 * self.n ** (-1.0 / (self.q + 3)), self.c0 * self.n ** -0.2)

    def initial(self):
        return initial_bandwidths(self.n, self.p, self.c0)


def next_bandwidths(h_t, b_t, sched: BandwidthSchedule):
    """One shrinkage step, never going below the floors."""
    r = sched.r_n
    return max(r * h_t, sched.h_floor), max(r * b_t, sched.b_floor)
