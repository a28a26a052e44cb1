"""Exact law of the first increment in d=2.

Y_1 > m exactly when all m^2 + 2m vertices of the cone of height m are
closed, so P{Y_1 > m} = (1-p)^((m+1)^2 - 1).  Given Y_1 = k the open sites of
the slab are exchangeable, hence X_1 is uniform on {-k, ..., k}.  From these
two facts gamma = E[Y_1] and sigma^2 = Var(X_1) = E[Y_1(Y_1+1)]/3 follow as
rapidly converging series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TERM_CUTOFF = 1e-15


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")


def y_tail(p: float, m: int) -> float:
    """P{Y_1 > m}."""
    _check_p(p)
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    return (1.0 - p) ** ((m + 1) ** 2 - 1)


def y_pmf(p: float, k: int) -> float:
    if k < 1:
        return 0.0
    return y_tail(p, k - 1) - y_tail(p, k)


def _series(p: float, weight) -> float:
    # terms are weight(k) * P{Y_1 = k}; the tail past the cutoff is bounded by
    # a geometric series with ratio (1-p)^(2k+3) < 1e-3 once terms are tiny
    total = 0.0
    k = 1
    while True:
        term = weight(k) * y_pmf(p, k)
        total += term
        if k > 1 and term < TERM_CUTOFF and y_tail(p, k) * weight(k + 1) < TERM_CUTOFF:
            return total
        k += 1


def gamma_exact(p: float) -> float:
    """E[Y_1] = sum over m >= 0 of P{Y_1 > m}."""
    _check_p(p)
    total = 0.0
    m = 0
    while True:
        term = y_tail(p, m)
        total += term
        if term < TERM_CUTOFF:
            return total
        m += 1


def sigma2_exact(p: float) -> float:
    """Var(X_1) = E[Y_1 (Y_1 + 1)] / 3."""
    _check_p(p)
    return _series(p, lambda k: k * (k + 1) / 3.0)


def series_remainder_bound(p: float, m: int) -> float:
    """Bound on sum_{j > m} P{Y_1 > j} (the truncation error of gamma at m)."""
    q = 1.0 - p
    first = q ** ((m + 2) ** 2 - 1)
    ratio = q ** (2 * m + 5)
    return first / (1.0 - ratio)


def x_given_y(p: float, k: int) -> np.ndarray:
    """Law of X_1 given Y_1 = k, as masses on -k..k (uniform)."""
    _check_p(p)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return np.full(2 * k + 1, 1.0 / (2 * k + 1))


@dataclass(frozen=True)
class IncrementLaw:
    p: float

    def tail(self, m: int) -> float:
        return y_tail(self.p, m)

    def pmf(self, k: int) -> float:
        return y_pmf(self.p, k)

    def conditional(self, k: int) -> np.ndarray:
        return x_given_y(self.p, k)

    def joint_pmf(self, x: int, k: int) -> float:
        if k < 1 or abs(x) > k:
            return 0.0
        return self.pmf(k) / (2 * k + 1)

    @property
    def gamma(self) -> float:
        return gamma_exact(self.p)

    @property
    def sigma2(self) -> float:
        return sigma2_exact(self.p)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)
