"""Estimators for the scaling constants, renewal tails, coalescence times,
eta counts, the d=3 drift and the triple-collision regressions.

Every estimator is a deterministic function of ``params.seed``: replicate
``i`` always runs in the environment of ``params.replicate(i)`` (or the
equivalent compiled derivation), so results do not depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats as st

from . import _kernels as K
from .dynamics import SearchExceeded, first_increments
from .env import INDEPENDENT_SALT, DimensionError, ModelParams, Point, is_open


def _z(level: float) -> float:
    return float(st.norm.ppf(0.5 + level / 2.0))


def _raise_if_exceeded(status: np.ndarray | int) -> None:
    if np.any(np.asarray(status) != K.OK):
        raise SearchExceeded("successor scan ran past max_search_height")


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    lo: float
    hi: float
    n: int
    level: float = 0.99

    @classmethod
    def of_mean(cls, sample, level: float = 0.99) -> "Estimate":
        x = np.asarray(sample, dtype=np.float64)
        n = x.size
        m = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        z = _z(level)
        return cls(m, se, m - z * se, m + z * se, n, level)

    @classmethod
    def from_se(cls, value: float, se: float, n: int, level: float = 0.99) -> "Estimate":
        z = _z(level)
        return cls(value, se, value - z * se, value + z * se, n, level)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = _z(level)
    ph = k / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class Proportion:
    k: int
    n: int
    lo: float
    hi: float

    @property
    def value(self) -> float:
        return self.k / self.n if self.n else 0.0

    @property
    def se(self) -> float:
        v = self.value
        return math.sqrt(v * (1 - v) / self.n) if self.n else math.inf

    @classmethod
    def of(cls, k: int, n: int, level: float = 0.95) -> "Proportion":
        lo, hi = wilson(k, n, level)
        return cls(int(k), int(n), lo, hi)


# -- scaling constants -------------------------------------------------------


@dataclass(frozen=True)
class ScalingParams:
    sigma: float
    gamma: float
    n: int = 1

    def __post_init__(self):
        if not (self.sigma > 0 and self.gamma > 0 and math.isfinite(self.sigma + self.gamma)):
            raise ValueError("sigma and gamma must be finite and positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @classmethod
    def exact(cls, p: float, n: int = 1) -> "ScalingParams":
        from .analytic import gamma_exact, sigma2_exact

        return cls(math.sqrt(sigma2_exact(p)), gamma_exact(p), n)


@dataclass(frozen=True)
class ScalingEstimate:
    gamma: Estimate
    sigma2: Estimate
    sigma: Estimate
    x_mean: Estimate


def estimate_scaling(params: ModelParams, N: int, level: float = 0.99) -> ScalingEstimate:
    """gamma_hat = mean of Y_1, sigma_hat = sd of X_1, over N replicate first steps."""
    if N < 1000:
        raise ValueError("estimate_scaling needs N >= 1000")
    xs, ys = first_increments(params, N)
    x = xs.astype(np.float64)
    s2 = float(x.var(ddof=1))
    m4 = float(((x - x.mean()) ** 4).mean())
    se2 = math.sqrt(max(m4 - s2 * s2, 0.0) / N)
    s = math.sqrt(s2)
    return ScalingEstimate(
        gamma=Estimate.of_mean(ys, level),
        sigma2=Estimate.from_se(s2, se2, N, level),
        sigma=Estimate.from_se(s, se2 / (2 * s), N, level),
        x_mean=Estimate.of_mean(x, level),
    )


def rescaled_endpoint_sample(params: ModelParams, scaling: ScalingParams, N: int) -> np.ndarray:
    """pi(n^2 gamma) / (n sigma) for N replicate paths from the origin (d=2)."""
    if params.d != 2:
        raise DimensionError("rescaled endpoints are a d=2 quantity")
    level = scaling.n**2 * scaling.gamma
    if level < 10:
        raise ValueError("need n^2 gamma >= 10 levels")
    pos, status = K.batch_endpoints2(params.seed64, params.p, level, N, params.max_search_height)
    _raise_if_exceeded(status)
    return pos / (scaling.n * scaling.sigma)


def grid_start(
    params: ModelParams, scaling: ScalingParams, x: Sequence[float]
) -> tuple[Point, int]:
    """First open vertex right of (floor(n sigma x1), floor(n^2 gamma x2)); returns (vertex, i_n)."""
    if params.d != 2:
        raise DimensionError("grid_start is a d=2 operation")
    n = scaling.n
    bx = math.floor(n * scaling.sigma * x[0])
    t = math.floor(n * n * scaling.gamma * x[1])
    limit = params.max_search_height**2
    for i in range(1, limit + 1):
        if is_open(params, (bx + i, t)):
            return (bx + i, t), i
    raise SearchExceeded(f"no open vertex within {limit} sites right of {(bx, t)}")


def grid_offset_sample(
    params: ModelParams, scaling: ScalingParams, x: Sequence[float], N: int
) -> np.ndarray:
    return np.array([grid_start(params.replicate(i), scaling, x)[1] for i in range(N)])


# -- eta counts ---------------------------------------------------------------


@dataclass(frozen=True)
class EtaEstimate:
    t0: float
    t: float
    a: float
    b: float
    prob_ge2: Proportion
    prob_ge3: Proportion
    N: int
    width: int
    level: int
    counts: np.ndarray = field(repr=False, compare=False, default=None)


def eta_window(scaling: ScalingParams, epsilon: float) -> int:
    """Unscaled gap between the outermost starts: ceil(n sigma epsilon) + 3."""
    return math.ceil(scaling.n * scaling.sigma * epsilon) + 3


def eta_estimate(
    params: ModelParams,
    scaling: ScalingParams,
    t: float,
    epsilon: float,
    N: int,
    width: int | None = None,
    level: float = 0.95,
) -> EtaEstimate:
    """Distinct positions at scaled time t of paths started on a window at level 0.

    Walkers start at every lattice point 0..width; ``width`` defaults to the
    window above.  Counts of 2 or more and 3 or more get Wilson intervals.
    """
    if params.d != 2:
        raise DimensionError("eta counts are a d=2 quantity")
    w = eta_window(scaling, epsilon) if width is None else width
    lev = int(math.floor(scaling.n**2 * scaling.gamma * t))
    counts, status = K.batch_eta2(params.seed64, params.p, w, lev, N, params.max_search_height)
    _raise_if_exceeded(status)
    k2 = int((counts >= 2).sum())
    k3 = int((counts >= 3).sum())
    return EtaEstimate(
        0.0, t, 0.0, epsilon,
        Proportion.of(k2, N, level), Proportion.of(k3, N, level),
        N, w, lev, counts,
    )


def ratio_interval(a: Proportion, b: Proportion, level: float = 0.95) -> tuple[float, float, float]:
    """a/b with a delta-method interval on the log scale."""
    ra = a.value
    rb = b.value
    if ra == 0 or rb == 0:
        return (math.nan, 0.0, math.inf)
    r = ra / rb
    s = math.sqrt((1 - ra) / (ra * a.n) + (1 - rb) / (rb * b.n))
    z = _z(level)
    return r, r * math.exp(-z * s), r * math.exp(z * s)


# -- renewal samples (d=2 pairs) -----------------------------------------------

DEFAULT_START_GAPS = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64)
DEFAULT_GAP_BINS = ((1, 1), (2, 2), (3, 4), (5, 8), (9, 16), (17, 32), (33, None))


@dataclass
class RenewalSample:
    z_from: np.ndarray
    z_to: np.ndarray
    sigma: np.ndarray
    dT: np.ndarray
    runs: int


def renewal_sample(
    params: ModelParams,
    N: int,
    start_gaps: Sequence[int] = DEFAULT_START_GAPS,
    per_run: int = 1000,
    after_zero: int = 0,
) -> RenewalSample:
    """Pair renewals from a cycle of starting gaps until N renewals are collected.

    Run ``i`` starts from gap ``start_gaps[i % len]`` in replicate environment
    ``i`` and stops after ``per_run`` renewals or ``after_zero`` renewals past
    coalescence.
    """
    if params.d != 2:
        raise DimensionError("renewal_sample is a d=2 operation")
    zf, zt, sg, dt = [], [], [], []
    total = 0
    i = 0
    while total < N:
        gap = start_gaps[i % len(start_gaps)]
        rp = params.replicate(i)
        starts = np.array([0, gap], dtype=np.int64)
        sig, tl, gaps, count, _, status = K.joint_renewals2(
            rp.key64, rp.p, starts, 0, min(per_run, N - total), 1 << 62, after_zero,
            rp.max_search_height,
        )
        _raise_if_exceeded(status)
        z = np.concatenate(([gap], gaps[:count, 0]))
        zf.append(z[:-1])
        zt.append(z[1:])
        sg.append(sig[:count])
        dt.append(np.diff(np.concatenate(([0], tl[:count]))))
        total += count
        i += 1
    return RenewalSample(
        np.concatenate(zf), np.concatenate(zt), np.concatenate(sg), np.concatenate(dt), i
    )


@dataclass(frozen=True)
class TailFit:
    rate: float
    se: float
    intercept: float
    r2: float
    n: int
    censored: int
    points: int


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Weighted least squares of y on [1, x]; returns coefs, their SEs, weighted R^2."""
    X = np.column_stack([np.ones_like(x), x])
    W = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * W[:, None], y * W, rcond=None)
    resid = y - X @ coef
    ybar = np.sum(w * y) / np.sum(w)
    ss_res = float(np.sum(w * resid**2))
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    dof = max(len(x) - 2, 1)
    cov = np.linalg.inv(X.T @ (X * w[:, None])) * (ss_res / dof)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return coef, np.sqrt(np.diag(cov)), r2


def exponential_tail_fit(sample: np.ndarray, censored: int = 0) -> TailFit:
    """Fit log P{X >= m} = c - rate * m over the support where 0 < S(m) < 1.

    Weights are the inverse binomial variance of log S(m).
    """
    x = np.asarray(sample, dtype=np.int64)
    n = x.size + censored
    ms = np.arange(x.min(), x.max() + 1)
    counts = np.bincount(x - x.min(), minlength=ms.size)
    # S(m) = P{X >= m}; censored values count as >= every observed m
    ge = np.cumsum(counts[::-1])[::-1] + censored
    S = ge / n
    keep = (S > 0) & (S < 1)
    m, s = ms[keep].astype(np.float64), S[keep]
    w = n * s / (1 - s)
    coef, se, r2 = _wls(m, np.log(s), w)
    return TailFit(-coef[1], se[1], coef[0], r2, x.size, censored, int(keep.sum()))


@dataclass(frozen=True)
class DriftBin:
    lo: int
    hi: int | None
    count: int
    mean: float
    se: float
    ci_lo: float
    ci_hi: float
    second_moment: float

    def covers_zero(self) -> bool:
        return self.ci_lo <= 0.0 <= self.ci_hi


def martingale_drift(
    params: ModelParams,
    gap_bins: Sequence[tuple[int, int | None]] = DEFAULT_GAP_BINS,
    N: int = 10**5,
    start_gaps: Sequence[int] = DEFAULT_START_GAPS,
    per_run: int = 20,
    level: float = 0.99,
    include_zero: bool = True,
) -> list[DriftBin]:
    """Mean of Z_{l+1} - Z_l binned by Z_l, over about N pair renewals.

    Short runs (``per_run`` renewals) from a spread of starting gaps keep every
    bin populated.  Each run continues for one renewal past coalescence, which
    feeds the absorbed (gap 0) bin with genuine transitions of the merged pair.
    """
    smp = renewal_sample(params, N, start_gaps, per_run, after_zero=1)
    inc = (smp.z_to - smp.z_from).astype(np.float64)
    bins = ([(0, 0)] if include_zero else []) + list(gap_bins)
    z = _z(level)
    out = []
    for lo, hi in bins:
        sel = smp.z_from >= lo
        if hi is not None:
            sel &= smp.z_from <= hi
        d = inc[sel]
        c = int(d.size)
        if c == 0:
            out.append(DriftBin(lo, hi, 0, math.nan, math.nan, math.nan, math.nan, math.nan))
            continue
        m = float(d.mean())
        se = float(d.std(ddof=1) / math.sqrt(c)) if c > 1 else math.inf
        out.append(DriftBin(lo, hi, c, m, se, m - z * se, m + z * se, float((d * d).mean())))
    return out


def regeneration_tails(
    params: ModelParams, N: int = 10**5, start_gaps: Sequence[int] = DEFAULT_START_GAPS
) -> tuple[TailFit, TailFit, RenewalSample]:
    """Exponential-tail fits for sigma_l and T_{l+1} - T_l of the pair process."""
    smp = renewal_sample(params, N, start_gaps, after_zero=0)
    return exponential_tail_fit(smp.sigma), exponential_tail_fit(smp.dT), smp


# -- coalescence times ---------------------------------------------------------


@dataclass(frozen=True)
class SurvivalCurve:
    x: int
    t: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    N: int
    censored: int
    t_cap: int


def coalescence_times(
    params: ModelParams, x: int, N: int, t_cap: int
) -> tuple[np.ndarray, np.ndarray]:
    """(T at coalescence, capped flag) for N pair runs from gap x (d=2)."""
    if params.d != 2:
        raise DimensionError("coalescence times are a d=2 quantity")
    _, tt, capped, status = K.batch_pair_coalesce2(
        params.seed64, params.p, x, t_cap, N, params.max_search_height
    )
    _raise_if_exceeded(status)
    return tt, capped


def coalescence_survival(
    params: ModelParams, x: int, t_grid: Sequence[float], N: int, t_cap: int | None = None
) -> SurvivalCurve:
    """P{T_n > t} on ``t_grid``; capped runs count as surviving (censored above t_cap)."""
    t = np.asarray(t_grid, dtype=np.float64)
    cap = int(t.max()) if t_cap is None else t_cap
    if cap < t.max():
        raise ValueError("t_cap must be at least the largest grid time")
    tt, capped = coalescence_times(params, x, N, cap)
    alive = np.array([np.count_nonzero(capped | (tt > ti)) for ti in t])
    s = alive / N
    return SurvivalCurve(x, t, s, np.sqrt(s * (1 - s) / N), N, int(capped.sum()), cap)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    se: float
    intercept: float
    r2: float
    points: int


def power_law_fit(t: np.ndarray, s: np.ndarray, N: int) -> PowerLawFit:
    """Weighted least squares of log S on log t (weights: inverse variance of log S)."""
    keep = (s > 0) & (s < 1)
    lt = np.log(np.asarray(t, dtype=np.float64)[keep])
    ls = np.log(s[keep])
    w = N * s[keep] / (1 - s[keep])
    coef, se, r2 = _wls(lt, ls, w)
    return PowerLawFit(coef[1], se[1], coef[0], r2, int(keep.sum()))


# -- d >= 3 -------------------------------------------------------------------


def lyapunov_f(z: np.ndarray) -> np.ndarray:
    """f(x) = sqrt(log(1 + |x|^2))."""
    z = np.asarray(z, dtype=np.float64)
    return np.sqrt(np.log1p((z * z).sum(axis=-1)))


@dataclass(frozen=True)
class LyapunovEstimate:
    x: tuple[int, ...]
    plain: Estimate
    reduced: Estimate
    mean_step: Estimate


def one_renewal_gaps(params: ModelParams, x: Sequence[int], N: int) -> np.ndarray:
    """Z_1 for N joint pair runs from u=(x,0), v=0, in replicate environments."""
    gap = np.asarray(x, dtype=np.int64)
    if gap.size != params.d - 1:
        raise DimensionError(f"gap must have {params.d - 1} coordinates")
    gaps, _, _, _, status = K.batch_pair_nd(
        params.seed64, params.p, params.d, gap, 1, 1 << 62, N, params.max_search_height
    )
    _raise_if_exceeded(status)
    return gaps


def lyapunov_drift(
    params: ModelParams, x: Sequence[int], N: int, level: float = 0.99
) -> LyapunovEstimate:
    """E[f(Z_1)] - f(x) over one renewal of the joint pair.

    ``plain`` averages f(Z_1) - f(x).  ``reduced`` subtracts the linear term
    grad f(x) . (Z_1 - x), whose mean is zero when the gap increment has mean
    zero; ``mean_step`` reports that increment along x so the premise can be
    checked on the same sample.
    """
    if params.d != 3:
        raise DimensionError("lyapunov_drift is a d=3 estimator")
    x0 = np.asarray(x, dtype=np.float64)
    z1 = one_renewal_gaps(params, x, N).astype(np.float64)
    d = lyapunov_f(z1) - lyapunov_f(x0)
    r2 = float(x0 @ x0)
    grad = x0 / ((1 + r2) * math.sqrt(math.log1p(r2)))
    lin = (z1 - x0) @ grad
    unit = x0 / math.sqrt(r2)
    return LyapunovEstimate(
        tuple(int(v) for v in x),
        Estimate.of_mean(d, level),
        Estimate.of_mean(d - lin, level),
        Estimate.of_mean((z1 - x0) @ unit, level),
    )


@dataclass(frozen=True)
class AlphaEstimate:
    x: tuple[int, ...]
    alpha: Estimate
    alpha_reduced: Estimate
    second_moment: Estimate
    second_moment_bound: float
    third_moment_ratio: Estimate


def independent_first_renewals(
    params: ModelParams, x: Sequence[int], N: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gap = np.asarray(x, dtype=np.int64)
    if gap.size != params.d - 1:
        raise DimensionError(f"gap must have {params.d - 1} coordinates")
    pu, pv, t1, status = K.batch_indep_first_nd(
        params.seed64, np.uint64(INDEPENDENT_SALT), params.p, params.d, gap, N,
        params.max_search_height,
    )
    _raise_if_exceeded(status)
    return pu, pv, t1


def alpha_estimate(
    params: ModelParams, x: Sequence[int], N: int, level: float = 0.99
) -> AlphaEstimate:
    """Squared-norm change over one simultaneous renewal of independent paths.

    ``alpha`` is the plain mean of |x + psi_u - psi_v|^2 - |x|^2.
    ``alpha_reduced`` is the mean of |psi_u - psi_v|^2, which has the same
    expectation because each psi is symmetric given the renewal level.
    """
    if params.d != 3:
        raise DimensionError("alpha_estimate is a d=3 estimator")
    x0 = np.asarray(x, dtype=np.float64)
    pu, pv, _ = independent_first_renewals(params, x, N)
    delta = (pu - pv).astype(np.float64)
    z1 = x0 + delta
    nx2 = float(x0 @ x0)
    w = (z1 * z1).sum(axis=1) - nx2
    a = Estimate.of_mean(w, level)
    ar = Estimate.of_mean((delta * delta).sum(axis=1), level)
    return AlphaEstimate(
        tuple(int(v) for v in x),
        a,
        ar,
        Estimate.of_mean(w * w, level),
        2 * ar.value * nx2,
        Estimate.of_mean(w**3 / nx2, level),
    )


# -- triples -------------------------------------------------------------------


@dataclass
class TripleSample:
    gaps: tuple[int, int, int]
    n: np.ndarray
    nu: np.ndarray
    T1: np.ndarray
    Tn: np.ndarray
    capped: np.ndarray

    @property
    def product(self) -> int:
        x, y, z = self.gaps
        return (y - x) * (z - y)


def triple_sample(
    params: ModelParams, x: int, y: int, z: int, N: int, t_cap: int = 10**6
) -> TripleSample:
    if params.d != 2:
        raise DimensionError("triple collisions are a d=2 quantity")
    nn, tn, t1, nu, capped, status = K.batch_triple2(
        params.seed64, params.p, x, y, z, t_cap, N, params.max_search_height
    )
    _raise_if_exceeded(status)
    # a capped run with no meeting yet is a lower bound at the cap
    nu = np.where(nu < 0, tn, nu)
    return TripleSample((x, y, z), nn, nu, t1, tn, capped)


def geometric_moment(q: float, m: int) -> float:
    """E[B^m] for B geometric on {1, 2, ...} with success probability q, m <= 3."""
    if m == 1:
        return 1 / q
    if m == 2:
        return (2 - q) / q**2
    if m == 3:
        return (q * q - 6 * q + 6) / q**3
    raise ValueError("moments 1..3 only")


@dataclass(frozen=True)
class QuadraticCheck:
    products: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    slope: float
    intercept: float
    r2: float
    quad: float
    quad_se: float
    quad_lo: float
    quad_hi: float

    @property
    def at_most_linear(self) -> bool:
        """The interval for the quadratic term contains 0 or lies below it."""
        return self.quad_lo <= 0.0


def _quadratic_check(products, means, ses, level: float) -> QuadraticCheck:
    P = np.asarray(products, dtype=np.float64)
    y = np.asarray(means, dtype=np.float64)
    s = np.asarray(ses, dtype=np.float64)
    w = 1 / s**2
    lin, _, r2 = _wls(P, y, w)
    X = np.column_stack([np.ones_like(P), P, P * P])
    cov = np.linalg.inv(X.T @ (X * w[:, None]))
    coef = cov @ (X.T @ (w * y))
    qse = math.sqrt(cov[2, 2])
    z = _z(level)
    return QuadraticCheck(
        P, y, s, lin[1], lin[0], r2, coef[2], qse, coef[2] - z * qse, coef[2] + z * qse
    )


@dataclass(frozen=True)
class TripleRegression:
    samples: list[TripleSample]
    n_fit: QuadraticCheck
    nu_fit: QuadraticCheck


def nu_regression(
    params: ModelParams,
    triples: Sequence[tuple[int, int, int]] = ((0, 1, 2), (0, 2, 4), (0, 4, 8), (0, 8, 16)),
    N: int = 10**4,
    t_cap: int = 10**6,
    level: float = 0.95,
) -> TripleRegression:
    """Mean n and mean nu against the gap product (y-x)(z-y), with a quadratic term check.

    The means carry their own standard errors, so both fits are weighted by
    them and the interval for the quadratic coefficient is z-based.
    """
    samples = [triple_sample(params, *tr, N, t_cap) for tr in triples]
    prods = [s.product for s in samples]

    def summary(attr):
        vals = [getattr(s, attr).astype(np.float64) for s in samples]
        return [v.mean() for v in vals], [v.std(ddof=1) / math.sqrt(v.size) for v in vals]

    mn, sn = summary("n")
    mv, sv = summary("nu")
    return TripleRegression(
        samples, _quadratic_check(prods, mn, sn, level), _quadratic_check(prods, mv, sv, level)
    )


def triple_increment_moments(
    params: ModelParams,
    x: int,
    y: int,
    z: int,
    runs: int,
    moments: Sequence[int] = (1, 2, 3),
    level: float = 0.99,
) -> dict[int, Estimate]:
    """Sample moments of T_l - T_{l-1} for the triple process, up to the first zero gap."""
    incs = []
    starts = np.array([x, y, z], dtype=np.int64)
    for i in range(runs):
        rp = params.replicate(i)
        _, tl, _, count, _, status = K.joint_renewals2(
            rp.key64, rp.p, starts, 0, 1 << 20, 1 << 62, 0, rp.max_search_height
        )
        _raise_if_exceeded(status)
        incs.append(np.diff(np.concatenate(([0], tl[:count]))))
    inc = np.concatenate(incs).astype(np.float64)
    return {m: Estimate.of_mean(inc**m, level) for m in moments}
