"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Seeds and sample sizes are fixed up front (base seed 2026).  Run with
``pytest tests/test_acceptance.py -s`` to see the lines as they are produced;
they are also collected in the terminal summary.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats as sps

from drainage.analytic import gamma_exact, sigma2_exact, x_given_y, y_tail
from drainage.cli import split_payload
from drainage.dynamics import SearchExceeded, check_planarity, first_increments, successor
from drainage.env import HashEnvironment, ModelParams
from drainage.stats import (
    ScalingParams,
    alpha_estimate,
    coalescence_survival,
    estimate_scaling,
    eta_estimate,
    lyapunov_drift,
    martingale_drift,
    nu_regression,
    power_law_fit,
    ratio_interval,
    regeneration_tails,
    rescaled_endpoint_sample,
)
from drainage.treescan import pair_survival
from oracles import brute_successor, pattern_conditional_law

SEED = 2026


def test_c01_increment_tail(acceptance_report):
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for i, p in enumerate((0.25, 0.5, 0.75)):
        _, ys = first_increments(ModelParams(p=p, seed=SEED + i), 10**6)
        for m in range(5):
            q = y_tail(p, m)
            emp = float((ys > m).mean())
            se = math.sqrt(q * (1 - q) / ys.size)
            if se == 0:
                good = emp == q
                z = 0.0
            else:
                z = abs(emp - q) / se
                good = z <= 3
            worst = max(worst, z)
            ok &= good
    wall = time.perf_counter() - t0
    ok &= wall < 60
    assert acceptance_report(1, ok, f"max |z| = {worst:.2f} over 15 cells, {wall:.1f}s")


def test_c02_conditional_law(acceptance_report):
    dev = 0.0
    for p in (0.3, 0.5, 0.7):
        for k in range(1, 5):
            dev = max(dev, float(np.max(np.abs(x_given_y(p, k) - pattern_conditional_law(p, k)))))
    pmin = 1.0
    for i, p in enumerate((0.3, 0.5, 0.7)):
        xs, ys = first_increments(ModelParams(p=p, seed=SEED + 10 + i), 10**6)
        for k in range(1, 4):
            sel = xs[ys == k]
            obs = np.bincount(sel + k, minlength=2 * k + 1)
            pmin = min(pmin, float(sps.chisquare(obs).pvalue))
    ok = dev < 1e-12 and pmin > 0.01
    assert acceptance_report(2, ok, f"max oracle deviation {dev:.1e}, min chi-square p {pmin:.3f}")


def test_c03_scaling_constants(acceptance_report):
    est = estimate_scaling(ModelParams(p=0.5, seed=SEED), 10**6)
    g, s = gamma_exact(0.5), math.sqrt(sigma2_exact(0.5))
    zg = abs(est.gamma.value - g) / est.gamma.se
    zs = abs(est.sigma.value - s) / est.sigma.se
    ok = zg <= 3 and zs <= 3
    assert acceptance_report(
        3, ok,
        f"gamma {est.gamma.value:.5f} vs {g:.5f} (z={zg:.2f}); "
        f"sigma {est.sigma.value:.5f} vs {s:.5f} (z={zs:.2f})",
    )


def test_c04_successor_oracle(acceptance_report):
    rng = np.random.default_rng(SEED)
    limits = {2: 20, 3: 8, 4: 5}
    mismatches = 0
    exceeded = 0
    for _ in range(10**4):
        d = int(rng.choice([2, 2, 3, 4]))
        p = float(rng.uniform(0.15, 0.95))
        seed = int(rng.integers(0, 2**63))
        u = tuple(int(c) for c in rng.integers(-10**6, 10**6, size=d))
        params = ModelParams(d=d, p=p, seed=seed, max_search_height=limits[d])
        expect = brute_successor(HashEnvironment(params).uniform, p, u, limits[d])
        try:
            got = successor(params, u).next
        except SearchExceeded:
            got = None
        exceeded += expect is None
        mismatches += got != expect
    assert acceptance_report(4, mismatches == 0, f"{mismatches} mismatches in 10^4 cases ({exceeded} exceed)")


def test_c05_planarity(acceptance_report):
    crossings = shared = edges = 0
    for i, p in enumerate((0.3, 0.5, 0.7)):
        rep = check_planarity(ModelParams(p=p, seed=SEED + i), (0, 0, 50, 50), seeds=100)
        crossings += rep.crossings
        shared += rep.shared_level_violations
        edges += rep.edges
    ok = crossings == 0 and shared == 0
    assert acceptance_report(5, ok, f"{crossings} crossings, {shared} shared-level faults over {edges} edges")


def test_c06_regeneration_tails(acceptance_report):
    fs, ft, smp = regeneration_tails(ModelParams(p=0.5, seed=SEED), N=10**5)
    ok = fs.r2 >= 0.98 and ft.r2 >= 0.98
    assert acceptance_report(
        6, ok,
        f"R^2 sigma {fs.r2:.4f} (rate {fs.rate:.3f}), R^2 dT {ft.r2:.4f} (rate {ft.rate:.3f}), "
        f"{smp.sigma.size} renewals",
    )


def test_c07_martingale(acceptance_report):
    bins = martingale_drift(ModelParams(p=0.5, seed=SEED), N=10**5)
    zero = bins[0]
    rest = bins[1:]
    populated = all(b.count >= 1000 for b in rest)
    covers = all(b.covers_zero() for b in rest)
    exact_zero = zero.count > 0 and zero.mean == 0.0 and zero.second_moment == 0.0
    ok = populated and covers and exact_zero
    worst = max(abs(b.mean) / b.se for b in rest)
    assert acceptance_report(
        7, ok,
        f"{len(rest)} bins, min count {min(b.count for b in rest)}, max |mean|/se {worst:.2f}, "
        f"gap-0 bin mean {zero.mean} over {zero.count}",
    )


def test_c08_coalescence_exponent(acceptance_report):
    t0 = time.perf_counter()
    params = ModelParams(p=0.5, seed=SEED)
    grid = np.round(np.logspace(2, 4, 9))
    c1 = coalescence_survival(params, 1, grid, 10**5)
    fit = power_law_fit(c1.t, c1.survival, c1.N)
    at = []
    for x in (1, 2, 4, 8):
        c = coalescence_survival(params, x, [1000], 10**5)
        at.append(float(c.survival[0]))
    monotone = all(a <= b for a, b in zip(at, at[1:]))
    ratio = at[3] / at[0]
    wall = time.perf_counter() - t0
    ok = -0.65 <= fit.exponent <= -0.35 and monotone and ratio <= 12 and wall < 600
    assert acceptance_report(
        8, ok,
        f"exponent {fit.exponent:.3f} (R^2 {fit.r2:.4f}); S(1000) by x: "
        + ", ".join(f"{v:.4f}" for v in at) + f"; ratio {ratio:.2f}; {wall:.1f}s",
    )


def test_c09_donsker(acceptance_report):
    s = ScalingParams.exact(0.5, 100)
    e = rescaled_endpoint_sample(ModelParams(p=0.5, seed=SEED), s, 10**4)
    ks = sps.kstest(e, "norm").pvalue
    m, se = e.mean(), e.std(ddof=1) / math.sqrt(e.size)
    z = sps.norm.ppf(0.995)
    var = e.var(ddof=1)
    ok = ks > 0.01 and abs(m) <= z * se and 0.9 <= var <= 1.1
    assert acceptance_report(9, ok, f"KS p {ks:.3f}, mean {m:.4f} (99% half-width {z * se:.4f}), var {var:.4f}")


def test_c10_eta_shape(acceptance_report):
    s = ScalingParams.exact(0.5, 100)
    a = eta_estimate(ModelParams(p=0.5, seed=SEED), s, 1.0, 0.5, 10**4)
    b = eta_estimate(ModelParams(p=0.5, seed=SEED + 1), s, 1.0, 0.25, 10**4)
    r2, lo2, hi2 = ratio_interval(a.prob_ge2, b.prob_ge2)
    r3, lo3, hi3 = ratio_interval(a.prob_ge3, b.prob_ge3)
    ok2 = lo2 <= 2 <= hi2
    ok3 = lo3 <= 4 <= hi3
    assert acceptance_report(
        10, ok2 and ok3,
        f"P(eta>=2) {a.prob_ge2.value:.4f}/{b.prob_ge2.value:.4f} ratio {r2:.2f} [{lo2:.2f}, {hi2:.2f}] "
        f"({'ok' if ok2 else 'excludes 2'}); P(eta>=3) {a.prob_ge3.value:.4f}/{b.prob_ge3.value:.4f} "
        f"ratio {r3:.2f} [{lo3:.2f}, {hi3:.2f}] ({'ok' if ok3 else 'excludes 4'})",
    )


def test_c11_triple_collisions(acceptance_report):
    p = 0.5
    reg = nu_regression(ModelParams(p=p, seed=SEED), N=10**4, level=0.95)
    t1 = np.concatenate([smp.T1 for smp in reg.samples]).astype(float)
    t1_mean = t1.mean()
    t1_lo = t1_mean - sps.norm.ppf(0.975) * t1.std(ddof=1) / math.sqrt(t1.size)
    geo = 1 / p**3
    ok_n = reg.n_fit.at_most_linear
    ok_nu = reg.nu_fit.at_most_linear
    ok_t1 = t1_lo <= geo
    assert acceptance_report(
        11, ok_n and ok_nu and ok_t1,
        f"quad term n {reg.n_fit.quad:.2e} [{reg.n_fit.quad_lo:.2e}, {reg.n_fit.quad_hi:.2e}], "
        f"nu {reg.nu_fit.quad:.2e} [{reg.nu_fit.quad_lo:.2e}, {reg.nu_fit.quad_hi:.2e}]; "
        f"nu means " + ", ".join(f"{m:.2f}" for m in reg.nu_fit.means)
        + f"; T1 mean {t1_mean:.3f} vs geometric {geo:.1f}",
    )


def test_c12_d3_drift(acceptance_report):
    params = ModelParams(d=3, p=0.5, seed=SEED)
    parts = []
    ok = True
    for x in ((20, 0), (40, 0)):
        est = lyapunov_drift(params, x, 10**5)
        ok &= est.reduced.hi <= 0 and est.mean_step.contains(0.0)
        parts.append(
            f"x={x[0]}: drift hi {est.reduced.hi:.2e} (plain {est.plain.hi:.2e})"
        )
    alphas = [alpha_estimate(params, (r, 0), 10**5) for r in (10, 20, 40)]
    nonneg = all(a.alpha.hi >= 0 and a.alpha.value >= 0 for a in alphas)
    overlap = max(a.alpha.lo for a in alphas) <= min(a.alpha.hi for a in alphas)
    ok &= nonneg and overlap
    parts.append(
        "alpha " + ", ".join(f"{a.alpha.value:.3f} [{a.alpha.lo:.3f}, {a.alpha.hi:.3f}]" for a in alphas)
    )
    assert acceptance_report(12, ok, "; ".join(parts))


def test_c13_tree_probes(acceptance_report):
    d2 = pair_survival(ModelParams(d=2, p=0.5, seed=SEED), 10, 10**6, 1000)
    d4 = pair_survival(ModelParams(d=4, p=0.5, seed=SEED), 10, 10**4, 1000, level=0.99)
    coalesced = 1 - d2.fraction
    ok = coalesced >= 0.99 and d4.survived.lo > 0
    assert acceptance_report(
        13, ok,
        f"d=2 coalesced {coalesced:.3f}; d=4 survived {d4.fraction:.3f} "
        f"[{d4.survived.lo:.3f}, {d4.survived.hi:.3f}]",
    )


CLI_RUNS = {
    "trace": ["--height", "500"],
    "regen": ["--gap", "4", "--n-replicates", "200"],
    "coalesce": ["--n-replicates", "2000"],
    "triple": ["--n-replicates", "500", "--t-cap", "100000"],
    "scaling": ["--n-replicates", "5000", "--n-scale", "30"],
    "eta": ["--n-replicates", "1000", "--n-scale", "30"],
    "treescan": ["--n-replicates", "200", "--height", "1000"],
    "exact": [],
}


def _cli(args, threads, tmp_path, tag):
    out = tmp_path / f"{tag}.out"
    env = dict(os.environ, NUMBA_NUM_THREADS="4")
    res = subprocess.run(
        [sys.executable, "-m", "drainage.cli", *args, "--threads", str(threads),
         "--out", str(out), "--overwrite"],
        env=env, capture_output=True, text=True,
    )
    return res.returncode, out.read_text() if out.exists() else ""


def test_c14_determinism(acceptance_report, tmp_path):
    bad = []
    for name, extra in CLI_RUNS.items():
        args = [name, "--seed", str(SEED)] + extra
        results = [_cli(args, th, tmp_path, f"{name}{k}") for k, th in enumerate((1, 4, 1))]
        codes = {c for c, _ in results}
        payloads = {split_payload(t) for _, t in results}
        if codes != {0} or len(payloads) != 1 or not next(iter(payloads)):
            bad.append(name)
    ok = not bad
    assert acceptance_report(
        14, ok, f"{len(CLI_RUNS)} commands x threads (1, 4, 1): " + ("identical" if ok else f"differ: {bad}")
    )
