"""Acceptance criteria, one test each, each printing a PASS/FAIL line with its measurement.

Bands and sample sizes are fixed here and never tuned to the results.
Criteria 5 to 8 run full simulation studies and take several minutes.
"""
import statistics
import time

import numpy as np
import pytest

from tbm.estimation import MONOTONE_ATOL, FitConfig, Penalty, fit, kmeans_init, sparse_block_mean
from tbm.estimation import sweep, update_core
from tbm.harness import bic_table, scaling_suite, sparse_table
from tbm.metrics import mcr, rmse
from tbm.model import BlockModel
from tbm.simulate import SimConfig, gen_data

from oracles import exhaustive_optimum


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        status = "SUBSTITUTED" if ok is None else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {status}: {detail}", flush=True)
    return emit


def test_criterion_01_oracle_optimality(report):
    t0 = time.perf_counter()
    attained, below = 0, 0
    for i in range(50):
        sigma = 0.0 if i % 2 == 0 else 1.0
        sim = gen_data(SimConfig((4, 4, 4), (2, 2, 2), sigma=sigma, seed=1000 + i))
        best = exhaustive_optimum(sim.y.array, (2, 2, 2))
        res = fit(sim.y, FitConfig((2, 2, 2), restarts=20, seed=i))
        diff = res.objective - best
        attained += abs(diff) < 1e-9
        below += diff < -1e-9
    elapsed = time.perf_counter() - t0
    ok = attained >= 45 and below == 0 and elapsed < 60
    report(1, ok, f"global optimum attained in {attained}/50 (need >= 45), "
                  f"{below} below the oracle, {elapsed:.1f} s (limit 60 s)")
    assert ok


def test_criterion_02_monotone_objective(report):
    worst = -np.inf
    fits = 0
    for seed in range(30):
        dims = (8 + seed % 5, 9, 7 + seed % 3)
        ranks = (2 + seed % 3, 2, 2 + seed % 2)
        sigma = (0.5, 2.0, 5.0)[seed % 3]
        sim = gen_data(SimConfig(dims, ranks, sigma=sigma, seed=seed))
        res = fit(sim.y, FitConfig(ranks, restarts=3, seed=seed, check_steps=True))
        fits += 1
        for trace in (res.objective_trace, res.step_trace):
            steps = np.diff(trace)
            if steps.size:
                worst = max(worst, float(steps.max()))
    ok = worst <= MONOTONE_ATOL
    report(2, ok, f"largest step increase over {fits} fits = {worst:.3g} (limit 1e-9); "
                  "fit() also raises on any violation")
    assert ok


def test_criterion_03_noiseless_exactness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    failures = 0
    worst_rmse = 0.0
    for seed in range(100):
        ranks = tuple(int(r) for r in rng.integers(2, 5, size=3))
        dims = tuple(int(d) for d in rng.integers(8, 16, size=3))
        sim = gen_data(SimConfig(dims, ranks, sigma=0.0, seed=seed))
        res = fit(sim.y, FitConfig(ranks, seed=seed))
        err = rmse(sim.theta_true, res.mean())
        worst_rmse = max(worst_rmse, err)
        if err >= 1e-12 or any(mcr(t, e) != 0 for t, e in
                               zip(sim.truth.memberships, res.model.memberships)):
            failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10
    report(3, ok, f"{100 - failures}/100 exact (MCR 0, max RMSE {worst_rmse:.2g} < 1e-12), "
                  f"{elapsed:.1f} s (limit 10 s)")
    assert ok


def test_criterion_04_sparse_closed_form(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    step = 1e-4
    bad = 0
    for _ in range(1000):
        c_ols = float(rng.uniform(-5, 5))
        n = int(rng.integers(1, 1000))
        lam = float(10 ** rng.uniform(-2, 4))
        rho = int(rng.integers(0, 2))
        penalty = Penalty("l0" if rho == 0 else "l1", lam)
        c = float(sparse_block_mean(np.array([c_ols]), n, penalty)[0])
        lo, hi = min(c_ols, 0.0) - 1.0, max(c_ols, 0.0) + 1.0
        grid = np.arange(np.floor(lo / step), np.ceil(hi / step) + 1) * step
        pen = (grid != 0) if rho == 0 else np.abs(grid)
        vals = n * (grid - c_ols) ** 2 + lam * pen
        j = int(np.argmin(vals))
        f_c = n * (c - c_ols) ** 2 + lam * ((c != 0) if rho == 0 else abs(c))
        tol = 1e-9 * max(1.0, abs(vals[j]))
        # the closed form must do at least as well as the grid, and sit within one step
        # of the grid minimiser unless two branches tie
        near = abs(c - grid[j]) <= step + 1e-12
        tie = abs(f_c - vals[j]) <= n * step ** 2 + tol
        if not (f_c <= vals[j] + tol and (near or tie)):
            bad += 1
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10
    report(4, ok, f"{1000 - bad}/1000 closed-form updates minimise the grid objective, "
                  f"{elapsed:.1f} s (limit 10 s)")
    assert ok


@pytest.mark.slow
def test_criterion_05_bic_recovery_low_noise(report):
    rows = bic_table(settings=(((40, 40, 40), (4, 4, 4), 4.0),), sims=20, seed=0)
    sims = [r for r in rows if r["kind"] == "sim"]
    exact = sum((r["R1"], r["R2"], r["R3"]) == (4.0, 4.0, 4.0) for r in sims)
    ok = exact >= 18
    report(5, ok, f"(4,4,4) selected in {exact}/20 sims at sigma=4 (need >= 18)")
    assert ok


@pytest.mark.slow
def test_criterion_06_bic_under_selection_high_noise(report):
    rows = bic_table(settings=(((40, 40, 40), (4, 4, 4), 12.0),), sims=20, seed=0)
    summary = rows[-1]
    means = [summary[f"R{k}"] for k in (1, 2, 3)]
    ok = all(2.6 <= m <= 3.7 for m in means)
    report(6, ok, "mean selected ranks at sigma=12 = ("
                  + ", ".join(f"{m:.2f}" for m in means) + "), band [2.6, 3.7] per mode")
    assert ok


@pytest.mark.slow
def test_criterion_07_sparse_recovery(report):
    rows = sparse_table(settings=((0.5, 4.0),), sims=20, seed=0)
    s = rows[-1]
    ok = (0.47 <= s["est_sparsity"] <= 0.63 and s["correct_zero_rate"] >= 0.96
          and s["sparsity_error_rate"] <= 0.12)
    report(7, ok, f"sparsity {s['est_sparsity']:.3f} in [0.47, 0.63], "
                  f"correct zeros {s['correct_zero_rate']:.3f} >= 0.96, "
                  f"error {s['sparsity_error_rate']:.3f} <= 0.12 "
                  f"(mean lambda {s['lambda']:.1f})")
    assert ok


def _interp_loglog(x_ref, y_ref, x):
    return float(np.exp(np.interp(np.log(x), np.log(x_ref), np.log(y_ref))))


@pytest.mark.slow
def test_criterion_08_rmse_scaling(report):
    rows = scaling_suite(3, d1_values=(20, 30, 40, 50), rank_sets=((2, 2, 2), (4, 4, 4)),
                         sigma=3.0, sims=10, seed=0)
    slopes = {r["ranks"]: r["rmse"] for r in rows if r["kind"] == "slope"}
    pts = {}
    for r in rows:
        if r["kind"] == "summary":
            pts.setdefault(r["ranks"], []).append((r["N"], r["rmse"]))
    low, high = sorted(pts[(2, 2, 2)]), sorted(pts[(4, 4, 4)])
    # the two curves are sampled at different N_1, so compare on their common range
    lo_n, hi_n = max(low[0][0], high[0][0]), min(low[-1][0], high[-1][0])
    shared = [(n, v) for n, v in high if lo_n <= n <= hi_n]
    above = all(v > _interp_loglog([p[0] for p in low], [p[1] for p in low], n)
                for n, v in shared)
    slope = slopes[(2, 2, 2)]
    ok = -1.25 <= slope <= -0.75 and above and len(shared) > 0
    report(8, ok, f"log-log slope for R=(2,2,2) = {slope:.3f} (band [-1.25, -0.75]); "
                  f"R=(4,4,4) slope {slopes[(4, 4, 4)]:.3f}; "
                  f"R=(4,4,4) above R=(2,2,2) at all {len(shared)} shared N_1: {above}")
    assert ok


def _sweep_seconds(dims, ranks, repeats=5):
    sim = gen_data(SimConfig(dims, ranks, sigma=3.0, seed=1))
    y = sim.y.array
    mems = kmeans_init(y, ranks, 0)
    model = BlockModel(update_core(y, mems), mems)
    sweep(y, model)  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        sweep(y, model)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def test_criterion_09_linear_sweep_cost(report):
    small = _sweep_seconds((40, 40, 40), (4, 4, 4))
    large = _sweep_seconds((40, 40, 80), (4, 4, 4))
    ratio = large / small
    ok = ratio <= 2.3
    report(9, ok, f"median sweep time {large * 1e3:.2f} ms at 40x40x80 vs "
                  f"{small * 1e3:.2f} ms at 40x40x40, ratio {ratio:.2f} (limit 2.3)")
    assert ok


def test_criterion_10_substituted(report):
    with_invariants = ("MCR/CER permutation invariance, confusion marginals and the "
                       "identifiability property run in test_metrics.py and test_model.py")
    report(10, None, "baseline comparisons and real-data tables are not reproducible here; "
                     "substituted by criteria 1-9 plus module invariants (" + with_invariants + ")")
