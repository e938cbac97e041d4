"""End-to-end acceptance checks; each prints one PASS/FAIL line through the ``criterion`` fixture."""

import math
import time

import numpy as np
import pytest

from subordest import rng as srng
from subordest.cli import main
from subordest.estimators import clamped_inverse_eta, variance_upper_bound
from subordest.harness import ExperimentSpec, run_benchmark, run_pipeline
from subordest.series import decompose_runs, render_series
from subordest.simulate import (
    SimConfig, TimeChangedSeries, outer_levels, sample_standard_stable, simulate_batch,
    simulate_paths, tail_bound_diagnostics,
)
from subordest.special import EstimationFrame, eta

pytestmark = pytest.mark.acceptance

BETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

# reference single-run table, delta=1, T=1e4, n=3000: beta -> (MOM, Cahoy)
TABLE_SINGLE = {
    0.1: (0.1176, 0.1470), 0.2: (0.2070, 0.2233), 0.3: (0.3011, 0.3105),
    0.4: (0.4001, 0.4021), 0.5: (0.5001, 0.4999), 0.6: (0.5997, 0.5998),
    0.7: (0.6995, 0.7012), 0.8: (0.7999, 0.8002), 0.9: (0.8999, 0.9001),
}
# reference repeated-run MOM means, delta=1, T=23400, n=44, 100 reps
TABLE_REPEATED_MOM = {
    0.1: 0.1160, 0.2: 0.2045, 0.3: 0.3016, 0.4: 0.4011, 0.5: 0.5003,
    0.6: 0.5990, 0.7: 0.6998, 0.8: 0.8002, 0.9: 0.8992,
}
# reference MOM means at beta=0.1 across the step sizes below
DELTAS = (0.1, 0.7, 1.3, 1.9)
TABLE_DELTA_SMALL_BETA = (0.1006, 0.1115, 0.1218, 0.1285)


def _fmt_cells(cells):
    return "; ".join(cells) if cells else "all cells in tolerance"


def test_moment_identity(criterion):
    frame = EstimationFrame(0.1, 100.0)
    n = 10 ** 5
    start = time.perf_counter()
    details, ok = [], True
    for j, beta in enumerate((0.3, 0.5, 0.8)):
        keys = srng.path_keys(101, n, (j, srng.INCREMENTS))
        counts = simulate_batch(beta, frame, keys).counts
        scaled = frame.delta * counts
        se = scaled.std(ddof=1) / math.sqrt(n)
        target = frame.horizon ** beta / math.gamma(beta + 1)
        inside = target - frame.delta - 3 * se <= scaled.mean() <= target + 3 * se
        ok &= inside
        details.append(f"b={beta}: {scaled.mean():.4f} in [{target - 0.1 - 3 * se:.4f}, {target + 3 * se:.4f}]")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    assert criterion(1, ok, f"{'; '.join(details)}; {elapsed:.1f}s (<60s)")


def test_stable_sampler_laplace(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    worst, ok = 0.0, True
    for beta in (0.2, 0.5, 0.8):
        s_draws = sample_standard_stable(beta, rng, 10 ** 6)
        for s in (0.5, 1.0, 2.0):
            v = np.exp(-s * s_draws)
            z = abs(v.mean() - math.exp(-s ** beta)) / (v.std(ddof=1) / 1e3)
            worst = max(worst, z)
            ok &= z <= 3
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30
    assert criterion(2, ok, f"max |z| = {worst:.2f} (<=3) over 9 cells; {elapsed:.1f}s (<30s)")


def test_round_trip(criterion):
    frame = EstimationFrame(1.0, 1e4)
    grid = np.linspace(0.01, 0.99, 97)
    start = time.perf_counter()
    errs = [abs(clamped_inverse_eta(eta(b, frame), frame) - b) for b in grid]
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 1e-10 and elapsed < 1
    assert criterion(3, ok, f"max error {max(errs):.2e} (<=1e-10) over 97 values; {elapsed:.3f}s (<1s)")


def test_single_run_table(criterion):
    spec = ExperimentSpec(BETAS, (1.0,), (1e4,), 3000, 1, 11, ("mom", "cahoy"))
    rows = run_benchmark(spec)
    bad = []
    for r in rows:
        mom_ref, cahoy_ref = TABLE_SINGLE[r["beta"]]
        ref, tol = (mom_ref, 0.015) if r["method"] == "mom" else (cahoy_ref, 0.02)
        if abs(r["mean"] - ref) > tol:
            bad.append(f"{r['method']} b={r['beta']}: {r['mean']:.4f} vs {ref} (tol {tol})")
    assert criterion(4, not bad, _fmt_cells(bad))


def test_repeated_run_table(criterion):
    spec = ExperimentSpec(BETAS, (1.0,), (23400.0,), 44, 100, 12, ("mom",))
    rows = run_benchmark(spec)
    frame = EstimationFrame(1.0, 23400.0)
    bad = []
    for r in rows:
        ref = TABLE_REPEATED_MOM[r["beta"]]
        bound = variance_upper_bound(frame, r["beta"])[0]
        if abs(r["mean"] - ref) > 0.02:
            bad.append(f"b={r['beta']}: mean {r['mean']:.4f} vs {ref} (tol 0.02)")
        if r["variance"] > 5e-4:
            bad.append(f"b={r['beta']}: variance {r['variance']:.2e} > 5e-4")
        if 44 * r["variance"] >= bound:
            bad.append(f"b={r['beta']}: n*Var {44 * r['variance']:.4f} >= bound {bound:.4f}")
    assert criterion(5, not bad, _fmt_cells(bad))


def test_delta_pattern(criterion):
    spec = ExperimentSpec((0.1, 0.9), DELTAS, (23400.0,), 44, 100, 13, ("mom",))
    rows = run_benchmark(spec)
    small = [r["mean"] for r in rows if r["beta"] == 0.1]
    large = [r["mean"] for r in rows if r["beta"] == 0.9]
    bad = []
    if not all(a <= b for a, b in zip(small, small[1:])):
        bad.append("b=0.1 means not nondecreasing in delta: " + ", ".join(f"{m:.4f}" for m in small))
    for d, m, ref in zip(DELTAS, small, TABLE_DELTA_SMALL_BETA):
        if abs(m - ref) > 0.02:
            bad.append(f"b=0.1 delta={d}: {m:.4f} vs {ref} (tol 0.02)")
    for d, m in zip(DELTAS, large):
        if abs(m - 0.9) > 0.01:
            bad.append(f"b=0.9 delta={d}: {m:.4f} (tol 0.01)")
    assert criterion(6, not bad, _fmt_cells(bad))


def test_clamp_frequency_and_bounds(criterion):
    frame = EstimationFrame(1.0, 23400.0)
    n, reps = 44, 500
    lo, hi = frame.count_range
    keys = srng.path_keys(404, n * reps, (srng.INCREMENTS,))
    kbar = simulate_batch(0.5, frame, keys).counts.reshape(reps, n).mean(axis=1)
    outside = int(np.count_nonzero((kbar <= lo) | (kbar >= hi)))
    bounds = [tail_bound_diagnostics(EstimationFrame(1.0, t), n, 0.5) for t in (1e2, 1e3, 1e4)]
    low, high = zip(*bounds)
    decreasing = all(a > b for a, b in zip(low, low[1:])) and all(a > b for a, b in zip(high, high[1:]))
    ok = outside == 0 and decreasing
    assert criterion(7, ok, f"{outside}/500 clamped at T=23400; low bounds "
                     + ", ".join(f"{v:.3g}" for v in low) + "; high bounds "
                     + ", ".join(f"{v:.3g}" for v in high))


def test_periods_equal_count_plus_one(criterion):
    horizon, spacing = 1000.0, 1e-6
    mismatches = 0
    for j, beta in enumerate((0.2, 0.5, 0.8)):
        n_paths = 334 if j < 2 else 332
        config = SimConfig(beta, EstimationFrame(1.0, horizon), n_paths, 505)
        batch = simulate_paths(config)
        for i in range(n_paths):
            rec = batch.record(i)
            ts = TimeChangedSeries(outer_levels(config, rec.k, 0.0, 0.02, i), rec)
            decomp = decompose_runs(render_series(ts, horizon, spacing))
            mismatches += decomp.n_periods != rec.k + 1
    assert criterion(8, mismatches == 0, f"{mismatches}/1000 rendered paths with n_periods != k+1")


def test_closed_loop_pipeline(criterion, tmp_path):
    beta, mu, sigma = 0.2718, -4.901e-6, 0.01789
    days = tmp_path / "days"
    code = main([
        "simulate", "--beta", repr(beta), "--delta", "1", "--horizon", "23400", "--paths", "44",
        "--seed", "2718", "--days-dir", str(days), f"--mu={mu!r}", f"--sigma={sigma!r}",
        "--grid-spacing", "1e-6",
    ])
    assert code == 0
    report = run_pipeline(days)
    m = report.n_used["jumps"]
    mu_se = report.sigma_hat / math.sqrt(m)
    checks = {
        "beta": abs(report.mom - beta) <= 0.03,
        "mu": abs(report.mu_hat - mu) <= 3 * mu_se,
        "sigma": abs(report.sigma_hat / sigma - 1) <= 0.02,
    }
    detail = (f"beta {report.mom:.4f} (tol 0.03), mu {report.mu_hat:.3e} "
              f"(|err|/SE {abs(report.mu_hat - mu) / mu_se:.2f}, tol 3), sigma {report.sigma_hat:.5f} "
              f"(rel err {abs(report.sigma_hat / sigma - 1):.2%}, tol 2%), {m} jumps")
    assert criterion(9, all(checks.values()), detail)


def test_thread_determinism(criterion, tmp_path):
    outs = []
    for threads in (1, 3):
        out = tmp_path / f"bench{threads}.csv"
        code = main([
            "benchmark", "--beta-grid", "0.3,0.7", "--delta-grid", "0.5,1", "--horizon", "2000",
            "--paths", "200", "--reps", "3", "--seed", "77", "--threads", str(threads), "--out", str(out),
        ])
        assert code == 0
        outs.append(out.read_bytes())
    assert criterion(10, outs[0] == outs[1], f"threads 1 vs 3: {'identical' if outs[0] == outs[1] else 'different'} "
                     f"({len(outs[0])} bytes)")
