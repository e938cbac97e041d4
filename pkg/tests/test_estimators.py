import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subordest import rng as srng
from subordest.errors import ConfigError, EstimateUnavailable, InsufficientData
from subordest.estimators import (
    SampleSummary, cahoy_estimate, clamped_inverse_eta, error_upper_bound, estimate_all,
    hill_estimate, hill_k, mom_like_estimate, ms_estimate, variance_upper_bound,
)
from subordest.harness import ExperimentSpec, run_benchmark
from subordest.simulate import sample_standard_stable, simulate_batch
from subordest.special import EstimationFrame, eta

FRAME = EstimationFrame(1.0, 1e4)


def summary(counts, lengths=(), frame=FRAME):
    return SampleSummary(np.asarray(counts), np.asarray(lengths, dtype=float), frame)


def test_mom_clamps_and_midpoint():
    assert mom_like_estimate(summary([0, 1, 0, 1])) == 0.0
    assert mom_like_estimate(summary([1])) == 0.0
    assert mom_like_estimate(summary([10 ** 4])) == 1.0
    assert mom_like_estimate(summary([2 * 10 ** 4, 0])) == 1.0
    assert clamped_inverse_eta(eta(0.5, FRAME), FRAME) == pytest.approx(0.5, abs=1e-10)


def test_mom_requires_frame():
    with pytest.raises(ConfigError):
        clamped_inverse_eta(5.0, None)


def test_summary_validation():
    with pytest.raises(ValueError):
        summary([])
    with pytest.raises(ValueError):
        summary([1, -1])


@given(st.floats(1e-6, 1 - 1e-6), st.floats(1.6, 1e7), st.floats(1e-3, 1e2))
def test_round_trip_property(beta, horizon, delta):
    frame = EstimationFrame(delta, horizon)
    assert clamped_inverse_eta(eta(beta, frame), frame) == pytest.approx(beta, abs=1e-9)


@given(st.floats(0, 1e5), st.floats(0, 1e5))
def test_clamped_inverse_monotone(x, y):
    lo, hi = sorted((x, y))
    assert clamped_inverse_eta(lo, FRAME) <= clamped_inverse_eta(hi, FRAME)
    assert 0.0 <= clamped_inverse_eta(lo, FRAME) <= 1.0


def test_round_trip_grid():
    for b in np.linspace(0.01, 0.99, 97):
        assert abs(clamped_inverse_eta(eta(b, FRAME), FRAME) - b) <= 1e-10


def test_cahoy_values():
    frame = EstimationFrame(2.0, 1e4)
    assert cahoy_estimate(summary([5000, 5000], frame=frame)) == pytest.approx(1.0, rel=1e-14)
    v = cahoy_estimate(summary([1, 1, 1]))
    assert v == pytest.approx(0.5772156649 / (math.log(1e4) + 0.5772156649), rel=1e-9)
    assert v == pytest.approx(0.05898, abs=1e-5)


def test_cahoy_drops_zero_counts():
    assert cahoy_estimate(summary([0, 1, 1])) == cahoy_estimate(summary([1, 1]))
    with pytest.raises(EstimateUnavailable) as err:
        cahoy_estimate(summary([0, 0]))
    assert err.value.reason == "log of zero count"


def test_hill_hand_value():
    lengths = np.exp([0.0, 1.0, 2.0, 3.0])
    assert hill_k(4, 0.75) == 3
    assert hill_estimate(lengths, 0.75) == pytest.approx(0.5, rel=1e-12)
    assert hill_estimate(lengths[::-1], 0.75) == pytest.approx(0.5, rel=1e-12)


def test_hill_errors():
    with pytest.raises(InsufficientData):
        hill_estimate([1.0, 2.0], 0.9)
    with pytest.raises(EstimateUnavailable) as err:
        hill_estimate(np.ones(50), 0.1)
    assert err.value.reason == "zero log-excess"
    with pytest.raises(ValueError):
        hill_estimate(np.arange(1, 10.0), 1.5)


@given(st.lists(st.floats(1e-3, 1e3), min_size=12, max_size=200, unique=True),
       st.floats(1e-3, 1e3))
def test_hill_scale_invariant(lengths, c):
    x = np.asarray(lengths)
    try:
        a = hill_estimate(x, 0.2)
    except EstimateUnavailable:
        return
    assert hill_estimate(c * x, 0.2) == pytest.approx(a, rel=1e-6)


def test_ms_values():
    assert ms_estimate([1.0, 1.5, 2.0]) == 1.0
    assert ms_estimate([0.0, 0.0, 0.0, 8.0]) == pytest.approx(2 / 3, rel=1e-14)
    assert ms_estimate([3.0, 3.0]) == 1.0
    with pytest.raises(InsufficientData):
        ms_estimate([1.0])


@pytest.mark.parametrize("beta", [0.2, 0.3, 0.5])
def test_ms_consistent_on_stable_variates(beta):
    rng = np.random.default_rng(int(beta * 100))
    est = [ms_estimate(sample_standard_stable(beta, rng, 10 ** 5)) for _ in range(20)]
    assert abs(np.mean(est) - beta) <= 0.03


@pytest.mark.parametrize("beta", [0.3, 0.7])
def test_hill_consistent_on_stable_variates(beta):
    rng = np.random.default_rng(int(beta * 100) + 1)
    est = hill_estimate(sample_standard_stable(beta, rng, 10 ** 6), 0.01)
    assert est == pytest.approx(beta, abs=0.03)


def test_variance_bound_values():
    lo, hi = variance_upper_bound(EstimationFrame(1.0, 23400.0), 0.5)
    c = (math.log(23400.0) + 0.5772156649015329) ** 2
    assert lo == pytest.approx(2 / c, rel=1e-12)
    assert lo == pytest.approx(0.01767, abs=1e-5)
    assert hi == pytest.approx(2 / (0.8856031944108887 * c), rel=1e-12)
    assert lo < hi
    with pytest.raises(ValueError):
        variance_upper_bound(EstimationFrame(1.0, 5.0), 0.5)


def test_error_bound_value():
    v = error_upper_bound(FRAME, 0.5)
    assert v == pytest.approx(-math.log(0.8856031944108887 * 0.99) / math.log(1e4), rel=1e-12)
    assert v == pytest.approx(0.01428, abs=1e-5)
    with pytest.raises(ValueError):
        error_upper_bound(EstimationFrame(10.0, 50.0), 0.5)


def test_one_sided_bias_large_n():
    frame = EstimationFrame(1.0, 1000.0)
    for j, beta in enumerate((0.2, 0.5, 0.8)):
        counts = simulate_batch(beta, frame, srng.path_keys(31, 20000, (j,))).counts
        est = mom_like_estimate(summary(counts, frame=frame))
        se = counts.std(ddof=1) / math.sqrt(counts.size)
        slack = se / (counts.mean() * (math.log(1000.0) - 1))  # delta-method scale of g'
        assert est <= beta + 3 * slack
        assert beta - est <= error_upper_bound(frame, beta) + 3 * slack


def test_scaled_variance_below_bound():
    frame = EstimationFrame(1.0, 23400.0)
    n, reps = 44, 200
    counts = simulate_batch(0.5, frame, srng.path_keys(32, n * reps)).counts.reshape(reps, n)
    est = np.array([mom_like_estimate(summary(c, frame=frame)) for c in counts])
    assert n * est.var(ddof=1) < variance_upper_bound(frame, 0.5)[0]


def test_estimate_all_reasons_and_flags():
    rep = estimate_all(summary([0, 0], [1.0]))
    assert rep.mom == 0.0 and "mom clamped to 0" in rep.flags
    assert rep.cahoy is None and rep.reasons["cahoy"] == "log of zero count"
    assert rep.hill is None and rep.ms is None
    assert rep.n_used["cahoy"] == 0
    with pytest.raises(ConfigError):
        estimate_all(summary([1]), methods=("mom", "median"))


def test_estimate_all_subset_and_diagnostics():
    s = summary([100, 120, 90], np.exp(np.linspace(0, 5, 50)))
    rep = estimate_all(s, methods=("mom", "hill"))
    assert rep.cahoy is None and rep.ms is None and "cahoy" not in rep.reasons
    assert 0 < rep.mom < 1 and rep.hill is not None
    assert {"variance_bound", "error_bound", "clamp_low_bound"} <= set(rep.diagnostics)
    assert rep.as_dict()["mom"] == rep.mom


@pytest.mark.slow
def test_reference_values_single_run():
    spec = ExperimentSpec((0.3, 0.5, 0.8), (1.0,), (1e4,), 3000, 1, 21)
    rows = {(r["beta"], r["method"]): r["mean"] for r in run_benchmark(spec)}
    assert rows[(0.5, "cahoy")] == pytest.approx(0.4999, abs=0.01)
    assert rows[(0.8, "hill")] == pytest.approx(0.90, abs=0.03)
    assert rows[(0.5, "mom")] == pytest.approx(0.5001, abs=0.01)


@pytest.mark.slow
def test_ms_reference_value_over_reruns():
    # a single run has sd ~0.03 here, so the reference is compared with the rerun average
    means = [run_benchmark(ExperimentSpec((0.3,), (1.0,), (1e4,), 3000, 1, seed, ("ms",)))[0]["mean"]
             for seed in range(10)]
    assert np.mean(means) == pytest.approx(0.3265, abs=0.07)
