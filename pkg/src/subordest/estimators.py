"""Estimators of the stability index from constant-period counts and lengths.

* :func:`mom_like_estimate` inverts ``eta`` at the sample mean of the counts,
  clamped to 0 below ``1/delta`` and to 1 above ``T/delta``.
* :func:`cahoy_estimate` uses the mean of ``log(K * delta)``.
* :func:`hill_estimate` and :func:`ms_estimate` work on pooled period lengths.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, EstimateUnavailable, InsufficientData
from .special import CONVEXITY_THRESHOLD, EULER_GAMMA, GAMMA_MIN, EstimationFrame, log_eta
from .simulate import tail_bound_diagnostics

METHODS = ("mom", "cahoy", "hill", "ms")

ROOT_XTOL = 1e-14


@dataclass
class SampleSummary:
    """Counts ``K_1..K_n`` and pooled period lengths observed under ``frame``."""

    counts: np.ndarray
    period_lengths: np.ndarray
    frame: EstimationFrame

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.period_lengths = np.asarray(self.period_lengths, dtype=float)
        if self.counts.size == 0:
            raise ValueError("counts must be nonempty")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def n(self):
        return int(self.counts.size)

    @property
    def mean_count(self):
        return float(self.counts.mean())


def clamped_inverse_eta(mean_count, frame):
    """The map ``g``: 0 on ``[0, 1/delta]``, 1 on ``[T/delta, inf)``, ``eta^-1`` in between."""
    if not isinstance(frame, EstimationFrame):
        raise ConfigError("a valid EstimationFrame is required")
    lo, hi = frame.count_range
    if mean_count <= lo:
        return 0.0
    if mean_count >= hi:
        return 1.0
    # log eta is increasing on [0, 1] with log eta(0) = log(1/delta), log eta(1) = log(T/delta)
    target = math.log(mean_count)
    return brentq(lambda b: log_eta(b, frame) - target, 0.0, 1.0, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)


def mom_like_estimate(summary):
    return clamped_inverse_eta(summary.mean_count, summary.frame)


def cahoy_estimate(summary):
    """``(mean log(K_i delta) + gamma) / (log T + gamma)`` over counts ``K_i >= 1``."""
    used = summary.counts[summary.counts > 0]
    if used.size == 0:
        raise EstimateUnavailable("log of zero count")
    f = summary.frame
    mean_log = float(np.mean(np.log(used * f.delta)))
    return (mean_log + EULER_GAMMA) / (math.log(f.horizon) + EULER_GAMMA)


def hill_k(m, top_fraction):
    return int(math.ceil(top_fraction * m))


def hill_estimate(lengths, top_fraction=0.1):
    """Hill's estimator on the largest ``ceil(top_fraction * m)`` of ``m`` lengths.

    Returns ``1 / (mean(log X_(i), i <= k) - log X_(k+1))`` with
    ``X_(1) >= X_(2) >= ...``.
    """
    if not 0 < top_fraction < 1:
        raise ValueError("top_fraction must lie in (0, 1)")
    x = np.asarray(lengths, dtype=float)
    m = x.size
    k = hill_k(m, top_fraction)
    if k + 1 > m:
        raise InsufficientData(f"need more than {k} lengths, got {m}")
    # top k+1 values, descending; avoids a full sort of large pools
    top = np.sort(np.partition(x, m - k - 1)[m - k - 1:])[::-1]
    excess = float(np.mean(np.log(top[:k]))) - math.log(top[k])
    if not excess > 0:
        raise EstimateUnavailable("zero log-excess")
    return 1.0 / excess


def ms_estimate(lengths):
    """Variance-growth tail estimate ``[1/2 + log+(s^2) / (2 log m)]^-1`` clamped to (0, 1]."""
    x = np.asarray(lengths, dtype=float)
    m = x.size
    if m < 2:
        raise InsufficientData(f"need at least 2 lengths, got {m}")
    var = float(np.var(x, ddof=1))
    log_plus = max(math.log(var), 0.0) if var > 0 else 0.0
    return min(1.0 / (0.5 + log_plus / (2.0 * math.log(m))), 1.0)


def variance_upper_bound(frame, beta):
    """Bounds on the limiting ``n * Var`` of the MOM-like estimate (convex regime only).

    Returns ``(2 / ((log T + gamma)**2 Gamma(2 beta + 1)), 2 / (GAMMA_MIN (log T + gamma)**2))``.
    """
    if not frame.horizon > CONVEXITY_THRESHOLD:
        raise ValueError(f"variance bound needs T > {CONVEXITY_THRESHOLD:.4f}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    c = (math.log(frame.horizon) + EULER_GAMMA) ** 2
    return 2.0 / (c * math.gamma(2.0 * beta + 1.0)), 2.0 / (GAMMA_MIN * c)


def error_upper_bound(frame, beta):
    """Large-sample bound on ``beta - estimate``: ``-log(GAMMA_MIN (1 - delta T**-beta)) / log T``."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    T, delta = frame.horizon, frame.delta
    if not T ** beta > delta:
        raise ValueError("error bound needs T**beta > delta")
    return -math.log(GAMMA_MIN * (1.0 - delta * T ** (-beta))) / math.log(T)


@dataclass
class EstimateReport:
    """Estimates from each requested method; absent ones are ``None`` with a reason."""

    mom: float = None
    cahoy: float = None
    hill: float = None
    ms: float = None
    n_used: dict = field(default_factory=dict)
    reasons: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    mu_hat: float = None
    sigma_hat: float = None
    periods_per_series: list = None
    flags: list = field(default_factory=list)

    def as_dict(self):
        return {
            "mom": self.mom, "cahoy": self.cahoy, "hill": self.hill, "ms": self.ms,
            "n_used": dict(self.n_used), "reasons": dict(self.reasons),
            "diagnostics": dict(self.diagnostics), "mu_hat": self.mu_hat,
            "sigma_hat": self.sigma_hat, "periods_per_series": self.periods_per_series,
            "flags": list(self.flags),
        }


def _plugin_diagnostics(frame, n, beta_hat):
    out = {}
    if not 0 < beta_hat < 1:
        return out
    out["clamp_low_bound"], out["clamp_high_bound"] = tail_bound_diagnostics(frame, n, beta_hat)
    try:
        out["variance_bound"], out["variance_bound_uniform"] = variance_upper_bound(frame, beta_hat)
    except ValueError:
        pass
    try:
        out["error_bound"] = error_upper_bound(frame, beta_hat)
    except ValueError:
        pass
    return out


def estimate_all(summary, methods=METHODS, top_fraction=0.1):
    """Apply each method in ``methods``; diagnostics are evaluated at the MOM-like estimate."""
    report = EstimateReport()
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ConfigError(f"unknown methods: {sorted(unknown)}")
    lengths = summary.period_lengths
    runners = {
        "mom": (lambda: mom_like_estimate(summary), lambda: summary.n),
        "cahoy": (lambda: cahoy_estimate(summary), lambda: int(np.count_nonzero(summary.counts))),
        "hill": (lambda: hill_estimate(lengths, top_fraction), lambda: hill_k(lengths.size, top_fraction)),
        "ms": (lambda: ms_estimate(lengths), lambda: int(lengths.size)),
    }
    for name in METHODS:
        if name not in methods:
            continue
        run, used = runners[name]
        try:
            setattr(report, name, run())
            report.n_used[name] = used()
        except EstimateUnavailable as exc:
            report.reasons[name] = exc.reason
            report.n_used[name] = 0
    if report.mom is not None:
        lo, hi = summary.frame.count_range
        kbar = summary.mean_count
        if kbar <= lo:
            report.flags.append("mom clamped to 0")
        elif kbar >= hi:
            report.flags.append("mom clamped to 1")
        report.diagnostics = _plugin_diagnostics(summary.frame, summary.n, report.mom)
    return report
