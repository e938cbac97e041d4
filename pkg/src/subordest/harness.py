"""Monte Carlo benchmark runner, delta study and the tick-data estimation pipeline."""

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from . import __version__
from . import rng as _rng
from ._backend import BACKEND
from .errors import ConfigError, DataError
from .estimators import METHODS, SampleSummary, error_upper_bound, estimate_all, variance_upper_bound
from .series import counts_from_series, estimate_outer_params, read_days
from .simulate import check_sim_beta, simulate_batch, tail_bound_diagnostics
from .special import EstimationFrame, eta

TABLE_COLUMNS = (
    "beta", "delta", "horizon", "n_paths", "repetitions", "method",
    "mean", "variance", "n_valid", "mean_count", "clamped_low", "clamped_high",
)


def _as_tuple(x, cast=float):
    if isinstance(x, (list, tuple)):
        return tuple(cast(v) for v in x)
    if isinstance(x, str):
        return tuple(cast(v) for v in x.replace(",", " ").split())
    return (cast(x),)


@dataclass
class ExperimentSpec:
    """One Monte Carlo experiment: every (beta, delta, horizon) cell is repeated ``repetitions`` times."""

    beta_grid: tuple
    deltas: tuple = (1.0,)
    horizons: tuple = (10000.0,)
    n_paths: int = 100
    repetitions: int = 1
    seed: int = 0
    methods: tuple = METHODS
    top_fraction: float = 0.1
    include_truncated_final: bool = True
    count_periods: bool = False
    frames: list = field(init=False, repr=False)

    def __post_init__(self):
        self.beta_grid = _as_tuple(self.beta_grid)
        self.deltas = _as_tuple(self.deltas)
        self.horizons = _as_tuple(self.horizons)
        self.methods = _as_tuple(self.methods, str)
        if not self.beta_grid or not self.deltas or not self.horizons:
            raise ConfigError("beta, delta and horizon grids must be nonempty")
        for b in self.beta_grid:
            check_sim_beta(b)
        if int(self.n_paths) < 1 or int(self.repetitions) < 1:
            raise ConfigError("paths and repetitions must be at least 1")
        self.n_paths, self.repetitions = int(self.n_paths), int(self.repetitions)
        self.seed = _rng.check_seed(self.seed)
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if not 0 < self.top_fraction < 1:
            raise ConfigError("top_fraction must lie in (0, 1)")
        self.frames = [
            ((di, hi), EstimationFrame(d, h))
            for di, d in enumerate(self.deltas)
            for hi, h in enumerate(self.horizons)
        ]

    def metadata(self):
        meta = {k: v for k, v in asdict(self).items() if k != "frames"}
        for k in ("beta_grid", "deltas", "horizons", "methods"):
            meta[k] = " ".join(repr(v) if not isinstance(v, str) else v for v in meta[k])
        meta["version"] = __version__
        meta["backend"] = BACKEND
        return meta


def _one_repetition(spec, bi, beta, fidx, frame, rep, threads, backend):
    keys = _rng.path_keys(spec.seed, spec.n_paths, (bi, *fidx, rep, _rng.INCREMENTS))
    keep = "hill" in spec.methods or "ms" in spec.methods
    batch = simulate_batch(beta, frame, keys, keep_lengths=keep, threads=threads, backend=backend)
    counts = batch.counts + 1 if spec.count_periods else batch.counts
    lengths = batch.period_lengths(spec.include_truncated_final) if keep else np.empty(0)
    summary = SampleSummary(counts, lengths, frame)
    return summary, estimate_all(summary, spec.methods, spec.top_fraction)


def run_benchmark(spec, threads=1, backend=None, progress=None):
    """Mean and variance of each method's estimate over repetitions, one row per (cell, method)."""
    rows = []
    for bi, beta in enumerate(spec.beta_grid):
        for fidx, frame in spec.frames:
            values = {m: [] for m in spec.methods}
            kbars = []
            clamped = [0, 0]
            for rep in range(spec.repetitions):
                summary, report = _one_repetition(spec, bi, beta, fidx, frame, rep, threads, backend)
                kbars.append(summary.mean_count)
                for m in spec.methods:
                    v = getattr(report, m)
                    if v is not None:
                        values[m].append(v)
                if report.mom is not None:
                    clamped[0] += report.mom == 0.0
                    clamped[1] += report.mom == 1.0
            for m in spec.methods:
                v = np.asarray(values[m])
                rows.append({
                    "beta": beta, "delta": frame.delta, "horizon": frame.horizon,
                    "n_paths": spec.n_paths, "repetitions": spec.repetitions, "method": m,
                    "mean": float(v.mean()) if v.size else math.nan,
                    "variance": float(v.var(ddof=1)) if v.size > 1 else math.nan,
                    "n_valid": int(v.size),
                    "mean_count": float(np.mean(kbars)),
                    "clamped_low": int(clamped[0]) if m == "mom" else 0,
                    "clamped_high": int(clamped[1]) if m == "mom" else 0,
                })
            if progress:
                progress(beta, frame)
    return rows


def run_delta_study(spec, threads=1, backend=None, progress=None):
    """MOM-like estimate means across the delta grid: rows of (beta, delta, mean, variance)."""
    mom_only = ExperimentSpec(
        spec.beta_grid, spec.deltas, spec.horizons, spec.n_paths, spec.repetitions,
        spec.seed, ("mom",), spec.top_fraction, spec.include_truncated_final, spec.count_periods,
    )
    rows = run_benchmark(mom_only, threads, backend, progress)
    return [{k: r[k] for k in ("beta", "delta", "horizon", "mean", "variance", "clamped_low", "clamped_high")}
            for r in rows]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(fh, rows, meta):
    """CSV with a ``# key=value`` metadata block."""
    for k, v in meta.items():
        fh.write(f"# {k}={v}\n")
    if not rows:
        return
    cols = list(rows[0])
    fh.write(",".join(cols) + "\n")
    for r in rows:
        fh.write(",".join(_fmt(r[c]) for c in cols) + "\n")


def run_pipeline(data_path, delta=1.0, grid_spacing=None, horizon=None, methods=METHODS,
                 top_fraction=0.1, atol=0.0):
    """Estimate beta, drift and volatility from a directory (or file) of tick data."""
    days = read_days(data_path, grid_spacing, horizon)
    try:
        summary, decomps = counts_from_series(days, delta, atol)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise DataError(str(exc)) from exc
    report = estimate_all(summary, methods, top_fraction)
    jumps = np.concatenate([d.jumps for d in decomps])
    report.mu_hat, report.sigma_hat = estimate_outer_params(jumps, delta)
    report.n_used["jumps"] = int(jumps.size)
    report.periods_per_series = [(s.label, d.n_periods) for s, d in zip(days, decomps)]
    for s, d in zip(days, decomps):
        if d.n_periods == 1:
            report.flags.append(f"{s.label}: constant over the whole day (K=0)")
        if s.filled:
            report.flags.append(f"{s.label}: {s.filled} grid samples forward-filled")
    report.diagnostics.update(horizon=summary.frame.horizon, delta=delta, n_series=summary.n,
                              mean_count=summary.mean_count)
    return report


def diagnose(frame, beta, n):
    """Bounds and regime information at a given (frame, beta, n)."""
    out = {
        "beta": beta, "delta": frame.delta, "horizon": frame.horizon, "n": n,
        "eta": eta(beta, frame),
        "count_low": frame.count_range[0], "count_high": frame.count_range[1],
        "convex_regime": frame.convex_regime,
    }
    out["clamp_low_bound"], out["clamp_high_bound"] = tail_bound_diagnostics(frame, n, beta)
    try:
        out["variance_bound"], out["variance_bound_uniform"] = variance_upper_bound(frame, beta)
    except ValueError:
        out["variance_bound"] = out["variance_bound_uniform"] = math.nan
    try:
        out["error_bound"] = error_upper_bound(frame, beta)
    except ValueError:
        out["error_bound"] = math.nan
    return out
