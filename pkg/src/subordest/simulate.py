"""Stable subordinator paths, their discretized inverses, and time-changed outer processes.

A path of the subordinator ``D`` on the step grid ``delta, 2*delta, ...`` is
built from i.i.d. increments ``Z_i ~ D_delta = delta**(1/beta) * S``, with
``S`` standard one-sided stable (Laplace transform ``exp(-s**beta)``).
Drawing stops at the first partial sum exceeding the horizon ``T``; the
number of partial sums not exceeding ``T`` is the count ``k`` and the
discretized inverse satisfies ``E^delta_T = k * delta``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np

from . import rng as _rng
from ._backend import get_kernels
from .errors import ConfigError
from .special import EstimationFrame, eta

BETA_MIN = 0.01
BETA_MAX = 0.99
DEFAULT_MAX_STEPS = 2_000_000_000


def default_threads():
    env = os.environ.get("SUBORDEST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def check_sim_beta(beta):
    beta = float(beta)
    if not BETA_MIN <= beta <= BETA_MAX:
        raise ConfigError(f"simulation requires beta in [{BETA_MIN}, {BETA_MAX}], got {beta}")
    return beta


@dataclass(frozen=True)
class PathRecord:
    """One discretized-subordinator path.

    ``lengths`` holds all ``k + 1`` increments; the last one straddles the
    horizon and exceeds it by ``overshoot``.
    """

    k: int
    lengths: np.ndarray
    overshoot: float

    def __post_init__(self):
        if len(self.lengths) != self.k + 1:
            raise ValueError("a path with count k has k + 1 constant periods")

    @property
    def jump_times(self):
        """Partial sums ``D_delta, D_2delta, ..., D_(k+1)delta``."""
        return np.cumsum(self.lengths)

    def complete_lengths(self):
        return self.lengths[:-1]


@dataclass(frozen=True)
class SimConfig:
    beta: float
    frame: EstimationFrame
    n_paths: int = 1
    seed: int = 0

    def __post_init__(self):
        check_sim_beta(self.beta)
        if int(self.n_paths) < 1:
            raise ConfigError("n_paths must be at least 1")
        _rng.check_seed(self.seed)


@dataclass(frozen=True)
class TimeChangedSeries:
    """Levels ``Y_0, Y_delta, ..., Y_(k*delta)`` of the outer process and the path that clocks them."""

    values: np.ndarray
    record: PathRecord

    def __post_init__(self):
        if len(self.values) != self.record.k + 1:
            raise ValueError("values must have record.k + 1 entries")


@dataclass
class PathBatch:
    """Counts (and optionally all increments) for a batch of paths, in path order."""

    counts: np.ndarray
    totals: np.ndarray
    horizon: float
    lengths: np.ndarray = None

    @property
    def offsets(self):
        return np.concatenate(([0], np.cumsum(self.counts + 1)))

    def record(self, i):
        if self.lengths is None:
            raise ValueError("batch was simulated in count-only mode")
        off = self.offsets
        return PathRecord(
            int(self.counts[i]), self.lengths[off[i]:off[i + 1]].copy(), float(self.totals[i] - self.horizon)
        )

    def period_lengths(self, include_final=True):
        """All constant-period lengths pooled across paths."""
        if self.lengths is None:
            raise ValueError("batch was simulated in count-only mode")
        if include_final:
            return self.lengths
        mask = np.ones(len(self.lengths), dtype=bool)
        mask[self.offsets[1:] - 1] = False
        return self.lengths[mask]


def _standard_stable_from_uniforms(beta, u, w):
    a = (1.0 - beta) / beta
    return np.exp(
        np.log(np.sin(beta * u)) + a * np.log(np.sin((1.0 - beta) * u))
        - np.log(np.sin(u)) / beta - a * np.log(w)
    )


def sample_standard_stable(beta, rng, size=None):
    """Draw one-sided stable variates with Laplace transform ``exp(-s**beta)``.

    Uses the exact representation
    ``sin(b U) sin((1-b) U)**((1-b)/b) / sin(U)**(1/b) * W**(-(1-b)/b)``
    with ``U ~ Uniform(0, pi)`` and ``W ~ Exp(1)``.
    """
    beta = float(beta)
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    # rng.random() is a multiple of 2**-53; shift by half a step for an open interval
    u = np.pi * (np.asarray(rng.random(size)) + 2.0 ** -54)
    w = np.asarray(rng.standard_exponential(size))
    out = _standard_stable_from_uniforms(beta, u, w)
    return float(out) if size is None else out


def increment_log_scale(beta, delta):
    """log of the scale ``delta**(1/beta)`` that turns S into an increment of D over delta."""
    return math.log(delta) / beta


def simulate_batch(beta, frame, keys, keep_lengths=False, threads=1, backend=None,
                   max_steps=DEFAULT_MAX_STEPS):
    """Simulate one path per row of ``keys`` (see :func:`subordest.rng.path_keys`)."""
    beta = check_sim_beta(beta)
    kern = get_kernels(backend)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    log_scale = increment_log_scale(beta, frame.delta)
    hint = int(min(eta(beta, frame), 1 << 16)) + 16
    fn = kern.simulate_lengths if keep_lengths else kern.simulate_counts
    n = keys.shape[0]
    threads = max(1, min(int(threads), n))
    if threads == 1:
        parts = [fn(keys, beta, log_scale, frame.horizon, max_steps, hint)]
    else:
        bounds = np.linspace(0, n, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(
                lambda ab: fn(keys[ab[0]:ab[1]], beta, log_scale, frame.horizon, max_steps, hint),
                zip(bounds[:-1], bounds[1:]),
            ))
    counts = np.concatenate([p[0] for p in parts])
    if np.any(counts < 0):
        raise OverflowError(f"a path exceeded {max_steps} steps before reaching the horizon")
    totals = np.concatenate([p[1] for p in parts])
    lengths = np.concatenate([p[2] for p in parts]) if keep_lengths else None
    return PathBatch(counts, totals, frame.horizon, lengths)


def simulate_paths(config, keep_lengths=True, threads=1, prefix=(), backend=None):
    """All ``config.n_paths`` paths; path ``i`` uses the stream keyed by (seed, prefix, i)."""
    keys = _rng.path_keys(config.seed, config.n_paths, (*prefix, _rng.INCREMENTS))
    return simulate_batch(config.beta, config.frame, keys, keep_lengths, threads, backend)


def simulate_path(config, path_index=0, prefix=(), backend=None):
    """Single path number ``path_index`` of ``config``; identical to that row of :func:`simulate_paths`."""
    keys = _rng.path_keys(config.seed, 1, (*prefix, _rng.INCREMENTS), start=path_index)
    return simulate_batch(config.beta, config.frame, keys, True, 1, backend).record(0)


def inverse_path_eval(record, delta, t):
    """Discretized inverse ``E^delta_t``: ``delta`` times the number of jump times ``<= t``.

    ``t`` may be a scalar or array; it must lie in ``[0, T]`` where ``T`` is
    the horizon the path was stopped at (any ``T`` below the last jump time).
    """
    t_arr = np.asarray(t, dtype=float)
    jumps = record.jump_times
    horizon = jumps[-1] - record.overshoot
    if np.any(t_arr < 0) or np.any(t_arr > horizon):
        raise ValueError(f"t must lie in [0, {horizon}]")
    out = np.searchsorted(jumps, t_arr, side="right") * delta
    return float(out) if out.ndim == 0 else out


def simulate_time_changed_gbm(config, mu, sigma, path_index=0, prefix=(), backend=None):
    """Log-price levels ``Y_(i*delta)`` of ``mu*t + sigma*B_t`` read off at the steps of one path."""
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    record = simulate_path(config, path_index, prefix, backend)
    return TimeChangedSeries(outer_levels(config, record.k, mu, sigma, path_index, prefix), record)


def outer_levels(config, k, mu, sigma, path_index=0, prefix=()):
    """``Y_0 = 0`` followed by ``k`` Gaussian increments of mean ``mu*delta``, variance ``sigma**2*delta``."""
    delta = config.frame.delta
    key = _rng.path_keys(config.seed, 1, (*prefix, _rng.OUTER), start=path_index)[0]
    if sigma == 0:
        return np.arange(k + 1) * (mu * delta)
    steps = _rng.philox_generator(key).normal(mu * delta, sigma * math.sqrt(delta), size=k)
    return np.concatenate(([0.0], np.cumsum(steps)))


def tail_bound_diagnostics(frame, n, beta):
    """Bounds on the probabilities that the mean count falls in a clamp region.

    Returns ``(low, high)``: ``low = n (1 + delta) T**-beta / Gamma(1 - beta)``,
    the large-``T`` asymptote of the bound on ``P(mean count <= 1/delta)``;
    ``high = n exp(-C T)`` with ``C = 2**-beta - 1/2`` bounds
    ``P(mean count >= T/delta)``.
    """
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    T, delta = frame.horizon, frame.delta
    low = n * (1.0 + delta) * T ** (-beta) / math.gamma(1.0 - beta)
    c = 0.5 ** beta - 0.5
    return low, n * math.exp(-c * T)


def write_paths_csv(fh, batch, beta, frame, seed):
    """Dump increments as ``path_id,i,Z_i`` rows under a ``# key=value`` header."""
    fh.write(f"# beta={beta!r}, delta={frame.delta!r}, T={frame.horizon!r}, seed={seed}\n")
    fh.write("path_id,i,Z_i\n")
    off = batch.offsets
    for p in range(len(batch.counts)):
        for i, z in enumerate(batch.lengths[off[p]:off[p + 1]], start=1):
            fh.write(f"{p},{i},{float(z)!r}\n")


def read_paths_csv(fh):
    """Inverse of :func:`write_paths_csv`: ``(metadata, {path_id: increments})``."""
    meta = {}
    paths = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for item in line[1:].split(","):
                key, _, value = item.strip().partition("=")
                meta[key] = value
            continue
        if line.startswith("path_id"):
            continue
        pid, _, z = line.split(",")
        paths.setdefault(int(pid), []).append(float(z))
    return meta, {p: np.array(v) for p, v in paths.items()}
