"""Constant periods, jumps and outer-process parameters from uniformly sampled paths.

An :class:`ObservedSeries` is a path sampled at ``t = j * grid_spacing``,
``j = 0 .. n_samples - 1``. It is stored run-length compressed: ``starts``
holds the grid indices where a new value is recorded and ``levels`` the
value held from there on (forward fill). Dense samples are available
through :attr:`ObservedSeries.values`.
"""

import csv
from dataclasses import dataclass
import io
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .estimators import SampleSummary
from .special import EstimationFrame

_GRID_TOL = 1e-6


@dataclass
class ObservedSeries:
    starts: np.ndarray
    levels: np.ndarray
    n_samples: int
    grid_spacing: float = 1.0
    label: str = ""
    filled: int = 0

    def __post_init__(self):
        self.starts = np.asarray(self.starts, dtype=np.int64)
        self.levels = np.asarray(self.levels, dtype=float)
        if self.n_samples < 2:
            raise ValueError("a series needs at least 2 samples")
        if not self.grid_spacing > 0:
            raise ValueError("grid_spacing must be positive")
        if self.starts.size == 0 or self.starts[0] != 0 or self.starts.size != self.levels.size:
            raise ValueError("starts must begin at 0 and match levels")
        if np.any(np.diff(self.starts) <= 0) or self.starts[-1] >= self.n_samples:
            raise ValueError("starts must be strictly increasing grid indices")

    @classmethod
    def from_values(cls, values, grid_spacing=1.0, label=""):
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            raise ValueError("a series needs at least 2 samples")
        keep = np.concatenate(([True], values[1:] != values[:-1]))
        starts = np.flatnonzero(keep)
        return cls(starts, values[starts], values.size, grid_spacing, label)

    @property
    def values(self):
        reps = np.diff(np.append(self.starts, self.n_samples))
        return np.repeat(self.levels, reps)

    @property
    def horizon(self):
        return (self.n_samples - 1) * self.grid_spacing


@dataclass
class RunDecomposition:
    """Maximal constant runs of a series.

    ``run_lengths`` are sample counts times the grid spacing and ``jumps``
    the value changes between consecutive runs. ``n_periods`` is the number
    of runs, except for a series whose every consecutive pair differs, which
    counts ``n_samples - 1`` periods.
    """

    run_lengths: np.ndarray
    jumps: np.ndarray
    n_periods: int


def decompose_runs(series, atol=0.0):
    """Split ``series`` into maximal runs of equal consecutive values (``|diff| <= atol``)."""
    if series.n_samples < 2:
        raise ValueError("a series needs at least 2 samples")
    steps = np.diff(series.levels)
    change = np.abs(steps) > atol
    run_starts = np.concatenate(([0], series.starts[1:][change]))
    sizes = np.diff(np.append(run_starts, series.n_samples))
    jumps = steps[change]
    n_runs = run_starts.size
    n_periods = series.n_samples - 1 if n_runs == series.n_samples else n_runs
    return RunDecomposition(sizes * series.grid_spacing, jumps, int(n_periods))


def counts_from_series(series_list, delta=1.0, atol=0.0):
    """Counts ``N_i - 1`` and pooled run lengths of same-horizon series.

    Returns ``(summary, decompositions)``.
    """
    series_list = list(series_list)
    if not series_list:
        raise ValueError("at least one series is required")
    first = series_list[0]
    for s in series_list[1:]:
        if s.n_samples != first.n_samples or not math.isclose(s.grid_spacing, first.grid_spacing):
            raise ValueError(
                f"series {s.label!r} does not share the horizon/grid of {first.label!r}"
            )
    decomps = [decompose_runs(s, atol) for s in series_list]
    counts = np.array([d.n_periods - 1 for d in decomps], dtype=np.int64)
    lengths = np.concatenate([d.run_lengths for d in decomps])
    frame = EstimationFrame(delta, first.horizon)
    return SampleSummary(counts, lengths, frame), decomps


def estimate_outer_params(jumps, delta=1.0):
    """Drift and volatility per unit time from jump sizes of step ``delta``.

    Returns ``(mean / delta, std / sqrt(delta))``; either entry is ``None``
    when there are too few jumps (one for the mean, two for the std).
    """
    jumps = np.asarray(jumps, dtype=float)
    mu = float(jumps.mean()) / delta if jumps.size >= 1 else None
    sigma = float(jumps.std(ddof=1)) / math.sqrt(delta) if jumps.size >= 2 else None
    return mu, sigma


def _grid_size(horizon, grid_spacing):
    steps = horizon / grid_spacing
    n = round(steps)
    if abs(steps - n) > _GRID_TOL * max(1.0, steps):
        raise ValueError(f"horizon {horizon} is not a multiple of grid spacing {grid_spacing}")
    return int(n) + 1


def resolved_periods(record, horizon, grid_spacing):
    """First grid index of each constant period and a mask of periods containing a grid point."""
    n = _grid_size(horizon, grid_spacing)
    period_starts = np.concatenate(([0.0], record.jump_times[:-1]))
    first = np.ceil(period_starts / grid_spacing).astype(np.int64)
    first[0] = 0
    nxt = np.append(first[1:], n)
    return first, first < nxt


def render_series(ts, horizon, grid_spacing=1.0, label=""):
    """Sample ``Y_(E^delta_t)`` of a :class:`TimeChangedSeries` on a uniform grid over ``[0, horizon]``.

    Periods shorter than the grid spacing may contain no grid point and then
    do not show up in the rendered series.
    """
    first, seen = resolved_periods(ts.record, horizon, grid_spacing)
    return ObservedSeries(first[seen], ts.values[seen], _grid_size(horizon, grid_spacing), grid_spacing, label)


def _format_time(index, grid_spacing):
    t = index * grid_spacing
    if float(grid_spacing).is_integer():
        return str(int(round(t)))
    return repr(float(t))


def write_day_csv(target, series, price0=1.0):
    """Write ``series`` (log-prices relative to open) as a tick file of ``timestamp,price`` rows.

    Only rows where the price changes are written, plus one closing row at the
    horizon; readers forward-fill the grid in between.
    """
    own = not hasattr(target, "write")
    fh = open(target, "w", newline="") if own else target
    try:
        fh.write(f"# grid_spacing={series.grid_spacing!r}\n")
        if series.label:
            fh.write(f"# label={series.label}\n")
        fh.write("timestamp,price\n")
        prices = price0 * np.exp(series.levels)
        for idx, p in zip(series.starts, prices):
            fh.write(f"{_format_time(idx, series.grid_spacing)},{float(p)!r}\n")
        last = series.n_samples - 1
        if series.starts[-1] != last:
            fh.write(f"{_format_time(last, series.grid_spacing)},{float(prices[-1])!r}\n")
    finally:
        if own:
            fh.close()


def _series_from_ticks(times, prices, grid_spacing, horizon, label):
    times = np.asarray(times, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if times.size == 0:
        raise DataError(f"{label}: no rows")
    if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
        raise DataError(f"{label}: prices must be positive numbers")
    idx_f = times / grid_spacing
    idx = np.round(idx_f).astype(np.int64)
    if np.any(np.abs(idx_f - idx) > _GRID_TOL * np.maximum(1.0, np.abs(idx_f))):
        raise DataError(f"{label}: timestamps are not on the {grid_spacing} grid")
    if idx[0] != 0:
        raise DataError(f"{label}: first row must be at timestamp 0")
    if np.any(np.diff(idx) <= 0):
        raise DataError(f"{label}: timestamps must be strictly increasing")
    n = _grid_size(horizon, grid_spacing) if horizon is not None else int(idx[-1]) + 1
    if idx[-1] >= n:
        raise DataError(f"{label}: timestamps run past the horizon {horizon}")
    levels = np.log(prices / prices[0])
    keep = np.concatenate(([True], levels[1:] != levels[:-1]))
    series = ObservedSeries(idx[keep], levels[keep], n, grid_spacing, label)
    series.filled = n - idx.size
    return series


def _read_rows(fh, name):
    meta = {}
    lines = []
    for line in fh:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            lines.append(line)
    reader = csv.reader(io.StringIO("".join(lines)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{name}: empty file") from None
    if header not in (["timestamp", "price"], ["day", "timestamp", "price"]):
        raise DataError(f"{name}: expected header 'timestamp,price' or 'day,timestamp,price', got {header}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise DataError(f"{name}: line {lineno}: expected {len(header)} fields")
        rows.append(row)
    return meta, header, rows


def read_days(path, grid_spacing=None, horizon=None):
    """Load trading days from a directory of ``*.csv`` tick files or one file with a ``day`` column.

    Each day is forward-filled onto a common grid. The horizon defaults to
    the latest timestamp over all days; the grid spacing defaults to the
    files' ``# grid_spacing=`` header, else 1.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise DataError(f"{path}: no .csv files")
    elif path.is_file():
        files = [path]
    else:
        raise DataError(f"{path}: no such file or directory")

    raw_days = []
    spacings = set()
    for f in files:
        try:
            with open(f, newline="") as fh:
                meta, header, rows = _read_rows(fh, f.name)
            if "grid_spacing" in meta:
                spacings.add(float(meta["grid_spacing"]))
            if header[0] == "day":
                groups = {}
                for day, t, p in rows:
                    groups.setdefault(day.strip(), []).append((float(t), float(p)))
                for day, tp in groups.items():
                    raw_days.append((f"{f.stem}:{day}", tp))
            else:
                raw_days.append((f.stem, [(float(t), float(p)) for t, p in rows]))
        except ValueError as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"{f.name}: {exc}") from exc

    if grid_spacing is None:
        if len(spacings) > 1:
            raise DataError(f"files disagree on grid spacing: {sorted(spacings)}")
        grid_spacing = spacings.pop() if spacings else 1.0
    if horizon is None:
        horizon = max(max(t for t, _ in tp) for _, tp in raw_days if tp)
    out = []
    for label, tp in raw_days:
        if not tp:
            raise DataError(f"{label}: no rows")
        tp.sort(key=lambda r: r[0])
        times, prices = zip(*tp)
        try:
            out.append(_series_from_ticks(times, prices, grid_spacing, horizon, label))
        except DataError:
            raise
        except ValueError as exc:
            raise DataError(f"{label}: {exc}") from exc
    return out
