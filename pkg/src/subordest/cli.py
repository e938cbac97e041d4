"""Command-line entry point.

Subcommands: ``simulate``, ``benchmark``, ``delta-study``, ``estimate`` and
``diagnose``. Exit codes: 0 success, 2 configuration error, 3 data error.
"""

import argparse
import json
import math
from pathlib import Path
import sys

import yaml

from . import __version__
from . import rng as _rng
from .errors import ConfigError, DataError
from .harness import ExperimentSpec, diagnose, run_benchmark, run_delta_study, run_pipeline, write_table
from .series import render_series, write_day_csv
from .simulate import SimConfig, default_threads, outer_levels, simulate_paths, write_paths_csv
from .simulate import TimeChangedSeries
from .special import EstimationFrame

EXIT_CONFIG = 2
EXIT_DATA = 3

# config-file keys accepted in addition to the long flag names (dashes -> underscores)
_KEYS = {
    "beta", "beta_grid", "delta", "delta_grid", "horizon", "paths", "reps", "seed", "methods",
    "top_fraction", "out", "threads", "include_truncated_final", "count_periods",
    "mu", "sigma", "grid_spacing", "days_dir", "price0", "atol",
}


def _add_experiment_flags(p):
    p.add_argument("--config", help="YAML file of key: value settings; flags override it")
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-grid", help="comma-separated beta values")
    p.add_argument("--delta", type=float)
    p.add_argument("--delta-grid", help="comma-separated step sizes")
    p.add_argument("--horizon", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma-separated subset of mom,cahoy,hill,ms")
    p.add_argument("--top-fraction", type=float)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--threads", type=int)
    p.add_argument("--include-truncated-final", action=argparse.BooleanOptionalAction, default=None,
                   help="pool the period straddling the horizon into Hill/MS lengths (default: yes)")
    p.add_argument("--count-periods", action="store_true", default=None,
                   help="use the number of constant periods N = K + 1 as the count statistic")


def build_parser():
    parser = argparse.ArgumentParser(prog="subordest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="dump simulated increments or render synthetic tick days")
    _add_experiment_flags(p)
    p.add_argument("--days-dir", help="write each path as a time-changed GBM tick file into this directory")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--grid-spacing", type=float)
    p.add_argument("--price0", type=float)

    p = sub.add_parser("benchmark", help="estimator means/variances over repeated simulations")
    _add_experiment_flags(p)
    p = sub.add_parser("delta-study", help="MOM-like estimate means across step sizes")
    _add_experiment_flags(p)

    p = sub.add_parser("estimate", help="estimate beta, drift and volatility from tick files")
    p.add_argument("data", help="directory of per-day CSV files, or one CSV with a day column")
    p.add_argument("--config")
    p.add_argument("--delta", type=float)
    p.add_argument("--grid-spacing", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--methods")
    p.add_argument("--top-fraction", type=float)
    p.add_argument("--atol", type=float, help="tolerance for treating consecutive prices as equal")
    p.add_argument("--out")

    p = sub.add_parser("diagnose", help="bounds and regime checks for given beta, delta, horizon, n")
    p.add_argument("--config")
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-grid")
    p.add_argument("--delta", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--horizon-grid")
    p.add_argument("--paths", type=int)
    p.add_argument("--out")
    return parser


def _settings(args):
    """Merge config-file values under explicit flags."""
    merged = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        for k, v in loaded.items():
            key = str(k).replace("-", "_")
            if key not in _KEYS:
                raise ConfigError(f"unknown config key {k!r}")
            merged[key] = v
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config"):
            merged[k] = v
    return merged


def _grid(s, single, grid, default=None):
    if s.get(grid) is not None:
        return s[grid]
    if s.get(single) is not None:
        return (s[single],)
    if default is None:
        raise ConfigError(f"--{single.replace('_', '-')} or --{grid.replace('_', '-')} is required")
    return default


def _spec(s, default_methods=None):
    return ExperimentSpec(
        beta_grid=_grid(s, "beta", "beta_grid"),
        deltas=_grid(s, "delta", "delta_grid", (1.0,)),
        horizons=_grid(s, "horizon", "horizon_grid", (10000.0,)),
        n_paths=s.get("paths", 100),
        repetitions=s.get("reps", 1),
        seed=s.get("seed", 0),
        methods=s.get("methods", default_methods or ("mom", "cahoy", "hill", "ms")),
        top_fraction=s.get("top_fraction", 0.1),
        include_truncated_final=s.get("include_truncated_final", True),
        count_periods=bool(s.get("count_periods", False)),
    )


def _open_out(s):
    out = s.get("out")
    return open(out, "w", newline="") if out else None


def _emit(s, write):
    fh = _open_out(s)
    try:
        write(fh or sys.stdout)
    finally:
        if fh:
            fh.close()


def _cmd_benchmark(s, delta_study=False):
    spec = _spec(s, ("mom",) if delta_study else None)
    threads = int(s.get("threads") or default_threads())
    rows = (run_delta_study if delta_study else run_benchmark)(spec, threads=threads)
    meta = {"command": "delta-study" if delta_study else "benchmark", **spec.metadata()}
    _emit(s, lambda fh: write_table(fh, rows, meta))


def _cmd_simulate(s):
    spec = _spec(s)
    if len(spec.beta_grid) != 1 or len(spec.frames) != 1:
        raise ConfigError("simulate takes a single beta, delta and horizon")
    (_, frame), beta = spec.frames[0], spec.beta_grid[0]
    config = SimConfig(beta, frame, spec.n_paths, spec.seed)
    threads = int(s.get("threads") or default_threads())
    batch = simulate_paths(config, keep_lengths=True, threads=threads)
    if s.get("days_dir"):
        mu, sigma = float(s.get("mu", 0.0)), float(s.get("sigma", 0.01))
        spacing = float(s.get("grid_spacing", 1.0))
        price0 = float(s.get("price0", 1.0))
        out_dir = Path(s["days_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        width = len(str(config.n_paths - 1))
        for i in range(config.n_paths):
            rec = batch.record(i)
            ts = TimeChangedSeries(outer_levels(config, rec.k, mu, sigma, i), rec)
            day = render_series(ts, frame.horizon, spacing, label=f"day{i:0{width}d}")
            write_day_csv(out_dir / f"day{i:0{width}d}.csv", day, price0)
    if s.get("out") or not s.get("days_dir"):
        _emit(s, lambda fh: write_paths_csv(fh, batch, beta, frame, config.seed))


def _cmd_estimate(s):
    methods = s.get("methods", ("mom", "cahoy", "hill", "ms"))
    if isinstance(methods, str):
        methods = tuple(m.strip() for m in methods.split(",") if m.strip())
    report = run_pipeline(
        s["data"], delta=float(s.get("delta", 1.0)), grid_spacing=s.get("grid_spacing"),
        horizon=s.get("horizon"), methods=methods, top_fraction=float(s.get("top_fraction", 0.1)),
        atol=float(s.get("atol", 0.0)),
    )
    text = json.dumps(report.as_dict(), indent=2, default=float)
    _emit(s, lambda fh: fh.write(text + "\n"))


def _cmd_diagnose(s):
    betas = _grid(s, "beta", "beta_grid")
    horizons = _grid(s, "horizon", "horizon_grid", (10000.0,))
    if isinstance(betas, str):
        betas = [float(b) for b in betas.replace(",", " ").split()]
    if isinstance(horizons, str):
        horizons = [float(h) for h in horizons.replace(",", " ").split()]
    delta, n = float(s.get("delta", 1.0)), int(s.get("paths", 1))
    rows = []
    for h in horizons:
        frame = EstimationFrame(delta, float(h))
        for b in betas:
            if not 0 < float(b) < 1:
                raise ConfigError(f"beta must lie in (0, 1), got {b}")
            rows.append(diagnose(frame, float(b), n))
    _emit(s, lambda fh: write_table(fh, rows, {"command": "diagnose", "version": __version__}))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        s = _settings(args)
        if args.command == "benchmark":
            _cmd_benchmark(s)
        elif args.command == "delta-study":
            _cmd_benchmark(s, delta_study=True)
        elif args.command == "simulate":
            _cmd_simulate(s)
        elif args.command == "estimate":
            _cmd_estimate(s)
        elif args.command == "diagnose":
            _cmd_diagnose(s)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
