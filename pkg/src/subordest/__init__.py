"""Stability-index estimation for inverse stable subordinators from constant-period counts."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import ConfigError, DataError, EstimateUnavailable, InsufficientData
from .special import (
    BIJECTION_THRESHOLD, CONVEXITY_THRESHOLD, EULER_GAMMA, GAMMA_MIN,
    EstimationFrame, digamma_fn, eta, eta_prime, gamma_fn,
)
from .simulate import (
    PathBatch, PathRecord, SimConfig, TimeChangedSeries, inverse_path_eval,
    sample_standard_stable, simulate_batch, simulate_path, simulate_paths,
    simulate_time_changed_gbm, tail_bound_diagnostics,
)
from .estimators import (
    EstimateReport, SampleSummary, cahoy_estimate, clamped_inverse_eta, error_upper_bound,
    estimate_all, hill_estimate, mom_like_estimate, ms_estimate, variance_upper_bound,
)
from .series import (
    ObservedSeries, RunDecomposition, counts_from_series, decompose_runs,
    estimate_outer_params, read_days, render_series, write_day_csv,
)
