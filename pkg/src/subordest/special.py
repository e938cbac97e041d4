"""Gamma/digamma wrappers and the count-moment function eta.

``eta(beta) = T**beta / (delta * Gamma(beta + 1))`` is the mean count of
steps of the discretized inverse stable subordinator up to the horizon ``T``
(up to an error of at most one step). It is a smooth increasing bijection
from (0, 1) onto (1/delta, T/delta) once ``T > exp(1 - EULER_GAMMA)``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special as _sp

from .errors import ConfigError

EULER_GAMMA = 0.57721566490153286061
# minimum of Gamma on (0, inf) and where it is attained
GAMMA_MIN = 0.88560319441088870028
GAMMA_ARGMIN = 1.46163214496836234126
# exp(1 - EULER_GAMMA): eta is a bijection for horizons above this
BIJECTION_THRESHOLD = 1.52620511159586388047
# exp(1 - EULER_GAMMA + pi / sqrt(6)): eta is convex for horizons above this
CONVEXITY_THRESHOLD = 5.50322434637940415905


def gamma_fn(x):
    """Gamma function for positive real ``x``."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma_fn requires x > 0, got {x}")
    return math.gamma(x)


def digamma_fn(x):
    """Digamma function (logarithmic derivative of Gamma) for positive ``x``."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"digamma_fn requires x > 0, got {x}")
    return float(_sp.digamma(x))


@dataclass(frozen=True)
class EstimationFrame:
    """Step size ``delta`` of the discretization and observation horizon ``horizon``.

    Construction fails unless ``horizon > BIJECTION_THRESHOLD``.
    """

    delta: float
    horizon: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ConfigError(f"delta must be positive and finite, got {self.delta}")
        if not (math.isfinite(self.horizon) and self.horizon > BIJECTION_THRESHOLD):
            raise ConfigError(
                f"horizon must exceed exp(1 - gamma) = {BIJECTION_THRESHOLD:.6f}, "
                f"got {self.horizon}"
            )

    @property
    def convex_regime(self):
        return self.horizon > CONVEXITY_THRESHOLD

    @property
    def count_range(self):
        """Open interval (1/delta, T/delta) of counts with an interior estimate."""
        return 1.0 / self.delta, self.horizon / self.delta


def _check_beta(beta):
    b = np.asarray(beta, dtype=float)
    if np.any(~((b > 0) & (b < 1))):
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    return b


def _eta_unchecked(beta, frame):
    beta = np.asarray(beta, dtype=float)
    out = np.exp(beta * math.log(frame.horizon) - _sp.gammaln(beta + 1.0)) / frame.delta
    return float(out) if out.ndim == 0 else out


def eta(beta, frame):
    """``T**beta / (delta * Gamma(beta + 1))``; accepts scalars or arrays."""
    _check_beta(beta)
    return _eta_unchecked(beta, frame)


def eta_prime(beta, frame):
    """Derivative of :func:`eta` with respect to ``beta``."""
    b = _check_beta(beta)
    out = _eta_unchecked(b, frame) * (math.log(frame.horizon) - _sp.digamma(b + 1.0))
    return float(out) if np.ndim(out) == 0 else out


def log_eta(beta, frame):
    """``log(eta(beta))``, defined on the closed interval [0, 1]."""
    return beta * math.log(frame.horizon) - math.lgamma(beta + 1.0) - math.log(frame.delta)
