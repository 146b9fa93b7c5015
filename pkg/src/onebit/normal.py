"""Scalar primitives for the standard normal law, sign messages and step sizes.

All functions accept scalars or numpy arrays and broadcast like ufuncs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT_2PI = math.sqrt(2.0 * math.pi)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
TWO_OVER_PI = 2.0 / math.pi


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


def log_std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return -0.5 * x * x - LOG_SQRT_2PI


def std_normal_cdf(x):
    return special.ndtr(np.asarray(x, dtype=float))


def log_std_normal_cdf(x):
    """log Phi(x), finite far into the left tail (log Phi(-40) ~ -804.6)."""
    return special.log_ndtr(np.asarray(x, dtype=float))


def std_normal_quantile(p):
    return special.ndtri(np.asarray(p, dtype=float))


def interval_mass(a, b):
    """P(a < Z < b) for a <= b, computed on the tail nearest to the interval.

    Differencing the cdf near 1 loses all relative precision; for intervals
    on the positive half line the complementary tail is differenced instead.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = special.ndtr(-a) - special.ndtr(-b)
    lower = special.ndtr(b) - special.ndtr(a)
    return np.where(a >= 0.0, upper, lower)


def probit_weight(x):
    """phi(x)^2 / (Phi(x) (1 - Phi(x))), evaluated in log space.

    Even, strictly decreasing in |x|, maximal (2/pi) at zero.
    """
    x = np.abs(np.asarray(x, dtype=float))
    log_w = 2.0 * log_std_normal_pdf(x) - special.log_ndtr(x) - special.log_ndtr(-x)
    return np.exp(log_w)


def sign(x):
    """+1 for x >= 0, -1 otherwise (ties resolve to +1)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0.0, 1, -1)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GammaSchedule:
    """Power-law step sizes gamma_n = n ** -beta.

    ``0 < beta < 1`` satisfies the averaging conditions; ``2/3 < beta < 1``
    additionally gives the n * MSE -> pi sigma^2 / 2 guarantee. ``beta = 1``
    is accepted for arithmetic checks only (``sum gamma_n`` still diverges,
    but the averaging conditions fail).
    """

    beta: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0) or not math.isfinite(self.beta):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta!r}")

    @property
    def satisfies_averaging_conditions(self) -> bool:
        return self.beta < 1.0

    @property
    def mse_guarantee(self) -> bool:
        return 2.0 / 3.0 < self.beta < 1.0


def gamma_at(schedule: GammaSchedule, n):
    """Step size at (1-based) step ``n``."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise ValueError(f"step index must be >= 1, got {n!r}")
    out = np.power(n_arr.astype(float), -schedule.beta)
    return float(out) if out.ndim == 0 else out
