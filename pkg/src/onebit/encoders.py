"""Message-by-message encoder/estimator state machines.

Each scheme is a frozen state value plus pure step functions; the
estimator classes in :mod:`onebit.estimators` wrap them with an
sklearn-style interface, and :mod:`onebit.simulation` runs the same
recursions over many trials at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import posterior as _post
from .normal import SQRT_2PI, GammaSchedule, gamma_at, sign, std_normal_cdf
from .posterior import GridDensity, PriorSpec

AVERAGING_MODES = ("post", "pre")


def _check_message(message) -> int:
    if message not in (-1, 1):
        raise ValueError(f"a message is -1 or +1, got {message!r}")
    return int(message)


# --------------------------------------------------------------------------
# Sign-SGD with iterate averaging


@dataclass(frozen=True)
class SignSgdState:
    """Iterate, step count and running iterate sum of the sign recursion.

    ``averaging="post"`` averages the iterates after each update
    (theta_1 .. theta_n); ``"pre"`` averages theta_0 .. theta_{n-1}.
    The first ``burn_in`` iterates are left out of the average.
    """

    theta_curr: float
    n: int = 0
    sum_theta: float = 0.0
    schedule: GammaSchedule = GammaSchedule()
    averaging: str = "post"
    burn_in: int = 0

    def __post_init__(self):
        if self.averaging not in AVERAGING_MODES:
            raise ValueError(f"averaging must be one of {AVERAGING_MODES}, got {self.averaging!r}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


def sgd_init(
    theta0: float,
    schedule: GammaSchedule | None = None,
    averaging: str = "post",
    burn_in: int = 0,
) -> SignSgdState:
    if not math.isfinite(theta0):
        raise ValueError("theta0 must be finite")
    return SignSgdState(float(theta0), 0, 0.0, schedule or GammaSchedule(), averaging, burn_in)


def sgd_step(state: SignSgdState, x: float) -> tuple[int, SignSgdState]:
    message = sign(x - state.theta_curr)
    n = state.n + 1
    theta = state.theta_curr + gamma_at(state.schedule, n) * message
    averaged = theta if state.averaging == "post" else state.theta_curr
    total = state.sum_theta + averaged if n > state.burn_in else state.sum_theta
    return message, replace(state, theta_curr=theta, n=n, sum_theta=total)


def sgd_estimate(state: SignSgdState) -> float:
    used = state.n - state.burn_in
    if used < 1:
        raise ValueError("no averaged iterates yet; take at least one step past burn-in")
    return state.sum_theta / used


# --------------------------------------------------------------------------
# One-step optimal Bayes scheme


@dataclass(frozen=True)
class BayesState:
    posterior: GridDensity
    tau: float
    estimate: float
    n: int = 0


def bayes_init(prior: PriorSpec, m: int = 4096, tail_mass: float = 1e-9) -> BayesState:
    d = _post.grid_from_prior(prior, m, tail_mass)
    return BayesState(d, _post.solve_threshold(d), _post.conditional_mean(d), 0)


def bayes_encode(state: BayesState, x: float) -> int:
    return sign(x - state.tau)


def bayes_update(state: BayesState, message: int, sigma: float) -> BayesState:
    """Absorb one message; the same row kernel the Monte Carlo harness uses."""
    message = _check_message(message)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = state.posterior
    grid = _post._geometry(d)
    logw, start = _post._window(d)
    logw, start, mean, tau = _post._bayes_step(
        logw, start, np.array([float(message)]), np.array([state.tau]), float(sigma), grid
    )
    post = _post._from_window(d, logw[0], int(start[0]))
    return BayesState(post, float(tau[0]), float(mean[0]), state.n + 1)


# --------------------------------------------------------------------------
# Unconstrained baseline


def empirical_mean_step(running: tuple[float, int], x: float) -> tuple[float, int]:
    total, n = running
    return total + x, n + 1


def empirical_mean(running: tuple[float, int]) -> float:
    total, n = running
    if n < 1:
        raise ValueError("empirical mean of zero samples")
    return total / n


# --------------------------------------------------------------------------
# Mean-field diagnostics of the sign recursion


def psi(x, sigma: float):
    """E sgn(x + Z), Z ~ N(0, sigma^2); equals 2 Phi(x / sigma) - 1.

    The matching second moment E sgn^2(x + Z) is identically 1.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2.0 * std_normal_cdf(np.asarray(x, dtype=float) / sigma) - 1.0


def psi_prime0(sigma: float) -> float:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2.0 / (sigma * SQRT_2PI)


def asymptotic_variance(sigma: float) -> float:
    """chi(0) / psi'(0)^2 with chi = 1: the limit of n * MSE, pi sigma^2 / 2."""
    return 1.0 / psi_prime0(sigma) ** 2
