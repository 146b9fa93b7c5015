"""Estimator classes with an sklearn-style interface.

Each estimator consumes a stream of scalar samples through ``fit`` (start
over) or ``partial_fit`` (continue), records the one-bit messages it would
send, and exposes the current estimate as ``estimate_``. Hyper-parameters
live in ``__init__`` and are reachable through ``get_params`` /
``set_params``; fitted state carries a trailing underscore.

>>> est = SignSGDEstimator(beta=0.8).fit([0.3, -1.2, 0.8])
>>> est.messages_.tolist()
[1, -1, 1]
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import encoders
from ._validation import check_count, check_positive, check_samples
from .normal import GammaSchedule
from .posterior import PriorSpec, parse_prior


class _StreamingEstimator(BaseEstimator):
    def fit(self, X, y=None):
        """Reset and absorb the samples in ``X`` in order."""
        for attr in [a for a in vars(self) if a.endswith("_") and not a.startswith("_")]:
            delattr(self, attr)
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        xs = check_samples(X)
        if not hasattr(self, "n_samples_seen_"):
            self._start()
            self.messages_ = np.empty(0, dtype=np.int8)
            self.n_samples_seen_ = 0
        msgs = np.array([self._consume(float(x)) for x in xs], dtype=np.int8)
        self.messages_ = np.concatenate([self.messages_, msgs])
        self.n_samples_seen_ += xs.size
        self.estimate_ = self._current()
        return self

    def score(self, X=None, y=None, theta=None):
        """Negative squared error of the estimate against a known ``theta``."""
        check_is_fitted(self, "estimate_")
        if theta is None:
            raise ValueError("score needs the true theta")
        return -((self.estimate_ - float(theta)) ** 2)


class SignSGDEstimator(_StreamingEstimator):
    """Sign recursion with iterate averaging.

    theta_n = theta_{n-1} + n^-beta * sgn(x_n - theta_{n-1}); the estimate is
    the average of the iterates. Each message is the sign that drives the
    update, so the scheme sends exactly one bit per sample.

    Parameters
    ----------
    beta : float in (0, 1]
        Step-size exponent. Values in (2/3, 1) give the n MSE -> pi sigma^2 / 2
        guarantee.
    theta0 : float
        Starting iterate; the prior mean is the natural choice.
    averaging : {"post", "pre"}
        Average theta_1..theta_n ("post") or theta_0..theta_{n-1} ("pre").
    burn_in : int
        Number of leading iterates left out of the average.
    """

    def __init__(self, beta=0.8, theta0=0.0, averaging="post", burn_in=0):
        self.beta = beta
        self.theta0 = theta0
        self.averaging = averaging
        self.burn_in = burn_in

    def _start(self):
        check_count(self.burn_in, "burn_in", minimum=0)
        self.state_ = encoders.sgd_init(
            float(self.theta0), GammaSchedule(float(self.beta)), self.averaging, self.burn_in
        )

    def _consume(self, x):
        message, self.state_ = encoders.sgd_step(self.state_, x)
        return message

    def _current(self):
        self.theta_ = self.state_.theta_curr
        if self.state_.n <= self.state_.burn_in:
            return float("nan")
        return encoders.sgd_estimate(self.state_)


class OneStepBayesEstimator(_StreamingEstimator):
    """Greedy Bayes scheme with a grid posterior.

    Before each sample the threshold ``tau_`` is the fixed point
    tau = (m_minus(tau) + m_plus(tau)) / 2 of the current posterior; the
    message is sgn(x - tau), and the estimate is the posterior mean.

    Parameters
    ----------
    prior : PriorSpec or str
        Log-concave prior on theta, e.g. ``"cos2:0,3"`` or ``"gaussian:0,1"``.
    sigma : float
        Known noise standard deviation.
    grid_m : int
        Grid size for the posterior.
    tail_mass : float
        Probability left outside the grid for unbounded priors.
    """

    def __init__(self, prior="cos2:0,3", sigma=1.0, grid_m=4096, tail_mass=1e-9):
        self.prior = prior
        self.sigma = sigma
        self.grid_m = grid_m
        self.tail_mass = tail_mass

    def _start(self):
        prior = self.prior if isinstance(self.prior, PriorSpec) else parse_prior(self.prior)
        self._sigma = check_positive(self.sigma, "sigma")
        check_count(self.grid_m, "grid_m", minimum=64)
        self.state_ = encoders.bayes_init(prior, self.grid_m, self.tail_mass)

    def _consume(self, x):
        message = encoders.bayes_encode(self.state_, x)
        self.state_ = encoders.bayes_update(self.state_, message, self._sigma)
        return message

    def _current(self):
        self.tau_ = self.state_.tau
        self.posterior_ = self.state_.posterior
        return self.state_.estimate


class EmpiricalMeanEstimator(_StreamingEstimator):
    """Running sample mean; sees the raw samples rather than one bit each.

    ``messages_`` holds the signs of the samples only to keep the interface
    uniform; they play no role in the estimate.
    """

    def _start(self):
        self._running = (0.0, 0)

    def _consume(self, x):
        self._running = encoders.empirical_mean_step(self._running, x)
        return 1 if x >= 0 else -1

    def _current(self):
        return encoders.empirical_mean(self._running)
