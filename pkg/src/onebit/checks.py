"""Randomized property suites for the Fisher-information lemmas and the bounds.

Every suite is seeded and returns :class:`CheckResult` records holding the
worst observed value next to the limit it was compared with; ``onebit check``
prints them and exits nonzero if any fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds
from .encoders import psi, psi_prime0
from .normal import TWO_OVER_PI, probit_weight, std_normal_cdf

SIGMAS = (0.5, 1.0, 2.0)
DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name:<22} observed={self.observed:.12g} limit={self.limit:.12g}"
        return f"{text}  ({self.detail})" if self.detail else text


def _result(name, observed, limit, detail="", below=True):
    passed = bool(observed <= limit) if below else bool(observed >= limit)
    return CheckResult(name, passed, float(observed), float(limit), detail)


def lemma1_suite(samples: int, rng: np.random.Generator, slack: float) -> list[CheckResult]:
    """Alternating-sum ratio on random non-increasing vectors of length 1..6."""
    lengths = rng.integers(1, 7, size=samples)
    worst, degenerate = -np.inf, 0
    for length in range(1, 7):
        count = int(np.sum(lengths == length))
        if count == 0:
            continue
        xs = -np.sort(-rng.normal(0.0, 3.0, size=(count, length)), axis=1)
        values, flags = bounds.lemma1_values(xs)
        worst = max(worst, float(values.max()))
        degenerate += int(flags.sum())
    at_zero = bounds.lemma1_expression([0.0])
    return [
        _result(
            "lemma1_bound",
            worst,
            TWO_OVER_PI + slack,
            f"{samples} vectors, {degenerate} degenerate",
        ),
        _result("lemma1_at_zero", abs(at_zero - TWO_OVER_PI), 1e-12, f"value {at_zero:.15g}"),
    ]


def _random_unions(rng, count, k):
    """``count`` unions of ``k`` disjoint intervals; outer ends are sometimes infinite."""
    ends = np.sort(rng.uniform(-10.0, 10.0, size=(count, 2 * k)), axis=1)
    ends[rng.random(count) < 0.25, 0] = -np.inf
    ends[rng.random(count) < 0.25, -1] = np.inf
    return ends


def lemma2_suite(samples: int, rng: np.random.Generator, slack: float) -> list[CheckResult]:
    """Fisher information of one-bit messages with interval-union acceptance regions."""
    ks = rng.integers(1, 5, size=samples)
    worst_gap, worst_scaled = -np.inf, -np.inf
    for k in range(1, 5):
        count = int(np.sum(ks == k))
        if count == 0:
            continue
        ends = _random_unions(rng, count, k)
        theta = rng.uniform(-5.0, 5.0, size=count)
        sigma = rng.choice(SIGMAS, size=count)
        # standardized endpoints in non-increasing order: b_k, a_k, ..., b_1, a_1
        xs = ((ends - theta[:, None]) / sigma[:, None])[:, ::-1]
        values, _ = bounds.lemma1_values(xs)
        info = values / sigma**2
        worst_gap = max(worst_gap, float(np.max(info - 2.0 / (math.pi * sigma**2))))
        worst_scaled = max(worst_scaled, float(np.max(values)))
    # cross-check the vectorized path against the scalar entry point
    ends = _random_unions(rng, 20, 3)
    mismatch = 0.0
    for row in ends:
        ivs = list(zip(row[0::2], row[1::2]))
        xs = np.array([[(e - 0.7) / 1.3 for e in row[::-1]]])
        direct = bounds.lemma1_values(xs)[0][0] / 1.3**2
        mismatch = max(mismatch, abs(bounds.fisher_info_interval_union(0.7, 1.3, ivs) - direct))

    threshold_err = 0.0
    for sigma in SIGMAS:
        for theta in rng.uniform(-5.0, 5.0, size=5):
            value = bounds.fisher_info_interval_union(theta, sigma, [(theta, math.inf)])
            threshold_err = max(threshold_err, abs(value - 2.0 / (math.pi * sigma**2)))
    return [
        _result(
            "lemma2_bound",
            worst_gap,
            slack,
            f"{samples} unions; max sigma^2 I = {worst_scaled:.12g} vs 2/pi",
        ),
        _result("lemma2_threshold", threshold_err, 1e-10, "A = (theta, inf)"),
        _result("lemma2_scalar_path", mismatch, 1e-15, "vectorized vs scalar evaluation"),
    ]


def probit_suite(rng: np.random.Generator, slack: float) -> list[CheckResult]:
    x = rng.uniform(-8.0, 8.0, size=10_000)
    dense = np.linspace(-8.0, 8.0, 16_001)
    sym = float(np.max(np.abs(probit_weight(x) - probit_weight(-x))))
    peak = float(np.max(probit_weight(np.concatenate([x, dense]))))
    a, b = np.abs(rng.uniform(-8.0, 8.0, size=(2, 10_000)))
    near, far = np.minimum(a, b), np.maximum(a, b)
    keep = far - near > 1e-9
    monotone = int(np.sum(probit_weight(near[keep]) <= probit_weight(far[keep])))
    return [
        _result("probit_symmetry", sym, 1e-13),
        _result("probit_maximum", peak, TWO_OVER_PI + 1e-12),
        _result("probit_monotone", monotone, 0, f"{int(keep.sum())} ordered pairs, count of violations"),
    ]


def fisher_fd_suite(rng: np.random.Generator) -> list[CheckResult]:
    """Analytic threshold Fisher information against finite differences of P(M = 1)."""
    h = 1e-5
    worst = 0.0
    for _ in range(200):
        sigma = float(rng.choice(SIGMAS))
        theta = float(rng.uniform(-3.0, 3.0))
        tau = theta + sigma * float(rng.uniform(-4.0, 4.0))
        p = float(std_normal_cdf((theta - tau) / sigma))
        dp = float(
            std_normal_cdf((theta + h - tau) / sigma) - std_normal_cdf((theta - h - tau) / sigma)
        ) / (2 * h)
        numeric = dp * dp / (p * (1.0 - p))
        analytic = bounds.threshold_fisher_info(theta, sigma, tau)
        worst = max(worst, abs(numeric - analytic) / analytic)
    return [_result("fisher_finite_diff", worst, 1e-5, "relative error, 200 thresholds")]


def psi_suite() -> list[CheckResult]:
    h = 1e-5
    fd_err, var_err = 0.0, 0.0
    for sigma in SIGMAS:
        fd = float(psi(h, sigma) - psi(-h, sigma)) / (2 * h)
        fd_err = max(fd_err, abs(fd / psi_prime0(sigma) - 1.0))
        target = math.pi * sigma**2 / 2.0
        var_err = max(var_err, abs(1.0 / psi_prime0(sigma) ** 2 / target - 1.0))
    return [
        _result("psi_prime_fd", fd_err, 1e-4, "relative, sigma in {0.5, 1, 2}"),
        _result("psi_asymptotic_var", var_err, 1e-8, "1/psi'(0)^2 vs pi sigma^2 / 2"),
    ]


def ceo_suite() -> list[CheckResult]:
    n = 10**6
    d_star = bounds.ceo_lower_bound(n, 1.0, 1.0)
    residual = abs(bounds.ceo_residual(d_star, n, 1.0, 1.0))
    gaps = [
        bounds.ceo_upper_bound(10**k, 1.0, 1.0) - bounds.ceo_lower_bound(10**k, 1.0, 1.0)
        for k in range(1, 7)
    ]
    return [
        _result("ceo_n_dstar", abs(n * d_star - 4.0 / 3.0), 0.01, f"n D* = {n * d_star:.9g}"),
        _result("ceo_residual", residual, 1e-9, "n = 1e6"),
        _result("ceo_ordering", min(gaps), 0.0, "min upper - lower over n = 10..1e6", below=False),
        _result(
            "ceo_gap_limit",
            abs(n * gaps[-1] / (1.0 / 3.0) - 1.0),
            0.05,
            f"n (upper - lower) = {n * gaps[-1]:.9g} vs 1/3",
        ),
    ]


def monotonicity_suite() -> list[CheckResult]:
    n_grid = np.unique(np.round(np.logspace(0, 5, 41)).astype(int))
    rep = bounds.bound_report(n_grid, 1.0, sigma_theta=1.0, i0=math.pi**2 / 9.0)
    worst = 0.0
    for curve in (rep.van_trees, rep.ceo_lower, rep.ceo_upper, rep.asymptote):
        worst = max(worst, float(np.max(np.diff(curve))))
    order = max(
        float(np.max(np.subtract(rep.ceo_lower, rep.ceo_upper))),
        float(np.max(np.subtract(rep.van_trees, rep.asymptote))),
    )
    return [
        _result("bounds_nonincreasing", worst, 0.0, "largest increase along n"),
        _result("bounds_ordering", order, 0.0, "ceo_lower <= ceo_upper, van_trees <= asymptote"),
    ]


def run_checks(samples: int = DEFAULT_SAMPLES, seed: int = 0, slack: float = 1e-9) -> list[CheckResult]:
    """All suites. ``samples`` random vectors for the alternating-sum bound and
    ``samples // 10`` interval unions for the per-message Fisher bound;
    ``slack`` is the tolerance added to both bounds."""
    if samples < 10:
        raise ValueError("samples must be >= 10")
    rng = np.random.default_rng(seed)
    results = []
    results += lemma1_suite(samples, rng, slack)
    results += lemma2_suite(samples // 10, rng, slack)
    results += probit_suite(rng, slack)
    results += fisher_fd_suite(rng)
    results += psi_suite()
    results += ceo_suite()
    results += monotonicity_suite()
    return results
