"""Risk bounds for one-bit mean estimation and the Fisher-information lemmas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BracketError, UndefinedFisherInformationError
from .normal import interval_mass, std_normal_pdf
from .posterior import PriorSpec

LN2 = math.log(2.0)


def van_trees_bound(n, sigma: float, i0: float | None):
    """Lower bound pi sigma^2 / (2 n + pi sigma^2 I0) on the Bayes MSE."""
    if i0 is None or not math.isfinite(i0):
        raise UndefinedFisherInformationError(
            "the van Trees bound needs a finite prior Fisher information I0; the prior density "
            "must vanish at the endpoints of its support (a uniform prior does not)"
        )
    if i0 < 0:
        raise ValueError("I0 must be >= 0")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    n = np.asarray(n, dtype=float)
    out = math.pi * sigma**2 / (2.0 * n + math.pi * sigma**2 * i0)
    return float(out) if out.ndim == 0 else out


def prior_fisher_info(prior: PriorSpec) -> float:
    """Location Fisher information E (d/dtheta log pi(theta))^2 of the prior."""
    if prior.family == "gaussian":
        return 1.0 / prior.params[1] ** 2
    if prior.family == "cosine_squared":
        return math.pi**2 / prior.params[1] ** 2
    if prior.family == "uniform":
        raise UndefinedFisherInformationError(
            "uniform prior: density does not vanish at the endpoints, so I0 is undefined"
        )
    g = prior.grid
    p = g.density()
    if max(p[0], p[-1]) > 1e-8 * p.max():
        raise UndefinedFisherInformationError(
            "explicit prior: density does not vanish at the ends of its grid, so I0 is undefined"
        )
    # int (pi')^2 / pi = int pi * score^2, with the score by central differences
    i0, i1 = g.support
    lp = g.log_p[i0 : i1 + 1]
    if lp.size < 3:
        raise UndefinedFisherInformationError("explicit prior support is too narrow")
    score = np.gradient(lp, g.step)
    integrand = p[i0 : i1 + 1] * score**2
    return float(g.step * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1])))


# --------------------------------------------------------------------------
# CEO (remote source coding) bounds


def _ceo_excess(d: float, n: int, sigma: float, sigma_theta: float) -> float:
    """Sum-rate implied by distortion ``d`` minus the available ``n`` bits.

    Rate in bits: (1/2) log2[ (s_t^2 / d) (d n / (d n - s^2 + d s^2 / s_t^2))^n ],
    truncated at zero from below. Decreasing in ``d``.
    """
    s2, st2 = sigma * sigma, sigma_theta * sigma_theta
    # d n / (d n - s2 + d s2 / st2) = 1 / (1 - r),  r = (s2 - d s2 / st2) / (d n)
    r = (s2 - d * s2 / st2) / (d * n)
    log_arg = math.log(st2 / d) - n * math.log1p(-r)
    return 0.5 * max(log_arg, 0.0) / LN2 - n


def ceo_residual(d: float, n: int, sigma: float, sigma_theta: float) -> float:
    return -_ceo_excess(d, n, sigma, sigma_theta)


def ceo_lower_bound(n: int, sigma: float, sigma_theta: float) -> float:
    """Distortion D* of the Gaussian CEO with n terminals and sum rate n bits.

    Solved by bisection on the implicit sum-rate equation. The admissible
    range starts just above sigma^2 / (n + sigma^2 / sigma_theta^2), where the
    rate diverges, and ends at sigma_theta^2 (zero rate). Bisection runs until
    the bracket stops shrinking: the equation's slope grows like n / D, so a
    looser relative tolerance on D leaves a residual of order n * rtol.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (sigma > 0 and sigma_theta > 0):
        raise ValueError("sigma and sigma_theta must be positive")
    d_min = sigma**2 / (n + sigma**2 / sigma_theta**2)
    lo = d_min * (1.0 + 1e-12)
    hi = sigma_theta**2
    f_lo = _ceo_excess(lo, n, sigma, sigma_theta)
    f_hi = _ceo_excess(hi, n, sigma, sigma_theta)
    if not (f_lo > 0.0 > f_hi):
        raise BracketError(f"CEO equation not bracketed on [{lo}, {hi}] ({f_lo}, {f_hi})")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _ceo_excess(mid, n, sigma, sigma_theta) > 0.0:
            lo = mid
        else:
            hi = mid
    # return whichever end leaves the smaller residual
    if abs(_ceo_excess(lo, n, sigma, sigma_theta)) < abs(_ceo_excess(hi, n, sigma, sigma_theta)):
        return lo
    return hi


def ceo_upper_bound(n, sigma: float, sigma_theta: float):
    """(1 / sigma_theta^2 + 3 n / (4 sigma^2 + sigma_theta^2))^-1."""
    n = np.asarray(n, dtype=float)
    out = 1.0 / (1.0 / sigma_theta**2 + 3.0 * n / (4.0 * sigma**2 + sigma_theta**2))
    return float(out) if out.ndim == 0 else out


def asymptote(n, sigma: float):
    n = np.asarray(n, dtype=float)
    out = math.pi * sigma**2 / (2.0 * n)
    return float(out) if out.ndim == 0 else out


@dataclass
class BoundReport:
    """All bound curves on a grid of n; entries are None where not computable."""

    n_grid: list
    sigma: float
    sigma_theta: float | None = None
    i0: float | None = None
    van_trees: list | None = None
    ceo_lower: list | None = None
    ceo_upper: list | None = None
    asymptote: list | None = None

    COLUMNS = ("n", "van_trees", "ceo_lower", "ceo_upper", "asymptote")

    def rows(self):
        for i, n in enumerate(self.n_grid):
            yield (
                n,
                None if self.van_trees is None else self.van_trees[i],
                None if self.ceo_lower is None else self.ceo_lower[i],
                None if self.ceo_upper is None else self.ceo_upper[i],
                self.asymptote[i],
            )

    def to_csv(self, fh) -> None:
        fh.write(",".join(self.COLUMNS) + "\n")
        for row in self.rows():
            cells = [str(row[0])] + ["" if v is None else f"{v:.17g}" for v in row[1:]]
            fh.write(",".join(cells) + "\n")


def bound_report(
    n_grid,
    sigma: float,
    sigma_theta: float | None = None,
    i0: float | None = None,
    van_trees: bool = True,
) -> BoundReport:
    n_grid = [int(n) for n in n_grid]
    rep = BoundReport(n_grid, sigma, sigma_theta, i0)
    rep.asymptote = [asymptote(n, sigma) for n in n_grid]
    if van_trees and i0 is not None:
        rep.van_trees = [van_trees_bound(n, sigma, i0) for n in n_grid]
    if sigma_theta is not None:
        rep.ceo_lower = [ceo_lower_bound(n, sigma, sigma_theta) for n in n_grid]
        rep.ceo_upper = [ceo_upper_bound(n, sigma, sigma_theta) for n in n_grid]
    return rep


# --------------------------------------------------------------------------
# Fisher information of a single one-bit message


def _alternating_parts(xs: np.ndarray):
    """Numerator and the two masses of the alternating-sum expression.

    ``xs`` has shape (N, L) with every row sorted non-increasingly. The
    alternating cdf sum equals the Gaussian mass of
    (x2, x1) u (x4, x3) u ... [u (-inf, x_L) when L is odd] and its
    complement is (x1, inf) u (x3, x2) u ...; both are sums of non-negative
    interval masses, which avoids cancellation.
    """
    n_rows, length = xs.shape
    signs = np.where(np.arange(length) % 2 == 0, 1.0, -1.0)
    numerator = (std_normal_pdf(xs) * signs).sum(axis=1)

    padded = np.concatenate(
        [np.full((n_rows, 1), np.inf), xs, np.full((n_rows, 1), -np.inf)], axis=1
    )
    upper, lower = padded[:, :-1], padded[:, 1:]
    masses = interval_mass(lower, upper)
    # interval i runs from padded[i+1] to padded[i]; even i lies in the complement
    inside = masses[:, 1::2].sum(axis=1)
    outside = masses[:, 0::2].sum(axis=1)
    return numerator, inside, outside


def lemma1_values(xs) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized alternating-sum ratio for each row of ``xs``.

    Returns ``(values, degenerate)``; rows whose alternating cdf sum is not
    strictly inside (0, 1) get value 0 and ``degenerate=True``.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] == 0:
        raise ValueError("need at least one point")
    if np.any(np.diff(xs, axis=1) > 0):
        raise ValueError("points must be sorted in non-increasing order")
    numerator, inside, outside = _alternating_parts(xs)
    degenerate = ~((inside > 0.0) & (outside > 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(degenerate, 0.0, numerator**2 / (inside * outside))
    return values, degenerate


def lemma1_expression(xs, with_flag: bool = False):
    """(sum (-1)^{k+1} phi(x_k))^2 / (D (1 - D)), D = sum (-1)^{k+1} Phi(x_k).

    Bounded by 2/pi for every non-increasing ``xs``.
    """
    values, degenerate = lemma1_values(np.asarray(xs, dtype=float)[None, :])
    if with_flag:
        return float(values[0]), bool(degenerate[0])
    return float(values[0])


def _standardized_endpoints(theta: float, sigma: float, intervals) -> np.ndarray:
    ivs = [(float(a), float(b)) for a, b in intervals]
    for a, b in ivs:
        if not a < b:
            raise ValueError(f"interval ({a}, {b}) is empty")
    ivs.sort()
    for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
        if a1 < b0:
            raise ValueError("intervals overlap")
    points = []
    for a, b in reversed(ivs):
        points.extend([(b - theta) / sigma, (a - theta) / sigma])
    return np.array(points)


def fisher_info_interval_union(theta: float, sigma: float, intervals) -> float:
    """Fisher information about theta of the bit 1{X in union of intervals}.

    X ~ N(theta, sigma^2); endpoints may be infinite. A region covering the
    whole line (or nothing) carries no information and gives 0.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if len(intervals) == 0:
        return 0.0
    xs = _standardized_endpoints(theta, sigma, intervals)
    return lemma1_expression(xs) / sigma**2


def threshold_fisher_info(theta: float, sigma: float, tau: float) -> float:
    """Fisher information of sgn(X - tau); equals probit_weight((tau - theta)/sigma) / sigma^2."""
    return fisher_info_interval_union(theta, sigma, [(tau, math.inf)])
