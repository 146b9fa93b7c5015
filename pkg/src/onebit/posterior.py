"""Grid representation of log-concave priors and posteriors.

A :class:`GridDensity` stores log-density values on a uniform grid over
``[lo, hi]``; entries equal to ``-inf`` carry no mass, and the finite entries
always form one contiguous run (the support). Integrals use the trapezoid
rule over the whole grid.

The numerical kernels below work on *stacked rows*: a ``(K, W)`` array of
log-densities, each row a window of the common grid starting at ``start[k]``.
A single density is one row; the Monte Carlo harness advances many trials at
once through the same kernels. Every reduction inside the kernels is a
sequential ``cumsum`` and every other step is elementwise, so a row's result
does not depend on which other rows share the batch or on how much ``-inf``
padding surrounds it.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from .exceptions import (
    BracketError,
    DegenerateSplitError,
    GridExhaustedError,
    NotLogConcaveError,
)
from .normal import std_normal_quantile

MIN_GRID_SIZE = 64
# Grid points whose density falls below exp(LOG_FLOOR) * max are dropped
# from the support after each update; the discarded mass is < 1e-18.
LOG_FLOOR = -50.0
MIN_SIDE_MASS = 1e-12
THRESHOLD_ITERATIONS = 12
LOG_CONCAVITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Log-density on the uniform grid ``t_j = lo + j * (hi - lo) / (m - 1)``."""

    lo: float
    hi: float
    log_p: np.ndarray = field(repr=False)

    def __post_init__(self):
        log_p = np.array(self.log_p, dtype=float)
        if log_p.ndim != 1:
            raise ValueError("log_p must be one-dimensional")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"need finite lo < hi, got [{self.lo}, {self.hi}]")
        if log_p.size < MIN_GRID_SIZE:
            raise ValueError(f"grid needs at least {MIN_GRID_SIZE} points, got {log_p.size}")
        if np.isnan(log_p).any() or np.isposinf(log_p).any():
            raise ValueError("log_p contains nan or +inf")
        idx = np.flatnonzero(np.isfinite(log_p))
        if idx.size == 0:
            raise ValueError("density has no mass on the grid")
        if idx[-1] - idx[0] + 1 != idx.size:
            raise ValueError("support of the density must be contiguous")
        log_p.setflags(write=False)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "log_p", log_p)

    @property
    def m(self) -> int:
        return self.log_p.size

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.m - 1)

    @property
    def t(self) -> np.ndarray:
        return self.lo + np.arange(self.m) * self.step

    @property
    def support(self) -> tuple[int, int]:
        """First and last grid index with positive density."""
        idx = np.flatnonzero(np.isfinite(self.log_p))
        return int(idx[0]), int(idx[-1])

    def density(self) -> np.ndarray:
        return np.exp(self.log_p)

    def integral(self) -> float:
        p = self.density()
        return float(self.step * (p.sum() - 0.5 * (p[0] + p[-1])))

    def normalized(self) -> "GridDensity":
        finite = self.log_p[np.isfinite(self.log_p)]
        mx = finite.max()
        p = np.exp(self.log_p - mx)
        z = self.step * (p.sum() - 0.5 * (p[0] + p[-1]))
        if not (z > 0.0 and math.isfinite(z)):
            raise GridExhaustedError("density integrates to zero on its grid")
        return GridDensity(self.lo, self.hi, self.log_p - (mx + math.log(z)))

    def second_differences(self) -> np.ndarray:
        i0, i1 = self.support
        lp = self.log_p[i0 : i1 + 1]
        return lp[2:] - 2.0 * lp[1:-1] + lp[:-2]

    def is_log_concave(self, tol: float = LOG_CONCAVITY_TOL) -> bool:
        d2 = self.second_differences()
        return bool(d2.size == 0 or d2.max() <= tol)

    def to_csv(self, path) -> None:
        """Write columns ``t, density`` (for plotting and debugging)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "density"])
            for t, p in zip(self.t, self.density()):
                writer.writerow([repr(float(t)), repr(float(p))])

    @classmethod
    def from_csv(cls, path) -> "GridDensity":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
        except OSError as exc:
            raise OSError(f"cannot read density file {os.fspath(path)!r}: {exc}") from exc
        if not rows or set(rows[0]) != {"t", "density"}:
            raise ValueError(f"{os.fspath(path)!r}: expected columns t,density")
        t = np.array([float(r["t"]) for r in rows])
        p = np.array([float(r["density"]) for r in rows])
        if np.any(p < 0):
            raise ValueError(f"{os.fspath(path)!r}: negative density values")
        step = (t[-1] - t[0]) / (t.size - 1)
        if not np.allclose(np.diff(t), step, rtol=1e-6, atol=0.0):
            raise ValueError(f"{os.fspath(path)!r}: grid is not uniformly spaced")
        with np.errstate(divide="ignore"):
            log_p = np.log(p)
        return cls(float(t[0]), float(t[-1]), log_p).normalized()


def check_log_concave(d: GridDensity, tol: float = LOG_CONCAVITY_TOL) -> None:
    d2 = d.second_differences()
    if d2.size and d2.max() > tol:
        j = int(np.argmax(d2)) + d.support[0] + 1
        raise NotLogConcaveError(
            f"density is not log-concave: second difference {d2.max():.3g} at t={d.t[j]:.6g}"
        )


# --------------------------------------------------------------------------
# Priors


_FAMILIES = ("uniform", "gaussian", "cosine_squared", "explicit")
_ALIASES = {
    "uniform": "uniform",
    "gaussian": "gaussian",
    "normal": "gaussian",
    "cosine_squared": "cosine_squared",
    "cosine-squared": "cosine_squared",
    "cos2": "cosine_squared",
    "grid": "explicit",
    "explicit": "explicit",
}


@dataclass(frozen=True)
class PriorSpec:
    """Prior on the unknown mean.

    ``params`` is ``(a, b)`` for uniform, ``(mean, std)`` for gaussian and
    ``(center, half_width)`` for the cosine-squared density
    ``cos^2(pi (t - center) / (2 half_width)) / half_width``.
    """

    family: str
    params: tuple = ()
    grid: GridDensity | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown prior family {self.family!r}")
        params = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", params)
        if self.family == "explicit":
            if self.grid is None:
                raise ValueError("explicit prior needs a GridDensity")
            return
        if len(params) != 2 or not all(math.isfinite(v) for v in params):
            raise ValueError(f"{self.family} prior needs two finite parameters, got {params}")
        if self.family == "uniform" and not params[1] > params[0]:
            raise ValueError("uniform prior needs b > a")
        if self.family == "gaussian" and not params[1] > 0:
            raise ValueError("gaussian prior needs std > 0")
        if self.family == "cosine_squared" and not params[1] > 0:
            raise ValueError("cosine-squared prior needs half-width a > 0")

    @classmethod
    def uniform(cls, a: float, b: float) -> "PriorSpec":
        return cls("uniform", (a, b))

    @classmethod
    def gaussian(cls, mean: float, std: float) -> "PriorSpec":
        return cls("gaussian", (mean, std))

    @classmethod
    def cosine_squared(cls, center: float, half_width: float) -> "PriorSpec":
        return cls("cosine_squared", (center, half_width))

    @classmethod
    def explicit(cls, grid: GridDensity) -> "PriorSpec":
        check_log_concave(grid)
        return cls("explicit", (), grid.normalized())

    @property
    def mean(self) -> float:
        if self.family == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        if self.family == "explicit":
            return conditional_mean(self.grid)
        return self.params[0]

    @property
    def variance(self) -> float:
        if self.family == "uniform":
            return (self.params[1] - self.params[0]) ** 2 / 12.0
        if self.family == "gaussian":
            return self.params[1] ** 2
        if self.family == "cosine_squared":
            a = self.params[1]
            return a * a * (1.0 / 3.0 - 2.0 / math.pi**2)
        g = self.grid
        p = g.density()
        w = np.full(g.m, g.step)
        w[[0, -1]] *= 0.5
        mu = float(np.sum(w * g.t * p))
        return float(np.sum(w * (g.t - mu) ** 2 * p))

    @property
    def i0(self) -> float | None:
        """Location Fisher information, or None where it is undefined."""
        from .bounds import prior_fisher_info
        from .exceptions import UndefinedFisherInformationError

        try:
            return prior_fisher_info(self)
        except UndefinedFisherInformationError:
            return None

    def sample(self, u):
        """Inverse-cdf transform of uniforms ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.family == "uniform":
            a, b = self.params
            return a + (b - a) * u
        if self.family == "gaussian":
            mean, std = self.params
            return mean + std * std_normal_quantile(u)
        if self.family == "cosine_squared":
            center, a = self.params
            # cdf in v = pi (t - center) / (2a):  1/2 + (v + sin v cos v) / pi
            target = math.pi * (u - 0.5)
            lo = np.full(u.shape, -0.5 * math.pi)
            hi = np.full(u.shape, 0.5 * math.pi)
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                below = mid + np.sin(mid) * np.cos(mid) < target
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            return center + 2.0 * a * (0.5 * (lo + hi)) / math.pi
        g = self.grid
        p = g.density()
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * g.step * (p[1:] + p[:-1]))])
        return np.interp(u * cdf[-1], cdf, g.t)

    def to_grid(self, m: int = 4096, tail_mass: float = 1e-9) -> GridDensity:
        return grid_from_prior(self, m, tail_mass)

    def __str__(self) -> str:
        if self.family == "explicit":
            return f"explicit[{self.grid.lo:g},{self.grid.hi:g}]"
        name = {"cosine_squared": "cos2"}.get(self.family, self.family)
        return f"{name}:" + ",".join(f"{v:g}" for v in self.params)


def parse_prior(text: str) -> PriorSpec:
    """Parse ``uniform:a,b``, ``gaussian:mean,std``, ``cos2:center,a`` or ``grid:path.csv``."""
    name, sep, rest = text.strip().partition(":")
    family = _ALIASES.get(name.strip().lower())
    if not sep or family is None:
        raise ValueError(
            f"cannot parse prior {text!r}; expected uniform:a,b | gaussian:mean,std | "
            "cos2:center,half_width | grid:path.csv"
        )
    if family == "explicit":
        return PriorSpec.explicit(GridDensity.from_csv(rest.strip()))
    try:
        params = tuple(float(v) for v in rest.split(","))
    except ValueError:
        raise ValueError(f"cannot parse prior parameters in {text!r}") from None
    return PriorSpec(family, params)


def grid_from_prior(prior: PriorSpec, m: int = 4096, tail_mass: float = 1e-9) -> GridDensity:
    """Discretize a prior on ``m`` points.

    Unbounded (gaussian) priors are truncated to the central interval of
    probability ``1 - tail_mass``.
    """
    if m < MIN_GRID_SIZE:
        raise ValueError(f"grid size must be >= {MIN_GRID_SIZE}, got {m}")
    if prior.family == "explicit":
        check_log_concave(prior.grid)
        return prior.grid.normalized()
    if prior.family == "uniform":
        a, b = prior.params
        return GridDensity(a, b, np.full(m, -math.log(b - a)))
    if prior.family == "gaussian":
        if not 0.0 < tail_mass <= 1e-6:
            raise ValueError(f"tail_mass must lie in (0, 1e-6], got {tail_mass}")
        mean, std = prior.params
        half = std * float(std_normal_quantile(1.0 - 0.5 * tail_mass))
        lo, hi = mean - half, mean + half
        t = lo + np.arange(m) * ((hi - lo) / (m - 1))
        z = (t - mean) / std
        return GridDensity(lo, hi, -0.5 * z * z).normalized()
    center, a = prior.params
    lo, hi = center - a, center + a
    t = lo + np.arange(m) * ((hi - lo) / (m - 1))
    with np.errstate(divide="ignore"):
        log_p = 2.0 * np.log(np.abs(np.cos(0.5 * math.pi * (t - center) / a)))
    log_p[[0, -1]] = -np.inf
    return GridDensity(lo, hi, log_p).normalized()


# --------------------------------------------------------------------------
# Row kernels


class _Grid(NamedTuple):
    lo: float
    h: float
    m: int


class _Moments(NamedTuple):
    t: np.ndarray
    p: np.ndarray
    q: np.ndarray
    F: np.ndarray  # trapezoid integral of p from the window start to each node
    Q: np.ndarray  # same for t * p


def _geometry(d: GridDensity) -> _Grid:
    return _Grid(d.lo, d.step, d.m)


def _window(d: GridDensity) -> tuple[np.ndarray, np.ndarray]:
    """Support of ``d`` plus one zero-density neighbour on each side, as a row."""
    i0, i1 = d.support
    i0, i1 = max(i0 - 1, 0), min(i1 + 1, d.m - 1)
    return d.log_p[None, i0 : i1 + 1].copy(), np.array([i0])


def _from_window(d: GridDensity, row: np.ndarray, start: int) -> GridDensity:
    log_p = np.full(d.m, -np.inf)
    width = min(row.size, d.m - start)
    log_p[start : start + width] = row[:width]
    return GridDensity(d.lo, d.hi, log_p)


def _rows_t(grid: _Grid, start: np.ndarray, width: int) -> np.ndarray:
    return grid.lo + (start[:, None] + np.arange(width)) * grid.h


def _moments(logw: np.ndarray, start: np.ndarray, grid: _Grid) -> _Moments:
    k, w = logw.shape
    t = _rows_t(grid, start, w)
    p = np.exp(logw)
    q = t * p
    cell_p = 0.5 * grid.h * (p[:, :-1] + p[:, 1:])
    cell_q = 0.5 * grid.h * (q[:, :-1] + q[:, 1:])
    if int(start.max()) + w > grid.m:
        # a cell past the last grid node carries nothing
        inside = (start[:, None] + np.arange(1, w)) <= grid.m - 1
        cell_p = np.where(inside, cell_p, 0.0)
        cell_q = np.where(inside, cell_q, 0.0)
    F = np.zeros((k, w))
    Q = np.zeros((k, w))
    np.cumsum(cell_p, axis=1, out=F[:, 1:])
    np.cumsum(cell_q, axis=1, out=Q[:, 1:])
    return _Moments(t, p, q, F, Q)


def _absorb(logw, start, message, tau, sigma, grid: _Grid):
    """Multiply rows by Phi(message (t - tau) / sigma); trim; shift so each row max is 0."""
    t = _rows_t(grid, start, logw.shape[1])
    logw = logw + special.log_ndtr(message[:, None] * (t - tau[:, None]) / sigma)
    logw = logw - logw.max(axis=1, keepdims=True)
    return np.where(logw >= LOG_FLOOR, logw, -np.inf)


def _normalize(logw, mom: _Moments):
    total = mom.F[:, -1:]
    if not np.all(np.isfinite(total) & (total > 0.0)):
        raise GridExhaustedError("posterior mass vanished from the grid")
    return logw - np.log(total)


def _support_cols(logw):
    finite = np.isfinite(logw)
    w = logw.shape[1]
    first = np.argmax(finite, axis=1)
    last = w - 1 - np.argmax(finite[:, ::-1], axis=1)
    if np.any(last - first + 1 < 3):
        raise GridExhaustedError(
            "posterior support shrank below three grid points; use a finer grid or smaller n"
        )
    return first, last


def _shrink(logw, start, first, last, grid: _Grid):
    """Re-cut rows to their support plus one empty neighbour on each side."""
    w = logw.shape[1]
    new_start = np.maximum(start + first - 1, 0)
    new_end = np.minimum(start + last + 1, grid.m - 1)
    new_w = int((new_end - new_start).max()) + 1
    if new_w >= w:
        return logw, start
    cols = (new_start - start)[:, None] + np.arange(new_w)
    gathered = np.take_along_axis(logw, np.minimum(cols, w - 1), axis=1)
    return np.where(cols < w, gathered, -np.inf), new_start


def _conditional_mean_rows(mom: _Moments) -> np.ndarray:
    return mom.Q[:, -1] / mom.F[:, -1]


def _split(x, a, pa, pb, qa, qb, Fa, Qa, h):
    """Mass and first moment left of ``x`` inside the cell starting at ``a``."""
    dx = x - a
    px = pa + (pb - pa) * (dx / h)
    qx = qa + (qb - qa) * (dx / h)
    return Fa + 0.5 * dx * (pa + px), Qa + 0.5 * dx * (qa + qx)


def _half_means(x, left, q_left, total, q_total):
    right = total - left
    with np.errstate(divide="ignore", invalid="ignore"):
        m_minus = np.where(left > 0.0, q_left / left, x)
        m_plus = np.where(right > 0.0, (q_total - q_left) / right, x)
    return m_minus, m_plus


def _threshold_rows(mom: _Moments, first, last, grid: _Grid) -> np.ndarray:
    """Root of g(x) = x - (m_minus(x) + m_plus(x)) / 2 for every row.

    g is non-decreasing for log-concave densities, negative left of the
    support and positive right of it. The bracketing grid cell is located by
    bisection over node indices (bounded by each row's own support, so the
    search path does not depend on the batch layout), then refined by a fixed
    number of Illinois (modified regula falsi) steps.
    """
    t, p, q, F, Q = mom
    rows = np.arange(t.shape[0])
    total = F[:, -1]
    q_total = Q[:, -1]

    def g_at(col):
        tc = t[rows, col]
        mm, mp = _half_means(tc, F[rows, col], Q[rows, col], total, q_total)
        return tc - 0.5 * (mm + mp)

    lo = np.maximum(first - 1, 0)
    hi = np.minimum(last + 1, t.shape[1] - 1)
    if np.any(g_at(lo) >= 0.0) or np.any(g_at(hi) < 0.0):
        raise BracketError("fixed-point function has no sign change over the support")
    while True:
        active = hi - lo > 1
        if not active.any():
            break
        mid = (lo + hi) // 2
        neg = g_at(mid) < 0.0
        lo = np.where(active & neg, mid, lo)
        hi = np.where(active & ~neg, mid, hi)

    a0 = t[rows, lo]
    a, b = a0, t[rows, hi]
    fa, fb = g_at(lo), g_at(hi)
    pa, pb, qa, qb = p[rows, lo], p[rows, hi], q[rows, lo], q[rows, hi]
    Fa, Qa = F[rows, lo], Q[rows, lo]

    last_side = np.zeros(rows.size, dtype=np.int8)
    c = b
    for _ in range(THRESHOLD_ITERATIONS):
        c = (a * fb - b * fa) / (fb - fa)
        c = np.minimum(np.maximum(c, a), b)
        left, q_left = _split(c, a0, pa, pb, qa, qb, Fa, Qa, grid.h)
        mm, mp = _half_means(c, left, q_left, total, q_total)
        fc = c - 0.5 * (mm + mp)
        move_left = fc < 0.0
        fb = np.where(move_left & (last_side == -1), 0.5 * fb, fb)
        fa = np.where(~move_left & (last_side == 1), 0.5 * fa, fa)
        a = np.where(move_left, c, a)
        fa = np.where(move_left, fc, fa)
        b = np.where(move_left, b, c)
        fb = np.where(move_left, fb, fc)
        last_side = np.where(move_left, -1, 1).astype(np.int8)
    return c


def _bayes_step(logw, start, message, tau, sigma, grid: _Grid):
    """One message of the one-step scheme for every row.

    Returns the normalized, re-cut posterior rows, their start indices, the
    posterior means and the next thresholds.
    """
    logw = _absorb(logw, start, message, tau, sigma, grid)
    mom = _moments(logw, start, grid)
    first, last = _support_cols(logw)
    mean = _conditional_mean_rows(mom)
    tau_next = _threshold_rows(mom, first, last, grid)
    logw = _normalize(logw, mom)
    logw, start = _shrink(logw, start, first, last, grid)
    return logw, start, mean, tau_next


# --------------------------------------------------------------------------
# Public operations on single densities


def posterior_update(post: GridDensity, message: int, tau: float, sigma: float) -> GridDensity:
    """Posterior after observing ``message = sgn(X - tau)`` with ``X ~ N(theta, sigma^2)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if message not in (-1, 1):
        raise ValueError(f"message must be -1 or +1, got {message!r}")
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    grid = _geometry(post)
    logw, start = _window(post)
    logw = _absorb(logw, start, np.array([float(message)]), np.array([float(tau)]), float(sigma), grid)
    first, last = _support_cols(logw)
    logw = _normalize(logw, _moments(logw, start, grid))
    logw, start = _shrink(logw, start, first, last, grid)
    return _from_window(post, logw[0], int(start[0]))


def conditional_mean(d: GridDensity) -> float:
    logw, start = _window(d)
    return float(_conditional_mean_rows(_moments(logw, start, _geometry(d)))[0])


def truncated_means(d: GridDensity, tau: float) -> tuple[float, float]:
    """Means of ``d`` restricted to ``(-inf, tau]`` and ``[tau, inf)``."""
    if not d.lo < tau < d.hi:
        raise ValueError(f"tau={tau} must lie strictly inside [{d.lo}, {d.hi}]")
    grid = _geometry(d)
    logw, start = _window(d)
    t, p, q, F, Q = _moments(logw, start, grid)
    cell = min(int((tau - d.lo) // grid.h), d.m - 2)
    col = cell - int(start[0])
    total, q_total = F[0, -1], Q[0, -1]
    if col < 0:
        left = q_left = 0.0
    elif col >= logw.shape[1] - 1:
        left, q_left = total, q_total
    else:
        left, q_left = _split(
            tau, t[0, col], p[0, col], p[0, col + 1], q[0, col], q[0, col + 1],
            F[0, col], Q[0, col], grid.h,
        )
    if left < MIN_SIDE_MASS * total or total - left < MIN_SIDE_MASS * total:
        raise DegenerateSplitError(
            f"threshold {tau} leaves mass {left / total:.3g} / {1 - left / total:.3g} on the two sides"
        )
    m_minus, m_plus = _half_means(tau, left, q_left, total, q_total)
    return float(m_minus), float(m_plus)


def solve_threshold(d: GridDensity) -> float:
    """Unique ``tau`` with ``tau = (m_minus(tau) + m_plus(tau)) / 2``."""
    logw, start = _window(d)
    grid = _geometry(d)
    first, last = _support_cols(logw)
    return float(_threshold_rows(_moments(logw, start, grid), first, last, grid)[0])


def fixed_point_residual(d: GridDensity, tau: float) -> float:
    m_minus, m_plus = truncated_means(d, tau)
    return tau - 0.5 * (m_minus + m_plus)
