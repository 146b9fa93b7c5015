"""Monte Carlo risk curves for the one-bit schemes and the unconstrained mean.

Each trial draws theta from the prior and a stream X_1..X_n_max from
N(theta, sigma^2) with its own generator, seeded by
``trial_seed(master_seed, trial_index)``. All enabled schemes consume the
same stream. Trials are advanced in batches (rows of numpy arrays), but
every per-trial quantity is computed by elementwise operations or
row-sequential cumulative sums, so a trial's squared errors are identical
whatever batch or worker process it runs in.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import posterior as _post
from .normal import GammaSchedule, std_normal_quantile
from .posterior import PriorSpec, parse_prior

SCHEMES = ("sgd", "bayes", "empirical_mean")
ONE_BIT_SCHEMES = ("sgd", "bayes")
MASK64 = (1 << 64) - 1
TIME_CHUNK = 2048
MAX_BATCH = 256


def trial_seed(master_seed: int, trial_index: int) -> int:
    """SplitMix64 output for state ``master_seed + (trial_index + 1) * golden``."""
    z = (master_seed + (trial_index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def log_checkpoints(n_max: int, per_decade: int = 20) -> tuple[int, ...]:
    k_max = int(math.floor(per_decade * math.log10(n_max))) if n_max > 1 else 0
    pts = {int(round(10 ** (k / per_decade))) for k in range(k_max + 1)}
    pts.add(n_max)
    return tuple(sorted(p for p in pts if 1 <= p <= n_max))


@dataclass(frozen=True)
class SimConfig:
    prior: PriorSpec = field(default_factory=lambda: PriorSpec.uniform(-3.0, 3.0))
    sigma: float = 1.0
    n_max: int = 20000
    checkpoints: tuple | None = None
    trials: int = 500
    beta: float = 0.8
    grid_m: int = 4096
    schemes: tuple = SCHEMES
    master_seed: int = 0
    theta0: float | None = None
    averaging: str = "post"
    burn_in: int = 0
    bayes_max_n: int = 10_000
    tail_mass: float = 1e-9

    def __post_init__(self):
        if not (isinstance(self.sigma, (int, float)) and self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma: must be a positive number, got {self.sigma!r}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max: must be a positive integer, got {self.n_max!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials: must be >= 1, got {self.trials!r}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta: must lie in (0, 1), got {self.beta!r}")
        if self.grid_m < _post.MIN_GRID_SIZE:
            raise ValueError(f"grid_m: must be >= {_post.MIN_GRID_SIZE}, got {self.grid_m!r}")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"schemes: unknown scheme(s) {sorted(unknown)}; choose from {SCHEMES}")
        object.__setattr__(self, "schemes", tuple(s for s in SCHEMES if s in self.schemes))
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError("master_seed: must be a 64-bit unsigned integer")
        if self.averaging not in ("post", "pre"):
            raise ValueError(f"averaging: must be 'post' or 'pre', got {self.averaging!r}")
        if self.burn_in < 0 or self.burn_in >= self.n_max:
            raise ValueError("burn_in: must satisfy 0 <= burn_in < n_max")
        if self.bayes_max_n < 1:
            raise ValueError("bayes_max_n: must be >= 1")
        if self.theta0 is not None and not math.isfinite(self.theta0):
            raise ValueError("theta0: must be finite")
        cps = log_checkpoints(self.n_max) if self.checkpoints is None else tuple(self.checkpoints)
        cps = tuple(int(c) for c in cps)
        if not cps:
            raise ValueError("checkpoints: must not be empty")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints: must be strictly increasing")
        if cps[0] < 1 or cps[-1] > self.n_max:
            raise ValueError("checkpoints: must lie in [1, n_max]")
        if self.burn_in and cps[0] <= self.burn_in:
            raise ValueError("checkpoints: must exceed burn_in")
        object.__setattr__(self, "checkpoints", cps)
        object.__setattr__(self, "n_max", int(self.n_max))
        object.__setattr__(self, "trials", int(self.trials))

    @property
    def start_point(self) -> float:
        return self.prior.mean if self.theta0 is None else float(self.theta0)

    @property
    def bayes_horizon(self) -> int:
        return min(self.n_max, self.bayes_max_n)


@dataclass
class TrialResult:
    trial_index: int
    theta_true: float
    checkpoints: tuple
    sq_errors: dict  # scheme -> array over checkpoints; nan past the bayes horizon


@dataclass
class RiskCurve:
    """Per-scheme MSE, standard error and n * MSE at each checkpoint."""

    checkpoints: tuple
    mse: dict
    stderr: dict
    trials: int
    sigma: float | None = None

    @property
    def schemes(self) -> tuple:
        return tuple(self.mse)

    def n_mse(self, scheme: str) -> np.ndarray:
        return np.asarray(self.checkpoints, dtype=float) * self.mse[scheme]

    def n_mse_over_sigma2(self, scheme: str) -> np.ndarray:
        return self.n_mse(scheme) / self.sigma**2

    def at(self, scheme: str, n: int) -> tuple[float, float]:
        """(mse, stderr) of ``scheme`` at checkpoint ``n``."""
        i = self.checkpoints.index(n)
        return float(self.mse[scheme][i]), float(self.stderr[scheme][i])

    def rows(self):
        for scheme in sorted(self.mse):
            for i, n in enumerate(self.checkpoints):
                mse = self.mse[scheme][i]
                if np.isnan(mse):
                    continue
                yield n, scheme, float(mse), float(self.stderr[scheme][i]), float(n * mse)


# --------------------------------------------------------------------------
# Batched trial engine


def _open_uniform(gen: np.random.Generator, size: int) -> np.ndarray:
    u = gen.random(size)
    u[u == 0.0] = 2.0**-54
    return u


def _simulate_batch(config: SimConfig, trial_indices) -> tuple[np.ndarray, dict]:
    idx = list(trial_indices)
    k = len(idx)
    gens = [np.random.Generator(np.random.PCG64(trial_seed(config.master_seed, i))) for i in idx]
    theta_true = config.prior.sample(np.array([_open_uniform(g, 1)[0] for g in gens]))

    cps = np.array(config.checkpoints)
    record = np.zeros(config.n_max + 1, dtype=np.int64) - 1
    record[cps] = np.arange(cps.size)
    errors = {s: np.full((k, cps.size), np.nan) for s in config.schemes}

    run_sgd = "sgd" in config.schemes
    run_mean = "empirical_mean" in config.schemes
    run_bayes = "bayes" in config.schemes

    if run_sgd:
        schedule = GammaSchedule(config.beta)
        gammas = np.power(np.arange(1, config.n_max + 1, dtype=float), -schedule.beta)
        theta = np.full(k, config.start_point)
        theta_sum = np.zeros(k)
        post_avg = config.averaging == "post"
    if run_mean:
        x_sum = np.zeros(k)
    if run_bayes:
        d0 = _post.grid_from_prior(config.prior, config.grid_m, config.tail_mass)
        grid = _post._geometry(d0)
        row, s0 = _post._window(d0)
        logw = np.repeat(row, k, axis=0)
        start = np.repeat(s0, k)
        first, last = _post._support_cols(logw)
        tau = _post._threshold_rows(_post._moments(logw, start, grid), first, last, grid)

    for t0 in range(0, config.n_max, TIME_CHUNK):
        width = min(TIME_CHUNK, config.n_max - t0)
        z = std_normal_quantile(np.stack([_open_uniform(g, width) for g in gens]))
        x = theta_true[:, None] + config.sigma * z
        for j in range(width):
            n = t0 + j + 1
            xj = x[:, j]
            slot = record[n]
            if run_sgd:
                message = np.where(xj - theta >= 0.0, 1.0, -1.0)
                new_theta = theta + gammas[n - 1] * message
                if n > config.burn_in:
                    theta_sum = theta_sum + (new_theta if post_avg else theta)
                theta = new_theta
                if slot >= 0:
                    est = theta_sum / (n - config.burn_in)
                    errors["sgd"][:, slot] = (est - theta_true) ** 2
            if run_mean:
                x_sum = x_sum + xj
                if slot >= 0:
                    errors["empirical_mean"][:, slot] = (x_sum / n - theta_true) ** 2
            if run_bayes and n <= config.bayes_horizon:
                message = np.where(xj - tau >= 0.0, 1.0, -1.0)
                logw, start, est, tau = _post._bayes_step(
                    logw, start, message, tau, config.sigma, grid
                )
                if slot >= 0:
                    errors["bayes"][:, slot] = (est - theta_true) ** 2
    return theta_true, errors


def run_trial(config: SimConfig, trial_index: int) -> TrialResult:
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    try:
        theta, errors = _simulate_batch(config, [trial_index])
    except Exception as exc:
        raise RuntimeError(f"trial {trial_index} failed: {exc}") from exc
    return TrialResult(
        trial_index, float(theta[0]), config.checkpoints, {s: e[0] for s, e in errors.items()}
    )


def _run_block(args):
    config, indices = args
    try:
        return indices, _simulate_batch(config, indices)
    except Exception as exc:
        raise RuntimeError(f"trials {indices[0]}..{indices[-1]} failed: {exc}") from exc


def default_workers() -> int:
    value = os.environ.get("ONEBIT_WORKERS", "").strip()
    if not value:
        return 1
    workers = int(value)
    if workers < 1:
        raise ValueError(f"ONEBIT_WORKERS must be >= 1, got {value!r}")
    return workers


def run_trials(config: SimConfig, workers: int | None = None) -> tuple[np.ndarray, dict]:
    """Squared errors of every trial, as ``(theta_true, {scheme: (trials, checkpoints)})``."""
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n_blocks = max(workers, math.ceil(config.trials / MAX_BATCH))
    blocks = [b.tolist() for b in np.array_split(np.arange(config.trials), n_blocks) if b.size]

    theta = np.empty(config.trials)
    errors = {s: np.empty((config.trials, len(config.checkpoints))) for s in config.schemes}
    if workers == 1:
        results = map(_run_block, [(config, b) for b in blocks])
        _collect(results, theta, errors)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            _collect(pool.map(_run_block, [(config, b) for b in blocks]), theta, errors)
    return theta, errors


def _collect(results, theta, errors) -> None:
    for indices, (th, errs) in results:
        theta[indices] = th
        for s, e in errs.items():
            errors[s][indices] = e


def aggregate(config: SimConfig, errors: dict) -> RiskCurve:
    mse, stderr = {}, {}
    for scheme, e in errors.items():
        mse[scheme] = e.mean(axis=0)
        if config.trials > 1:
            stderr[scheme] = e.std(axis=0, ddof=1) / math.sqrt(config.trials)
        else:
            stderr[scheme] = np.where(np.isnan(e[0]), np.nan, 0.0)
    return RiskCurve(config.checkpoints, mse, stderr, config.trials, config.sigma)


def run_monte_carlo(config: SimConfig, workers: int | None = None) -> RiskCurve:
    _, errors = run_trials(config, workers)
    return aggregate(config, errors)


# --------------------------------------------------------------------------
# CSV and configuration files

CSV_HEADER = ("n", "scheme", "mse", "stderr", "n_mse")


def export_csv(curve: RiskCurve, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            for n, scheme, mse, se, n_mse in curve.rows():
                fh.write(f"{n},{scheme},{mse:.17g},{se:.17g},{n_mse:.17g}\n")
    except OSError as exc:
        raise OSError(f"cannot write risk curve to {os.fspath(path)!r}: {exc}") from exc


def read_csv(path) -> RiskCurve:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{os.fspath(path)!r}: unexpected header {header}")
        rows = [(int(r[0]), r[1], float(r[2]), float(r[3])) for r in reader]
    checkpoints = tuple(sorted({r[0] for r in rows}))
    pos = {n: i for i, n in enumerate(checkpoints)}
    mse, stderr = {}, {}
    for n, scheme, m, se in rows:
        if scheme not in mse:
            mse[scheme] = np.full(len(checkpoints), np.nan)
            stderr[scheme] = np.full(len(checkpoints), np.nan)
        mse[scheme][pos[n]] = m
        stderr[scheme][pos[n]] = se
    return RiskCurve(checkpoints, mse, stderr, trials=0)


_INT_KEYS = {"n_max", "trials", "grid_m", "master_seed", "burn_in", "bayes_max_n"}
_FLOAT_KEYS = {"sigma", "beta", "theta0", "tail_mass"}
_KEY_ALIASES = {"seed": "master_seed", "n-max": "n_max"}


def _convert(key: str, value: str):
    value = value.strip()
    try:
        if key in _INT_KEYS:
            return int(value, 0)
        if key in _FLOAT_KEYS:
            return None if key == "theta0" and value.lower() in ("", "prior_mean") else float(value)
        if key == "prior":
            return parse_prior(value)
        if key == "schemes":
            return tuple(s.strip() for s in value.split(",") if s.strip())
        if key == "averaging":
            return value
        if key == "checkpoints":
            return _parse_checkpoints(value)
    except ValueError as exc:
        raise ValueError(f"{key}: invalid value {value!r} ({exc})") from None
    raise ValueError(f"{key}: unknown configuration key")


def _parse_checkpoints(value: str):
    if value.lower().startswith("log"):
        _, _, per = value.partition(":")
        return ("log", int(per) if per else 20)
    return tuple(int(v) for v in value.split(","))


def config_from_mapping(values: dict) -> SimConfig:
    kwargs = {}
    for raw_key, raw in values.items():
        key = _KEY_ALIASES.get(raw_key.strip(), raw_key.strip())
        kwargs[key] = _convert(key, raw) if isinstance(raw, str) else raw
    cps = kwargs.get("checkpoints")
    if isinstance(cps, tuple) and cps and cps[0] == "log":
        n_max = kwargs.get("n_max", SimConfig.n_max)
        kwargs["checkpoints"] = log_checkpoints(n_max, cps[1])
    try:
        return SimConfig(**kwargs)
    except TypeError as exc:
        raise ValueError(str(exc)) from None


def read_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, delimiters=("=",)
    )
    parser.optionxform = str
    parser.read_string("[sim]\n" + text)
    return dict(parser["sim"])


def load_config(path, overrides: dict | None = None) -> SimConfig:
    """Read a key-value configuration file; ``overrides`` take precedence."""
    try:
        with open(path) as fh:
            values = read_config_text(fh.read())
    except OSError as exc:
        raise OSError(f"cannot read configuration {os.fspath(path)!r}: {exc.strerror}") from exc
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "checkpoints" in values and isinstance(values["checkpoints"], str) and "n_max" in (overrides or {}):
        # explicit checkpoint lists are clipped to an overridden horizon
        n_max = int(values["n_max"])
        cps = _parse_checkpoints(values["checkpoints"])
        if cps and cps[0] != "log":
            kept = [c for c in cps if c <= n_max]
            if not kept or kept[-1] != n_max:
                kept.append(n_max)
            values["checkpoints"] = tuple(kept)
    return config_from_mapping(values)


def with_overrides(config: SimConfig, **changes) -> SimConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
