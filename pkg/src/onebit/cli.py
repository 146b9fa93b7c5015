"""Command-line entry point: ``onebit simulate | bounds | check | fixed-point``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time

import numpy as np

from . import bounds, checks, simulation
from .exceptions import OneBitError, UndefinedFisherInformationError
from .posterior import (
    grid_from_prior,
    parse_prior,
    solve_threshold,
    truncated_means,
)

log = logging.getLogger("onebit")

DEFAULT_BOUND_N = [10**k for k in range(1, 7)]


class CliError(Exception):
    """Error reported to the user without a traceback."""


# --------------------------------------------------------------------------
# simulate


def _simulation_config(args) -> simulation.SimConfig:
    overrides = {
        "sigma": args.sigma,
        "trials": args.trials,
        "master_seed": args.seed,
        "beta": args.beta,
        "n_max": args.n_max,
        "prior": args.prior,
        "schemes": args.schemes,
        "theta0": args.theta0,
        "grid_m": args.grid_m,
        "bayes_max_n": args.bayes_max_n,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    # inline overrides go through the same parser as file values
    as_text = {k: (v if isinstance(v, str) else repr(v)) for k, v in overrides.items()}
    if args.config:
        return simulation.load_config(args.config, as_text)
    return simulation.config_from_mapping(as_text)


def _summary(config: simulation.SimConfig, curve: simulation.RiskCurve) -> str:
    sigma2 = config.sigma**2
    i0 = config.prior.i0
    lines = [
        f"prior {config.prior}  sigma {config.sigma:g}  trials {config.trials}  "
        f"beta {config.beta:g}  seed {config.master_seed}",
        f"{'scheme':<16}{'n':>8}{'n*MSE':>12}{'+/-2se':>10}{'n*MSE/s^2':>12}{'reference':>12}",
    ]
    for scheme in curve.schemes:
        finite = np.flatnonzero(~np.isnan(curve.mse[scheme]))
        if finite.size == 0:
            continue
        i = finite[-1]
        n = curve.checkpoints[i]
        n_mse = n * curve.mse[scheme][i]
        ref = sigma2 if scheme == "empirical_mean" else math.pi * sigma2 / 2.0
        lines.append(
            f"{scheme:<16}{n:>8}{n_mse:>12.5f}{2 * n * curve.stderr[scheme][i]:>10.5f}"
            f"{n_mse / sigma2:>12.5f}{ref:>12.5f}"
        )
    lines.append(f"reference pi*sigma^2/2 = {math.pi * sigma2 / 2.0:.4f}")
    if i0 is not None:
        n = config.checkpoints[-1]
        vt = n * bounds.van_trees_bound(n, config.sigma, i0)
        lines.append(f"van Trees n*bound at n={n}: {vt:.4f} (I0 = {i0:.6g})")
    else:
        lines.append("van Trees bound: not applicable (prior Fisher information undefined)")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    config = _simulation_config(args)
    log.info("config: %s", config)
    workers = args.workers if args.workers is not None else simulation.default_workers()
    started = time.perf_counter()
    curve = simulation.run_monte_carlo(config, workers)
    log.info("%d trials in %.1f s on %d worker(s)", config.trials, time.perf_counter() - started, workers)
    simulation.export_csv(curve, args.out)
    print(_summary(config, curve))
    print(f"wrote {args.out}")
    return 0


# --------------------------------------------------------------------------
# bounds


def cmd_bounds(args) -> int:
    i0 = args.i0
    if args.prior is not None:
        prior = parse_prior(args.prior)
        try:
            i0 = bounds.prior_fisher_info(prior)
        except UndefinedFisherInformationError as exc:
            raise CliError(
                f"van Trees bound unavailable for prior {prior}: {exc}. The bound assumes a prior "
                "density that vanishes at the endpoints of its support."
            ) from None
    if i0 is None and args.sigma_theta is None:
        raise CliError("give --i0 or --prior (van Trees) and/or --sigma-theta (CEO bounds)")
    if args.sigma_theta is not None and not args.sigma_theta > 0:
        raise CliError("--sigma-theta must be positive")
    if any(n < 1 for n in args.n):
        raise CliError("--n values must be >= 1")
    rep = bounds.bound_report(args.n, args.sigma, args.sigma_theta, i0)
    if args.out in (None, "-"):
        rep.to_csv(sys.stdout)
    else:
        with open(args.out, "w") as fh:
            rep.to_csv(fh)
    return 0


# --------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    results = checks.run_checks(args.samples, args.seed, args.slack)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


# --------------------------------------------------------------------------
# fixed-point


def cmd_fixed_point(args) -> int:
    prior = parse_prior(args.prior)
    d = grid_from_prior(prior, args.grid_m, args.tail_mass)
    tau = solve_threshold(d)
    m_minus, m_plus = truncated_means(d, tau)
    print(f"prior     {prior}")
    print(f"tau       {tau:.12g}")
    print(f"m_minus   {m_minus:.12g}")
    print(f"m_plus    {m_plus:.12g}")
    print(f"residual  {tau - 0.5 * (m_minus + m_plus):.3e}")
    return 0


# --------------------------------------------------------------------------


def _positive_float(text):
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit",
        description="Mean estimation of a Gaussian from adaptive one-bit messages.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sim = sub.add_parser(
        "simulate",
        parents=[common],
        help="Monte Carlo risk curves",
        description="Run the Monte Carlo experiment and write the risk curve CSV. "
        "Inline options override values from --config.",
    )
    sim.add_argument("--config", help="key = value configuration file")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.add_argument("--sigma", type=float, help="noise standard deviation")
    sim.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    sim.add_argument("--seed", type=int, help="master seed (64-bit unsigned)")
    sim.add_argument("--beta", type=float, help="step-size exponent of the sign recursion")
    sim.add_argument("--n-max", dest="n_max", type=int, help="samples per trial")
    sim.add_argument("--prior", help="prior, e.g. uniform:-3,3 or cos2:0,3")
    sim.add_argument("--schemes", help="comma-separated subset of sgd,bayes,empirical_mean")
    sim.add_argument("--theta0", type=float, help="starting iterate of the sign recursion")
    sim.add_argument("--grid-m", dest="grid_m", type=int, help="posterior grid size")
    sim.add_argument("--bayes-max-n", dest="bayes_max_n", type=int, help="horizon of the Bayes scheme")
    sim.add_argument(
        "--workers", type=int, help="worker processes (default: $ONEBIT_WORKERS or 1)"
    )
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser(
        "bounds",
        parents=[common],
        help="van Trees and CEO bounds as CSV",
        description="Evaluate the lower and upper bounds on a grid of n.",
    )
    bnd.add_argument("--sigma", type=_positive_float, required=True, help="noise standard deviation")
    bnd.add_argument("--sigma-theta", dest="sigma_theta", type=float, help="prior std for the CEO bounds")
    src = bnd.add_mutually_exclusive_group()
    src.add_argument("--i0", type=float, help="prior Fisher information for the van Trees bound")
    src.add_argument("--prior", help="prior whose Fisher information feeds the van Trees bound")
    bnd.add_argument(
        "--n", type=int, nargs="+", default=DEFAULT_BOUND_N, help="sample sizes (default 10..1e6)"
    )
    bnd.add_argument("--out", help="output CSV (default: standard output)")
    bnd.set_defaults(func=cmd_bounds)

    chk = sub.add_parser(
        "check",
        parents=[common],
        help="property suites for the Fisher-information lemmas and bounds",
        description="Run seeded property checks; exit status 1 if any fails.",
    )
    chk.add_argument(
        "--samples",
        type=int,
        default=checks.DEFAULT_SAMPLES,
        help="random vectors for the alternating-sum bound (a tenth as many interval unions)",
    )
    chk.add_argument("--seed", type=int, default=0, help="seed of the random test cases")
    chk.add_argument("--slack", type=float, default=1e-9, help="tolerance added to the 2/pi bounds")
    chk.set_defaults(func=cmd_check)

    fp = sub.add_parser(
        "fixed-point",
        parents=[common],
        help="solve tau = (m_minus(tau) + m_plus(tau)) / 2 for a prior",
        description="Print the fixed-point threshold of a log-concave prior with its truncated means.",
    )
    fp.add_argument("--prior", required=True, help="prior, e.g. gaussian:0,1 or grid:density.csv")
    fp.add_argument("--grid-m", dest="grid_m", type=int, default=4096, help="grid size")
    fp.add_argument("--tail-mass", dest="tail_mass", type=float, default=1e-9, help="mass cut from gaussian tails")
    fp.set_defaults(func=cmd_fixed_point)
    return parser


def _configure_logging(verbose: bool) -> None:
    # a fresh handler per call so repeated in-process calls follow the current sys.stderr
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except (CliError, OneBitError, ValueError, OSError) as exc:
        print(f"onebit {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
