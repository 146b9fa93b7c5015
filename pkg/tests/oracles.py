"""Reference values computed independently of the package.

Normal functions come from ``math.erfc``; integrals use adaptive quadrature
on the continuous densities rather than the package's grid rules.
"""

import math

import numpy as np
from scipy import integrate


def phi(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def Phi(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def log_Phi_asymptotic(x):
    """log Phi(x) for x << 0 from the Mills-ratio series (five terms)."""
    z = -x
    series = 1 - 1 / z**2 + 3 / z**4 - 15 / z**6 + 105 / z**8
    return -0.5 * z * z - math.log(z * math.sqrt(2.0 * math.pi)) + math.log(series)


def probit_weight(x):
    return phi(x) ** 2 / (Phi(x) * Phi(-x))


def quad(f, a, b, **kw):
    kw.setdefault("epsabs", 1e-13)
    kw.setdefault("epsrel", 1e-12)
    kw.setdefault("limit", 200)
    return integrate.quad(f, a, b, **kw)[0]


def posterior_mean(prior_pdf, a, b, factors):
    """Mean of prior(t) * prod Phi(m (t - tau) / sigma) over [a, b]; factors = [(m, tau, sigma)]."""

    def w(t):
        out = prior_pdf(t)
        for m, tau, sigma in factors:
            out *= Phi(m * (t - tau) / sigma)
        return out

    z = quad(w, a, b)
    return quad(lambda t: t * w(t), a, b) / z


def truncated_means(pdf, a, b, tau):
    left = quad(pdf, a, tau)
    right = quad(pdf, tau, b)
    return quad(lambda t: t * pdf(t), a, tau) / left, quad(lambda t: t * pdf(t), tau, b) / right


def ceo_rate_bits(d, n, sigma, sigma_theta):
    """Sum rate from the implicit equation, evaluated directly (no log1p rewrite)."""
    s2, st2 = sigma**2, sigma_theta**2
    inner = d * n / (d * n - s2 + d * s2 / st2)
    return 0.5 * (math.log2(st2 / d) + n * math.log2(inner))


def cos2_pdf(center, a):
    return lambda t: math.cos(math.pi * (t - center) / (2 * a)) ** 2 / a if abs(t - center) <= a else 0.0


def lemma1_direct(xs):
    """The alternating-sum ratio evaluated literally from the definition."""
    num = sum((-1) ** k * phi(x) for k, x in enumerate(xs))
    delta = sum((-1) ** k * Phi(x) for k, x in enumerate(xs))
    return num * num / (delta * (1 - delta))


def random_log_concave_grid(rng, m=1024):
    """A random log-concave log-density on [lo, hi]: a concave piecewise-quadratic shape."""
    lo = float(rng.uniform(-5, 0))
    hi = lo + float(rng.uniform(1, 8))
    t = np.linspace(lo, hi, m)
    center = float(rng.uniform(lo, hi))
    scale = float(rng.uniform(0.2, 3.0))
    skew = float(rng.uniform(-1.5, 1.5))
    kind = int(rng.integers(3))
    z = (t - center) / scale
    if kind == 0:
        log_p = -0.5 * z * z + skew * z
    elif kind == 1:
        log_p = -np.abs(z) + skew * z * (abs(skew) < 1)
    else:
        log_p = skew * z - np.logaddexp(0.0, 3.0 * z) - 0.1 * z * z
    return lo, hi, log_p
