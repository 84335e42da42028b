"""Endpoint laws of the excursion and the 3d Bessel process, and their ratio.

At time ``t`` the normalized excursion has the Maxwell law with scale
``sqrt(t (1 - t))`` and the Bessel-3 process from 0 the Maxwell law with scale
``sqrt(t)``. At ``t = 1/2`` the ratio of the two densities is
``Z(x) = exp(x**2) / (2 sqrt 2)``; ``Z**p`` is integrable against the excursion
law exactly when ``p < 2``.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import snake as sn
from .rng import child_seed, stream

WHICH = ("excursion", "bessel3")

# beyond this many scale units the Maxwell tail mass is far below 1e-12
_TAIL_SCALES = 12.0


def _check_x(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    return x


def excursion_endpoint_pdf(x, t):
    """Density of the normalized excursion at time ``t``."""
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    x = _check_x(x)
    s = t * (1.0 - t)
    out = 2.0 * x * x / np.sqrt(2.0 * np.pi * s ** 3) * np.exp(-x * x / (2.0 * s))
    return out if out.ndim else float(out)


def bessel_endpoint_pdf(x, t):
    """Density at time ``t`` of the 3d Bessel process started at 0."""
    if not t > 0.0:
        raise ValueError("t must be positive")
    x = _check_x(x)
    out = 2.0 * x * x / np.sqrt(2.0 * np.pi * t ** 3) * np.exp(-x * x / (2.0 * t))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class EndpointLaw:
    which: str
    t: float

    def __post_init__(self):
        if self.which not in WHICH:
            raise ValueError(f"which must be one of {WHICH}")
        self.pdf(1.0)

    @property
    def scale(self):
        return math.sqrt(self.t * (1.0 - self.t) if self.which == "excursion" else self.t)

    @property
    def density(self) -> Callable:
        fn = excursion_endpoint_pdf if self.which == "excursion" else bessel_endpoint_pdf
        return lambda x: fn(x, self.t)

    def pdf(self, x):
        return self.density(x)

    @property
    def upper(self):
        """Quadrature cutoff: the mass beyond it is negligible."""
        return _TAIL_SCALES * self.scale

    def total_mass(self):
        val, _ = integrate.quad(self.density, 0.0, self.upper, epsabs=1e-14, epsrel=1e-13,
                                limit=200)
        return val

    def cdf(self, x):
        """CDF by adaptive quadrature, summed over consecutive sorted points."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        order = np.argsort(x)
        xs = np.clip(x[order], 0.0, self.upper)
        out = np.empty_like(xs)
        acc, prev = 0.0, 0.0
        for k, v in enumerate(xs):
            if v > prev:
                acc += integrate.quad(self.density, prev, v, epsabs=1e-14, epsrel=1e-12)[0]
                prev = v
            out[k] = acc
        res = np.empty_like(out)
        res[order] = np.minimum(out, 1.0)
        return res

    def inverse_cdf_sampler(self, points=4096):
        """Vectorized inverse CDF by interpolating a tabulated quadrature CDF."""
        grid = np.linspace(0.0, self.upper, points)
        table = self.cdf(grid)
        table[-1] = 1.0
        return lambda u: np.interp(u, table, grid)


def rn_derivative(x):
    """Bessel-3 over excursion endpoint density at ``t = 1/2``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("the density ratio is 0/0 at x <= 0")
    out = bessel_endpoint_pdf(x, 0.5) / excursion_endpoint_pdf(x, 0.5)
    return out if np.ndim(out) else float(out)


def rn_closed_form(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(x * x) / (2.0 * math.sqrt(2.0))
    return out if out.ndim else float(out)


def _z_power_log_integrand(p):
    # log of Z**p * f_exc; shells are integrated relative to their maximum
    c_log = -p * math.log(2.0 * math.sqrt(2.0)) + math.log(8.0 * math.sqrt(2.0 / math.pi))

    def g(x):
        return c_log + 2.0 * math.log(x) + (p - 2.0) * x * x

    return g


def _log_shell(g, p, a, b):
    cands = [b] if a == 0.0 else [a, b]
    if p < 2.0:
        peak = 1.0 / math.sqrt(2.0 - p)
        if a < peak < b:
            cands.append(peak)
    at = max(cands, key=g)
    top = g(at)
    # breakpoints clustered at the maximum so a narrow spike is resolved
    width = b - a
    pts = sorted({min(max(at + sgn * width * 2.0 ** -j, a), b)
                  for j in range(1, 48) for sgn in (-1, 1)} - {a, b})
    val = integrate.quad(lambda x: math.exp(g(x) - top) if x > 0 else 0.0, a, b,
                         points=pts, epsabs=1e-15, epsrel=1e-12, limit=800)[0]
    return top + math.log(val) if val > 0 else -math.inf


def z_lp_norm(p, max_k=10, ratio=1.5):
    """``∫ Z**p dμ`` with μ the excursion endpoint law at ``t = 1/2``.

    The integral is split into [0, 1] and the dyadic shells
    ``[2**(k-1), 2**k]`` for ``k <= max_k``. It is declared divergent
    (``math.inf``) when the last two shell-to-shell ratios both exceed
    ``ratio``: a convergent integrand has negligible shells out there,
    a divergent one keeps growing. Summation stops early once shells are
    negligible.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    g = _z_power_log_integrand(p)
    logs = []
    for k in range(max_k + 1):
        a, b = (0.0, 1.0) if k == 0 else (2.0 ** (k - 1), 2.0 ** k)
        logs.append(_log_shell(g, p, a, b))
        head = max(logs)
        if k > 0 and logs[-1] < head + math.log(1e-17):
            break
    else:
        steps = np.diff(logs[-3:])
        if np.all(steps > math.log(ratio)):
            return math.inf
    head = max(logs)
    return math.exp(head) * math.fsum(math.exp(v - head) for v in logs)


def endpoint_samples(which, n, replicas, seed, t=0.5):
    """Lattice endpoints ``X_t`` from independent simulated paths.

    Returns ``(samples, spacing)``; the lattice spacing of ``X_t`` is
    ``2 / sqrt(n)`` because heights at a fixed step share one parity.
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    base = child_seed(seed, "endpoint-" + which, 0)
    out = np.empty(replicas)
    for r in range(replicas):
        if which == "excursion":
            grid = sn.sample_excursion(n, base, r)
        else:
            grid = sn.sample_plane_lifetime(t, n, base, r)
        out[r] = grid.values[grid.index_of(t)]
    return out, 2.0 / math.sqrt(n)


@dataclass
class GofReport:
    which: str
    n: int
    replicas: int
    ks_stat: float
    p_value: float

    def to_dict(self):
        return dict(self.__dict__)


def endpoint_gof(samples, which, t=0.5, spacing=0.0, seed=0, n=0):
    """One-sample KS of endpoint samples against the closed-form CDF.

    Lattice samples are spread uniformly over their cell (width ``spacing``)
    with a seeded generator, so the comparison is against a continuous law.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < 1000:
        raise ValueError("need at least 1000 samples")
    law = EndpointLaw(which, t)
    if spacing > 0:
        jitter = stream(seed, "gof-jitter", 0).uniform(-0.5, 0.5, samples.size)
        samples = np.abs(samples + spacing * jitter)
    res = stats.kstest(samples, law.cdf)
    return GofReport(which, int(n), int(samples.size), float(res.statistic), float(res.pvalue))


def null_gof_pvalues(which, size, runs, seed, t=0.5):
    """KS p-values for samples drawn from the closed form by inverse CDF."""
    law = EndpointLaw(which, t)
    inv = law.inverse_cdf_sampler()
    out = []
    for run in range(runs):
        u = stream(seed, "gof-null-" + which, run).random(size)
        out.append(endpoint_gof(inv(u), which, t).p_value)
    return out


def check_all(n=2048, replicas=10_000, seed=0, alpha=0.01):
    """Every density invariant; returns ``(ok, details)``."""
    details = {}
    for which in WHICH:
        details[f"mass_{which}"] = EndpointLaw(which, 0.5).total_mass()
    xs = np.linspace(0.1, 5.0, 50)
    rel = np.abs(rn_derivative(xs) * excursion_endpoint_pdf(xs, 0.5)
                 / bessel_endpoint_pdf(xs, 0.5) - 1.0)
    details["rn_identity_max_rel"] = float(rel.max())
    details["z_mean"] = z_lp_norm(1.0)
    details["lp"] = {str(p): z_lp_norm(p) for p in (1.25, 1.5, 1.75, 2.25, 2.5)}
    gof = {}
    for which in WHICH:
        samples, spacing = endpoint_samples(which, n, replicas, seed)
        gof[which] = endpoint_gof(samples, which, 0.5, spacing, seed, n).to_dict()
    details["gof"] = gof
    ok = (
        all(abs(details[f"mass_{w}"] - 1.0) < 1e-8 for w in WHICH)
        and details["rn_identity_max_rel"] < 1e-12
        and abs(details["z_mean"] - 1.0) < 1e-8
        and all(math.isfinite(details["lp"][k]) for k in ("1.25", "1.5", "1.75"))
        and all(math.isinf(details["lp"][k]) for k in ("2.25", "2.5"))
        and all(g["p_value"] > alpha for g in gof.values())
    )
    return ok, details
