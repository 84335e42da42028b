"""Chunk diameters of the space-filling curve, and experiments built on them.

Three experiments live here:

* scaling: ``d*_{0,1/2} * 2**(1/4)`` against ``d*_{0,1}`` in the plane;
* tail: stretched-exponential decay of the map diameter, fitted as the slope
  of ``log(-log P[d* >= r])`` against ``log r``;
* chunk cover: the fraction of the ``k`` chunks of [0, 1] whose diameter
  exceeds ``a * k**(-1/4)``, against ``a**(4/3)``.
"""
import math
import warnings
from dataclasses import dataclass, field
from functools import partial
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import metric
from . import snake as sn
from .parallel import run_replicas
from .rng import child_seed

TAIL_TARGET = 4.0 / 3.0


class SegmentDiameter(NamedTuple):
    value: float
    upper: float


def segment_diameter(snake, s, t, qm=None, sources="auto"):
    """Diameter of the curve image of the time interval [s, t].

    Times are snapped to the nearest grid index. ``upper`` is the label bound
    ``2 (max Y - min Y)`` over the segment, which always dominates ``value``.
    """
    if t < s:
        raise ValueError("need s <= t")
    grid = snake.grid
    i, j = grid.index_of(s), grid.index_of(t)
    seg = snake.labels[i:j + 1]
    upper = 2.0 * float(seg.max() - seg.min())
    if qm is None:
        qm = metric.QuotientMetric(snake)
    return SegmentDiameter(metric.diameter(qm, (i, j), sources), upper)


def _plane_chunk(replica, seed, T, n, length, sources):
    snake = sn.sample_plane_snake(T, n, seed, replica)
    return segment_diameter(snake, 0.0, length, sources=sources).value


def plane_chunk_diameters(replicas, T, n, seed, length=1.0, sources="auto", threads=1):
    """``d*_{0,length}`` for independent plane windows, in replica order."""
    fn = partial(_plane_chunk, seed=seed, T=T, n=n, length=length, sources=sources)
    return np.array(run_replicas(fn, replicas, threads))


@dataclass
class ScalingReport:
    n: int
    T: float
    replicas: int
    seed: int
    resolution: str
    ks_stat: float
    p_value: float
    full: np.ndarray = field(repr=False)
    half_scaled: np.ndarray = field(repr=False)
    null_p_values: list
    null_pass_fraction: float
    alpha: float = 0.01

    @property
    def null_ok(self):
        return self.null_pass_fraction >= 0.95

    @property
    def passed(self):
        return self.p_value > self.alpha and self.null_ok

    def to_dict(self):
        return {
            "n": self.n, "T": self.T, "replicas": self.replicas, "seed": self.seed,
            "resolution": self.resolution, "ks_stat": self.ks_stat,
            "p_value": self.p_value, "null_p_values": self.null_p_values,
            "null_pass_fraction": self.null_pass_fraction,
            "null_ok": self.null_ok, "passed": self.passed,
        }


def scaling_experiment(replicas, n, seed, T=2.0, resolution="chunk",
                       null_runs=20, null_replicas=None, alpha=0.01, threads=1):
    """Two-sample KS of ``2**(1/4) d*_{0,1/2}`` against ``d*_{0,1}``.

    ``resolution="chunk"`` resolves both chunks with ``n`` cells (the half
    chunk is simulated at ``2n`` cells per unit time); ``"step"`` uses ``n``
    cells per unit time for both, so the half chunk is twice as coarse. The
    null calibration repeats the test between two independent batches of
    ``d*_{0,1}`` with no rescaling.
    """
    if replicas < 100:
        raise ValueError("replicas must be at least 100")
    if resolution not in ("chunk", "step"):
        raise ValueError("resolution must be 'chunk' or 'step'")
    half_n = 2 * n if resolution == "chunk" else n
    full = plane_chunk_diameters(
        replicas, T, n, child_seed(seed, "scaling-full", 0), 1.0, threads=threads)
    half = plane_chunk_diameters(
        replicas, T, half_n, child_seed(seed, "scaling-half", 0), 0.5, threads=threads)
    half_scaled = half * 2.0 ** 0.25
    ks = stats.ks_2samp(half_scaled, full)

    null_replicas = null_replicas or max(100, replicas // 20)
    null_p = []
    for run in range(null_runs):
        a = plane_chunk_diameters(
            null_replicas, T, n, child_seed(seed, "scaling-null-a", run), threads=threads)
        b = plane_chunk_diameters(
            null_replicas, T, n, child_seed(seed, "scaling-null-b", run), threads=threads)
        null_p.append(float(stats.ks_2samp(a, b).pvalue))
    frac = float(np.mean(np.array(null_p) > alpha)) if null_p else 1.0
    return ScalingReport(n, T, replicas, seed, resolution, float(ks.statistic),
                         float(ks.pvalue), full, half_scaled, null_p, frac, alpha)


def _map_diameter(replica, seed, n, sources):
    snake = sn.sample_map_snake(n, seed, replica)
    return metric.diameter(metric.QuotientMetric(snake), sources=sources)


def map_diameters(replicas, n, seed, sources="auto", threads=1):
    """Diameters of independent map snakes, in replica order."""
    fn = partial(_map_diameter, seed=child_seed(seed, "tail", 0), n=n, sources=sources)
    return np.array(run_replicas(fn, replicas, threads))


@dataclass
class TailReport:
    r: list
    neg_log_p: list
    hits: list
    half_width: list
    exponent: float
    exponent_se: float
    intercept: float
    r2: float
    replicas: int
    n: int
    seed: int
    truncated: bool
    fit_points: int

    @property
    def c0(self):
        return math.exp(self.intercept)

    def to_dict(self):
        return {
            "r": self.r, "neg_log_p": self.neg_log_p, "hits": self.hits,
            "half_width": self.half_width, "exponent": self.exponent,
            "exponent_se": self.exponent_se, "intercept": self.intercept,
            "c0": self.c0, "r2": self.r2, "replicas": self.replicas,
            "n": self.n, "seed": self.seed, "truncated": self.truncated,
            "fit_points": self.fit_points,
        }


def wls_line(x, y, w):
    """Weighted least squares ``y ~ a + b x``.

    Returns ``(a, b, se_b, r2)``; the standard error treats ``1/w`` as the
    known variance of each ``y``.
    """
    x, y, w = (np.asarray(v, dtype=np.float64) for v in (x, y, w))
    X = np.column_stack((np.ones_like(x), x))
    A = X.T @ (w[:, None] * X)
    beta = np.linalg.solve(A, X.T @ (w * y))
    cov = np.linalg.inv(A)
    resid = y - X @ beta
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    r2 = 1.0 - np.sum(w * resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(beta[0]), float(beta[1]), float(math.sqrt(cov[1, 1])), float(r2)


def fit_tail(samples, r_grid, n=0, seed=0, min_hits=20):
    """Empirical tail of ``samples`` on ``r_grid`` and its stretched-exponential fit.

    Grid points with fewer than ``min_hits`` exceedances are dropped and the
    report is flagged as truncated. The slope of ``log(-log P)`` on ``log r``
    is fitted by weighted least squares with binomial delta-method weights,
    over the points with ``r > 0`` and ``0 < P < 1``.
    """
    d = np.sort(np.asarray(samples, dtype=np.float64))
    R = d.size
    r = np.asarray(r_grid, dtype=np.float64)
    if R == 0:
        raise ValueError("no samples")
    if r.size == 0 or np.any(np.diff(r) <= 0):
        raise ValueError("r_grid must be nonempty and strictly increasing")
    hits = R - np.searchsorted(d, r, side="left")
    keep = hits >= min_hits
    truncated = not bool(keep.all())
    if truncated:
        warnings.warn(f"r grid truncated: {int((~keep).sum())} points below {min_hits} hits")
    r, hits = r[keep], hits[keep]
    p = hits / R
    with np.errstate(divide="ignore"):
        nlp = -np.log(p)
        half = 1.96 * np.sqrt((1.0 - p) / (R * p))
    usable = (r > 0) & (p < 1)
    if usable.sum() >= 2:
        pu = p[usable]
        var = (1.0 - pu) / (R * pu * np.log(pu) ** 2)
        a, b, se, r2 = wls_line(np.log(r[usable]), np.log(nlp[usable]), 1.0 / var)
    else:
        a = b = se = r2 = float("nan")
    return TailReport(
        r.tolist(), (nlp + 0.0).tolist(), hits.tolist(), half.tolist(), b, se, a, r2,
        R, n, seed, truncated, int(usable.sum()),
    )


def tail_experiment(replicas, r_grid, n, seed, sources="auto", min_hits=20, threads=1):
    """Map diameters for ``replicas`` snakes, then :func:`fit_tail`."""
    if replicas < 1:
        raise ValueError("replicas must be positive")
    d = map_diameters(replicas, n, seed, sources, threads)
    return fit_tail(d, r_grid, n, seed, min_hits)


@dataclass
class ChunkCover:
    """Diameters of the ``k`` equal time chunks of [0, 1]."""

    k: int
    radius_exponent: float
    diameters: np.ndarray

    @property
    def scale(self):
        return self.k ** (-self.radius_exponent)

    def fractions(self, a_grid):
        """Fraction of chunks with diameter above ``a * k**(-radius_exponent)``.

        ``a = 0`` counts every chunk, degenerate ones included.
        """
        a = np.asarray(a_grid, dtype=np.float64)
        d = self.diameters
        return np.array([1.0 if v == 0 else float(np.mean(d > v * self.scale)) for v in a])


def chunk_cover_check(snake, k, radius_exponent=0.25, qm=None, sources="auto"):
    """Split [0, 1] into ``k`` equal chunks and measure each chunk's diameter."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if qm is None:
        qm = metric.QuotientMetric(snake)
    grid = snake.grid
    cuts = [grid.index_of(j / k) for j in range(k + 1)]
    diam = np.array([
        metric.diameter(qm, (cuts[j], cuts[j + 1]), sources) for j in range(k)
    ])
    return ChunkCover(k, radius_exponent, diam)


def _chunk_replica(replica, seed, k, n, T, variant, radius_exponent):
    if variant == "map":
        snake = sn.sample_map_snake(n, seed, replica)
    else:
        snake = sn.sample_plane_snake(T, n, seed, replica)
    return chunk_cover_check(snake, k, radius_exponent).diameters


@dataclass
class ChunkCoverReport:
    k: int
    n: int
    replicas: int
    seed: int
    variant: str
    a: list
    fraction: list
    hits: list
    slope: float
    intercept: float
    r2: float
    fit_points: int

    def to_dict(self):
        return dict(self.__dict__)


def chunk_cover_experiment(replicas, k, n, seed, a_grid, variant="plane", T=2.0,
                           radius_exponent=0.25, min_hits=20, threads=1):
    """Pooled chunk fractions over replicas, with a line fit of log-fraction on ``a**(4/3)``.

    The fit uses the ``a > 0`` grid points with at least ``min_hits`` chunk
    exceedances.
    """
    if variant not in sn.VARIANTS:
        raise ValueError(f"variant must be one of {sn.VARIANTS}")
    fn = partial(_chunk_replica, seed=child_seed(seed, "chunk-cover", 0), k=k, n=n,
                 T=T, variant=variant, radius_exponent=radius_exponent)
    pooled = ChunkCover(k, radius_exponent, np.concatenate(run_replicas(fn, replicas, threads)))
    a = np.asarray(a_grid, dtype=np.float64)
    frac = pooled.fractions(a)
    hits = np.rint(frac * pooled.diameters.size).astype(np.int64)
    usable = (a > 0) & (hits >= min_hits)
    if usable.sum() >= 2:
        b0, b1, _, r2 = wls_line(a[usable] ** TAIL_TARGET, np.log(frac[usable]),
                                 np.ones(int(usable.sum())))
    else:
        b0 = b1 = r2 = float("nan")
    return ChunkCoverReport(k, n, replicas, seed, variant, a.tolist(), frac.tolist(),
                            hits.tolist(), b1, b0, r2, int(usable.sum()))
