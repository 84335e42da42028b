"""Metric-measure observables: sampled distance matrices and re-rooting tests.

The measure μ is the pushforward of time. On a map grid it is uniform over
the ``n`` cells ``0..n-1`` (index ``n`` is the same point as index 0); on a
plane window it is uniform over all grid indices of the window.
"""
import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from . import metric
from . import snake as sn
from .rng import child_seed, stream


def snake_hash(snake):
    h = hashlib.sha256()
    h.update(snake.variant.encode())
    h.update(np.ascontiguousarray(snake.grid.values).tobytes())
    h.update(np.ascontiguousarray(snake.labels).tobytes())
    return h.hexdigest()[:16]


def measure_support(snake):
    """Grid indices carrying the uniform time measure."""
    size = snake.labels.size
    return size - 1 if snake.variant == "map" and size > 1 else size


@dataclass
class DistanceMatrix:
    """Quotient distances among ``k`` points; the first ``marks`` are fixed."""

    d: np.ndarray
    points: np.ndarray
    marks: int = 0
    seed: Optional[int] = None
    source: str = ""

    @property
    def k(self):
        return self.d.shape[0]

    def violations(self, tol=0.0):
        """Counts of symmetry, diagonal and triangle violations."""
        d = self.d
        sym = int(np.count_nonzero(np.abs(d - d.T) > tol))
        diag = int(np.count_nonzero(np.abs(np.diag(d)) > tol))
        # d[i, j] <= d[i, l] + d[l, j] for every l
        via = d[:, :, None] + d[None, :, :]
        tri = int(np.count_nonzero(d[:, None, :] > via + tol))
        return {"symmetry": sym, "diagonal": diag, "triangle": tri}

    def is_valid(self, tol=0.0):
        return not any(self.violations(tol).values())


def distances_among(qm, points):
    pts = np.asarray(points, dtype=np.int64)
    d = np.empty((pts.size, pts.size))
    for a, p in enumerate(pts):
        d[a] = metric.quotient_sssp(qm, int(p))[pts]
    return d


def sample_distance_matrix(qm, k, marks=(), seed=0, replica=0):
    """Distances among the marked points followed by ``k - len(marks)`` draws from μ."""
    marks = [int(m) for m in marks]
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(marks) > k:
        raise ValueError("more marks than points")
    size = len(qm)
    if any(not 0 <= m < size for m in marks):
        raise ValueError("mark outside the grid")
    rng = stream(seed, "matrix", replica)
    free = rng.integers(0, measure_support(qm.snake), size=k - len(marks))
    points = np.concatenate((np.array(marks, dtype=np.int64), free)).astype(np.int64)
    return DistanceMatrix(distances_among(qm, points), points, len(marks), seed,
                          snake_hash(qm.snake))


class GromovEstimate(NamedTuple):
    estimate: float
    se: float
    count: int


def gromov_stat(matrices, psi):
    """Monte Carlo mean of ``psi(d)`` over matrices, with its standard error."""
    matrices = list(matrices)
    if not matrices:
        raise ValueError("no matrices")
    shape = {(m.k, m.marks) for m in matrices}
    if len(shape) != 1:
        raise ValueError("matrices differ in size or marking")
    vals = [float(psi(m.d)) for m in matrices]
    count = len(vals)
    mean = math.fsum(vals) / count
    if count < 2:
        return GromovEstimate(mean, 0.0, count)
    var = math.fsum((v - mean) ** 2 for v in vals) / (count - 1)
    return GromovEstimate(mean, math.sqrt(var / count), count)


@dataclass
class TwoSampleReport:
    label: str
    replicas: int
    ks_stat: float
    p_value: float
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"label": self.label, "replicas": self.replicas,
                "ks_stat": self.ks_stat, "p_value": self.p_value}


def _root_distance(n, seed, replica, source):
    snake = sn.sample_map_snake(n, seed, replica)
    qm = metric.QuotientMetric(snake)
    u = int(stream(seed, "reroot-target", replica).integers(0, measure_support(snake)))
    return float(metric.quotient_sssp(qm, source)[u])


def reroot_test(n, t_shift, replicas, seed, variant="map"):
    """KS of ``d(Γ(0), U)`` against ``d(Γ(t_shift), U)`` over independent maps.

    ``U`` is drawn from μ, and the two sides use independent snakes.
    """
    if variant != "map":
        raise ValueError("re-rooting is tested on the map variant only")
    if not 0 <= t_shift <= n:
        raise ValueError("t_shift must be a grid index")
    sa = child_seed(seed, "reroot-a", 0)
    sb = child_seed(seed, "reroot-b", t_shift)
    left = np.array([_root_distance(n, sa, r, 0) for r in range(replicas)])
    right = np.array([_root_distance(n, sb, r, t_shift) for r in range(replicas)])
    ks = stats.ks_2samp(left, right)
    return TwoSampleReport(f"shift={t_shift}", replicas, float(ks.statistic),
                           float(ks.pvalue), left, right)


@dataclass
class MarkReport:
    replicas: int
    bins: int
    counts: list
    chi2: float
    p_value: float

    def to_dict(self):
        return dict(self.__dict__)


def mark_position(snake, rng):
    """Position in (0, 1) of the root within μ, ordered by distance to the label minimum.

    Ties are broken uniformly at random. If the root is distributed as μ
    given the space, this position is uniform.
    """
    qm = metric.QuotientMetric(snake)
    support = measure_support(snake)
    f = metric.quotient_sssp(qm, int(np.argmin(snake.labels)))[:support]
    less = int(np.count_nonzero(f < f[0]))
    ties = int(np.count_nonzero(f == f[0]))
    rank = less + int(rng.integers(0, ties))
    return (rank + 0.5) / support


def marked_point_test(n, replicas, seed, bins=16):
    """Chi-square test that the root's position within μ is uniform."""
    base = child_seed(seed, "mark", 0)
    pos = np.array([
        mark_position(sn.sample_map_snake(n, base, r), stream(base, "mark-ties", r))
        for r in range(replicas)
    ])
    counts = np.bincount(np.minimum((pos * bins).astype(int), bins - 1), minlength=bins)
    res = stats.chisquare(counts)
    return MarkReport(replicas, bins, counts.tolist(), float(res.statistic), float(res.pvalue))


def exchangeability_test(matrices, seed=0):
    """KS on ``d`` between the first two free points, raw versus permuted.

    The matrices are split into two halves; the second half has its free
    points permuted by a fixed random permutation before reading off the
    same entry.
    """
    matrices = list(matrices)
    m = matrices[0].marks
    k = matrices[0].k
    if k - m < 2:
        raise ValueError("need at least two free points")
    perm = m + stream(seed, "exchange", 0).permutation(k - m)
    half = len(matrices) // 2
    left = np.array([M.d[m, m + 1] for M in matrices[:half]])
    right = np.array([M.d[np.ix_(perm, perm)][0, 1] for M in matrices[half:]])
    ks = stats.ks_2samp(left, right)
    return TwoSampleReport("exchangeability", len(matrices), float(ks.statistic),
                           float(ks.pvalue), left, right)


@dataclass
class WindowRecord:
    r: float
    mass: float
    size: int
    truncated: bool
    matrix: Optional[DistanceMatrix]


def window_encoding(snake, radii, k=8, seed=0):
    """Balls ``B(root, r)`` around the plane root, their mass and a sample matrix each.

    The mass is the time measure of the ball. A ball reaching either end of
    the window is flagged as truncated.
    """
    if snake.variant != "plane":
        raise ValueError("window encoding needs the plane variant")
    radii = np.asarray(radii, dtype=np.float64)
    if radii.size == 0 or np.any(np.diff(radii) <= 0) or radii[0] < 0:
        raise ValueError("radii must be nonnegative and strictly increasing")
    qm = metric.QuotientMetric(snake)
    root = snake.grid.zero_index
    dist = metric.quotient_sssp(qm, root)
    last = len(qm) - 1
    out = []
    for j, r in enumerate(radii):
        ball = np.flatnonzero(dist <= r)
        truncated = bool(dist[0] <= r or dist[last] <= r)
        rng = stream(seed, "window", j)
        pts = np.concatenate(([root], rng.choice(ball, size=max(k - 1, 0))))
        mat = DistanceMatrix(distances_among(qm, pts), pts, 1, seed, snake_hash(snake))
        out.append(WindowRecord(float(r), ball.size * snake.grid.dt, int(ball.size),
                                truncated, mat))
    return out
