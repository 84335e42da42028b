"""Lifetime processes, range minima and Brownian snake labels.

Lifetime processes live on a lattice: heights are integers scaled by
``1/sqrt(n)``. Equal heights therefore compare exactly, which is what gives
the contour its tree structure (an index pair ``i < j`` is the same tree
vertex iff ``X_i == X_j == min(X[i..j])``).
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from . import _kernels
from .rng import stream

EXACT_CAP = 4096

# Labels live on a dyadic grid so that every sum of label differences met in
# the metric is exact in double precision (any summation order agrees).
LABEL_QUANTUM = 2.0 ** -40
LABEL_LIMIT = 2.0 ** 11

VARIANTS = ("map", "plane")


class SizeLimitError(ValueError):
    """Raised when the cubic exact sampler is asked for too large a grid."""


@dataclass(frozen=True, eq=False)
class PathGrid:
    """A nonnegative process sampled at ``t0 + i*dt`` for ``i = 0..n``."""

    t0: float
    dt: float
    values: np.ndarray
    variant: str = "map"

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("values must be a nonempty 1-d sequence")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("lifetime values must be finite and nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @property
    def n(self):
        return self.values.size - 1

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.values.size)

    def index_of(self, t):
        """Nearest grid index of time ``t``."""
        i = int(round((t - self.t0) / self.dt))
        if not 0 <= i <= self.n:
            raise ValueError(f"time {t} is outside the grid")
        return i

    @property
    def zero_index(self):
        """Grid index of ``t = 0``."""
        return self.index_of(0.0)


class MinimaIndex:
    """Sparse table answering ``min(values[i..j])`` in O(1).

    Complexity: O(N log N) to build.
    """

    def __init__(self, values, cyclic=False):
        values = np.asarray(values, dtype=np.float64)
        self.values = values
        self.cyclic = cyclic
        levels = [values]
        width = 1
        while 2 * width <= values.size:
            prev = levels[-1]
            levels.append(np.minimum(prev[:-width], prev[width:]))
            width *= 2
        self.table = levels

    def __len__(self):
        return self.values.size

    def _linear(self, i, j):
        k = (j - i + 1).bit_length() - 1
        row = self.table[k]
        return min(row[i], row[j - (1 << k) + 1])

    def query(self, i, j, cyclic=False):
        """Minimum over the index range from ``i`` to ``j`` (inclusive).

        Linear queries ignore the order of ``i`` and ``j``. A cyclic query with
        ``i > j`` covers ``[i, n] ∪ [0, j]``.
        """
        n = self.values.size
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError("grid index out of range")
        if cyclic:
            if not self.cyclic:
                raise ValueError("cyclic queries need the map variant")
            if i > j:
                return min(self._linear(i, n - 1), self._linear(0, j))
            return self._linear(i, j)
        if i > j:
            i, j = j, i
        return self._linear(i, j)

    def query_many(self, i, j):
        """Vectorized linear query over index arrays."""
        i = np.asarray(i)
        j = np.asarray(j)
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        k = np.floor(np.log2(hi - lo + 1)).astype(np.int64)
        out = np.empty(lo.shape)
        for level in np.unique(k):
            sel = k == level
            row = self.table[level]
            out[sel] = np.minimum(row[lo[sel]], row[hi[sel] - (1 << level) + 1])
        return out


def m_query(idx, i, j, cyclic=False):
    """``m_X(i, j)``: the exact minimum of the process over the index range."""
    return idx.query(i, j, cyclic=cyclic)


@dataclass(frozen=True, eq=False)
class SnakePath:
    """Lifetime grid plus labels ``Y`` on the same grid."""

    grid: PathGrid
    labels: np.ndarray
    minima: MinimaIndex = field(repr=False)

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        if labels.shape != self.grid.values.shape:
            raise ValueError("labels must match the grid")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def variant(self):
        return self.grid.variant

    @property
    def n(self):
        return self.grid.n

    @cached_property
    def classes(self):
        """Tree-vertex id of every grid index, and the number of vertices."""
        cls, nc = _kernels.tree_classes(self.grid.values)
        cls.setflags(write=False)
        return cls, int(nc)

    @cached_property
    def label_minima(self):
        return MinimaIndex(self.labels, cyclic=self.variant == "map")


def quantize(labels):
    labels = np.asarray(labels, dtype=np.float64)
    if labels.size and np.abs(labels).max() >= LABEL_LIMIT:
        raise ValueError("labels too large for exact dyadic arithmetic")
    return np.round(labels / LABEL_QUANTUM) * LABEL_QUANTUM


def make_snake(grid, labels):
    """Bundle a grid with (quantized) labels and its range-minimum index."""
    return SnakePath(
        grid, quantize(labels), MinimaIndex(grid.values, cyclic=grid.variant == "map")
    )


def _dyck_heights(m, rng):
    """Uniform Dyck path with ``m`` up-steps, by the cyclic lemma.

    A uniform arrangement of ``m`` up- and ``m + 1`` down-steps is rotated to
    start just after the first minimum of its walk; the first ``2m`` steps of
    the rotation form the Dyck path.
    """
    length = 2 * m + 1
    steps = np.where(rng.permutation(length) < m, 1, -1)
    walk = np.concatenate(([0], np.cumsum(steps)))
    k = int(np.argmin(walk))
    rotated = np.concatenate((steps[k:], steps[:k]))
    return np.concatenate(([0], np.cumsum(rotated[:-1])))


ROOTINGS = ("planted", "corner")


def excursion_heights(n, rng, rooting="planted"):
    """Integer heights of a lattice excursion with ``n`` steps.

    ``"planted"``: an up-step, a uniform Dyck path lifted by one, a down-step.
    The path is strictly positive inside and its root is a leaf.
    ``"corner"``: a uniform Dyck path, i.e. the contour of a uniform plane
    tree. Interior zeros occur, and the law is exactly invariant under
    cyclic re-rooting at any step.
    """
    if rooting == "planted":
        inner = _dyck_heights((n - 2) // 2, rng)
        return np.concatenate(([0], inner + 1, [0]))
    if rooting == "corner":
        return _dyck_heights(n // 2, rng)
    raise ValueError(f"rooting must be one of {ROOTINGS}")


def sample_excursion(n, seed, replica=0, rooting="planted"):
    """Discretized normalized Brownian excursion on [0, 1] with ``n`` cells.

    Heights are scaled by ``1/sqrt(n)``; see :func:`excursion_heights` for
    the two root conventions. ``n`` must be even because lattice excursions
    are.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if n % 2:
        raise ValueError("n must be even for a lattice excursion")
    heights = excursion_heights(n, stream(seed, "excursion", replica), rooting)
    return PathGrid(0.0, 1.0 / n, heights / np.sqrt(n), "map")


def bessel3_heights(m, rng):
    """Lattice 3d Bessel chain from 0, ``m`` steps.

    This is simple random walk h-transformed by ``h(k) = k``: from ``k >= 1``
    it steps up with probability ``(k + 1) / 2k``, so it never returns to 0 and
    ``E[Z_k^2] = 3k - 2``. Generated as ``1 + (2M - S)`` from a walk ``S`` with
    running maximum ``M`` (Pitman's transform).
    """
    out = np.zeros(m + 1, np.int64)
    if m == 0:
        return out
    steps = rng.integers(0, 2, size=m - 1) * 2 - 1
    walk = np.concatenate(([0], np.cumsum(steps)))
    peak = np.maximum.accumulate(walk)
    out[1:] = 1 + 2 * peak - walk
    return out


def sample_plane_lifetime(T, n, seed, replica=0):
    """Lifetime of the Brownian plane on [-T, T] with ``n`` cells per unit time.

    Two independent lattice Bessel-3 chains, the left one time-reversed,
    spliced at ``t = 0``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    m = int(round(T * n))
    if m < 1:
        raise ValueError("window holds no grid cell")
    rng = stream(seed, "plane-lifetime", replica)
    right = bessel3_heights(m, rng)
    left = bessel3_heights(m, rng)
    heights = np.concatenate((left[::-1], right[1:]))
    return PathGrid(-m / n, 1.0 / n, heights / np.sqrt(n), "plane")


def sequential_labels(grid, rng, size=None):
    """Draw labels in O(n) per path; ``size`` stacks independent draws."""
    x = grid.values
    if size is None:
        return _kernels.sequential_labels(x, rng.standard_normal(x.size))
    out = np.empty((size, x.size))
    for r in range(size):
        out[r] = _kernels.sequential_labels(x, rng.standard_normal(x.size))
    return out


def sample_snake_sequential(grid, seed, replica=0):
    """Snake labels with covariance ``m_X``, in linear time."""
    labels = sequential_labels(grid, stream(seed, "snake", replica))
    return make_snake(grid, labels)


def covariance_matrix(grid):
    """``M[i, j] = m_X(i, j)``, built row by row from running minima."""
    x = grid.values
    size = x.size
    cov = np.empty((size, size))
    for i in range(size):
        run = np.minimum.accumulate(x[i:])
        cov[i, i:] = run
        cov[i:, i] = run
    return cov


class ExactFactor:
    """Pivoted Cholesky factor of the snake covariance given ``X``."""

    def __init__(self, grid, cap=EXACT_CAP, rtol=1e-10):
        size = len(grid)
        if size > cap:
            raise SizeLimitError(
                f"exact sampler capped at {cap} grid points (got {size}); "
                "use sample_snake_sequential"
            )
        cov = covariance_matrix(grid)
        scale = float(grid.values.max())
        if scale == 0.0:
            self.factor = np.zeros((size, 0))
            self.perm = np.arange(size)
            return
        c, piv, rank, info = scipy.linalg.lapack.dpstrf(cov, lower=1, tol=rtol * scale)
        if info < 0:
            raise np.linalg.LinAlgError("pivoted Cholesky failed")
        low = np.tril(c)[:, :rank]
        perm = piv - 1
        factor = np.empty_like(low)
        factor[perm] = low
        resid = np.abs(factor @ factor.T - cov).max()
        if resid > 1e-8 * max(scale, 1.0):
            raise np.linalg.LinAlgError(
                f"snake covariance is not PSD within tolerance (residual {resid:.3g})"
            )
        self.factor = factor
        self.perm = perm

    def draw(self, rng, size=None):
        k = self.factor.shape[1]
        if size is None:
            return self.factor @ rng.standard_normal(k)
        return rng.standard_normal((size, k)) @ self.factor.T


def sample_snake_exact(grid, seed, replica=0, cap=EXACT_CAP):
    """Snake labels drawn from the full Gaussian law (cubic cost)."""
    labels = ExactFactor(grid, cap=cap).draw(stream(seed, "snake-exact", replica))
    return make_snake(grid, labels)


def sample_map_snake(n, seed, replica=0, rooting="corner"):
    """Excursion plus sequential labels, both keyed by ``(seed, replica)``.

    Maps default to the corner-rooted contour so that the root is a typical
    point of the grid, as re-rooting invariance requires.
    """
    grid = sample_excursion(n, seed, replica, rooting)
    return sample_snake_sequential(grid, seed, replica)


def sample_plane_snake(T, n, seed, replica=0):
    grid = sample_plane_lifetime(T, n, seed, replica)
    return sample_snake_sequential(grid, seed, replica)
