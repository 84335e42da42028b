"""Quotient metric of a snake: d°, its tree version, and chain shortest paths.

On a finite grid the chain infimum defining ``d`` is a shortest path in the
complete graph on tree vertices whose edge weights are ``d°`` minimized over
representatives. Because ``d°`` is itself a tree metric (the min-Cartesian
tree of the labels), the same distances come out of a sparse graph with O(N)
edges, which is what :class:`QuotientMetric` searches by default.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .tree import TreeView

EXACT_DIAMETER_MAX = 513


class QuotientMetric:
    """Shortest-path engine over a :class:`~brownian_atlas.snake.SnakePath`.

    For the map variant the contour is rotated to start at the label minimum.
    In those coordinates the cyclic ``d°`` equals its linear form, because the
    arc through the minimum always has the smaller infimum.

    ``engine="sparse"`` (default) searches the Cartesian-tree graph;
    ``engine="dense"`` relaxes the complete graph of ``d°`` edges directly.
    Both return identical distances.
    """

    def __init__(self, snake, engine="sparse"):
        if engine not in ("sparse", "dense"):
            raise ValueError(f"unknown engine {engine!r}")
        self.engine = engine
        self.snake = snake
        y = snake.labels
        cls, nc = snake.classes
        size = y.size
        if snake.variant == "map" and size > 1:
            n = size - 1
            k = int(np.argmin(y[:n]))
            order = np.concatenate(((k + np.arange(n)) % n, [k]))
            position = np.empty(size, np.int64)
            position[order[:n]] = np.arange(n)
            position[n] = position[0]
        else:
            order = np.arange(size)
            position = np.arange(size)
        self.order = order
        self.position = position
        self._y = np.ascontiguousarray(y[order])
        self._cls = np.ascontiguousarray(cls[order])
        counts = np.bincount(self._cls, minlength=nc)
        self._ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        self._members = np.argsort(self._cls, kind="stable").astype(np.int64)
        self.n_classes = nc
        self._cache = {}
        self._graph = self._build_graph() if engine == "sparse" else None

    def _build_graph(self):
        y = self._y
        size = y.size
        parent = _kernels.cartesian_parent(y)
        child = np.flatnonzero(parent >= 0)
        links = self._members
        same = self._cls[links[1:]] == self._cls[links[:-1]]
        a = np.concatenate((child, links[:-1][same]))
        b = np.concatenate((parent[child], links[1:][same]))
        w = np.concatenate((y[child] - y[parent[child]], np.zeros(same.sum())))
        src = np.concatenate((a, b))
        dst = np.concatenate((b, a))
        wt = np.concatenate((w, w))
        order = np.argsort(src, kind="stable")
        ptr = np.concatenate(([0], np.cumsum(np.bincount(src, minlength=size))))
        return ptr.astype(np.int64), dst[order].astype(np.int64), wt[order]

    @property
    def labels(self):
        return self.snake.labels

    @property
    def variant(self):
        return self.snake.variant

    def __len__(self):
        return self.snake.labels.size

    def class_of(self, i):
        return int(self.snake.classes[0][i])

    def distances(self, source):
        """Distances from ``source`` to every grid index (uncached)."""
        if self._graph is not None:
            ptr, to, w = self._graph
            empty = np.zeros(len(self), np.bool_)
            dist = _kernels.sparse_sssp(ptr, to, w, self.position[source], empty, 0)
            return dist[self.position]
        empty = np.zeros(self.n_classes, np.bool_)
        dist = _kernels.sssp(
            self._y, self._cls, self._ptr, self._members,
            self.class_of(source), np.inf, empty, 0,
        )
        return dist[self.snake.classes[0]]

    def eccentricities(self, sources, targets=None):
        """Max distance from each source index to the target indices (default: all)."""
        sources = np.asarray(sources, dtype=np.int64)
        mask = np.zeros(len(self), np.bool_)
        if targets is None:
            mask[:] = True
        else:
            mask[self.position[np.asarray(targets, dtype=np.int64)]] = True
        pos = self.position[sources]
        if self._graph is not None:
            return _kernels.sparse_eccentricities(*self._graph, pos, mask)
        return _kernels.eccentricities(
            self._y, self._cls, self._ptr, self._members, pos, mask
        )


def d_circle(qm, i, j):
    """``d°(i, j) = Y_i + Y_j - 2 max(min over [i, j], min over the other arc)``.

    The plane has no closing arc (the labels are unbounded below off the
    window), so only the inner interval enters.
    """
    y = qm.labels
    mins = qm.snake.label_minima
    lo, hi = min(i, j), max(i, j)
    level = mins.query(lo, hi)
    if qm.variant == "map":
        level = max(level, mins.query(hi, lo, cyclic=True))
    return float((y[i] + y[j]) - 2.0 * level)


def representatives(qm, i, tol=0.0):
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if tol == 0:
        return TreeView(qm.snake).representatives(i)
    x = qm.snake.grid.values
    idx = np.arange(x.size)
    dt = x[i] + x - 2.0 * qm.snake.minima.query_many(np.full_like(idx, i), idx)
    return np.flatnonzero(dt <= tol)


def d_tree_circle(qm, i, j, tol=0.0):
    """Minimum of ``d°`` over representatives of the tree points of ``i`` and ``j``."""
    best = np.inf
    for s in representatives(qm, i, tol):
        for t in representatives(qm, j, tol):
            best = min(best, d_circle(qm, int(s), int(t)))
    return best


def quotient_sssp(qm, source):
    """Quotient distances from ``source`` to every grid index."""
    c = qm.class_of(source)
    if c not in qm._cache:
        out = qm.distances(source)
        out.setflags(write=False)
        qm._cache[c] = out
    return qm._cache[c]


def default_sources(qm, lo, hi):
    """Evenly spaced ``sqrt(count)`` indices in [lo, hi] plus both label extremes."""
    count = hi - lo + 1
    k = max(int(np.sqrt(count)), 1)
    spaced = np.unique(np.linspace(lo, hi, k).round().astype(np.int64))
    y = qm.labels[lo:hi + 1]
    extremes = np.array([lo + int(np.argmin(y)), lo + int(np.argmax(y))])
    return np.unique(np.concatenate((spaced, extremes)))


def all_sources(qm, lo, hi):
    """One representative index per tree vertex met by [lo, hi]."""
    cls = qm.snake.classes[0][lo:hi + 1]
    _, first = np.unique(cls, return_index=True)
    return lo + np.sort(first)


def diameter(qm, window=None, sources="auto"):
    """Largest quotient distance between indices of ``window = (lo, hi)``.

    ``sources`` may be ``"all"`` (exact), ``"sample"`` (the estimator from
    :func:`default_sources`), ``"auto"`` (exact up to
    ``EXACT_DIAMETER_MAX`` indices) or an explicit index array. With a
    sampled source set the result is a lower estimate. Chains may leave the
    window; only their endpoints are restricted.
    """
    if window is None:
        if qm.variant == "plane":
            raise ValueError("the plane variant needs an explicit index window")
        lo, hi = 0, len(qm) - 1
    else:
        lo, hi = int(window[0]), int(window[1])
    if hi < lo or lo < 0 or hi >= len(qm):
        raise ValueError("empty or out-of-range window")
    if lo == hi:
        return 0.0
    if isinstance(sources, str):
        if sources == "auto":
            sources = "all" if hi - lo + 1 <= EXACT_DIAMETER_MAX else "sample"
        if sources == "all":
            sources = all_sources(qm, lo, hi)
        elif sources == "sample":
            sources = default_sources(qm, lo, hi)
        else:
            raise ValueError(f"unknown source policy {sources!r}")
    targets = None if (lo, hi) == (0, len(qm) - 1) else np.arange(lo, hi + 1)
    return float(qm.eccentricities(sources, targets).max())


@dataclass
class HullSet:
    """A metric ball and, when a basepoint is given, its filled hull."""

    center: int
    r: float
    basepoint: Optional[int]
    ball: np.ndarray
    hull: Optional[np.ndarray] = None


def metric_ball(qm, center, r):
    if r < 0:
        raise ValueError("radius must be nonnegative")
    dist = quotient_sssp(qm, center)
    return HullSet(center, float(r), None, np.flatnonzero(dist <= r))


def adjacency_edges(snake):
    """Consecutive grid indices plus consecutive members of each tree class."""
    size = snake.labels.size
    cls = snake.classes[0]
    order = np.argsort(cls, kind="stable")
    same = cls[order[1:]] == cls[order[:-1]]
    a = np.concatenate((np.arange(size - 1), order[:-1][same]))
    b = np.concatenate((np.arange(1, size), order[1:][same]))
    return a, b


def _default_basepoint(qm, center, inside):
    size = len(qm)
    if qm.variant == "plane":
        for candidate in (size - 1, 0):
            if not inside[candidate]:
                return candidate
        raise ValueError("ball covers the whole window; no basepoint available")
    dist = quotient_sssp(qm, center)
    return int(np.argmax(dist))


def filled_hull(qm, center, r, basepoint=None):
    """Ball plus every index cut off from ``basepoint`` by the ball.

    The plane defaults to the window endpoint (standing in for infinity); the
    map defaults to the index farthest from ``center``.
    """
    ball = metric_ball(qm, center, r).ball
    size = len(qm)
    inside = np.zeros(size, bool)
    inside[ball] = True
    if basepoint is None:
        basepoint = _default_basepoint(qm, center, inside)
    if inside[basepoint]:
        raise ValueError("basepoint lies inside the ball")
    a, b = adjacency_edges(qm.snake)
    keep = ~inside[a] & ~inside[b]
    graph = coo_matrix((np.ones(keep.sum()), (a[keep], b[keep])), shape=(size, size))
    _, comp = connected_components(graph, directed=False)
    outside = ~inside & (comp == comp[basepoint])
    hull = np.flatnonzero(~outside)
    return HullSet(center, float(r), int(basepoint), ball, hull)
