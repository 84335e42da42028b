from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brownian_atlas import metric
from brownian_atlas import snake as sn
from brownian_atlas.tree import TreeView, is_equivalent, tree_distance, tree_distance_matrix

from conftest import circle_matrix, floyd_warshall

seeds = st.integers(0, 10**6)


def map_qm(n, seed, engine="sparse"):
    return metric.QuotientMetric(sn.sample_map_snake(n, seed), engine)


@given(half=st.integers(1, 32), seed=seeds)
@settings(max_examples=30, deadline=None)
def test_tree_distance_is_a_pseudometric(half, seed):
    tv = TreeView(sn.sample_map_snake(2 * half, seed))
    d = tree_distance_matrix(tv)
    assert np.all(d >= -1e-15) and np.allclose(d, d.T) and np.all(np.diag(d) == 0)
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)
    i, j = 0, 2 * half
    assert is_equivalent(tv, i, j)
    assert tree_distance(tv, i, j) == 0.0


def test_is_equivalent_rejects_negative_tol():
    with pytest.raises(ValueError):
        is_equivalent(TreeView(sn.sample_map_snake(8, 0)), 0, 1, tol=-1)


@pytest.mark.parametrize("variant", ["map", "plane"])
@pytest.mark.parametrize("seed", range(4))
def test_sssp_matches_floyd_warshall(variant, seed):
    if variant == "map":
        qm = map_qm(32, seed)
    else:
        qm = metric.QuotientMetric(sn.sample_plane_snake(1.0, 16, seed))
    oracle = floyd_warshall(circle_matrix(qm))
    for s in range(len(qm)):
        assert np.array_equal(metric.quotient_sssp(qm, s), oracle[s])


@given(half=st.integers(2, 80), seed=seeds)
@settings(max_examples=25, deadline=None)
def test_engines_agree(half, seed):
    a, b = map_qm(2 * half, seed, "sparse"), map_qm(2 * half, seed, "dense")
    for s in (0, half, 2 * half - 1):
        assert np.array_equal(a.distances(s), b.distances(s))
    src = np.arange(0, 2 * half, 3)
    assert np.array_equal(a.eccentricities(src), b.eccentricities(src))


@given(half=st.integers(2, 100), seed=seeds)
@settings(max_examples=25, deadline=None)
def test_quotient_metric_properties(half, seed):
    qm = map_qm(2 * half, seed)
    y = qm.labels
    root = int(np.argmin(y))
    d0 = metric.quotient_sssp(qm, root)
    assert np.array_equal(d0, y - y.min())
    for s in (0, half):
        d = metric.quotient_sssp(qm, s)
        assert d[s] == 0
        # never above d° and never below the label difference
        for t in range(0, 2 * half + 1, 7):
            assert d[t] <= metric.d_circle(qm, s, t)
            assert d[t] >= abs(y[s] - y[t])


def test_d_tree_circle_uses_representatives():
    qm = map_qm(64, 3)
    tv = TreeView(qm.snake)
    for i, j in [(0, 10), (5, 40), (20, 21)]:
        best = min(metric.d_circle(qm, s, t)
                   for s in tv.representatives(i) for t in tv.representatives(j))
        assert metric.d_tree_circle(qm, i, j) == best
    with pytest.raises(ValueError):
        metric.representatives(qm, 0, tol=-1)


@given(half=st.integers(2, 60), seed=seeds)
@settings(max_examples=25, deadline=None)
def test_diameter_sandwich_and_sources(half, seed):
    qm = map_qm(2 * half, seed)
    spread = float(np.ptp(qm.labels))
    d = metric.diameter(qm, sources="all")
    assert spread <= d <= 2 * spread
    assert metric.diameter(qm, sources="sample") <= d
    full = max(metric.quotient_sssp(qm, s).max() for s in range(2 * half + 1))
    assert d == full


def test_window_diameter_matches_brute_force():
    qm = metric.QuotientMetric(sn.sample_plane_snake(1.0, 24, 1))
    lo, hi = 10, 30
    brute = max(metric.quotient_sssp(qm, s)[lo:hi + 1].max() for s in range(lo, hi + 1))
    assert metric.diameter(qm, (lo, hi), "all") == brute
    with pytest.raises(ValueError):
        metric.diameter(qm)
    with pytest.raises(ValueError):
        metric.diameter(qm, (5, 2))
    assert metric.diameter(qm, (4, 4)) == 0.0


def hull_oracle(qm, center, r, basepoint):
    dist = metric.quotient_sssp(qm, center)
    inside = dist <= r
    cls = qm.snake.classes[0]
    size = len(qm)
    nbrs = [set() for _ in range(size)]
    for i in range(size - 1):
        nbrs[i].add(i + 1)
        nbrs[i + 1].add(i)
    for c in np.unique(cls):
        members = np.flatnonzero(cls == c)
        for a in members:
            nbrs[a].update(int(b) for b in members if b != a)
    seen = {basepoint}
    queue = deque([basepoint])
    while queue:
        v = queue.popleft()
        for w in nbrs[v]:
            if w not in seen and not inside[w]:
                seen.add(w)
                queue.append(w)
    return np.array(sorted(set(range(size)) - seen))


@pytest.mark.parametrize("variant", ["map", "plane"])
def test_filled_hull_matches_bfs(variant):
    if variant == "map":
        qm = map_qm(200, 4)
        center = 50
    else:
        qm = metric.QuotientMetric(sn.sample_plane_snake(2.0, 64, 4))
        center = qm.snake.grid.zero_index
    for r in (0.05, 0.2, 0.4):
        h = metric.filled_hull(qm, center, r)
        assert np.array_equal(h.hull, hull_oracle(qm, center, r, h.basepoint))
        assert set(h.ball) <= set(h.hull)


def test_ball_and_hull_errors():
    qm = map_qm(32, 0)
    with pytest.raises(ValueError):
        metric.metric_ball(qm, 0, -1.0)
    with pytest.raises(ValueError):
        metric.filled_hull(qm, 0, 1.0, basepoint=0)
    with pytest.raises(ValueError):
        metric.QuotientMetric(qm.snake, engine="fast")
