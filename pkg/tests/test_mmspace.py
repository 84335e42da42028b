import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brownian_atlas import metric, mmspace
from brownian_atlas import snake as sn
from brownian_atlas.rng import stream


def map_qm(n, seed):
    return metric.QuotientMetric(sn.sample_map_snake(n, seed))


@given(k=st.integers(1, 8), marks=st.integers(0, 3), seed=st.integers(0, 10**5))
@settings(max_examples=30, deadline=None)
def test_sampled_matrices_are_metric(k, marks, seed):
    marks = min(marks, k)
    qm = map_qm(64, seed)
    m = mmspace.sample_distance_matrix(qm, k, list(range(marks)), seed)
    assert m.k == k and m.marks == marks
    assert np.array_equal(m.points[:marks], np.arange(marks))
    assert np.all(m.points < mmspace.measure_support(qm.snake))
    assert m.is_valid()


def test_matrix_entries_are_quotient_distances():
    qm = map_qm(128, 1)
    m = mmspace.sample_distance_matrix(qm, 5, [7], seed=2, replica=3)
    for a, p in enumerate(m.points):
        for b, q in enumerate(m.points):
            assert m.d[a, b] == metric.quotient_sssp(qm, int(p))[q]
    again = mmspace.sample_distance_matrix(qm, 5, [7], seed=2, replica=3)
    assert np.array_equal(m.points, again.points)


def test_violation_scan_detects_broken_matrices():
    d = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    m = mmspace.DistanceMatrix(d, np.arange(3))
    assert m.violations()["triangle"] == 2
    d2 = d.copy()
    d2[0, 1] = 2.0
    d2[1, 1] = 0.5
    v = mmspace.DistanceMatrix(d2, np.arange(3)).violations()
    assert v["symmetry"] == 2 and v["diagonal"] == 1


def test_sample_matrix_errors():
    qm = map_qm(16, 0)
    with pytest.raises(ValueError):
        mmspace.sample_distance_matrix(qm, 0)
    with pytest.raises(ValueError):
        mmspace.sample_distance_matrix(qm, 1, [0, 1])
    with pytest.raises(ValueError):
        mmspace.sample_distance_matrix(qm, 2, [99])


def test_gromov_stat():
    qm = map_qm(64, 0)
    mats = [mmspace.sample_distance_matrix(qm, 3, seed=0, replica=r) for r in range(50)]
    est = mmspace.gromov_stat(mats, lambda d: d[0, 1])
    vals = [m.d[0, 1] for m in mats]
    assert est.estimate == pytest.approx(np.mean(vals))
    assert est.se == pytest.approx(np.std(vals, ddof=1) / np.sqrt(50))
    with pytest.raises(ValueError):
        mmspace.gromov_stat([], lambda d: 0)
    other = mmspace.sample_distance_matrix(qm, 4)
    with pytest.raises(ValueError):
        mmspace.gromov_stat(mats + [other], lambda d: 0)


def test_measure_support():
    assert mmspace.measure_support(sn.sample_map_snake(32, 0)) == 32
    assert mmspace.measure_support(sn.sample_plane_snake(1.0, 8, 0)) == 17


def test_snake_hash_distinguishes_snakes():
    a, b = sn.sample_map_snake(32, 0), sn.sample_map_snake(32, 1)
    assert mmspace.snake_hash(a) == mmspace.snake_hash(sn.sample_map_snake(32, 0))
    assert mmspace.snake_hash(a) != mmspace.snake_hash(b)


def test_reroot_small_and_errors():
    rep = mmspace.reroot_test(32, 8, 200, 0)
    assert rep.left.size == rep.right.size == 200 and 0 <= rep.p_value <= 1
    with pytest.raises(ValueError):
        mmspace.reroot_test(32, 40, 10, 0)
    with pytest.raises(ValueError):
        mmspace.reroot_test(32, 8, 10, 0, variant="plane")


def test_mark_position_is_in_unit_interval():
    rng = stream(0, "t")
    pos = [mmspace.mark_position(sn.sample_map_snake(32, 0, r), rng) for r in range(50)]
    assert all(0 < p < 1 for p in pos)
    rep = mmspace.marked_point_test(32, 160, 0, bins=4)
    assert sum(rep.counts) == 160


def test_exchangeability_requires_two_free_points():
    qm = map_qm(16, 0)
    mats = [mmspace.sample_distance_matrix(qm, 2, [0], replica=r) for r in range(4)]
    with pytest.raises(ValueError):
        mmspace.exchangeability_test(mats)


def test_window_encoding():
    s = sn.sample_plane_snake(2.0, 64, 0)
    recs = mmspace.window_encoding(s, [0.05, 0.2, 5.0], k=4)
    masses = [r.mass for r in recs]
    assert masses == sorted(masses)
    assert recs[-1].truncated and not recs[0].truncated
    for r in recs:
        assert r.matrix.points[0] == s.grid.zero_index and r.matrix.is_valid()
    with pytest.raises(ValueError):
        mmspace.window_encoding(sn.sample_map_snake(16, 0), [0.1])
    with pytest.raises(ValueError):
        mmspace.window_encoding(s, [0.2, 0.1])
