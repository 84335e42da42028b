import numpy as np
import pytest

from brownian_atlas import metric
from brownian_atlas.tree import TreeView, tree_distance_matrix

_CRITERIA = []


def circle_matrix(qm):
    """``d°`` on grid indices with zero-weight links between tree-equivalent ones."""
    size = len(qm)
    e = np.empty((size, size))
    for i in range(size):
        for j in range(size):
            e[i, j] = metric.d_circle(qm, i, j)
    e[tree_distance_matrix(TreeView(qm.snake)) == 0] = 0.0
    return e


def floyd_warshall(e):
    """Textbook relaxation, ``d[i, j] = min(d[i, j], d[i, k] + d[k, j])`` for each k."""
    d = e.copy()
    for k in range(d.shape[0]):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary."""

    def record(number, name, ok, detail=""):
        _CRITERIA.append((number, name, bool(ok), detail))
        print(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(
            f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
