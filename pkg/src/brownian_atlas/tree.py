"""Tree structure encoded by the lifetime contour."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TreeView:
    """Read-only tree queries over a snake's lifetime grid."""

    snake: object

    @property
    def values(self):
        return self.snake.grid.values

    @property
    def minima(self):
        return self.snake.minima

    def representatives(self, i):
        """All grid indices that project to the same tree vertex as ``i``."""
        cls, _ = self.snake.classes
        return np.flatnonzero(cls == cls[i])


def tree_distance(tv, i, j):
    """``X_i + X_j - 2 m_X(i, j)``."""
    x = tv.values
    return float(x[i] + x[j] - 2.0 * tv.minima.query(i, j))


def is_equivalent(tv, i, j, tol=0.0):
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return tree_distance(tv, i, j) <= tol


def tree_distance_matrix(tv):
    x = tv.values
    idx = np.arange(x.size)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return x[ii] + x[jj] - 2.0 * tv.minima.query_many(ii, jj)
