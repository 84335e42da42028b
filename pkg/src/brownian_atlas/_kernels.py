"""Compiled inner loops: tree classes, snake labels and quotient shortest paths.

The shortest-path kernels work on a *linear* label sequence, where
``d°(s, t) = Y[s] + Y[t] - 2 min(Y[s..t])``. The cyclic map variant is brought
into this form by rotating the contour so that it starts at the label minimum
(see :class:`brownian_atlas.metric.QuotientMetric`).

Two engines are provided. The dense one relaxes the implicit complete graph
with ``d°`` weights. The sparse one uses that ``d°`` is the path metric of the
min-Cartesian tree of the labels (edge weight ``Y[child] - Y[parent]``), so
the quotient graph is that tree plus zero-weight links between positions of
the same tree vertex: O(N) edges instead of O(N^2).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def tree_classes(x):
    """Label grid indices by the tree vertex they project to.

    ``i`` and ``j`` share a class iff ``x[i] == x[j] == min(x[i..j])``.
    Returns ``(cls, n_classes)``.
    """
    n = x.size
    cls = np.empty(n, np.int64)
    stack_h = np.empty(n, np.float64)
    stack_c = np.empty(n, np.int64)
    top = -1
    nc = 0
    for i in range(n):
        h = x[i]
        while top >= 0 and stack_h[top] > h:
            top -= 1
        if top >= 0 and stack_h[top] == h:
            cls[i] = stack_c[top]
        else:
            top += 1
            stack_h[top] = h
            stack_c[top] = nc
            cls[i] = nc
            nc += 1
    return cls, nc


@njit(cache=True)
def sequential_labels(x, z):
    """Tree-indexed Brownian labels along the contour ``x``.

    ``z`` supplies one standard normal per grid index. The stack holds the
    ancestral line of the current index (plus a virtual root at height 0 with
    label 0). A point above the stack top branches off it; a point below the
    top sits on the ancestral line and gets either the label of the stack
    entry at its height or a Brownian-bridge interpolation between the two
    entries bracketing it. This reproduces ``Cov(Y_i, Y_j) = min(x[i..j])``
    exactly.
    """
    n = x.size
    y = np.empty(n, np.float64)
    sh = np.empty(n + 1, np.float64)
    sy = np.empty(n + 1, np.float64)
    top = 0
    sh[0] = 0.0
    sy[0] = 0.0
    for i in range(n):
        h = x[i]
        popped = False
        hb = 0.0
        yb = 0.0
        while top > 0 and sh[top] > h:
            hb = sh[top]
            yb = sy[top]
            popped = True
            top -= 1
        ha = sh[top]
        ya = sy[top]
        if h == ha:
            yi = ya
        elif popped:
            span = hb - ha
            frac = (h - ha) / span
            var = (h - ha) * (hb - h) / span
            yi = ya + frac * (yb - ya) + np.sqrt(var) * z[i]
        else:
            yi = ya + np.sqrt(h - ha) * z[i]
        y[i] = yi
        if h != ha:
            top += 1
            sh[top] = h
            sy[top] = yi
    return y


@njit(cache=True)
def _relax_from(y, cls, ptr, members, u, du, dist, done, bound):
    n = y.size
    for p in range(ptr[u], ptr[u + 1]):
        s = members[p]
        ys = y[s]
        m = ys
        for v in range(s + 1, n):
            yv = y[v]
            if yv < m:
                m = yv
            # every later v has d°(s, v) >= ys - m
            if du + (ys - m) > bound:
                break
            c = cls[v]
            if not done[c]:
                cand = du + ((ys + yv) - 2.0 * m)
                if cand < dist[c]:
                    dist[c] = cand
        m = ys
        for v in range(s - 1, -1, -1):
            yv = y[v]
            if yv < m:
                m = yv
            if du + (ys - m) > bound:
                break
            c = cls[v]
            if not done[c]:
                cand = du + ((ys + yv) - 2.0 * m)
                if cand < dist[c]:
                    dist[c] = cand


@njit(cache=True)
def sssp(y, cls, ptr, members, src, bound, tmask, ntarget):
    """Dense Dijkstra over tree classes with implicit d° edges.

    Stops once every class flagged in ``tmask`` is settled (``ntarget > 0``)
    or once the frontier exceeds ``bound``. Distances of unsettled classes are
    then only upper bounds.
    """
    nc = ptr.size - 1
    dist = np.full(nc, np.inf)
    done = np.zeros(nc, np.bool_)
    dist[src] = 0.0
    remaining = ntarget
    for _ in range(nc):
        u = -1
        best = np.inf
        for c in range(nc):
            if not done[c] and dist[c] < best:
                best = dist[c]
                u = c
        if u < 0 or best > bound:
            break
        done[u] = True
        if ntarget > 0 and tmask[u]:
            remaining -= 1
            if remaining == 0:
                break
        _relax_from(y, cls, ptr, members, u, best, dist, done, bound)
    return dist


@njit(cache=True)
def direct_bound(y, s, target):
    """max of d°(s, t) over positions t flagged in ``target``."""
    n = y.size
    ys = y[s]
    out = 0.0
    m = ys
    for v in range(s, n):
        if y[v] < m:
            m = y[v]
        if target[v]:
            w = (ys + y[v]) - 2.0 * m
            if w > out:
                out = w
    m = ys
    for v in range(s, -1, -1):
        if y[v] < m:
            m = y[v]
        if target[v]:
            w = (ys + y[v]) - 2.0 * m
            if w > out:
                out = w
    return out


@njit(cache=True)
def eccentricities(y, cls, ptr, members, sources, target):
    """For each source position, the max quotient distance to flagged positions."""
    nc = ptr.size - 1
    tmask = np.zeros(nc, np.bool_)
    for v in range(y.size):
        if target[v]:
            tmask[cls[v]] = True
    ntarget = 0
    for c in range(nc):
        if tmask[c]:
            ntarget += 1
    out = np.empty(sources.size, np.float64)
    for k in range(sources.size):
        s = sources[k]
        bound = direct_bound(y, s, target)
        dist = sssp(y, cls, ptr, members, cls[s], bound, tmask, ntarget)
        e = 0.0
        for v in range(y.size):
            if target[v]:
                d = dist[cls[v]]
                if d > e:
                    e = d
        out[k] = e
    return out


@njit(cache=True)
def cartesian_parent(y):
    """Parent of every position in the min-Cartesian tree of ``y`` (root: -1)."""
    n = y.size
    parent = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    top = -1
    for i in range(n):
        last = -1
        while top >= 0 and y[stack[top]] > y[i]:
            last = stack[top]
            top -= 1
        if top >= 0:
            parent[i] = stack[top]
        if last >= 0:
            parent[last] = i
        top += 1
        stack[top] = i
    return parent


@njit(cache=True)
def _heap_push(keys, vals, size, key, val):
    i = size
    keys[i] = key
    vals[i] = val
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] <= keys[i]:
            break
        keys[p], keys[i] = keys[i], keys[p]
        vals[p], vals[i] = vals[i], vals[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(keys, vals, size):
    key = keys[0]
    val = vals[0]
    size -= 1
    keys[0] = keys[size]
    vals[0] = vals[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        if l + 1 < size and keys[l + 1] < keys[l]:
            c = l + 1
        if keys[i] <= keys[c]:
            break
        keys[c], keys[i] = keys[i], keys[c]
        vals[c], vals[i] = vals[i], vals[c]
        i = c
    return key, val, size


@njit(cache=True)
def sparse_sssp(adj_ptr, adj_to, adj_w, src, tmask, ntarget):
    """Heap Dijkstra on a CSR graph; early exit once all ``tmask`` nodes settle."""
    n = adj_ptr.size - 1
    dist = np.full(n, np.inf)
    done = np.zeros(n, np.bool_)
    cap = adj_to.size + 1
    keys = np.empty(cap, np.float64)
    vals = np.empty(cap, np.int64)
    size = 0
    dist[src] = 0.0
    size = _heap_push(keys, vals, size, 0.0, src)
    remaining = ntarget
    while size > 0:
        du, u, size = _heap_pop(keys, vals, size)
        if done[u]:
            continue
        done[u] = True
        if ntarget > 0 and tmask[u]:
            remaining -= 1
            if remaining == 0:
                break
        for e in range(adj_ptr[u], adj_ptr[u + 1]):
            v = adj_to[e]
            if done[v]:
                continue
            cand = du + adj_w[e]
            if cand < dist[v]:
                dist[v] = cand
                size = _heap_push(keys, vals, size, cand, v)
    return dist


@njit(cache=True)
def sparse_eccentricities(adj_ptr, adj_to, adj_w, sources, target):
    """Max distance from each source position to positions flagged in ``target``."""
    n = adj_ptr.size - 1
    ntarget = 0
    for v in range(n):
        if target[v]:
            ntarget += 1
    out = np.empty(sources.size, np.float64)
    for k in range(sources.size):
        dist = sparse_sssp(adj_ptr, adj_to, adj_w, sources[k], target, ntarget)
        e = 0.0
        for v in range(n):
            if target[v] and dist[v] > e:
                e = dist[v]
        out[k] = e
    return out
