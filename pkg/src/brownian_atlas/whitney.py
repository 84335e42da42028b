"""Whitney squares of a planar domain and the shadows of radial curves.

A chart ``phi`` maps the unit disk onto the domain. For each square ``Q`` of
the decomposition, the shadow is the set of boundary points ``phi(e^{iθ})``
whose radial image curve ``phi([0, e^{iθ}))`` passes through ``Q``. Its
diameter ``s(Q)`` enters the sum ``Σ s(Q)²``; a bounded sum is the criterion
being probed. Everything is computed on a finite θ grid and r schedule, so
shadows are inner approximations.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import shapely
from scipy.spatial import ConvexHull, QhullError
from shapely.geometry import Polygon, box

VERDICTS = ("converging", "inconclusive", "diverging")


class Domain:
    """Bounded planar domain with an exact square-to-boundary distance.

    Subclasses implement :meth:`square_status`, returning ``"inside"``,
    ``"outside"`` or ``"boundary"`` plus the boundary distance of the square.
    """

    bbox: tuple

    def square_status(self, x0, y0, side):
        raise NotImplementedError

    def area(self):
        raise NotImplementedError


@dataclass
class DiskDomain(Domain):
    center: complex = 0j
    radius: float = 1.0

    @property
    def bbox(self):
        c, r = self.center, self.radius
        return (c.real - r, c.imag - r, c.real + r, c.imag + r)

    def square_status(self, x0, y0, side):
        cx, cy = self.center.real, self.center.imag
        xs = np.array([x0, x0 + side]) - cx
        ys = np.array([y0, y0 + side]) - cy
        far = math.hypot(np.abs(xs).max(), np.abs(ys).max())
        nx = 0.0 if xs[0] <= 0 <= xs[1] else np.abs(xs).min()
        ny = 0.0 if ys[0] <= 0 <= ys[1] else np.abs(ys).min()
        near = math.hypot(nx, ny)
        if far < self.radius:
            return "inside", self.radius - far
        if near >= self.radius:
            return "outside", 0.0
        return "boundary", 0.0

    def area(self):
        return math.pi * self.radius ** 2


@dataclass
class PolygonDomain(Domain):
    polygon: Polygon

    def __post_init__(self):
        if self.polygon.is_empty or self.polygon.area <= 0:
            raise ValueError("empty domain")
        shapely.prepare(self.polygon)
        self._edge = self.polygon.exterior

    @property
    def bbox(self):
        return self.polygon.bounds

    def square_status(self, x0, y0, side):
        sq = box(x0, y0, x0 + side, y0 + side)
        if self.polygon.contains(sq):
            return "inside", float(sq.distance(self._edge))
        if not self.polygon.intersects(sq) or self.polygon.touches(sq):
            return "outside", 0.0
        return "boundary", 0.0

    def area(self):
        return self.polygon.area


def square_domain(side=1.0, origin=(0.0, 0.0)):
    x, y = origin
    return PolygonDomain(box(x, y, x + side, y + side))


def raster_domain(inside, bbox, h):
    """Polygonize an inside-test sampled at resolution ``h`` (union of raster cells)."""
    x0, y0, x1, y1 = bbox
    xs = np.arange(x0 + h / 2, x1, h)
    ys = np.arange(y0 + h / 2, y1, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    mask = np.asarray(inside(X, Y), dtype=bool)
    if not mask.any():
        raise ValueError("empty domain")
    cells = [box(x - h / 2, y - h / 2, x + h / 2, y + h / 2)
             for x, y in zip(X[mask], Y[mask])]
    shape = shapely.union_all(cells)
    if shape.geom_type != "Polygon":
        shape = max(shape.geoms, key=lambda g: g.area)
    return PolygonDomain(Polygon(shape.exterior))


@dataclass(frozen=True)
class Cube:
    level: int
    ix: int
    iy: int
    side: float
    dist: float
    x0: float
    y0: float

    @property
    def id(self):
        return f"{self.level}:{self.ix}:{self.iy}"

    @property
    def diam(self):
        return math.sqrt(2.0) * self.side

    @property
    def center(self):
        return complex(self.x0 + self.side / 2, self.y0 + self.side / 2)


@dataclass
class WhitneyDecomposition:
    domain: Domain
    origin: tuple
    base: float
    max_level: int
    cubes: list = field(default_factory=list)

    def side(self, level):
        return self.base * 2.0 ** -level

    def by_level(self):
        out = {}
        for q in self.cubes:
            out.setdefault(q.level, []).append(q)
        return out

    def covered_area(self):
        return sum(q.side ** 2 for q in self.cubes)

    def sandwich_violations(self, lower=1.0, upper=4.0):
        """Cubes breaking ``lower*diam <= dist <= upper*diam``."""
        return [q for q in self.cubes if not lower * q.diam <= q.dist <= upper * q.diam]


def whitney_decompose(domain, max_level):
    """Maximal dyadic squares ``Q`` inside the domain with ``dist(Q, ∂D) >= diam(Q)``.

    Level 0 is one square covering the bounding box. A square is kept as
    soon as it qualifies and subdivided otherwise, down to ``max_level``.
    A kept square's parent failed the test, which bounds its distance by
    ``3 diam(Q)``; hence ``diam <= dist <= 4 diam`` for every cube. The
    uncovered part is a boundary collar of width about ``2**-max_level``
    times the bounding box.
    """
    if max_level < 1:
        raise ValueError("max_level must be at least 1")
    x0, y0, x1, y1 = domain.bbox
    base = 2.0 ** math.ceil(math.log2(max(x1 - x0, y1 - y0)))
    decomp = WhitneyDecomposition(domain, (x0, y0), base, max_level)
    stack = [(0, 0, 0)]
    while stack:
        level, ix, iy = stack.pop()
        side = base * 2.0 ** -level
        qx, qy = x0 + ix * side, y0 + iy * side
        status, dist = domain.square_status(qx, qy, side)
        if status == "outside":
            continue
        if status == "inside" and dist >= math.sqrt(2.0) * side:
            decomp.cubes.append(Cube(level, ix, iy, side, dist, qx, qy))
            continue
        if level < max_level:
            for dx in (0, 1):
                for dy in (0, 1):
                    stack.append((level + 1, 2 * ix + dx, 2 * iy + dy))
    decomp.cubes.sort(key=lambda q: (q.level, q.ix, q.iy))
    return decomp


@dataclass
class ConformalChart:
    """Vectorized map from the unit disk onto a domain."""

    phi: Callable
    name: str = "chart"

    def __call__(self, z):
        return self.phi(np.asarray(z, dtype=np.complex128))

    @property
    def center(self):
        return complex(self(np.array([0j]))[0])

    def injectivity_defect(self, radii=32, angles=128):
        """Smallest image distance between distinct polar grid points, relative to the domain size."""
        r = np.linspace(0.05, 0.95, radii)
        t = np.linspace(0.0, 2 * np.pi, angles, endpoint=False)
        w = self((r[:, None] * np.exp(1j * t[None, :])).ravel())
        d = np.abs(w[:, None] - w[None, :])
        np.fill_diagonal(d, np.inf)
        return float(d.min() / np.abs(w - w.mean()).max())


def identity_chart():
    return ConformalChart(lambda z: z, "identity")


def koebe_chart(rho=0.8, size=2.0):
    """Koebe map ``z / (1 - z)**2`` on the disk of radius ``rho``.

    The image is rescaled so that the real diameter ``[-1, 1]`` maps onto a
    segment of length ``size``.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    k = lambda z: z / (1.0 - z) ** 2  # noqa: E731
    lo, hi = k(-rho), k(rho)
    scale = size / (hi - lo)
    return ConformalChart(lambda z: scale * k(rho * z), f"koebe-{rho:g}")


def chart_domain(chart, samples=4096, r=1.0):
    """Polygon through ``phi(r e^{iθ})`` on a uniform θ grid."""
    t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    w = chart(r * np.exp(1j * t))
    return PolygonDomain(Polygon(np.column_stack((w.real, w.imag))))


def radius_schedule(r_steps, r_max=1.0 - 1e-9, knee=0.99):
    """Uniform steps on [0, knee] followed by geometric steps toward ``r_max``."""
    lin = np.linspace(0.0, knee, r_steps)
    gap = 1.0 - r_max
    geo = 1.0 - np.geomspace(1.0 - knee, gap, max(16, r_steps // 8))
    return np.unique(np.concatenate((lin, geo)))


def _diameter(points):
    if len(points) < 2:
        return 0.0
    pts = np.column_stack((points.real, points.imag))
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


@dataclass
class ShadowReport:
    decomp: WhitneyDecomposition
    theta: np.ndarray = field(repr=False)
    endpoints: np.ndarray = field(repr=False)
    theta_sets: list = field(repr=False)
    s: np.ndarray = field(repr=False)
    truncated: np.ndarray = field(repr=False)
    verdict: Optional[str] = None

    def levels(self):
        return np.array([q.level for q in self.decomp.cubes], dtype=np.int64)

    def increments(self):
        """``Σ s(Q)²`` per level, for levels ``0..max_level``."""
        out = np.zeros(self.decomp.max_level + 1)
        np.add.at(out, self.levels(), self.s ** 2)
        return out

    def partial_sums(self):
        return np.cumsum(self.increments())

    def unsampled_fraction(self):
        """Per level, the fraction of cubes that no traced curve meets."""
        levels = self.levels()
        empty = np.array([len(ts) == 0 for ts in self.theta_sets], dtype=np.float64)
        total = np.bincount(levels, minlength=self.decomp.max_level + 1)
        missed = np.bincount(levels, weights=empty, minlength=self.decomp.max_level + 1)
        with np.errstate(invalid="ignore"):
            return np.where(total > 0, missed / np.maximum(total, 1), 0.0)


def _refine(rows, pts, linked, side, ox, oy):
    """Add interpolated points on polyline segments that skip a cell."""
    ix = np.floor((pts.real - ox) / side).astype(np.int64)
    iy = np.floor((pts.imag - oy) / side).astype(np.int64)
    jump = linked & (np.abs(np.diff(ix)) + np.abs(np.diff(iy)) > 1)
    seg = np.flatnonzero(jump)
    if seg.size == 0:
        return rows, pts
    a, b = pts[seg], pts[seg + 1]
    steps = np.ceil(4.0 * np.abs(b - a) / side).astype(np.int64)
    owner = np.repeat(np.arange(seg.size), steps - 1)
    k = np.arange(owner.size) - np.repeat(np.cumsum(steps - 1) - (steps - 1), steps - 1) + 1
    frac = k / steps[owner]
    extra = a[owner] + (b[owner] - a[owner]) * frac
    return np.concatenate((rows, rows[seg][owner])), np.concatenate((pts, extra))


def radial_shadow(chart, decomp, theta_grid_size=1024, r_steps=1024):
    """Trace ``phi(r e^{iθ})`` on a θ grid and collect the θs meeting each cube.

    Each curve is the polyline through its samples. Segments that jump over
    cells of a level are refined to steps of at most a quarter cell, so a
    cube counts as met when the polyline crosses it (up to corner clips
    thinner than that step). Non-finite chart values truncate a curve; its
    endpoint is then the last finite one.
    """
    if theta_grid_size < 256:
        raise ValueError("theta_grid_size must be at least 256")
    theta = np.linspace(0.0, 2 * np.pi, theta_grid_size, endpoint=False)
    radii = radius_schedule(r_steps)
    w = chart(radii[None, :] * np.exp(1j * theta[:, None]))
    finite = np.isfinite(w)
    truncated = ~finite.all(axis=1)
    last = np.where(truncated, np.argmin(finite, axis=1) - 1, radii.size - 1)
    endpoints = w[np.arange(theta.size), np.maximum(last, 0)]

    cubes = decomp.cubes
    index = {}
    for j, q in enumerate(cubes):
        index[(q.level, q.ix, q.iy)] = j
    sets = [set() for _ in cubes]
    rows, cols = np.nonzero(finite)
    pts = w[rows, cols]
    ox, oy = decomp.origin
    linked = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1] + 1)
    for level in sorted({q.level for q in cubes}):
        side = decomp.side(level)
        lrows, lpts = _refine(rows, pts, linked, side, ox, oy)
        ix = np.floor((lpts.real - ox) / side).astype(np.int64)
        iy = np.floor((lpts.imag - oy) / side).astype(np.int64)
        hits = np.unique(np.column_stack((lrows, ix, iy)), axis=0)
        for t, a, b in hits.tolist():
            j = index.get((level, a, b))
            if j is not None:
                sets[j].add(t)
    s = np.array([_diameter(endpoints[sorted(ts)]) for ts in sets])
    return ShadowReport(decomp, theta, endpoints, [sorted(ts) for ts in sets], s, truncated)


def shadow_sum(report, up_to_level=None):
    """``Σ s(Q)²`` over cubes of level at most ``up_to_level``."""
    if report is None or not report.decomp.cubes:
        return 0.0
    inc = report.increments()
    top = len(inc) - 1 if up_to_level is None else min(up_to_level, len(inc) - 1)
    return float(math.fsum(inc[:top + 1]))


@dataclass
class SummabilityReport:
    chart: str
    max_level: int
    theta_grid: int
    increments: list
    ratios: list
    verdict: str
    unsampled: list = field(default_factory=list)
    shadows: Optional[ShadowReport] = field(default=None, repr=False)

    def to_dict(self):
        return {"chart": self.chart, "max_level": self.max_level,
                "theta_grid": self.theta_grid, "increments": self.increments,
                "ratios": self.ratios, "unsampled": self.unsampled, "verdict": self.verdict}


def classify(ratios, decay=0.8, tail=3):
    """Three-valued verdict from the last ``tail`` per-level increment ratios."""
    if len(ratios) < tail:
        return "inconclusive"
    last = np.asarray(ratios[-tail:])
    if np.all(last < decay):
        return "converging"
    if np.all(last >= 1.0):
        return "diverging"
    return "inconclusive"


def summability_report(chart, max_level, theta_grid=1024, domain=None, r_steps=1024,
                       max_unsampled=0.05, tail=3):
    """Decompose the chart's image, trace shadows, and classify the level increments.

    Ratios are taken between consecutive levels that both carry cubes. If
    more than ``max_unsampled`` of the cubes on any level behind the last
    ``tail`` ratios are met by no curve, the θ grid does not resolve those
    levels and the verdict is ``"inconclusive"``.
    """
    domain = domain or chart_domain(chart)
    decomp = whitney_decompose(domain, max_level)
    rep = radial_shadow(chart, decomp, theta_grid, r_steps)
    inc = rep.increments()
    present = [lv for lv in range(inc.size) if inc[lv] > 0]
    pairs = [(a, b) for a, b in zip(present, present[1:]) if b == a + 1]
    ratios = [float(inc[b] / inc[a]) for a, b in pairs]
    unsampled = rep.unsampled_fraction()
    verdict = classify(ratios, tail=tail)
    deciding = {lv for pair in pairs[-tail:] for lv in pair}
    if verdict != "inconclusive" and any(unsampled[lv] > max_unsampled for lv in deciding):
        verdict = "inconclusive"
    rep.verdict = verdict
    return SummabilityReport(chart.name, max_level, theta_grid, inc.tolist(), ratios,
                             verdict, unsampled.tolist(), rep)


def arc_width(cube, center=0j):
    """Exact angular extent of a square seen from ``center``.

    Squares are half-open, ``[x0, x0 + side) x [y0, y0 + side)``, so exactly
    one contains the center and gets ``2π``. A corner sitting on the center
    does not count toward the extent.
    """
    x0, y0 = cube.x0 - center.real, cube.y0 - center.imag
    x1, y1 = x0 + cube.side, y0 + cube.side
    if x0 <= 0 < x1 and y0 <= 0 < y1:
        return 2 * math.pi
    mid = math.atan2(y0 + cube.side / 2, x0 + cube.side / 2)
    angles = [math.atan2(y, x) for x in (x0, x1) for y in (y0, y1) if (x, y) != (0, 0)]
    rel = [(a - mid + math.pi) % (2 * math.pi) - math.pi for a in angles]
    return max(rel) - min(rel)


def disk_shadow_diameter(cube, radius=1.0):
    """Shadow diameter of a square under the identity chart of a disk."""
    width = arc_width(cube)
    return 2 * radius if width >= math.pi else 2 * radius * math.sin(width / 2)
