"""File formats: snakes, distances, hulls, matrices, reports, Whitney data.

Floats are written with ``repr``, the shortest decimal that reads back to the
same double, so every CSV round-trips bit for bit. All writes go to a
temporary file in the target directory and are renamed into place.
"""
import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import snake as sn

CACHE_ENV = "BROWNIAN_ATLAS_CACHE"


def fmt(x):
    return repr(float(x))


def jsonable(obj):
    """Plain-JSON version of ``obj``; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temp file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header, rows, comments=()):
    buf = _io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(path):
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_snake(path, snake, meta=None):
    """Snake CSV ``i,t,X,Y`` plus a JSON sidecar with grid and run metadata."""
    grid = snake.grid
    rows = [
        (i, fmt(t), fmt(x), fmt(y))
        for i, (t, x, y) in enumerate(zip(grid.times, grid.values, snake.labels))
    ]
    side = {"variant": snake.variant, "n": grid.n, "T": None, "seed": None,
            "dt": grid.dt, "t0": grid.t0, "version": __version__}
    if snake.variant == "plane":
        side["T"] = -grid.t0
    side.update(meta or {})
    write_atomic(path, _csv_text(["i", "t", "X", "Y"], rows))
    write_atomic(sidecar_path(path), dumps(side))
    return Path(path)


def read_snake(path):
    header, rows = _read_csv(path)
    if header != ["i", "t", "X", "Y"]:
        raise ValueError(f"unexpected snake header {header}")
    side = json.loads(Path(sidecar_path(path)).read_text())
    x = np.array([float(r[2]) for r in rows])
    y = np.array([float(r[3]) for r in rows])
    grid = sn.PathGrid(float(side["t0"]), float(side["dt"]), x, side["variant"])
    return sn.SnakePath(grid, y, sn.MinimaIndex(x, cyclic=grid.variant == "map")), side


def distances_text(source, dist, comments=()):
    rows = [(int(source), t, fmt(d)) for t, d in enumerate(dist)]
    return _csv_text(["source", "target", "d"], rows, comments)


def hull_dict(h):
    return {"center": int(h.center), "r": float(h.r),
            "basepoint": None if h.basepoint is None else int(h.basepoint),
            "ball": [int(v) for v in h.ball],
            "hull": None if h.hull is None else [int(v) for v in h.hull]}


def tail_csv_text(report, comments=()):
    rows = [(fmt(r), fmt(v), h, fmt(w)) for r, v, h, w in
            zip(report.r, report.neg_log_p, report.hits, report.half_width)]
    return _csv_text(["r", "neg_log_p", "hits", "half_width"], rows, comments)


def matrix_csv_text(m, extra=None):
    """Metadata rows (``# key,value``) followed by the ``k x k`` matrix."""
    meta = {"k": m.k, "marks": m.marks, "seed": m.seed, "source": m.source,
            "points": " ".join(str(int(p)) for p in m.points)}
    meta.update(extra or {})
    head = [f"{key},{meta[key]}" for key in meta]
    rows = [[fmt(v) for v in row] for row in m.d]
    return _csv_text([f"d{j}" for j in range(m.k)], rows, head)


def read_matrix_csv(path):
    from .mmspace import DistanceMatrix

    meta = {}
    with open(path) as fh:
        for ln in fh:
            if ln.startswith("# "):
                key, _, val = ln[2:].rstrip("\n").partition(",")
                meta[key] = val
    _, rows = _read_csv(path)
    d = np.array([[float(v) for v in r] for r in rows])
    points = np.array([int(v) for v in meta["points"].split()], dtype=np.int64)
    seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
    return DistanceMatrix(d, points, int(meta["marks"]), seed, meta.get("source", ""))


def matrix_record(m):
    return {"k": m.k, "marks": m.marks, "seed": m.seed, "source": m.source,
            "points": [int(p) for p in m.points], "d": m.d.tolist()}


def matrices_jsonl_text(matrices, extra=None):
    lines = []
    for m in matrices:
        rec = matrix_record(m)
        rec.update(extra or {})
        lines.append(json.dumps(jsonable(rec), sort_keys=True))
    return "\n".join(lines) + "\n"


def read_matrices_jsonl(path):
    from .mmspace import DistanceMatrix

    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            out.append(DistanceMatrix(np.array(rec["d"], dtype=np.float64),
                                      np.array(rec["points"], dtype=np.int64),
                                      rec["marks"], rec["seed"], rec["source"]))
    return out


def decomposition_csv_text(decomp, comments=()):
    rows = [(q.level, q.ix, q.iy, fmt(q.side), fmt(q.dist)) for q in decomp.cubes]
    return _csv_text(["level", "ix", "iy", "L", "dist"], rows, comments)


def shadow_dict(report):
    cubes = [{"id": q.id, "s": float(s), "n_theta": len(ts)}
             for q, s, ts in zip(report.decomp.cubes, report.s, report.theta_sets)]
    return {"cubes": cubes, "partial_sums": report.partial_sums().tolist(),
            "verdict": report.verdict, "truncated_thetas": int(report.truncated.sum())}


class DistanceCache:
    """On-disk cache of single-source distance arrays, keyed by snake hash and source."""

    def __init__(self, root=None):
        root = root if root is not None else os.environ.get(CACHE_ENV)
        self.root = Path(root) if root else None

    def get(self, qm, source):
        from .metric import quotient_sssp
        from .mmspace import snake_hash

        if self.root is None:
            return quotient_sssp(qm, source)
        path = self.root / f"{snake_hash(qm.snake)}-{int(source)}.npy"
        if path.exists():
            return np.load(path)
        dist = quotient_sssp(qm, source)
        self.root.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".npy")
        with os.fdopen(fd, "wb") as fh:
            np.save(fh, dist)
        os.replace(tmp, path)
        return dist
