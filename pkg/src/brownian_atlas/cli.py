"""Command-line experiment runner.

Every artifact carries the run configuration and the library version. The
configuration excludes ``--threads`` and ``--out`` so that reruns differing
only in those produce byte-identical files.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import densities, metric, mmspace, plane, whitney
from . import io as aio
from . import snake as sn

COMMANDS = ("simulate-map", "simulate-plane", "tail", "scaling", "chunk-cover",
            "densities", "reroot", "matrix", "whitney")


def parse_grid(text):
    """``a:b:steps`` to an evenly spaced array."""
    try:
        a, b, steps = text.split(":")
        a, b, steps = float(a), float(b), int(steps)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a:b:steps, got {text!r}") from exc
    if steps < 1 or (steps > 1 and b <= a):
        raise argparse.ArgumentTypeError("need steps >= 1 and b > a")
    return np.linspace(a, b, steps)


def parse_marks(text):
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"marks must be comma-separated integers: {text!r}") from exc


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None,
                        help="output file stem (default: the command name)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--threads", type=int, default=1)

    p = argparse.ArgumentParser(prog="brownian-atlas",
                                description="Brownian map and plane experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-map", parents=[common], help="sample a map snake")
    s.add_argument("--n", type=int, default=512)
    s.add_argument("--source", type=int, default=None, help="also export distances from this index")
    s.add_argument("--radius", type=float, default=None, help="also export the filled hull around --source")

    s = sub.add_parser("simulate-plane", parents=[common], help="sample a plane window")
    s.add_argument("--T", type=float, default=2.0)
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--source", type=int, default=None)
    s.add_argument("--radius", type=float, default=None)

    s = sub.add_parser("tail", parents=[common], help="diameter tail exponent")
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--replicas", type=int, default=1000)
    s.add_argument("--r-grid", type=parse_grid, default=parse_grid("3.5:7:15"))

    s = sub.add_parser("scaling", parents=[common], help="chunk diameter scaling law")
    s.add_argument("--n", type=int, default=512)
    s.add_argument("--T", type=float, default=2.0)
    s.add_argument("--replicas", type=int, default=2000)
    s.add_argument("--null-runs", type=int, default=20)
    s.add_argument("--resolution", choices=("chunk", "step"), default="chunk")

    s = sub.add_parser("chunk-cover", parents=[common], help="chunk diameter exceedance fractions")
    s.add_argument("--n", type=int, default=512)
    s.add_argument("--T", type=float, default=2.0)
    s.add_argument("--k", type=int, default=16)
    s.add_argument("--replicas", type=int, default=1000)
    s.add_argument("--r-grid", type=parse_grid, default=parse_grid("2.5:7:15"),
                   help="grid of thresholds a")

    s = sub.add_parser("densities", parents=[common], help="endpoint density checks")
    s.add_argument("--check", choices=("all", "closed-form"), default="all")
    s.add_argument("--n", type=int, default=2048)
    s.add_argument("--replicas", type=int, default=10_000)

    s = sub.add_parser("reroot", parents=[common], help="re-rooting invariance tests")
    s.add_argument("--n", type=int, default=512)
    s.add_argument("--replicas", type=int, default=2000)

    s = sub.add_parser("matrix", parents=[common], help="sampled distance matrices")
    s.add_argument("--n", type=int, default=512)
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--marks", type=parse_marks, default=[])
    s.add_argument("--replicas", type=int, default=1)

    s = sub.add_parser("whitney", parents=[common], help="Whitney squares and shadow sums")
    s.add_argument("--domain", choices=("disk", "square", "koebe"), default="disk")
    s.add_argument("--max-level", type=int, default=6)
    s.add_argument("--theta-grid", type=int, default=1024)
    return p


def validate(parser, args):
    def need(cond, msg):
        if not cond:
            parser.error(msg)

    need(args.threads >= 1, "--threads must be at least 1")
    need(args.seed >= 0, "--seed must be nonnegative")
    if hasattr(args, "replicas"):
        need(args.replicas >= 1, "--replicas must be positive")
    if args.command == "scaling":
        need(args.replicas >= 100, "scaling needs --replicas >= 100")
    if hasattr(args, "n"):
        need(args.n >= 2, "--n must be at least 2")
    if args.command in ("simulate-map", "tail", "reroot", "matrix"):
        need(args.n % 2 == 0, "--n must be even for map snakes")
    if hasattr(args, "T"):
        need(args.T > 0, "--T must be positive")
    if hasattr(args, "k"):
        need(args.k >= 1, "--k must be at least 1")
    if args.command in ("simulate-map", "simulate-plane"):
        need(args.radius is None or args.source is not None, "--radius needs --source")
    if args.command == "whitney":
        need(args.max_level >= 1, "--max-level must be at least 1")
        need(args.theta_grid >= 256, "--theta-grid must be at least 256")
    if args.command == "matrix":
        need(len(args.marks) <= args.k, "more --marks than --k")
        need(args.format == "json" or args.replicas == 1,
             "csv matrix output holds one matrix; use --format json for batches")


def config_of(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("threads", "out")}
    return aio.jsonable(cfg)


def _emit(path, text):
    aio.write_atomic(path, text)
    print(f"wrote {path}")


def _stem(args):
    return Path(args.out) if args.out else Path(args.command)


def _snake_outputs(args, snake, header):
    stem = _stem(args)
    meta = {"seed": args.seed, "config": header["config"], "version": __version__}
    if args.command == "simulate-plane":
        meta["n"] = args.n
    aio.write_snake(stem.with_suffix(".csv"), snake, meta)
    print(f"wrote {stem.with_suffix('.csv')}")
    if args.source is None:
        return
    qm = metric.QuotientMetric(snake)
    if not 0 <= args.source < len(qm):
        raise SystemExit(f"--source {args.source} is outside the grid")
    dist = aio.DistanceCache().get(qm, args.source)
    comments = [json.dumps(header, sort_keys=True)]
    _emit(stem.with_name(stem.name + "-distances.csv"),
          aio.distances_text(args.source, dist, comments))
    if args.radius is not None:
        hull = metric.filled_hull(qm, args.source, args.radius)
        body = dict(aio.hull_dict(hull), **header)
        _emit(stem.with_name(stem.name + "-hull.json"), aio.dumps(body))


def run(args):
    header = {"config": config_of(args), "version": __version__}
    stem = _stem(args)
    cmd = args.command

    if cmd == "simulate-map":
        _snake_outputs(args, sn.sample_map_snake(args.n, args.seed), header)
        return 0
    if cmd == "simulate-plane":
        _snake_outputs(args, sn.sample_plane_snake(args.T, args.n, args.seed), header)
        return 0

    if cmd == "tail":
        rep = plane.tail_experiment(args.replicas, args.r_grid, args.n, args.seed,
                                    threads=args.threads)
        if args.format == "csv":
            _emit(stem.with_suffix(".csv"),
                  aio.tail_csv_text(rep, [json.dumps(dict(header, exponent=rep.exponent,
                                                          exponent_se=rep.exponent_se),
                                                     sort_keys=True)]))
        else:
            _emit(stem.with_suffix(".json"), aio.dumps(dict(rep.to_dict(), **header)))
        print(f"exponent {rep.exponent:.4f} +- {rep.exponent_se:.4f}  r2 {rep.r2:.4f}")
        return 0

    if cmd == "scaling":
        rep = plane.scaling_experiment(args.replicas, args.n, args.seed, T=args.T,
                                       resolution=args.resolution, null_runs=args.null_runs,
                                       threads=args.threads)
        _emit(stem.with_suffix(".json"), aio.dumps(dict(rep.to_dict(), **header)))
        print(f"ks {rep.ks_stat:.4f} p {rep.p_value:.4f} null_ok {rep.null_ok}")
        return 0

    if cmd == "chunk-cover":
        rep = plane.chunk_cover_experiment(args.replicas, args.k, args.n, args.seed,
                                           args.r_grid, T=args.T, threads=args.threads)
        if args.format == "csv":
            rows = [(aio.fmt(a), aio.fmt(f), h) for a, f, h in zip(rep.a, rep.fraction, rep.hits)]
            _emit(stem.with_suffix(".csv"), aio._csv_text(
                ["a", "fraction", "hits"], rows,
                [json.dumps(dict(header, slope=rep.slope, r2=rep.r2), sort_keys=True)]))
        else:
            _emit(stem.with_suffix(".json"), aio.dumps(dict(rep.to_dict(), **header)))
        print(f"slope {rep.slope:.4f} r2 {rep.r2:.4f}")
        return 0

    if cmd == "densities":
        if args.check == "all":
            ok, details = densities.check_all(args.n, args.replicas, args.seed)
        else:
            ok, details = _closed_form_checks()
        _emit(stem.with_suffix(".json"), aio.dumps(dict(details, ok=ok, **header)))
        print("densities: " + ("ok" if ok else "FAILED"))
        return 0 if ok else 1

    if cmd == "reroot":
        n = args.n
        tests = [mmspace.reroot_test(n, s, args.replicas, args.seed)
                 for s in (n // 4, n // 2, 3 * n // 4)]
        mark = mmspace.marked_point_test(n, args.replicas, args.seed)
        body = {"shifts": [t.to_dict() for t in tests], "mark": mark.to_dict()}
        _emit(stem.with_suffix(".json"), aio.dumps(dict(body, **header)))
        for t in tests:
            print(f"{t.label} p {t.p_value:.4f}")
        print(f"mark chi2 p {mark.p_value:.4f}")
        return 0

    if cmd == "matrix":
        cache = aio.DistanceCache()
        mats = []
        for r in range(args.replicas):
            snake = sn.sample_map_snake(args.n, args.seed, r)
            qm = metric.QuotientMetric(snake)
            if cache.root is not None:
                for p in args.marks:
                    qm._cache.setdefault(qm.class_of(p), cache.get(qm, p))
            mats.append(mmspace.sample_distance_matrix(qm, args.k, args.marks, args.seed, r))
        extra = {"config": json.dumps(header["config"], sort_keys=True), "version": __version__}
        if args.format == "csv":
            _emit(stem.with_suffix(".csv"), aio.matrix_csv_text(mats[0], extra))
        else:
            _emit(stem.with_suffix(".jsonl"), aio.matrices_jsonl_text(mats, header))
        bad = sum(not m.is_valid() for m in mats)
        print(f"{len(mats)} matrices, {bad} failing metric checks")
        return 0 if bad == 0 else 1

    if cmd == "whitney":
        if args.domain == "disk":
            chart, domain = whitney.identity_chart(), whitney.DiskDomain()
        elif args.domain == "square":
            chart, domain = None, whitney.square_domain()
        else:
            chart = whitney.koebe_chart()
            domain = whitney.chart_domain(chart)
        decomp = whitney.whitney_decompose(domain, args.max_level)
        comments = [json.dumps(header, sort_keys=True)]
        _emit(stem.with_suffix(".csv"), aio.decomposition_csv_text(decomp, comments))
        if chart is not None:
            rep = whitney.summability_report(chart, args.max_level, args.theta_grid, domain)
            body = dict(aio.shadow_dict(rep.shadows), ratios=rep.ratios,
                        unsampled=rep.unsampled, **header)
            _emit(stem.with_suffix(".json"), aio.dumps(body))
            print(f"verdict {rep.verdict}")
        print(f"{len(decomp.cubes)} cubes, {len(decomp.sandwich_violations())} sandwich violations")
        return 0
    raise AssertionError(cmd)


def _closed_form_checks():
    details = {f"mass_{w}": densities.EndpointLaw(w, 0.5).total_mass() for w in densities.WHICH}
    details["z_mean"] = densities.z_lp_norm(1.0)
    details["lp"] = {str(p): densities.z_lp_norm(p) for p in (1.25, 1.5, 1.75, 2.25, 2.5)}
    ok = (all(abs(details[f"mass_{w}"] - 1) < 1e-8 for w in densities.WHICH)
          and abs(details["z_mean"] - 1) < 1e-8
          and all(np.isfinite(details["lp"][k]) for k in ("1.25", "1.5", "1.75"))
          and all(np.isinf(details["lp"][k]) for k in ("2.25", "2.5")))
    return ok, details


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    validate(parser, args)
    try:
        return run(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
