"""Shared plumbing for the experiment scripts: config overrides and output."""
import argparse
import dataclasses
import time
from pathlib import Path

from brownian_atlas import __version__
from brownian_atlas.io import dumps, write_atomic


def parse_config(cls, description):
    """Build ``cls`` from its defaults plus ``--field value`` overrides."""
    p = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        p.add_argument(f"--{f.name.replace('_', '-')}", type=type(f.default), default=f.default)
    p.add_argument("--out", type=Path, default=None)
    args = vars(p.parse_args())
    out = args.pop("out")
    return cls(**args), out


def finish(name, cfg, result, out, started):
    body = {"experiment": name, "config": dataclasses.asdict(cfg), "version": __version__,
            "seconds": round(time.perf_counter() - started, 1), "result": result}
    path = out or Path("results") / f"{name}.json"
    write_atomic(path, dumps(body))
    print(f"wrote {path}")
