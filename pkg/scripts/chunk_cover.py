"""Fraction of large chunks against a**(4/3)."""
import time
from dataclasses import dataclass

import numpy as np

from brownian_atlas.plane import chunk_cover_experiment

from _common import finish, parse_config


@dataclass
class ChunkConfig:
    replicas: int = 10_000
    k: int = 16
    n: int = 512
    T: float = 2.0
    seed: int = 0
    variant: str = "plane"
    a_lo: float = 2.5
    a_hi: float = 7.0
    a_steps: int = 15
    threads: int = 1


def main():
    cfg, out = parse_config(ChunkConfig, __doc__)
    t0 = time.perf_counter()
    rep = chunk_cover_experiment(cfg.replicas, cfg.k, cfg.n, cfg.seed,
                                 np.linspace(cfg.a_lo, cfg.a_hi, cfg.a_steps),
                                 variant=cfg.variant, T=cfg.T, threads=cfg.threads)
    print(f"slope {rep.slope:.4f}, R2 {rep.r2:.4f}, {rep.fit_points} points")
    finish("chunk_cover", cfg, rep.to_dict(), out, t0)


if __name__ == "__main__":
    main()
