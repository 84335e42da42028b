"""Stretched-exponential tail of the map diameter."""
import time
from dataclasses import dataclass

import numpy as np

from brownian_atlas.plane import TAIL_TARGET, tail_experiment

from _common import finish, parse_config


@dataclass
class TailConfig:
    replicas: int = 100_000
    n: int = 1024
    seed: int = 0
    r_lo: float = 3.5
    r_hi: float = 7.0
    r_steps: int = 15
    threads: int = 1


def main():
    cfg, out = parse_config(TailConfig, __doc__)
    t0 = time.perf_counter()
    rep = tail_experiment(cfg.replicas, np.linspace(cfg.r_lo, cfg.r_hi, cfg.r_steps), cfg.n,
                          cfg.seed, threads=cfg.threads)
    print(f"exponent {rep.exponent:.4f} +- {rep.exponent_se:.4f} (target {TAIL_TARGET:.4f}), "
          f"R2 {rep.r2:.4f}, c0 {rep.c0:.4g}")
    finish("tail_exponent", cfg, rep.to_dict(), out, t0)


if __name__ == "__main__":
    main()
