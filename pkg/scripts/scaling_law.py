"""Quarter-power scaling of chunk diameters in the plane."""
import time
from dataclasses import dataclass

from brownian_atlas.plane import scaling_experiment

from _common import finish, parse_config


@dataclass
class ScalingConfig:
    replicas: int = 2000
    n: int = 512
    T: float = 2.0
    seed: int = 0
    resolution: str = "chunk"
    null_runs: int = 20
    threads: int = 1


def main():
    cfg, out = parse_config(ScalingConfig, __doc__)
    t0 = time.perf_counter()
    rep = scaling_experiment(cfg.replicas, cfg.n, cfg.seed, T=cfg.T, resolution=cfg.resolution,
                             null_runs=cfg.null_runs, threads=cfg.threads)
    print(f"KS {rep.ks_stat:.4f} p {rep.p_value:.4f}; means {rep.half_scaled.mean():.4f} "
          f"vs {rep.full.mean():.4f}; null pass {rep.null_pass_fraction:.2f}")
    result = dict(rep.to_dict(), mean_half_scaled=rep.half_scaled.mean(), mean_full=rep.full.mean())
    finish("scaling_law", cfg, result, out, t0)


if __name__ == "__main__":
    main()
