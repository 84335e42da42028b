"""Re-rooting invariance and the marked-point law on the map."""
import time
from dataclasses import dataclass

from brownian_atlas.mmspace import marked_point_test, reroot_test

from _common import finish, parse_config


@dataclass
class RerootConfig:
    replicas: int = 2000
    n: int = 512
    seed: int = 0
    bins: int = 16


def main():
    cfg, out = parse_config(RerootConfig, __doc__)
    t0 = time.perf_counter()
    shifts = [cfg.n // 4, cfg.n // 2, 3 * cfg.n // 4]
    tests = [reroot_test(cfg.n, s, cfg.replicas, cfg.seed) for s in shifts]
    mark = marked_point_test(cfg.n, cfg.replicas, cfg.seed, cfg.bins)
    for t in tests:
        print(f"{t.label}: KS {t.ks_stat:.4f} p {t.p_value:.4f}")
    print(f"marked point: chi2 {mark.chi2:.2f} p {mark.p_value:.4f}")
    finish("rerooting", cfg, {"shifts": [t.to_dict() for t in tests], "mark": mark.to_dict()},
           out, t0)


if __name__ == "__main__":
    main()
