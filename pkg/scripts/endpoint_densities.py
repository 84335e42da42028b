"""Endpoint laws at t = 1/2 and the integrability threshold of their ratio."""
import time
from dataclasses import dataclass

from brownian_atlas.densities import check_all

from _common import finish, parse_config


@dataclass
class DensityConfig:
    n: int = 2048
    replicas: int = 10_000
    seed: int = 0


def main():
    cfg, out = parse_config(DensityConfig, __doc__)
    t0 = time.perf_counter()
    ok, details = check_all(cfg.n, cfg.replicas, cfg.seed)
    print("all density checks " + ("pass" if ok else "FAIL"))
    for p, v in details["lp"].items():
        print(f"  int Z^{p} dmu = {v}")
    finish("endpoint_densities", cfg, dict(details, ok=ok), out, t0)


if __name__ == "__main__":
    main()
