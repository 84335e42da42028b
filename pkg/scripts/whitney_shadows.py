"""Whitney squares of chart images and the level sums of squared shadow diameters."""
import time
from dataclasses import dataclass

from brownian_atlas import whitney

from _common import finish, parse_config


@dataclass
class WhitneyConfig:
    max_level: int = 7
    theta_grid: int = 1024
    rho: float = 0.8


def main():
    cfg, out = parse_config(WhitneyConfig, __doc__)
    t0 = time.perf_counter()
    charts = [(whitney.identity_chart(), whitney.DiskDomain()),
              (whitney.koebe_chart(cfg.rho), None)]
    result = {}
    for chart, domain in charts:
        rep = whitney.summability_report(chart, cfg.max_level, cfg.theta_grid, domain)
        viol = len(rep.shadows.decomp.sandwich_violations())
        print(f"{chart.name}: increments {[round(v, 4) for v in rep.increments]}, "
              f"ratios {[round(r, 3) for r in rep.ratios]}, "
              f"unsampled {[round(u, 2) for u in rep.unsampled]}, {rep.verdict}, "
              f"{viol} sandwich violations")
        result[chart.name] = dict(rep.to_dict(), sandwich_violations=viol)
    finish("whitney_shadows", cfg, result, out, t0)


if __name__ == "__main__":
    main()
