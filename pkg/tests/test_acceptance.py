"""Acceptance criteria 1 to 12 at their stated scales.

Each test prints one ``criterion N PASS|FAIL`` line; the lines are repeated
in the terminal summary. The slow statistical criteria take several minutes
each on one core.
"""
import subprocess
import sys
import time

import numpy as np
from scipy import stats

from brownian_atlas import densities, metric, mmspace, plane, whitney
from brownian_atlas import snake as sn
from brownian_atlas.rng import stream

from conftest import circle_matrix, floyd_warshall

SEED = 0


def test_c01_engine_matches_floyd_warshall(criterion):
    start = time.perf_counter()
    mismatches = 0
    for r in range(50):
        qm = metric.QuotientMetric(sn.sample_map_snake(48, SEED, r))
        oracle = floyd_warshall(circle_matrix(qm))
        got = np.array([metric.quotient_sssp(qm, s) for s in range(len(qm))])
        mismatches += int(np.count_nonzero(got != oracle))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    criterion(1, "oracle equivalence", ok, f"{mismatches} mismatched entries, {elapsed:.1f}s")
    assert ok


def test_c02_root_distance_identity(criterion):
    worst = 0.0
    for r in range(100):
        qm = metric.QuotientMetric(sn.sample_map_snake(256, SEED, r))
        y = qm.labels
        d = metric.quotient_sssp(qm, int(np.argmin(y)))
        expect = y - y.min()
        rel = np.abs(d - expect) / np.maximum(np.abs(expect), 1e-300)
        rel[expect == 0] = np.abs(d[expect == 0])
        worst = max(worst, float(rel.max()))
    ok = worst <= 1e-12
    criterion(2, "root-distance identity", ok, f"max relative error {worst:.3g}")
    assert ok


def test_c03_diameter_sandwich(criterion):
    bad = 0
    for r in range(1000):
        qm = metric.QuotientMetric(sn.sample_map_snake(256, SEED, r))
        spread = float(np.ptp(qm.labels))
        d = metric.diameter(qm, sources="all")
        bad += not (spread <= d <= 2 * spread)
    criterion(3, "diameter sandwich", bad == 0, f"{bad} violations in 1000")
    assert bad == 0


def test_c04_snake_covariance(criterion):
    grid = sn.sample_excursion(64, SEED)
    cov = sn.covariance_matrix(grid)
    draws = 10_000
    exact = sn.ExactFactor(grid).draw(stream(SEED, "accept-exact"), draws)
    emp = exact.T @ exact / draws
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / draws)
    off = np.abs(emp - cov) > 5 * se + 1e-15
    seq = sn.sequential_labels(grid, stream(SEED, "accept-seq"), draws)
    probes = (16, 32, 48)
    pvals = [stats.ks_2samp(seq[:, i], exact[:, i]).pvalue for i in probes]
    ok = not off.any() and min(pvals) > 0.01
    criterion(4, "snake covariance", ok,
              f"{int(off.sum())} entries beyond 5 SE; KS p at {probes}: "
              + ", ".join(f"{p:.3f}" for p in pvals))
    assert ok


def test_c05_densities(criterion):
    start = time.perf_counter()
    ok, details = densities.check_all(n=2048, replicas=10_000, seed=SEED)
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 300
    gof = details["gof"]
    criterion(5, "endpoint densities", ok,
              f"KS p excursion {gof['excursion']['p_value']:.3f}, "
              f"bessel3 {gof['bessel3']['p_value']:.3f}; "
              f"mean Z {details['z_mean']:.12f}; {elapsed:.0f}s")
    assert ok


def test_c06_scaling_law(criterion):
    rep = plane.scaling_experiment(2000, 512, SEED)
    criterion(6, "chunk scaling law", rep.passed,
              f"KS p {rep.p_value:.4f}, null pass fraction {rep.null_pass_fraction:.2f}")
    assert rep.passed


def test_c07_tail_exponent(criterion):
    rep = plane.tail_experiment(100_000, np.linspace(3.5, 7.0, 15), 1024, SEED)
    ok = 1.08 <= rep.exponent <= 1.58 and rep.r2 > 0.95
    criterion(7, "diameter tail exponent", ok,
              f"exponent {rep.exponent:.3f} +- {rep.exponent_se:.3f}, R2 {rep.r2:.4f}, "
              f"c0 {rep.c0:.4g}, {rep.fit_points} points")
    assert ok


def test_c08_chunk_cover(criterion):
    rep = plane.chunk_cover_experiment(10_000, 16, 512, SEED, np.linspace(2.5, 7.0, 15))
    ok = rep.r2 > 0.9
    criterion(8, "chunk diameters", ok,
              f"R2 {rep.r2:.4f}, slope {rep.slope:.3f}, {rep.fit_points} points")
    assert ok


def test_c09_rerooting(criterion):
    n = 512
    tests = [mmspace.reroot_test(n, s, 2000, SEED) for s in (n // 4, n // 2, 3 * n // 4)]
    mark = mmspace.marked_point_test(n, 2000, SEED)
    ok = all(t.p_value > 0.01 for t in tests) and mark.p_value > 0.01
    criterion(9, "re-rooting invariance", ok,
              ", ".join(f"{t.label} p {t.p_value:.3f}" for t in tests)
              + f"; marked point chi2 p {mark.p_value:.3f}")
    assert ok


def test_c10_distance_matrices(criterion):
    mats = []
    for r in range(1000):
        qm = metric.QuotientMetric(sn.sample_map_snake(512, SEED, r))
        mats.append(mmspace.sample_distance_matrix(qm, 8, seed=SEED, replica=r))
    invalid = sum(not m.is_valid() for m in mats)
    ex = mmspace.exchangeability_test(mats, SEED)
    ok = invalid == 0 and ex.p_value > 0.01
    criterion(10, "distance matrices", ok,
              f"{invalid} invalid of 1000; exchangeability KS p {ex.p_value:.3f}")
    assert ok


def test_c11_whitney_shadows(criterion):
    viol = {name: len(whitney.whitney_decompose(dom, 6).sandwich_violations())
            for name, dom in (("disk", whitney.DiskDomain()),
                              ("square", whitney.square_domain()))}
    rep = whitney.summability_report(whitney.identity_chart(), 6, 1024, whitney.DiskDomain())
    analytic = np.array([whitney.disk_shadow_diameter(q) for q in rep.shadows.decomp.cubes])
    ratio = rep.shadows.s / analytic
    within = bool(np.all((ratio >= 0.5) & (ratio <= 2.0)))
    ok = (not any(viol.values()) and within and rep.verdict == "converging"
          and all(r < 0.8 for r in rep.ratios[-3:]))
    criterion(11, "Whitney squares and shadows", ok,
              f"violations {viol}; shadow/analytic in [{ratio.min():.2f}, {ratio.max():.2f}]; "
              f"ratios {[round(r, 3) for r in rep.ratios]}; {rep.verdict}")
    assert ok


CLI_RUNS = [
    ["simulate-map", "--n", "512", "--seed", "7", "--source", "3", "--radius", "0.5"],
    ["simulate-plane", "--T", "1", "--n", "64", "--seed", "3", "--source", "5", "--radius", "0.3"],
    ["tail", "--n", "64", "--replicas", "300", "--r-grid", "1:3:5", "--seed", "1"],
    ["tail", "--n", "64", "--replicas", "300", "--r-grid", "1:3:5", "--seed", "1",
     "--format", "csv"],
    ["scaling", "--n", "32", "--replicas", "100", "--null-runs", "2", "--seed", "1"],
    ["chunk-cover", "--n", "32", "--k", "4", "--replicas", "50", "--r-grid", "0.5:3:5"],
    ["densities", "--n", "256", "--replicas", "1000", "--seed", "1"],
    ["reroot", "--n", "32", "--replicas", "50", "--seed", "1"],
    ["matrix", "--n", "64", "--k", "5", "--marks", "0,10", "--replicas", "5", "--seed", "1"],
    ["matrix", "--n", "64", "--k", "5", "--format", "csv", "--seed", "1"],
    ["whitney", "--domain", "disk", "--max-level", "4", "--theta-grid", "256"],
    ["whitney", "--domain", "square", "--max-level", "4"],
    ["whitney", "--domain", "koebe", "--max-level", "5", "--theta-grid", "256"],
]


def test_c12_cli_reproducible(criterion, tmp_path):
    differing = []
    for j, argv in enumerate(CLI_RUNS):
        outputs = []
        for threads in ("1", "2"):
            root = tmp_path / f"t{threads}"
            subprocess.run([sys.executable, "-m", "brownian_atlas", *argv, "--threads", threads,
                            "--out", str(root / f"run{j}")], check=False, capture_output=True)
            outputs.append({p.name: p.read_bytes() for p in sorted(root.glob(f"run{j}*"))})
        if not outputs[0] or outputs[0] != outputs[1]:
            differing.append(argv[0])
    ok = not differing
    criterion(12, "CLI reproducibility", ok,
              f"{len(CLI_RUNS)} runs, differing: {differing or 'none'}")
    assert ok
