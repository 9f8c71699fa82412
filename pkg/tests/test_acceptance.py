"""Acceptance criteria 1-12.

Each test records a one-line measurement; the pass/fail summary is printed
at the end of the pytest run (see conftest.py). Run just this file with

    pytest tests/test_acceptance.py -v
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import lp_peel, min_cap_direction_search, positive_minimizer_2d
from peellab.cli_reports import main as cli_main
from peellab.estimators import ExperimentConfig, layer_count_exponent, limit_constant_two_ways, run_experiment
from peellab.floating_sandwich import v_cube_corner
from peellab.geom_core import PointSet
from peellab.macbeath_caps import cap_cover_check, convex_position_prob, exact_convex_position_log_p
from peellab.peeling import peel
from peellab.polytope_model import triangle
from peellab.rescaled_conelike import (G, coords_l, cone_peel, halfspace_to_grain, in_halfspace,
                                       scaling_transform)

LAMBDAS = [1e3, 1e4, 1e5, 1e6]


def record(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


def _random_set(rng, d, m):
    X = rng.random((m, d))
    if rng.random() < 0.2:  # integer grids give coincident and collinear points
        X = np.round(X * 3)
    return X


def test_criterion_01_peel_matches_lp_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad = 0
    for it in range(500):
        d = 2 + it % 2
        X = _random_set(rng, d, int(rng.integers(1, 16)))
        bad += not np.array_equal(peel(PointSet(X)).labels, lp_peel(X))
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 120
    record(1, ok, f"{bad} mismatches in 500 sets (d=2,3, <=15 points), {dt:.1f}s")
    assert ok


def test_criterion_02_monotonicity():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    viol_peel = viol_cone = 0
    for it in range(1000):
        d = 2 if it % 4 else 3
        Y = _random_set(rng, d, int(rng.integers(2, 40)))
        keep = rng.random(len(Y)) < rng.uniform(0.3, 0.9)
        keep[rng.integers(len(Y))] = True
        ly = peel(PointSet(Y)).labels
        lx = peel(PointSet(Y[keep])).labels
        viol_peel += int(np.sum(lx > ly[keep]))
    for it in range(1000):
        d = 2 if it % 4 else 3
        m = int(rng.integers(2, 40))
        W = np.column_stack([rng.normal(size=(m, d - 1)), rng.uniform(-3, 1, m)])
        keep = rng.random(m) < rng.uniform(0.3, 0.9)
        keep[rng.integers(m)] = True
        ly = cone_peel(W).labels
        lx = cone_peel(W[keep]).labels
        viol_cone += int(np.sum(lx > ly[keep]))
    dt = time.perf_counter() - t0
    ok = viol_peel == 0 and viol_cone == 0 and dt < 120
    record(2, ok, f"violations: peel {viol_peel}, cone_peel {viol_cone} over 1000 trials each, {dt:.1f}s")
    assert ok


def test_criterion_03_corner_formula_vs_direction_search():
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    worst = 0.0
    below = 0
    for it in range(1000):
        d = 2 + it % 2
        # the corner regime: every coordinate at most 1/d
        z = np.exp(rng.uniform(math.log(1e-3), math.log(1.0 / d), d))
        v = float(v_cube_corner(z))
        o = min_cap_direction_search(z, grid=181 if d == 2 else 61)
        worst = max(worst, abs(o - v) / v)
        below += o < v * (1 - 1e-9)
    dt = time.perf_counter() - t0
    ok = worst < 1e-3 and below == 0 and dt < 300
    record(3, ok, f"max rel err {worst:.2e} on 1000 corner points (d=2,3), "
                  f"{below} directions beating the formula, {dt:.1f}s")
    assert ok


def test_criterion_04_cap_covering_bounds():
    t0 = time.perf_counter()
    lines = []
    ok = True
    for level in (-6, -8):
        rep = cap_cover_check(d=2, level=level, n_check=1000, seed=4)
        s = rep.s
        vol_ok = all(s <= r["vol_Ki"] <= 36 * s and r["vol_Kp"] <= s / 4 for r in rep.rows)
        ok &= rep.ok and vol_ok and len(rep.rows) > 0
        ratio = max(r["vol_Ki"] / s for r in rep.rows)
        lines.append(f"level {level}: {len(rep.rows)} regions, max Vol K_i/s = {float(ratio):.0f}, "
                     f"{len(rep.violations)} violations")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    record(4, ok, "; ".join(lines) + f", {dt:.1f}s")
    assert ok


def _guarded_corner_config(rng):
    """Points near the corner plus two far guard triangles that occupy layers
    1 and 2 and keep every other face of those layers facing the corner."""
    B = 1e6
    G = np.array([[-1, B], [B, -1], [B, B], [-0.25, B / 2], [B / 2, -0.25], [B / 2, B / 2]])
    m = int(rng.integers(5, 60))
    X = rng.random((m, 2)) * 10 ** rng.uniform(-4, -1) + 1e-9
    return X, G


def test_criterion_05_transform_correspondence():
    rng = np.random.default_rng(105)
    t0 = time.perf_counter()
    disagree = skipped = 0
    for it in range(1000):
        d = 2 + it % 2
        lam = 10 ** rng.uniform(2, 6)
        z0 = np.exp(rng.uniform(-6, 0, d))
        z = z0 * np.exp(rng.normal(scale=0.7, size=d))
        lin = float(in_halfspace(z, z0)[0])
        if abs(lin) < 1e-10 * d:
            skipped += 1
            continue
        inside = halfspace_to_grain(z0, lam).contains(scaling_transform(z, lam)[None])[0]
        disagree += inside != (lin < 0)
    label_bad = cone_bad = 0
    for it in range(200):
        X, Gd = _guarded_corner_config(rng)
        m = len(X)
        pl = peel(PointSet(np.vstack([X, Gd]))).labels
        assert pl[m:].tolist() == [1, 1, 1, 2, 2, 2]
        a = np.minimum(pl[:m], 3)
        # every point of layers 1 and 2 minimises a positive functional over its remainder
        for n in (1, 2):
            rem = np.nonzero(pl[:m] >= n)[0]
            for i in np.nonzero(pl[:m][rem] == n)[0]:
                cone_bad += not positive_minimizer_2d(X[rem], i)
        lam = 10 ** rng.uniform(2, 6)
        b = np.minimum(cone_peel(scaling_transform(X, lam), lam).labels, 3)
        label_bad += not np.array_equal(a, b)
    dt = time.perf_counter() - t0
    ok = disagree == 0 and label_bad == 0 and cone_bad == 0 and dt < 300
    record(5, ok, f"{disagree} sign disagreements in 1000 pairs ({skipped} in margin band); "
                  f"{label_bad} label mismatches in 200 corner configurations "
                  f"({cone_bad} non-cone-extreme layer points), {dt:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def square_experiment():
    cfg = ExperimentConfig(dim=2, lambda_grid=LAMBDAS, n=[1, 2, 3], k=[0], reps=500, seed=2024,
                           total_layers=False)
    t0 = time.perf_counter()
    rows, summary = run_experiment(cfg)
    return rows, summary, time.perf_counter() - t0


def _stat(summary, lam, n):
    return next(s for s in summary["stats"] if s["lambda"] == lam and s["n"] == n and s["k"] == 0)


def test_criterion_06_growth_rate(square_experiment):
    rows, summary, dt = square_experiment
    parts = []
    ok = True
    for n in (1, 2, 3):
        r5 = _stat(summary, 1e5, n)["N"]["ratio"]
        r6 = _stat(summary, 1e6, n)["N"]["ratio"]
        change = abs(r6 - r5) / r5
        ok &= r5 > 0 and r6 > 0 and change < 0.25
        parts.append(f"n={n}: {r5:.3f} -> {r6:.3f} ({100 * change:.1f}%)")
    ok &= dt < 3600
    record(6, ok, "E[N]/log lambda at 1e5 -> 1e6, 500 reps: " + "; ".join(parts) + f", {dt:.0f}s shared with 7")
    assert ok


def test_criterion_07_clt_trend(square_experiment):
    rows, summary, dt = square_experiment
    ks = {lam: _stat(summary, lam, 2)["N"]["ks"] for lam in LAMBDAS}
    ok = ks[1e5] < 0.12 and ks[1e6] <= ks[1e3] + 0.05 and dt < 5400
    record(7, ok, "KS of standardised N_2 (500 reps): " +
           ", ".join(f"{lam:.0e}: {k:.4f}" for lam, k in ks.items()))
    assert ok


def test_criterion_08_total_layer_exponent():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(dim=2, lambda_grid=LAMBDAS, reps=10, seed=808)
    out = layer_count_exponent(cfg)
    dt = time.perf_counter() - t0
    e = out["exponent"]
    ok = 0.57 <= e <= 0.77 and dt < 1800
    record(8, ok, f"fitted exponent {e:.4f} (target 2/3), mean layers "
                  + ", ".join(f"{m:.1f}" for m in out["mean_layers"]) + f", {dt:.0f}s")
    assert ok


def test_criterion_09_convex_position():
    t0 = time.perf_counter()
    r4 = convex_position_prob(triangle(), 4, 200_000, 909, method="mc")
    ns = [10, 15, 20, 25, 30, 35, 40]
    vals, oracle_gap = [], []
    for n in ns:
        r = convex_position_prob(triangle(), n, 16_000, 909 + n, method="sis")
        vals.append(r["log_p"] / (n * math.log(n)))
        oracle_gap.append(abs(r["log_p"] - exact_convex_position_log_p(n, "triangle")) / abs(exact_convex_position_log_p(n, "triangle")))
    dt = time.perf_counter() - t0
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    # approaching the interval [-2.6, -1.6] from above: distance shrinks, never overshoots
    dist = [max(0.0, v - (-1.6)) for v in vals]
    toward = all(b < a for a, b in zip(dist, dist[1:])) and min(vals) > -2.6
    ok = abs(r4["p"] - 0.667) <= 0.02 and decreasing and toward and max(oracle_gap) < 0.02 and dt < 1200
    record(9, ok, f"p(4, triangle) = {r4['p']:.4f}; log p/(n log n) for n={ns[0]}..{ns[-1]}: "
                  + ", ".join(f"{v:.3f}" for v in vals)
                  + f"; max rel. deviation from exact log p {max(oracle_gap):.4f}, {dt:.0f}s")
    assert ok


def test_criterion_10_two_way_constant():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(dim=2, lambda_grid=[1e5], reps=500, seed=1010, integral_reps=1000)
    est = limit_constant_two_ways(1, 0, cfg)
    dt = time.perf_counter() - t0
    ok = est.relative_gap < 0.2 and dt < 2700
    record(10, ok, f"direct {est.direct_ratio:.4f} +- {est.direct_se:.4f}, integral "
                   f"{est.integral_estimate:.4f} +- {est.integral_se:.4f}, "
                   f"relative gap {100 * est.relative_gap:.1f}%, {dt:.0f}s")
    assert ok


def test_criterion_11_G_properties():
    rng = np.random.default_rng(111)
    t0 = time.perf_counter()
    viol = 0
    worst = 0.0
    for d in (2, 3, 4, 6):
        v = rng.normal(size=(2500, d - 1)) * rng.uniform(0.1, 10, size=(2500, 1))
        g, grad = G(v, grad=True)
        mx = coords_l(v).max(axis=1)
        viol += int(np.sum(mx - math.log(d) > g + 1e-12) + np.sum(g > mx + 1e-12))
        eps = 1e-6
        for j in range(d - 1):
            e = np.zeros(d - 1)
            e[j] = eps
            fd = (G(v + e) - G(v - e)) / (2 * eps)
            worst = max(worst, float(np.max(np.abs(fd - grad[:, j]))))
    dt = time.perf_counter() - t0
    ok = viol == 0 and worst < 1e-6 and dt < 60
    record(11, ok, f"{viol} sandwich violations at 10^4 points (d=2,3,4,6); "
                   f"max |grad - finite difference| {worst:.2e}, {dt:.1f}s")
    assert ok


def test_criterion_12_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = {"dim": 2, "lambda_grid": [1000, 10000, 100000], "n": [1, 2], "k": [0, 1], "reps": 24,
           "seed": 1212, "sandwich": True, "alpha_override": 50}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for name, workers in (("w1", 1), ("w4", 4), ("w4b", 4)):
        assert cli_main(["estimate", "--config", str(path), "--out", str(tmp_path / name),
                         "--workers", str(workers)]) == 0
        outs.append((tmp_path / name / "results.csv").read_bytes())
    hashes = {json.loads((tmp_path / n / "manifest.json").read_text())["config_hash"] for n in ("w1", "w4", "w4b")}
    dt = time.perf_counter() - t0
    ok = outs[0] == outs[1] == outs[2] and len(hashes) == 1 and dt < 600
    record(12, ok, f"results.csv identical across workers 1, 4, 4 ({len(outs[0])} bytes, one config hash), {dt:.1f}s")
    assert ok
