"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time

import numpy as np
import pytest

from chebylab.analysis import (
    corollary1_check,
    gateaux_derivative_probe,
    oscillating_field,
    subdifferential_check,
    upper_bound_inequality_check,
)
from chebylab.cli import main
from chebylab.harness import check_condition_i, check_condition_v, evaluate_conditions, theorem4_scan
from chebylab.normed_space import NormSpec, is_smooth_at, norm_values
from chebylab.oracle import brute_force_distance
from chebylab.rng import stream
from chebylab.sets import Ball, HalfSpace

from conftest import CONVEX_SUITE, SCENARIOS, scenario, scenario_path

RESOLUTION = 1e-3


@pytest.fixture
def verdict(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return emit


@pytest.mark.parametrize("name", CONVEX_SUITE)
def test_criterion_1_convex_suite_consistent(name, verdict):
    sc = scenario(name)
    start = time.perf_counter()
    ev = evaluate_conditions(sc)
    elapsed = time.perf_counter() - start
    worst_iv = max(abs(r.cond_iv.value - 1) for r in ev.reports)
    worst_v = max(abs(r.cond_v.value - 1) for r in ev.reports)
    ok = (ev.verdict.status == "CONSISTENT" and all(ev.truth.values()) and len(ev.reports) == 25
          and worst_iv <= 1e-3 and worst_v <= 1e-3 and elapsed <= 10.0)
    verdict(1, ok, f"{name}: {ev.verdict.status}, max|iv-1|={worst_iv:.2e}, "
                   f"max|v-1|={worst_v:.2e}, {elapsed:.2f}s")


def test_criterion_2_sphere_discrimination(verdict):
    sc = scenario("sphere_l2")
    center = check_condition_v(sc, [0.0, 0.0]).value
    convex = check_condition_i(sc).convex
    t4 = theorem4_scan(sc)
    ok = abs(center + 1) <= 1e-3 and not convex and t4.status == "CONSISTENT_NONCONVEX"
    verdict(2, ok, f"cond_v(0)={center:.6f}, condition (i)={convex}, theorem4={t4.status}")


def test_criterion_3_corollary1_identity(verdict):
    rng = stream(0, "acceptance/corollary1")
    worst = 0.0
    for K in (HalfSpace([1, 0], 0), Ball([0, 0], 1)):
        for p in (2, 3):
            norm = NormSpec.lp(p, 2)
            pts = []
            while len(pts) < 5:
                x = rng.uniform(-3, 3, 2)
                if K.nearest(x, norm).distance > 0.2:
                    pts.append(x)
            for x in pts:
                r = corollary1_check(K, norm, x)
                assert r.status == "ok", r.status
                worst = max(worst, r.discrepancy)
    verdict(3, worst <= 1e-4, f"max discrepancy {worst:.2e} over 4 scenarios x 5 points x 8 directions")


def test_criterion_4_upper_bound_inequality(verdict):
    worst = -np.inf
    count = 0
    for name in CONVEX_SUITE:
        if "triangle" in name:
            continue  # the polytope distance is iterative, not analytic
        sc = scenario(name)
        for x in sc.grid:
            worst = max(worst, upper_bound_inequality_check(sc.set, sc.norm, x, (0.1, 0.5, 1.0)))
            count += 1
    verdict(4, worst <= 1e-8, f"max violation {worst:.2e} over {count} points")


def test_criterion_5_l1_smoothness(verdict):
    rng = stream(0, "acceptance/l1-smooth")
    X = rng.normal(size=(100, 4)) * (rng.uniform(size=(100, 4)) < 0.85)
    X[np.all(X == 0, axis=1), 0] = 1.0
    norm = NormSpec.lp(1, 4)
    agree = sum(is_smooth_at(norm, x).smooth == bool(np.all(x != 0)) for x in X)
    mixed = int(np.sum(np.any(X == 0, axis=1)))
    verdict(5, agree == 100, f"{agree}/100 agree ({mixed} points with a zero coordinate)")


def test_criterion_6_counterexample(verdict):
    phi = oscillating_field(2)
    sample = stream(0, "acceptance/osc").uniform(-5, 5, (2000, 2))
    viol = subdifferential_check(phi, [0, 0], [0, 0], sample).max_violation
    probe = gateaux_derivative_probe(phi, [0, 0])
    ok = viol == 0.0 and not probe.exists
    verdict(6, ok, f"zero-functional violation {viol}, differentiable={probe.exists} ({probe.reason})")


@pytest.mark.parametrize("name", SCENARIOS)
def test_criterion_7_oracle_equivalence(name, verdict):
    sc = scenario(name)
    worst = -np.inf
    for x in sc.grid:
        res = sc.set.nearest(x, sc.norm)
        ref = brute_force_distance(sc.set, x, sc.norm, RESOLUTION, bbox=sc.bbox)
        worst = max(worst, abs(res.distance - ref) - res.certified_error)
    verdict(7, worst <= RESOLUTION,
            f"{name}: max(|d - brute| - certified_error) = {worst:.2e} on {len(sc.grid)} points")


@pytest.mark.parametrize("name", SCENARIOS)
def test_criterion_8_lipschitz(name, verdict):
    sc = scenario(name)
    rng = stream(0, f"acceptance/lipschitz/{name}")
    lo, hi = sc.bbox[:, 0], sc.bbox[:, 1]
    n = 10_000
    X = lo + (hi - lo) * rng.uniform(size=(n, 2))
    # half far pairs, half close pairs
    Y = lo + (hi - lo) * rng.uniform(size=(n, 2))
    Y[n // 2:] = X[n // 2:] + rng.normal(scale=1e-3, size=(n - n // 2, 2))
    d = sc.set.values(np.vstack([X, Y]), sc.norm)
    excess = np.abs(d[:n] - d[n:]) - norm_values(sc.norm, X - Y)
    verdict(8, excess.max() <= 1e-9, f"{name}: max excess {excess.max():.2e} over {n} pairs")


def test_criterion_9_determinism(tmp_path, verdict, capsys):
    mismatched = []
    for name in SCENARIOS:
        outs = []
        for run in range(2):
            path = tmp_path / f"{name}_{run}.json"
            main(["analyze", "--config", str(scenario_path(name)), "--out", str(path)])
            outs.append((path.read_bytes(), path.with_suffix(".csv").read_bytes()))
        if outs[0] != outs[1]:
            mismatched.append(name)
    capsys.readouterr()
    verdict(9, not mismatched, f"{len(SCENARIOS) - len(mismatched)}/{len(SCENARIOS)} scenarios "
                               f"byte-identical" + (f", differing: {mismatched}" if mismatched else ""))
