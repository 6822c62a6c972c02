"""Acceptance checks on the bundled reference scenario.

Each test prints one ``criterion N: PASS|FAIL`` line, collected again in the
terminal summary. The paired ten-seed battery is solved once per session.
"""

import gc
import math
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from fleet_hfc.clustering import ClusterAssignment, fcm, fcm_memberships, kmeans
from fleet_hfc.config import load_config
from fleet_hfc.cost import CostWeights, FleetPlan, plan_cost, route_distance
from fleet_hfc.environment import TaskSpot
from fleet_hfc.ga import pmx_crossover
from fleet_hfc.harness import (
    compare_modes,
    run_monte_carlo,
    run_scenario,
    scenario_inputs,
    write_history_csv,
    write_runs_csv,
)
from fleet_hfc.hfc import HfcParams, run_hfc
from fleet_hfc.kinematics import VehicleConfig

from conftest import ACCEPTANCE_REPORT, brute_force_tour, make_tasks

SEEDS = range(10)
MODES = ["ncm1", "ncm2", "cm", "ga"]


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_REPORT.append(line)
    print(line)


@pytest.fixture(scope="module")
def canonical():
    return load_config("canonical_s4.cfg")


@pytest.fixture(scope="module")
def battery(canonical):
    """Paired runs of every mode, one dict ``label -> RunResult`` per seed."""
    return [{r.label: r for r in compare_modes(canonical, MODES, seed)} for seed in SEEDS]


def _mean_start_distance(res) -> float:
    table = {t.id: t for t in res.tasks}
    start = res.config.start_xyz
    done = res.plan.assigned
    return sum(math.dist(table[t].position_xyz, start) for t in done) / max(1, len(done))


def test_scenario_matches_reference(canonical):
    assert canonical.task_count == 90 and canonical.n_vehicles == 3
    assert canonical.battery_time_s == 3600 and canonical.speed_mps == 1
    assert canonical.injection_time_s == 90
    assert (canonical.field_spec.width_m, canonical.field_spec.height_m) == (1000, 1000)
    assert canonical.hfc.max_iter == canonical.ga.max_iter == 150


def test_criterion_1_mode_ordering(battery):
    ordered = sum(b["cm"].total_cost < b["ncm2"].total_cost < b["ncm1"].total_cost for b in battery)
    slowest = max(b[m].wall_time_s for b in battery for m in ("ncm1", "ncm2", "cm"))
    ok = ordered >= 9 and slowest < 60
    report(1, ok, f"CM < NCM2 < NCM1 on {ordered}/10 seeds, slowest mode {slowest:.1f} s")
    assert ok


def test_criterion_2_completed_tasks(battery):
    n1 = [b["ncm1"].completed for b in battery]
    n2 = [b["ncm2"].completed for b in battery]
    cm = [b["cm"].completed for b in battery]
    more = sum(c > n for c, n in zip(cm, n2))
    ok = (all(x == 90 for x in n1) and all(45 <= x <= 60 for x in n2)
          and all(55 <= x <= 70 for x in cm) and more >= 8)
    report(2, ok, f"NCM1 {n1}, NCM2 {n2}, CM {cm}, CM > NCM2 on {more}/10")
    assert ok


def _non_increasing_after_peak(history) -> bool:
    by_iter: dict[int, float] = {}
    for h in history:
        by_iter[h.iter] = by_iter.get(h.iter, 0.0) + h.violation_s
    trace = [by_iter[i] for i in sorted(by_iter)]
    peak = int(np.argmax(trace))
    return all(b <= a for a, b in zip(trace[peak:], trace[peak + 1:]))


def test_criterion_3_constraint_satisfaction(battery):
    clean = sum(not b["cm"].failed for b in battery)
    monotone = sum(_non_increasing_after_peak(b["cm"].history) for b in battery)
    ok = clean >= 9 and monotone == 10
    report(3, ok, f"zero final violation on {clean}/10, trace non-increasing after peak on {monotone}/10")
    assert ok


def test_criterion_4_residual_time(battery):
    less = sum(b["cm"].residual_time_s < b["ncm2"].residual_time_s for b in battery)
    med = np.median([b["ncm2"].residual_time_s - b["cm"].residual_time_s for b in battery])
    ok = less >= 8
    report(4, ok, f"CM residual < NCM2 residual on {less}/10 (median gap {med:.0f} s)")
    assert ok


def test_criterion_5_monte_carlo(canonical):
    t0 = time.perf_counter()
    results, summary = run_monte_carlo(canonical, n_runs=30, jobs=4)
    wall = time.perf_counter() - t0
    vehicles = summary["vehicles"].values()
    viol = [m["violation_s"]["median"] for m in vehicles]
    optime = [m["mission_time_s"]["median"] for m in vehicles]
    ok = (summary["failure_rate"] <= 0.25 and all(v == 0 for v in viol)
          and all(3300 <= t <= 3600 for t in optime) and wall < 1800)
    report(5, ok, f"{summary['failures']}/30 failures ({100 * summary['failure_rate']:.0f}%), "
                  f"violation medians {viol}, operation-time medians "
                  f"{[round(t) for t in optime]} s, {wall:.0f} s wall")
    assert ok


def test_criterion_6_ga_comparison(battery):
    ga = [b["ga"].completed for b in battery]
    clean = sum(not b["ga"].failed for b in battery)
    gain = sum(b["cm"].completed >= 1.1 * b["ga"].completed for b in battery)
    bias = sum(_mean_start_distance(b["ga"]) < _mean_start_distance(b["cm"]) for b in battery)
    ok = all(45 <= x <= 60 for x in ga) and clean == 10 and gain >= 8 and bias == 10
    report(6, ok, f"GA {ga}, zero violation on {clean}/10, CM >= 1.1 GA on {gain}/10, "
                  f"near-start bias on {bias}/10")
    assert ok


def test_criterion_7_oracles():
    # (a) ordering-only runs at the reference population and iteration budget;
    # without the time-gap term every order of a fixed task set costs the same,
    # so the best plan is the shortest one seen
    rng = np.random.default_rng(2024)
    params = HfcParams.for_mode("ncm1", population_size=100, max_iter=150,
                                weights=CostWeights(lambda1=0.0))
    hits = 0
    for trial in range(100):
        n = int(rng.integers(3, 9))
        pts = [tuple(p) for p in rng.uniform(0, 1000, (n, 2)).tolist()]
        start, goal = tuple(rng.uniform(0, 1000, 2).tolist()), tuple(rng.uniform(0, 1000, 2).tolist())
        veh = VehicleConfig(1, 1.0, 1e9, (*start, 0.0), (*goal, 0.0))
        tasks = make_tasks(pts)
        clusters = ClusterAssignment(1, np.zeros((1, 3)), list(range(n)), {i: 0 for i in range(n)})
        res = run_hfc(tasks, [veh], clusters, replace(params, seed=trial))
        optimal, _ = brute_force_tour(start, goal, pts)
        hits += route_distance(res.best.routes[0], tasks) <= 1.05 * optimal
    # (b) memberships against hand-evaluated values
    w = fcm_memberships(np.array([[0.0, 0, 0], [1.0, 0, 0], [3.0, 0, 0]]),
                        np.array([[0.5, 0, 0], [2.5, 0, 0]]), 2.0)
    expected = np.array([[25 / 26, 1 / 26], [9 / 10, 1 / 10], [1 / 26, 25 / 26]])
    fcm_err = float(np.abs(w - expected).max())
    # (c) PMX closure
    prng = np.random.default_rng(7)
    bad = 0
    for _ in range(10_000):
        n = int(prng.integers(2, 30))
        a, b = prng.permutation(n).tolist(), prng.permutation(n).tolist()
        c1, c2 = sorted(prng.choice(n + 1, 2, replace=False).tolist())
        ca, cb = pmx_crossover(a, b, c1, c2)
        bad += sorted(ca) != list(range(n)) or sorted(cb) != list(range(n))
    ok = hits >= 95 and fcm_err <= 1e-9 and bad == 0
    report(7, ok, f"ordering within 5% on {hits}/100, membership error {fcm_err:.1e}, "
                  f"PMX invalid children {bad}/10000")
    assert ok


def _csv_bytes(res) -> bytes:
    with tempfile.TemporaryDirectory() as d:
        write_runs_csv([res], Path(d) / "r.csv")
        write_history_csv(res.history, Path(d) / "h.csv")
        return (Path(d) / "r.csv").read_bytes() + (Path(d) / "h.csv").read_bytes()


def test_criterion_8_invariants(canonical):
    fm, tasks = scenario_inputs(canonical)
    fleet = canonical.fleet()
    clusters = kmeans(tasks, 3, canonical.seed)
    cache_bad = []

    def hook(it, plan: FleetPlan):
        cached = ([r.cost for r in plan.routes], plan.total_cost)
        if plan_cost(plan, fleet, tasks, canonical.weights) != cached[1] or \
                [r.cost for r in plan.routes] != cached[0]:
            cache_bad.append(it)

    res = run_hfc(tasks, fleet, clusters, canonical.hfc, check_invariants=True, on_iteration=hook)
    res.best.check_exclusive(t.id for t in tasks)
    monotone = all(b <= a for a, b in zip(res.best_cost_trace, res.best_cost_trace[1:]))
    km_ok = all(b <= a for a, b in zip(clusters.objective, clusters.objective[1:]))
    fz = fcm(tasks, 3, seed=canonical.seed)
    fcm_ok = all(b <= a * (1 + 1e-12) for a, b in zip(fz.objective, fz.objective[1:]))
    deterministic = _csv_bytes(run_scenario(canonical)) == _csv_bytes(run_scenario(canonical))
    ok = monotone and km_ok and fcm_ok and not cache_bad and deterministic
    report(8, ok, f"exclusivity ok, best cost monotone {monotone}, k-means {km_ok}, FCM {fcm_ok}, "
                  f"cache mismatches {len(cache_bad)}, byte-identical CSVs {deterministic}")
    assert ok


def _timed(k: int, n_pop: int, iters: int, per_vehicle: int = 10) -> float:
    rng = np.random.default_rng(k)
    pts = rng.uniform(0, 1000, (k * per_vehicle, 2))
    tasks = [TaskSpot(i, (float(x), float(y), 0.0), 50, 90.0) for i, (x, y) in enumerate(pts)]
    fleet = [VehicleConfig(v + 1, 1.0, 1500.0, (500.0, 500.0, 0.0), (500.0, 500.0, 0.0))
             for v in range(k)]
    clusters = kmeans(tasks, k, 0)
    params = HfcParams(population_size=n_pop, max_iter=iters, screening_sample=0, seed=1)
    # as timeit does: collector passes scale with whatever else the session
    # holds in memory, not with the solver's work
    gc.collect()
    gc.disable()
    try:
        best = math.inf
        for _ in range(3):
            t0 = time.perf_counter()
            run_hfc(tasks, fleet, clusters, params)
            best = min(best, time.perf_counter() - t0)
    finally:
        gc.enable()
    return best


def _slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def test_criterion_9_complexity():
    ks = [1, 2, 3, 4, 6]
    ns = [20, 40, 80, 160, 320]
    ts = [25, 50, 100, 200, 400]
    sk = _slope(ks, [_timed(k, 40, 50) for k in ks])
    sn = _slope(ns, [_timed(3, n, 25) for n in ns])
    st = _slope(ts, [_timed(3, 20, t) for t in ts])
    ok = all(abs(s - 1.0) <= 0.2 for s in (sk, sn, st))
    report(9, ok, f"log-log slopes k {sk:.2f}, N {sn:.2f}, t {st:.2f}")
    assert ok
