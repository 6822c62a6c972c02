"""Experiment harness: single scenarios, paired mode comparisons and Monte
Carlo batteries, plus the CSV/JSON artefacts they produce.

All randomness of a scenario derives from ``config.seed`` through four
independent streams (field, tasks, clustering, solver). Modes compared on the
same seed therefore see identical fields, tasks and clusters.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .clustering import ClusterAssignment, cluster_tasks
from .config import ConfigError, ScenarioConfig, config_hash
from .cost import FleetPlan, Route, plan_cost, route_breakdown, task_table
from .environment import FieldModel, TaskSpot, build_field, sample_tasks, shift_hotspots
from .ga import run_ga
from .hfc import MODES, HistoryRow, run_hfc

__all__ = [
    "VehicleResult",
    "RunResult",
    "scenario_inputs",
    "run_scenario",
    "compare_modes",
    "run_monte_carlo",
    "summarize_runs",
    "deform_scenario",
    "crossing_legs",
    "write_runs_csv",
    "read_runs_csv",
    "write_history_csv",
    "write_comparison_csv",
    "write_plan_json",
    "load_plan_json",
    "verify_plan",
    "run_rows",
    "comparison_rows",
    "delta_rows",
    "RUN_FIELDS",
    "HISTORY_FIELDS",
]

log = logging.getLogger(__name__)

RUN_FIELDS = ["run", "vehicle", "cost", "mission_time_s", "t_diff_s", "completed", "violation_s"]
HISTORY_FIELDS = ["iter", "vehicle", "cost", "t_diff_s", "violation_s", "completed"]
COMPARISON_FIELDS = ["mode", "vehicle", "cost", "mission_time_s", "t_diff_s", "completed",
                     "violation_s"]


@dataclass(frozen=True)
class VehicleResult:
    vehicle_id: int
    cost: float
    mission_time_s: float
    t_diff_s: float
    completed: int
    violation_s: float
    distance_m: float
    priority_sum: int


@dataclass
class RunResult:
    """Outcome of one solved scenario.

    ``wall_time_s`` is the only non-deterministic field and is never written
    to the CSV artefacts.
    """

    config: ScenarioConfig
    config_hash: str
    vehicles: list[VehicleResult]
    plan: FleetPlan
    history: list[HistoryRow]
    wall_time_s: float
    tasks: list[TaskSpot] = field(repr=False, default_factory=list)
    field_model: FieldModel | None = field(repr=False, default=None)
    clusters: ClusterAssignment | None = field(repr=False, default=None)
    infeasible_vehicles: list[int] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.config.mode if self.config.solver == "hfc" else self.config.solver

    @property
    def total_cost(self) -> float:
        return sum(v.cost for v in self.vehicles)

    @property
    def completed(self) -> int:
        return sum(v.completed for v in self.vehicles)

    @property
    def total_violation_s(self) -> float:
        return math.fsum(v.violation_s for v in self.vehicles)

    @property
    def residual_time_s(self) -> float:
        """Sum of positive time differences (unused battery time)."""
        return math.fsum(max(0.0, v.t_diff_s) for v in self.vehicles)

    @property
    def available_time_s(self) -> float:
        return self.config.battery_time_s * len(self.vehicles)

    @property
    def failed(self) -> bool:
        return any(v.violation_s > 0 for v in self.vehicles)


# --------------------------------------------------------------------------
# scenario construction
# --------------------------------------------------------------------------


def _stream_seeds(seed: int, *extra: int) -> list[int]:
    ss = np.random.SeedSequence([seed, *extra] if extra else seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(4)]


def scenario_inputs(config: ScenarioConfig) -> tuple[FieldModel, list[TaskSpot]]:
    """Field and task list for ``config``; identical for every mode and solver."""
    s_field, s_tasks, _, _ = _stream_seeds(config.seed)
    try:
        fm = build_field(config.field_spec, s_field)
    except ValueError as exc:
        raise ConfigError("field", str(exc)) from None
    tasks = sample_tasks(fm, config.task_count, s_tasks,
                         injection_time_s=config.injection_time_s,
                         priority_range=config.priority_range,
                         injection_range_s=config.injection_range_s)
    return fm, tasks


def crossing_legs(fm: FieldModel, plan: FleetPlan, tasks: Sequence[TaskSpot]) -> list[tuple]:
    """Route legs whose straight line passes over masked (land) cells."""
    if not fm.coastline_mask.any():
        return []
    table = task_table(tasks)
    out = []
    for r in plan.routes:
        pts = [r.start_xyz] + [table[t].position_xyz for t in r.task_ids] + [r.goal_xyz]
        for a, b in zip(pts, pts[1:]):
            steps = max(2, int(math.dist(a[:2], b[:2]) / (fm.grid_resolution_m / 2)) + 1)
            s = np.linspace(0.0, 1.0, steps)
            xs = a[0] + s * (b[0] - a[0])
            ys = a[1] + s * (b[1] - a[1])
            if np.any(fm.masked(xs, ys)):
                out.append((r.vehicle_id, a, b))
    return out


def _solve(config: ScenarioConfig, fm: FieldModel, tasks: list[TaskSpot],
           s_cluster: int, s_solver: int) -> RunResult:
    fleet = config.fleet()
    t0 = time.perf_counter()
    clusters = None
    if tasks:
        clusters = cluster_tasks(tasks, len(fleet), config.clustering, s_cluster)
    infeasible: list[int] = []
    if config.solver == "ga":
        if config.clustering != "kmeans":
            raise ConfigError("solver.clustering", "the ga solver requires kmeans clusters")
        res = run_ga(tasks, fleet, clusters, replace(config.ga, seed=s_solver), config.weights)
        plan, history = res.best, res.history
    else:
        o, s, c = MODES[config.mode]
        params = replace(config.hfc, ordering_on=o, screening_on=s, cooperation_on=c,
                         seed=s_solver, weights=config.weights)
        res = run_hfc(tasks, fleet, clusters, params)
        plan, history, infeasible = res.best, res.history, res.infeasible_vehicles
    wall = time.perf_counter() - t0

    by_id = {v.id: v for v in fleet}
    vehicles = []
    for r in plan.routes:
        b = route_breakdown(r, by_id[r.vehicle_id], tasks, config.weights)
        vehicles.append(VehicleResult(r.vehicle_id, b["cost"], b["mission_time_s"], b["t_diff_s"],
                                      len(r.task_ids), b["violation_s"], b["distance_m"],
                                      b["priority_sum"]))
    # same summation order as plan_cost, so a reloaded plan recomputes identically
    plan.total_cost = sum(v.cost for v in vehicles)
    for vid, a, b in crossing_legs(fm, plan, tasks):
        log.warning("vehicle %s leg %s -> %s crosses land", vid, a, b)
    return RunResult(config, config_hash(config), vehicles, plan, history, wall, tasks, fm,
                     clusters, infeasible)


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Build the field, sample tasks, cluster and solve; deterministic per seed."""
    fm, tasks = scenario_inputs(config)
    _, _, s_cluster, s_solver = _stream_seeds(config.seed)
    return _solve(config, fm, tasks, s_cluster, s_solver)


def compare_modes(config: ScenarioConfig, modes: Iterable[str],
                  seed: int | None = None) -> list[RunResult]:
    """One paired run per entry of ``modes`` (``ncm1``, ``ncm2``, ``cm`` or ``ga``)."""
    if seed is not None:
        config = config.with_overrides(seed=seed)
    fm, tasks = scenario_inputs(config)
    _, _, s_cluster, s_solver = _stream_seeds(config.seed)
    out = []
    for m in modes:
        m = m.strip().lower()
        if m == "ga":
            cfg = replace(config, solver="ga")
        elif m in MODES:
            cfg = replace(config, solver="hfc").with_overrides(mode=m)
        else:
            raise ConfigError("modes", f"unknown mode {m!r}")
        out.append(_solve(cfg, fm, tasks, s_cluster, s_solver))
    return out


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


def deform_scenario(fm: FieldModel, tasks: Sequence[TaskSpot], std_m: float, jitter_m: float,
                    rng: np.random.Generator) -> tuple[FieldModel, list[TaskSpot]]:
    """Move every hotspot by Gaussian noise; tasks follow their dominant hotspot
    and receive independent jitter on top. Positions are clipped to the field
    and a task that would land on a masked cell stays where it was.
    """
    shifts = rng.normal(0.0, std_m, (len(fm.hotspots), 2)) if std_m > 0 else \
        np.zeros((len(fm.hotspots), 2))
    jit = rng.normal(0.0, jitter_m, (len(tasks), 2)) if jitter_m > 0 else np.zeros((len(tasks), 2))
    new_field = shift_hotspots(fm, shifts) if std_m > 0 and fm.hotspots else fm
    out = []
    for t, (jx, jy) in zip(tasks, jit):
        x, y = t.position_xyz[0], t.position_xyz[1]
        if fm.hotspots:
            pull = [h.intensity * math.exp(-((x - h.center_xy[0]) ** 2 + (y - h.center_xy[1]) ** 2)
                                           / h.radius_m ** 2) for h in fm.hotspots]
            j = int(np.argmax(pull))
            x, y = x + shifts[j][0], y + shifts[j][1]
        x = float(np.clip(x + jx, 0, fm.width_m))
        y = float(np.clip(y + jy, 0, fm.height_m))
        if new_field.masked(x, y):
            out.append(t)
        else:
            out.append(TaskSpot(t.id, (x, y, t.position_xyz[2]), t.priority, t.injection_time_s))
    return new_field, out


def _mc_run(args) -> RunResult:
    base, fm, tasks, run = args
    s_deform, _, s_cluster, s_solver = _stream_seeds(base.seed, run)
    rng = np.random.default_rng(s_deform)
    fm_r, tasks_r = deform_scenario(fm, tasks, base.deform_std_m, base.jitter_m, rng)
    return _solve(base, fm_r, tasks_r, s_cluster, s_solver)


def run_monte_carlo(base: ScenarioConfig, n_runs: int | None = None, deform: float | None = None,
                    seed: int | None = None, jobs: int = 1) -> tuple[list[RunResult], dict]:
    """Re-solve ``n_runs`` deformed copies of the base scenario.

    Run ``r`` draws its deformation, clustering and solver streams from
    ``(seed, r)``, so results do not depend on ``jobs``.
    """
    cfg = base.with_overrides(seed=seed, runs=n_runs, deform_std=deform)
    if cfg.mc_runs < 1:
        raise ConfigError("montecarlo.runs", "must be at least 1")
    if cfg.deform_std_m < 0:
        raise ConfigError("montecarlo.deform_std_m", "must be non-negative")
    fm, tasks = scenario_inputs(cfg)
    work = [(cfg, fm, tasks, r) for r in range(cfg.mc_runs)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as ex:
            results = list(ex.map(_mc_run, work))
    else:
        results = [_mc_run(w) for w in work]
    return results, summarize_runs(run_rows(results))


def _quartiles(values: Sequence[float]) -> dict:
    a = np.asarray(values, dtype=float)
    q1, med, q3 = (float(x) for x in np.percentile(a, [25, 50, 75]))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    return {"median": med, "q1": q1, "q3": q3, "iqr": iqr,
            "outliers": int(((a < lo) | (a > hi)).sum())}


def summarize_runs(rows: Sequence[dict]) -> dict:
    """Median, quartiles and 1.5 IQR outlier counts per vehicle and metric.

    ``rows`` follow the per-run CSV schema, so the summary can be recomputed
    from the CSV alone. A run fails when any of its vehicles ends with
    positive violation.
    """
    if not rows:
        raise ValueError("no runs to summarise")
    metrics = ("cost", "mission_time_s", "t_diff_s", "completed", "violation_s")
    by_vehicle: dict[int, dict[str, list]] = {}
    failed: set[int] = set()
    runs: set[int] = set()
    for row in rows:
        run, veh = int(row["run"]), int(row["vehicle"])
        runs.add(run)
        slot = by_vehicle.setdefault(veh, {m: [] for m in metrics})
        for m in metrics:
            slot[m].append(float(row[m]))
        if float(row["violation_s"]) > 0:
            failed.add(run)
    return {
        "runs": len(runs),
        "failures": len(failed),
        "failure_rate": len(failed) / len(runs),
        "vehicles": {v: {m: _quartiles(vals) for m, vals in slot.items()}
                     for v, slot in sorted(by_vehicle.items())},
    }


# --------------------------------------------------------------------------
# artefacts
# --------------------------------------------------------------------------


def run_rows(results: Sequence[RunResult]) -> list[dict]:
    rows = []
    for i, res in enumerate(results):
        for v in res.vehicles:
            rows.append({"run": i, "vehicle": v.vehicle_id, "cost": v.cost,
                         "mission_time_s": v.mission_time_s, "t_diff_s": v.t_diff_s,
                         "completed": v.completed, "violation_s": v.violation_s})
    return rows


def _write(path: Path, fields: list[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path


def write_runs_csv(results: Sequence[RunResult], path: str | Path) -> Path:
    return _write(path, RUN_FIELDS, run_rows(results))


def read_runs_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_history_csv(history: Sequence[HistoryRow], path: str | Path) -> Path:
    rows = ({"iter": h.iter, "vehicle": h.vehicle, "cost": h.cost, "t_diff_s": h.t_diff_s,
             "violation_s": h.violation_s, "completed": h.completed} for h in history)
    return _write(path, HISTORY_FIELDS, rows)


def comparison_rows(results: Sequence[RunResult]) -> list[dict]:
    """Per-vehicle rows and one ``total`` row per mode."""
    rows = []
    for res in results:
        for v in res.vehicles:
            rows.append({"mode": res.label, "vehicle": v.vehicle_id, "cost": v.cost,
                         "mission_time_s": v.mission_time_s, "t_diff_s": v.t_diff_s,
                         "completed": v.completed, "violation_s": v.violation_s})
        rows.append({"mode": res.label, "vehicle": "total", "cost": res.total_cost,
                     "mission_time_s": sum(v.mission_time_s for v in res.vehicles),
                     "t_diff_s": sum(v.t_diff_s for v in res.vehicles),
                     "completed": res.completed, "violation_s": res.total_violation_s})
    return rows


def delta_rows(results: Sequence[RunResult]) -> list[dict]:
    """Cost reduction (%) and completed-task gain of each mode over the first."""
    if not results:
        return []
    base = results[0]
    out = []
    for res in results[1:]:
        pct = 100.0 * (base.total_cost - res.total_cost) / base.total_cost if base.total_cost else 0.0
        out.append({"mode": res.label, "baseline": base.label, "cost_reduction_pct": pct,
                    "completed_delta": res.completed - base.completed,
                    "residual_time_delta_s": res.residual_time_s - base.residual_time_s})
    return out


def write_comparison_csv(results: Sequence[RunResult], path: str | Path) -> tuple[Path, Path]:
    """Write the comparison table and, next to it, ``<stem>_deltas.csv``."""
    path = Path(path)
    table = _write(path, COMPARISON_FIELDS, comparison_rows(results))
    deltas = _write(path.with_name(path.stem + "_deltas.csv"),
                    ["mode", "baseline", "cost_reduction_pct", "completed_delta",
                     "residual_time_delta_s"], delta_rows(results))
    return table, deltas


def write_plan_json(result: RunResult, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config_hash": result.config_hash, "solver": result.config.solver,
           "mode": result.config.mode, "seed": result.config.seed,
           "infeasible_vehicles": result.infeasible_vehicles, **result.plan.to_dict()}
    for r in doc["routes"]:
        r["start_xyz"] = list(next(x.start_xyz for x in result.plan.routes
                                   if x.vehicle_id == r["vehicle_id"]))
        r["goal_xyz"] = list(next(x.goal_xyz for x in result.plan.routes
                                  if x.vehicle_id == r["vehicle_id"]))
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def load_plan_json(path: str | Path) -> FleetPlan:
    doc = json.loads(Path(path).read_text())
    routes = []
    for r in doc["routes"]:
        route = Route(r["vehicle_id"], tuple(r["tasks"]), tuple(r["start_xyz"]), tuple(r["goal_xyz"]))
        route.total_distance_m = r["distance_m"]
        route.mission_time_s = r["mission_time_s"]
        route.violation_s = r["violation_s"]
        route.cost = r["cost"]
        routes.append(route)
    return FleetPlan(routes, frozenset(doc["abandoned"]), doc["total_cost"])


def verify_plan(plan: FleetPlan, config: ScenarioConfig,
                tasks: Sequence[TaskSpot] | None = None) -> list[str]:
    """Recompute every cached metric of ``plan``; return the mismatching fields."""
    if tasks is None:
        _, tasks = scenario_inputs(config)
    cached = [(r.total_distance_m, r.mission_time_s, r.violation_s, r.cost) for r in plan.routes]
    cached_total = plan.total_cost
    fresh = FleetPlan([Route(r.vehicle_id, r.task_ids, r.start_xyz, r.goal_xyz)
                       for r in plan.routes], plan.abandoned)
    fresh.check_exclusive(t.id for t in tasks)
    plan_cost(fresh, config.fleet(), tasks, config.weights)
    bad = []
    names = ("distance_m", "mission_time_s", "violation_s", "cost")
    for r, old in zip(fresh.routes, cached):
        new = (r.total_distance_m, r.mission_time_s, r.violation_s, r.cost)
        bad += [f"vehicle {r.vehicle_id} {n}" for n, a, b in zip(names, old, new) if a != b]
    if cached_total != fresh.total_cost:
        bad.append("total_cost")
    return bad
