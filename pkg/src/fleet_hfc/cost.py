"""Route timing and the constrained mission cost.

Every optimiser in the package scores candidates through :func:`cost_terms`;
:class:`MissionModel` is the precomputed fast path over a distance matrix and
must agree bit-for-bit with the plain functions below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .environment import TaskSpot
from .kinematics import VehicleConfig, segment_distance

__all__ = [
    "CostWeights",
    "Route",
    "FleetPlan",
    "MissionModel",
    "task_table",
    "cost_terms",
    "violation",
    "route_distance",
    "mission_time",
    "route_cost",
    "evaluate_route",
    "plan_cost",
    "route_breakdown",
]

Tasks = Union[Mapping[int, TaskSpot], Sequence[TaskSpot]]


@dataclass(frozen=True)
class CostWeights:
    lambda1: float = 1.0
    lambda2: float = 1.0e4
    lambda3: float = 1.0
    epsilon: float = 10.0
    # stands in for 1 / priority_sum on a route with no tasks
    empty_priority_ceiling: float = 1.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "epsilon", "empty_priority_ceiling"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be non-negative")


def task_table(tasks: Tasks) -> dict[int, TaskSpot]:
    if isinstance(tasks, Mapping):
        return dict(tasks)
    return {t.id: t for t in tasks}


def violation(mission_time_s: float, battery_s: float, epsilon: float) -> float:
    """Overtime penalty ``epsilon * max(0, T_mission - T_battery)``."""
    if not battery_s > 0:
        raise ValueError("battery time must be positive")
    return epsilon * max(0.0, mission_time_s - battery_s)


def cost_terms(mission_time_s: float, battery_s: float, priority_sum: float,
               weights: CostWeights) -> float:
    """Three-term route cost: time gap, inverse priority, overtime penalty."""
    inv_priority = 1.0 / priority_sum if priority_sum > 0 else weights.empty_priority_ceiling
    return (weights.lambda1 * abs(mission_time_s - battery_s)
            + weights.lambda2 * inv_priority
            + weights.lambda3 * violation(mission_time_s, battery_s, weights.epsilon))


@dataclass
class Route:
    """One vehicle's visit order between its start and rendezvous stations.

    The cached metrics are ``None`` until :func:`evaluate_route` fills them.
    ``violation_s`` caches raw overtime in seconds (not epsilon-scaled).
    """

    vehicle_id: int
    task_ids: tuple[int, ...]
    start_xyz: tuple[float, float, float]
    goal_xyz: tuple[float, float, float]
    total_distance_m: float | None = None
    mission_time_s: float | None = None
    violation_s: float | None = None
    cost: float | None = None

    def __post_init__(self):
        self.task_ids = tuple(int(t) for t in self.task_ids)
        if len(set(self.task_ids)) != len(self.task_ids):
            raise ValueError(f"route of vehicle {self.vehicle_id} repeats a task")

    @classmethod
    def for_vehicle(cls, vehicle: VehicleConfig, task_ids: Iterable[int] = ()) -> "Route":
        return cls(vehicle.id, tuple(task_ids), vehicle.start_xyz, vehicle.goal_xyz)

    def clear_cache(self) -> None:
        self.total_distance_m = self.mission_time_s = self.violation_s = self.cost = None


def _resolve(tasks: Mapping[int, TaskSpot], task_id: int) -> TaskSpot:
    try:
        return tasks[task_id]
    except KeyError:
        raise KeyError(f"unknown task id {task_id}") from None


def route_distance(route: Route, tasks: Tasks) -> float:
    table = task_table(tasks)
    points = [route.start_xyz]
    points += [_resolve(table, t).position_xyz for t in route.task_ids]
    points.append(route.goal_xyz)
    total = 0.0
    for a, b in zip(points, points[1:]):
        total += segment_distance(a, b)
    return total


def _injection_total(route: Route, table: Mapping[int, TaskSpot]) -> float:
    # exactly rounded, so independent of visit order
    return math.fsum(_resolve(table, t).injection_time_s for t in route.task_ids)


def mission_time(route: Route, vehicle: VehicleConfig, tasks: Tasks) -> float:
    """Travel time start -> tasks -> goal plus each task's injection time once."""
    table = task_table(tasks)
    return route_distance(route, table) / vehicle.speed_mps + _injection_total(route, table)


def route_cost(route: Route, vehicle: VehicleConfig, tasks: Tasks, weights: CostWeights) -> float:
    table = task_table(tasks)
    prio = 0
    for t in route.task_ids:
        prio += _resolve(table, t).priority
    return cost_terms(mission_time(route, vehicle, table), vehicle.battery_time_s, prio, weights)


def evaluate_route(route: Route, vehicle: VehicleConfig, tasks: Tasks,
                   weights: CostWeights) -> Route:
    """Fill ``route``'s cached metrics in place and return it."""
    table = task_table(tasks)
    dist = route_distance(route, table)
    tm = dist / vehicle.speed_mps + _injection_total(route, table)
    route.total_distance_m = dist
    route.mission_time_s = tm
    route.violation_s = max(0.0, tm - vehicle.battery_time_s)
    route.cost = route_cost(route, vehicle, table, weights)
    return route


def route_breakdown(route: Route, vehicle: VehicleConfig, tasks: Tasks,
                    weights: CostWeights) -> dict:
    table = task_table(tasks)
    evaluate_route(route, vehicle, table, weights)
    return {
        "vehicle_id": route.vehicle_id,
        "distance_m": route.total_distance_m,
        "mission_time_s": route.mission_time_s,
        "t_diff_s": vehicle.battery_time_s - route.mission_time_s,
        "violation_s": route.violation_s,
        "priority_sum": sum(table[t].priority for t in route.task_ids),
        "cost": route.cost,
    }


@dataclass
class FleetPlan:
    routes: list[Route]
    abandoned: frozenset[int] = field(default_factory=frozenset)
    total_cost: float | None = None

    def __post_init__(self):
        self.abandoned = frozenset(int(t) for t in self.abandoned)

    @property
    def assigned(self) -> list[int]:
        return [t for r in self.routes for t in r.task_ids]

    @property
    def completed(self) -> int:
        return sum(len(r.task_ids) for r in self.routes)

    def check_exclusive(self, all_task_ids: Iterable[int] | None = None) -> None:
        """Raise if a task sits in two routes, or in a route and the abandoned set.

        With ``all_task_ids`` also require assigned and abandoned to cover it.
        """
        seen: set[int] = set()
        for r in self.routes:
            dup = seen.intersection(r.task_ids)
            if dup:
                raise ValueError(f"tasks {sorted(dup)} appear in two routes")
            seen.update(r.task_ids)
        both = seen & self.abandoned
        if both:
            raise ValueError(f"tasks {sorted(both)} are both assigned and abandoned")
        if all_task_ids is not None:
            expected = set(all_task_ids)
            if seen | self.abandoned != expected:
                missing = sorted(expected - seen - self.abandoned)
                extra = sorted((seen | self.abandoned) - expected)
                raise ValueError(f"plan does not partition the tasks (missing {missing}, extra {extra})")

    def to_dict(self) -> dict:
        return {
            "routes": [
                {
                    "vehicle_id": r.vehicle_id,
                    "tasks": list(r.task_ids),
                    "distance_m": r.total_distance_m,
                    "mission_time_s": r.mission_time_s,
                    "violation_s": r.violation_s,
                    "cost": r.cost,
                }
                for r in self.routes
            ],
            "abandoned": sorted(self.abandoned),
            "total_cost": self.total_cost,
        }


def plan_cost(plan: FleetPlan, fleet: Sequence[VehicleConfig], tasks: Tasks,
              weights: CostWeights) -> float:
    """Sum of route costs; refreshes every cache on ``plan``."""
    plan.check_exclusive()
    table = task_table(tasks)
    by_id = {v.id: v for v in fleet}
    total = 0.0
    for r in plan.routes:
        if r.vehicle_id not in by_id:
            raise KeyError(f"route references unknown vehicle {r.vehicle_id}")
        evaluate_route(r, by_id[r.vehicle_id], table, weights)
        total += r.cost
    plan.total_cost = total
    return total


class MissionModel:
    """Precomputed distances and task attributes for fast route scoring.

    Tasks are addressed by node index ``0..n-1`` (``ids[node]`` maps back);
    vehicle ``v``'s start and goal are nodes ``n + 2v`` and ``n + 2v + 1``.
    Sums run in the same order as :func:`mission_time`, so results match it
    exactly.
    """

    def __init__(self, tasks: Tasks, fleet: Sequence[VehicleConfig], weights: CostWeights):
        table = task_table(tasks)
        self.ids = sorted(table)
        self.node_of = {tid: i for i, tid in enumerate(self.ids)}
        self.tasks = [table[t] for t in self.ids]
        self.fleet = list(fleet)
        self.weights = weights
        self.n = len(self.tasks)
        points = [t.position_xyz for t in self.tasks]
        for v in self.fleet:
            points.append(v.start_xyz)
            points.append(v.goal_xyz)
        self.points = points
        m = len(points)
        dist = [[0.0] * m for _ in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                d = segment_distance(points[i], points[j])
                dist[i][j] = d
                dist[j][i] = segment_distance(points[j], points[i])
        self.dist = dist
        self.inj = [t.injection_time_s for t in self.tasks]
        self.prio = [t.priority for t in self.tasks]
        self.speed = [v.speed_mps for v in self.fleet]
        self.battery = [v.battery_time_s for v in self.fleet]

    def start(self, v: int) -> int:
        return self.n + 2 * v

    def goal(self, v: int) -> int:
        return self.n + 2 * v + 1

    def length(self, v: int, seq: Sequence[int]) -> float:
        d = self.dist
        prev = self.n + 2 * v
        total = 0.0
        for node in seq:
            total += d[prev][node]
            prev = node
        total += d[prev][self.n + 2 * v + 1]
        return total

    def metrics(self, v: int, seq: Sequence[int]) -> tuple[float, float, int]:
        """``(length_m, mission_time_s, priority_sum)`` for a node sequence."""
        length = self.length(v, seq)
        inj = self.inj
        prio = self.prio
        return (length, length / self.speed[v] + math.fsum([inj[s] for s in seq]),
                sum([prio[s] for s in seq]))

    def cost(self, v: int, mission_time_s: float, priority_sum: float) -> float:
        return cost_terms(mission_time_s, self.battery[v], priority_sum, self.weights)

    def to_route(self, v: int, seq: Sequence[int]) -> Route:
        veh = self.fleet[v]
        route = Route(veh.id, tuple(self.ids[s] for s in seq), veh.start_xyz, veh.goal_xyz)
        length, tm, prio = self.metrics(v, seq)
        route.total_distance_m = length
        route.mission_time_s = tm
        route.violation_s = max(0.0, tm - veh.battery_time_s)
        route.cost = self.cost(v, tm, prio)
        return route
