"""Heuristic Fleet Cooperation: ordering, screening and cooperation operators
and the population loop that drives them.

Routes are handled internally as lists of :class:`~fleet_hfc.cost.MissionModel`
node indices; the public operator functions accept and return
:class:`~fleet_hfc.cost.Route` / :class:`~fleet_hfc.cost.FleetPlan` objects.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .clustering import ClusterAssignment, pair_clusters
from .cost import CostWeights, FleetPlan, MissionModel, Route, Tasks, task_table
from .environment import TaskSpot
from .kinematics import VehicleConfig

log = logging.getLogger(__name__)

__all__ = [
    "HfcParams",
    "Population",
    "HfcResult",
    "HistoryRow",
    "MODES",
    "mode_flags",
    "init_population",
    "order_route",
    "screen_route",
    "cooperate",
    "run_hfc",
]

SWAP, INSERTION, REVERSION = 0, 1, 2

MODES = {
    "ncm1": (True, False, False),
    "ncm2": (True, True, False),
    "cm": (True, True, True),
}


def mode_flags(mode: str) -> tuple[bool, bool, bool]:
    """``(ordering, screening, cooperation)`` switches for a named mode."""
    try:
        return MODES[mode.lower()]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(MODES)}") from None


@dataclass(frozen=True)
class HfcParams:
    population_size: int = 100
    max_iter: int = 150
    # None picks the largest allowed sample, floor(population_size / 100)
    screening_sample: int | None = None
    ordering_on: bool = True
    screening_on: bool = True
    cooperation_on: bool = True
    seed: int = 42
    weights: CostWeights = field(default_factory=CostWeights)

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.screening_sample is None:
            object.__setattr__(self, "screening_sample", self.population_size // 100)
        if self.screening_sample < 0:
            raise ValueError("screening_sample must be non-negative")
        if self.screening_sample > 0.01 * self.population_size:
            raise ValueError("screening_sample may not exceed 1% of the population size")

    @classmethod
    def for_mode(cls, mode: str, **kwargs) -> "HfcParams":
        o, s, c = mode_flags(mode)
        return cls(ordering_on=o, screening_on=s, cooperation_on=c, **kwargs)


@dataclass(frozen=True)
class HistoryRow:
    iter: int
    vehicle: int
    cost: float
    t_diff_s: float
    violation_s: float
    completed: int


@dataclass
class Population:
    individuals: list[FleetPlan]
    best: FleetPlan
    iteration: int = 0

    @property
    def size(self) -> int:
        return len(self.individuals)


@dataclass
class HfcResult:
    best: FleetPlan
    history: list[HistoryRow]
    best_cost_trace: list[float]
    infeasible_vehicles: list[int] = field(default_factory=list)

    @property
    def infeasible_scenario(self) -> bool:
        return bool(self.infeasible_vehicles)


# --------------------------------------------------------------------------
# node-level operators
# --------------------------------------------------------------------------


def _order_moves(model: MissionModel, v: int, seq: list[int], rng: np.random.Generator,
                 n_moves: int) -> float:
    """Apply ``n_moves`` random ordering moves to ``seq`` in place.

    Each move is kept only if it does not lengthen the route. The batch is
    checked against an exact recomputation and rolled back if rounding made
    the route longer. Returns the final route length.
    """
    n = len(seq)
    if n < 2 or n_moves < 1:
        return model.length(v, seq)
    d = model.dist
    s_node = model.start(v)
    g_node = model.goal(v)
    before = seq[:]
    old_len = model.length(v, seq)
    draws = rng.integers(0, (3, n, n - 1), size=(n_moves, 3)).tolist()
    for kind, i, j in draws:
        if j >= i:
            j += 1
        else:
            i, j = j, i
        a = seq[i - 1] if i > 0 else s_node
        x = seq[i]
        y = seq[j]
        e = seq[j + 1] if j + 1 < n else g_node
        if kind == REVERSION:
            delta = d[a][y] + d[x][e] - d[a][x] - d[y][e]
            if delta <= 0:
                seq[i:j + 1] = seq[i:j + 1][::-1]
        elif kind == SWAP:
            if j == i + 1:
                delta = d[a][y] + d[x][e] - d[a][x] - d[y][e]
            else:
                b = seq[i + 1]
                c = seq[j - 1]
                delta = (d[a][y] + d[y][b] + d[c][x] + d[x][e]
                         - d[a][x] - d[x][b] - d[c][y] - d[y][e])
            if delta <= 0:
                seq[i], seq[j] = y, x
        else:
            c = seq[j - 1]
            delta = d[c][e] + d[a][y] + d[y][x] - d[c][y] - d[y][e] - d[a][x]
            if delta <= 0:
                del seq[j]
                seq.insert(i, y)
    new_len = model.length(v, seq)
    if new_len > old_len:
        seq[:] = before
        return old_len
    return new_len


def _apply_move(seq: list, kind: int, i: int, j: int) -> list:
    """Return a copy of ``seq`` with one ordering move applied at ``i < j``."""
    out = list(seq)
    if kind == SWAP:
        out[i], out[j] = out[j], out[i]
    elif kind == INSERTION:
        y = out.pop(j)
        out.insert(i, y)
    elif kind == REVERSION:
        out[i:j + 1] = out[i:j + 1][::-1]
    else:
        raise ValueError(f"unknown ordering move {kind}")
    return out


def _screen(model: MissionModel, v: int, seq: list[int]) -> list[int]:
    """Greedy leave-one-out removal while the route runs over budget.

    Removes, one at a time, the task whose absence gives the lowest route
    cost, until the route is on time or a single task remains. ``seq`` is
    modified in place; removed nodes are returned in removal order.
    """
    removed: list[int] = []
    d = model.dist
    battery = model.battery[v]
    speed = model.speed[v]
    s_node = model.start(v)
    g_node = model.goal(v)
    length, tm, prio = model.metrics(v, seq)
    inj_total = tm - length / speed
    while tm > battery and len(seq) > 1:
        n = len(seq)
        best_cost = None
        best_pos = -1
        for p in range(n):
            a = seq[p - 1] if p > 0 else s_node
            x = seq[p]
            e = seq[p + 1] if p + 1 < n else g_node
            cand_len = length + d[a][e] - d[a][x] - d[x][e]
            cand_tm = cand_len / speed + inj_total - model.inj[x]
            c = model.cost(v, cand_tm, prio - model.prio[x])
            if best_cost is None or c < best_cost:
                best_cost, best_pos = c, p
        removed.append(seq.pop(best_pos))
        length, tm, prio = model.metrics(v, seq)
        inj_total = tm - length / speed
    return removed


def _cooperate_vehicle(model: MissionModel, v: int, seq: list[int], abandoned: list[int],
                       rng: np.random.Generator, reorder: bool = True) -> list[int]:
    """Let vehicle ``v`` adopt abandoned tasks while its residual time allows.

    The candidate is the abandoned task nearest the route's last task (its
    start station if empty) whose insertion before the goal keeps the route
    on time; distance ties go to the lowest task id. After each adoption the
    route is re-ordered. Returns adopted nodes; ``seq`` and ``abandoned`` are
    updated in place.
    """
    adopted: list[int] = []
    d = model.dist
    battery = model.battery[v]
    speed = model.speed[v]
    g_node = model.goal(v)
    ids = model.ids
    length, tm, _ = model.metrics(v, seq)
    while abandoned and tm < battery:
        last = seq[-1] if seq else model.start(v)
        row = d[last]
        pick = None
        for c in sorted(abandoned, key=lambda c: (row[c], ids[c])):
            approx = (length + row[c] + d[c][g_node] - row[g_node]) / speed + model.inj[c]
            if approx > battery * (1 + 1e-9):
                continue
            _, new_tm, _ = model.metrics(v, seq + [c])
            if new_tm <= battery:
                pick = c
                break
        if pick is None:
            break
        seq.append(pick)
        abandoned.remove(pick)
        adopted.append(pick)
        if reorder:
            _order_moves(model, v, seq, rng, len(seq))
        length, tm, _ = model.metrics(v, seq)
    return adopted


# --------------------------------------------------------------------------
# individuals
# --------------------------------------------------------------------------


class _Individual:
    __slots__ = ("routes", "abandoned", "costs", "tms")

    def __init__(self, routes: list[list[int]], abandoned: list[int]):
        self.routes = routes
        self.abandoned = abandoned
        self.costs: list[float] = []
        self.tms: list[float] = []

    def refresh(self, model: MissionModel) -> None:
        self.costs = []
        self.tms = []
        for v, seq in enumerate(self.routes):
            _, tm, prio = model.metrics(v, seq)
            self.tms.append(tm)
            self.costs.append(model.cost(v, tm, prio))

    def refresh_route(self, model: MissionModel, v: int) -> None:
        _, tm, prio = model.metrics(v, self.routes[v])
        self.tms[v] = tm
        self.costs[v] = model.cost(v, tm, prio)

    @property
    def total(self) -> float:
        total = 0.0
        for c in self.costs:
            total += c
        return total

    def copy(self) -> "_Individual":
        out = _Individual([r[:] for r in self.routes], self.abandoned[:])
        out.costs = self.costs[:]
        out.tms = self.tms[:]
        return out

    def check_exclusive(self, n_tasks: int) -> None:
        seen = [0] * n_tasks
        for r in self.routes:
            for node in r:
                seen[node] += 1
        for node in self.abandoned:
            seen[node] += 1
        bad = [i for i, s in enumerate(seen) if s != 1]
        if bad:
            raise AssertionError(f"exclusivity broken for nodes {bad[:10]}")

    def to_plan(self, model: MissionModel) -> FleetPlan:
        routes = [model.to_route(v, seq) for v, seq in enumerate(self.routes)]
        plan = FleetPlan(routes, frozenset(model.ids[a] for a in self.abandoned))
        total = 0.0
        for r in routes:
            total += r.cost
        plan.total_cost = total
        return plan


def _cluster_nodes(model: MissionModel, clusters: ClusterAssignment,
                   fleet: Sequence[VehicleConfig]) -> list[list[int]]:
    if len(fleet) != clusters.k:
        raise ValueError(f"{len(fleet)} vehicles but {clusters.k} clusters")
    clusters.check()
    pairing = pair_clusters(clusters, fleet)
    by_cluster: list[list[int]] = [[] for _ in range(clusters.k)]
    for tid in clusters.task_ids:
        by_cluster[clusters.labels[tid]].append(model.node_of[tid])
    for group in by_cluster:
        group.sort()
    return [by_cluster[pairing[v]] for v in range(len(fleet))]


def _streams(seed: int, n: int) -> tuple[list[np.random.Generator], np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n + 1)
    return [np.random.default_rng(c) for c in children[:n]], np.random.default_rng(children[n])


def _initial(model: MissionModel, groups: list[list[int]],
             rngs: Sequence[np.random.Generator]) -> list[_Individual]:
    pop = []
    for rng in rngs:
        routes = []
        for group in groups:
            routes.append([group[i] for i in rng.permutation(len(group)).tolist()])
        ind = _Individual(routes, [])
        ind.refresh(model)
        pop.append(ind)
    return pop


# --------------------------------------------------------------------------
# public operator API
# --------------------------------------------------------------------------


def init_population(tasks: Tasks, fleet: Sequence[VehicleConfig], clusters: ClusterAssignment,
                    params: HfcParams) -> Population:
    """``N`` plans whose routes are uniform random permutations of each cluster."""
    model = MissionModel(tasks, fleet, params.weights)
    groups = _cluster_nodes(model, clusters, fleet)
    rngs, _ = _streams(params.seed, params.population_size)
    pop = _initial(model, groups, rngs)
    best = min(range(len(pop)), key=lambda i: (pop[i].total, i))
    return Population([ind.to_plan(model) for ind in pop], pop[best].to_plan(model))


def _single(route: Route, vehicle: VehicleConfig, tasks: Tasks,
            weights: CostWeights | None = None) -> tuple[MissionModel, list[int]]:
    table = task_table(tasks)
    sub = {t: table[t] for t in route.task_ids}
    fake = VehicleConfig(vehicle.id, vehicle.speed_mps, vehicle.battery_time_s,
                         route.start_xyz, route.goal_xyz)
    model = MissionModel(sub, [fake], weights or CostWeights())
    return model, [model.node_of[t] for t in route.task_ids]


def order_route(route: Route, vehicle: VehicleConfig, tasks: Tasks,
                seed: int | np.random.Generator | None = None, moves: int = 1) -> Route:
    """Apply ``moves`` random swap/insertion/reversion moves, each kept only if
    the route does not get longer. Endpoints never move."""
    if len(route.task_ids) < 2:
        return Route(route.vehicle_id, route.task_ids, route.start_xyz, route.goal_xyz)
    model, seq = _single(route, vehicle, tasks)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    _order_moves(model, 0, seq, rng, moves)
    return Route(route.vehicle_id, tuple(model.ids[s] for s in seq),
                 route.start_xyz, route.goal_xyz)


def screen_route(route: Route, vehicle: VehicleConfig, tasks: Tasks,
                 weights: CostWeights) -> tuple[Route, list[int]]:
    model, seq = _single(route, vehicle, tasks, weights)
    removed = _screen(model, 0, seq)
    out = Route(route.vehicle_id, tuple(model.ids[s] for s in seq), route.start_xyz,
                route.goal_xyz)
    return out, [model.ids[r] for r in removed]


def cooperate(plan: FleetPlan, fleet: Sequence[VehicleConfig], tasks: Tasks,
              weights: CostWeights, seed: int | np.random.Generator | None = None,
              reorder: bool = True) -> FleetPlan:
    """Hand abandoned tasks to vehicles with residual battery time.

    Vehicles are visited in fleet order; each keeps adopting until nothing
    more fits.
    """
    plan.check_exclusive()
    if not plan.abandoned:
        return FleetPlan([Route(r.vehicle_id, r.task_ids, r.start_xyz, r.goal_xyz)
                          for r in plan.routes], plan.abandoned)
    model = MissionModel(tasks, fleet, weights)
    index = {v.id: i for i, v in enumerate(fleet)}
    routes: list[list[int]] = [[] for _ in fleet]
    for r in plan.routes:
        routes[index[r.vehicle_id]] = [model.node_of[t] for t in r.task_ids]
    abandoned = sorted(model.node_of[t] for t in plan.abandoned)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for v in range(len(fleet)):
        _cooperate_vehicle(model, v, routes[v], abandoned, rng, reorder)
    ind = _Individual(routes, abandoned)
    ind.refresh(model)
    return ind.to_plan(model)


# --------------------------------------------------------------------------
# main loop
# --------------------------------------------------------------------------


def _plan_length(model: MissionModel, ind: _Individual) -> float:
    return sum(model.length(v, seq) for v, seq in enumerate(ind.routes))


def _record(history: list[HistoryRow], it: int, model: MissionModel, ind: _Individual) -> None:
    for v, seq in enumerate(ind.routes):
        tm = ind.tms[v]
        battery = model.battery[v]
        history.append(HistoryRow(it, model.fleet[v].id, ind.costs[v], battery - tm,
                                  max(0.0, tm - battery), len(seq)))


def run_hfc(tasks: Tasks, fleet: Sequence[VehicleConfig], clusters: ClusterAssignment,
            params: HfcParams, *, check_invariants: bool = False,
            on_iteration: Callable[[int, FleetPlan], None] | None = None) -> HfcResult:
    """Evolve the population for ``params.max_iter`` iterations.

    Per iteration every route of every individual is re-ordered, a random
    sample of ``screening_sample`` individuals is screened, and individuals
    with abandoned tasks let vehicles with residual time adopt them. The
    cheapest plan seen so far (shorter total length breaks cost ties) is
    tracked and copied over the costliest individual at the end of each
    iteration.

    With ``check_invariants`` the task partition of every individual is
    verified after each operator, and ``on_iteration`` receives the current
    best plan after every iteration.
    """
    table = task_table(tasks)
    model = MissionModel(table, fleet, params.weights)
    n_tasks = model.n
    infeasible = [veh.id for v, veh in enumerate(fleet)
                  if model.metrics(v, [])[1] > veh.battery_time_s]
    if infeasible:
        log.warning("vehicles %s cannot reach the rendezvous within battery time", infeasible)

    if n_tasks:
        groups = _cluster_nodes(model, clusters, fleet)
    else:
        groups = [[] for _ in fleet]
    rngs, pop_rng = _streams(params.seed, params.population_size)
    pop = _initial(model, groups, rngs)
    k = len(fleet)

    def check(ind: _Individual) -> None:
        if check_invariants:
            ind.check_exclusive(n_tasks)

    best_i = min(range(len(pop)), key=lambda i: (pop[i].total, i))
    best = pop[best_i].copy()
    best_cost = best.total
    best_len = _plan_length(model, best)
    history: list[HistoryRow] = []
    trace = [best_cost]
    _record(history, 0, model, best)

    for it in range(1, params.max_iter + 1):
        if params.ordering_on:
            for ind, rng in zip(pop, rngs):
                for v in range(k):
                    seq = ind.routes[v]
                    if len(seq) > 1:
                        _order_moves(model, v, seq, rng, len(seq))
                        ind.refresh_route(model, v)
                check(ind)

        if params.screening_on and params.screening_sample:
            chosen = pop_rng.choice(len(pop), size=params.screening_sample, replace=False)
            for idx in sorted(chosen.tolist()):
                ind = pop[idx]
                for v in range(k):
                    if ind.tms[v] > model.battery[v]:
                        ind.abandoned.extend(_screen(model, v, ind.routes[v]))
                        ind.refresh_route(model, v)
                ind.abandoned.sort()
                check(ind)

        if params.cooperation_on:
            for ind, rng in zip(pop, rngs):
                if not ind.abandoned:
                    continue
                for v in range(k):
                    if ind.tms[v] < model.battery[v] and ind.abandoned:
                        if _cooperate_vehicle(model, v, ind.routes[v], ind.abandoned, rng):
                            ind.refresh_route(model, v)
                check(ind)

        totals = [ind.total for ind in pop]
        cur = min(range(len(pop)), key=lambda i: (totals[i], i))
        if totals[cur] < best_cost:
            best = pop[cur].copy()
            best_cost = totals[cur]
            best_len = _plan_length(model, best)
        elif totals[cur] == best_cost:
            # equal cost: prefer the shorter plan
            tied = [i for i in range(len(pop)) if totals[i] == best_cost]
            lens = {i: _plan_length(model, pop[i]) for i in tied}
            short = min(tied, key=lambda i: (lens[i], i))
            if lens[short] < best_len:
                best = pop[short].copy()
                best_len = lens[short]
        worst = max(range(len(pop)), key=lambda i: (totals[i], -i))
        if totals[worst] > best_cost:
            pop[worst] = best.copy()
        trace.append(best_cost)
        _record(history, it, model, best)
        if on_iteration is not None:
            on_iteration(it, best.to_plan(model))

    check(best)
    return HfcResult(best.to_plan(model), history, trace, infeasible)
