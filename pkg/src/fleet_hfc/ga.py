"""Genetic-algorithm baseline: per-cluster route evolution with partially
mapped crossover, no screening and no cooperation.

Each vehicle's cluster is evolved independently. Fitness is route length
(equivalently length plus overtime, since every individual of a cluster holds
the same tasks). While the best route runs over budget, its last task before
the rendezvous is dropped from the cluster, at most once per generation and
only in generations where the best route stopped getting shorter. A route
still over budget after the last generation keeps losing its last task until
it fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .clustering import ClusterAssignment
from .cost import CostWeights, FleetPlan, MissionModel, Tasks, task_table
from .hfc import HistoryRow, _apply_move, _cluster_nodes, _Individual, _record
from .kinematics import VehicleConfig

__all__ = ["GaParams", "GaResult", "pmx_crossover", "run_ga"]


@dataclass(frozen=True)
class GaParams:
    population_size: int = 100
    max_iter: int = 150
    crossover_rate: float = 0.8
    mutation_rate: float = 0.2
    seed: int = 42
    # generations without a shorter best route before a violating route drops a task
    drop_patience: int = 3

    def __post_init__(self):
        if self.population_size < 2 or self.max_iter < 1:
            raise ValueError("population_size must be >= 2 and max_iter >= 1")
        if self.drop_patience < 0:
            raise ValueError("drop_patience must be non-negative")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass
class GaResult:
    best: FleetPlan
    history: list[HistoryRow]
    best_length_trace: list[list[float]] = field(default_factory=list)
    dropped: list[list[int]] = field(default_factory=list)


def pmx_crossover(parent_a: Sequence, parent_b: Sequence, cut1: int, cut2: int) -> tuple[list, list]:
    """Partially mapped crossover.

    ``child_a`` takes ``parent_b[cut1:cut2]`` and fills the remaining slots
    from ``parent_a``, following the segment mapping wherever a gene would
    repeat; ``child_b`` is the mirror image.

    >>> pmx_crossover([1, 2, 3, 4, 5], [3, 4, 5, 1, 2], 1, 3)
    ([1, 4, 5, 2, 3], [5, 2, 3, 1, 4])
    """
    if len(parent_a) != len(parent_b) or set(parent_a) != set(parent_b):
        raise ValueError("parents must be permutations of the same task set")
    if len(set(parent_a)) != len(parent_a):
        raise ValueError("parents must not repeat genes")
    n = len(parent_a)
    if not 0 <= cut1 < cut2 <= n:
        raise ValueError(f"invalid cut points ({cut1}, {cut2}) for length {n}")
    return _pmx(parent_a, parent_b, cut1, cut2), _pmx(parent_b, parent_a, cut1, cut2)


def _pmx(receiver: Sequence, donor: Sequence, c1: int, c2: int) -> list:
    child = list(receiver)
    segment = donor[c1:c2]
    child[c1:c2] = segment
    # donor gene -> receiver gene at the same segment slot
    mapping = {donor[i]: receiver[i] for i in range(c1, c2)}
    for i in list(range(c1)) + list(range(c2, len(receiver))):
        gene = receiver[i]
        while gene in mapping:
            gene = mapping[gene]
        child[i] = gene
    return child


def _evolve_cluster(model: MissionModel, v: int, pop: list[list[int]], lengths: list[float],
                    params: GaParams, rng: np.random.Generator) -> None:
    n_pop = len(pop)
    size = len(pop[0])
    if size < 2:
        return
    for i in range(n_pop):
        a, b = rng.integers(0, n_pop, 2).tolist()
        mate = pop[a] if lengths[a] <= lengths[b] else pop[b]
        child = pop[i]
        if rng.random() < params.crossover_rate:
            c1, c2 = sorted(rng.choice(size + 1, 2, replace=False).tolist())
            child = _pmx(pop[i], mate, c1, c2)
        if rng.random() < params.mutation_rate:
            kind = int(rng.integers(0, 3))
            p, q = sorted(rng.choice(size, 2, replace=False).tolist())
            child = _apply_move(child, kind, p, q)
        if child is pop[i]:
            continue
        length = model.length(v, child)
        if length < lengths[i]:
            pop[i] = child
            lengths[i] = length


def run_ga(tasks: Tasks, fleet: Sequence[VehicleConfig], clusters: ClusterAssignment,
           params: GaParams, weights: CostWeights | None = None) -> GaResult:
    weights = weights or CostWeights()
    model = MissionModel(task_table(tasks), fleet, weights)
    k = len(fleet)
    groups = _cluster_nodes(model, clusters, fleet) if model.n else [[] for _ in fleet]
    children = np.random.SeedSequence(params.seed).spawn(k)
    rngs = [np.random.default_rng(c) for c in children]

    pops: list[list[list[int]]] = []
    lens: list[list[float]] = []
    for v in range(k):
        group = groups[v]
        pop = [[group[j] for j in rngs[v].permutation(len(group)).tolist()]
               for _ in range(params.population_size)]
        pops.append(pop)
        lens.append([model.length(v, p) for p in pop])

    dropped: list[list[int]] = [[] for _ in range(k)]
    best_len = [min(ls) for ls in lens]
    stale = [0] * k
    history: list[HistoryRow] = []
    trace: list[list[float]] = []

    def snapshot() -> _Individual:
        routes = []
        for v in range(k):
            b = min(range(len(pops[v])), key=lambda i: (lens[v][i], i))
            routes.append(pops[v][b][:])
        ind = _Individual(routes, sorted(x for d in dropped for x in d))
        ind.refresh(model)
        return ind

    best = snapshot()
    _record(history, 0, model, best)
    trace.append([model.length(v, r) for v, r in enumerate(best.routes)])

    for it in range(1, params.max_iter + 1):
        for v in range(k):
            _evolve_cluster(model, v, pops[v], lens[v], params, rngs[v])
            b = min(range(len(pops[v])), key=lambda i: (lens[v][i], i))
            stale[v] = stale[v] + 1 if lens[v][b] >= best_len[v] else 0
            best_len[v] = lens[v][b]
            seq = pops[v][b]
            if seq and stale[v] >= params.drop_patience and \
                    model.metrics(v, seq)[1] > model.battery[v]:
                last = seq[-1]
                dropped[v].append(last)
                for i, p in enumerate(pops[v]):
                    p.remove(last)
                    lens[v][i] = model.length(v, p)
                best_len[v] = min(lens[v])
                stale[v] = 0
        best = snapshot()
        _record(history, it, model, best)
        trace.append([model.length(v, r) for v, r in enumerate(best.routes)])

    # generations ran out with a violating best route: keep dropping its last task
    repaired = False
    for v in range(k):
        seq = best.routes[v]
        while seq and model.metrics(v, seq)[1] > model.battery[v]:
            dropped[v].append(seq.pop())
            repaired = True
    if repaired:
        best = _Individual(best.routes, sorted(x for d in dropped for x in d))
        best.refresh(model)
        history = [h for h in history if h.iter != params.max_iter]
        _record(history, params.max_iter, model, best)
        trace[-1] = [model.length(v, r) for v, r in enumerate(best.routes)]

    plan = best.to_plan(model)
    return GaResult(plan, history, trace, [[model.ids[x] for x in d] for d in dropped])
