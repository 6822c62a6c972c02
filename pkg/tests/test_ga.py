import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fleet_hfc.clustering import ClusterAssignment, kmeans
from fleet_hfc.cost import route_distance
from fleet_hfc.environment import TaskSpot
from fleet_hfc.ga import GaParams, pmx_crossover, run_ga
from fleet_hfc.kinematics import VehicleConfig

from conftest import brute_force_tour, make_tasks

ORIGIN = (0.0, 0.0, 0.0)


def textbook_pmx(receiver, donor, c1, c2):
    """Position-chasing PMX, written independently of the library version."""
    n = len(receiver)
    child = [None] * n
    child[c1:c2] = donor[c1:c2]
    for i in range(c1, c2):
        gene = receiver[i]
        if gene in donor[c1:c2]:
            continue
        j = i
        while c1 <= j < c2:
            j = receiver.index(donor[j])
        child[j] = gene
    return [receiver[i] if g is None else g for i, g in enumerate(child)]


def _one_cluster(ids):
    return ClusterAssignment(1, np.zeros((1, 3)), list(ids), {t: 0 for t in ids})


def test_pmx_worked_example():
    a, b = pmx_crossover([1, 2, 3, 4, 5], [3, 4, 5, 1, 2], 1, 3)
    assert a == [1, 4, 5, 2, 3]
    assert b == [5, 2, 3, 1, 4]


def test_pmx_identical_parents():
    p = [4, 2, 7, 1, 9]
    assert pmx_crossover(p, p, 1, 4) == (p, p)


def test_pmx_rejects_bad_parents():
    with pytest.raises(ValueError):
        pmx_crossover([1, 2, 3], [1, 2, 4], 0, 2)
    with pytest.raises(ValueError):
        pmx_crossover([1, 2, 3], [1, 2], 0, 2)
    with pytest.raises(ValueError):
        pmx_crossover([1, 2, 3], [3, 2, 1], 2, 2)


def test_pmx_fuzz_against_textbook():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        n = int(rng.integers(2, 12))
        a = rng.permutation(n).tolist()
        b = rng.permutation(n).tolist()
        c1, c2 = sorted(rng.choice(n + 1, 2, replace=False).tolist())
        ca, cb = pmx_crossover(a, b, c1, c2)
        assert sorted(ca) == sorted(cb) == list(range(n))
        assert ca == textbook_pmx(a, b, c1, c2)
        assert cb == textbook_pmx(b, a, c1, c2)


@given(st.permutations(list(range(8))), st.permutations(list(range(8))),
       st.integers(0, 8), st.integers(0, 8))
def test_pmx_children_are_permutations(a, b, i, j):
    c1, c2 = min(i, j), max(i, j)
    if c1 == c2:
        return
    ca, cb = pmx_crossover(a, b, c1, c2)
    assert sorted(ca) == sorted(cb) == list(range(8))
    assert ca[c1:c2] == b[c1:c2] and cb[c1:c2] == a[c1:c2]


def test_params_validation():
    with pytest.raises(ValueError):
        GaParams(crossover_rate=1.5)
    with pytest.raises(ValueError):
        GaParams(population_size=1)
    with pytest.raises(ValueError):
        GaParams(drop_patience=-1)


def test_four_tasks_reach_brute_force_optimum():
    pts = [(300, 40), (100, 250), (220, 160), (380, 300)]
    veh = VehicleConfig(1, 1, 1e6, ORIGIN, (400.0, 0.0, 0.0))
    tasks = make_tasks(pts)
    res = run_ga(tasks, [veh], _one_cluster(range(4)), GaParams(population_size=20, max_iter=40, seed=1))
    best, order = brute_force_tour(ORIGIN[:2], (400, 0), pts)
    assert route_distance(res.best.routes[0], tasks) == pytest.approx(best, rel=1e-12)
    assert res.best.routes[0].task_ids == order


def test_zero_rates_keep_population_static():
    rng = np.random.default_rng(5)
    tasks = make_tasks(rng.uniform(0, 500, (10, 2)))
    veh = VehicleConfig(1, 1, 1e6, ORIGIN, ORIGIN)
    params = GaParams(population_size=10, max_iter=15, crossover_rate=0.0, mutation_rate=0.0, seed=2)
    res = run_ga(tasks, [veh], _one_cluster(range(10)), params)
    assert all(t == res.best_length_trace[0] for t in res.best_length_trace)
    assert res.dropped == [[]]


def _scenario(seed, n=45, battery=1e6):
    rng = np.random.default_rng(seed)
    tasks = [TaskSpot(i, (float(x), float(y), 0.0), 50, 90.0)
             for i, (x, y) in enumerate(rng.uniform(0, 1000, (n, 2)))]
    fleet = [VehicleConfig(i, 1, battery, (50.0, 500.0, 0.0), (950.0, 500.0, 0.0)) for i in (1, 2, 3)]
    return tasks, fleet, kmeans(tasks, 3, seed)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_best_length_never_increases_without_drops(seed):
    tasks, fleet, cl = _scenario(seed)
    res = run_ga(tasks, fleet, cl, GaParams(population_size=20, max_iter=40, seed=seed))
    trace = np.array(res.best_length_trace)
    assert np.all(np.diff(trace, axis=0) <= 0)
    assert res.dropped == [[], [], []]


def test_tight_budget_drops_until_feasible_and_is_deterministic():
    tasks, fleet, cl = _scenario(3, battery=1800)
    params = GaParams(population_size=30, max_iter=150, seed=4)
    a = run_ga(tasks, fleet, cl, params)
    b = run_ga(tasks, fleet, cl, params)
    assert a.best.to_dict() == b.best.to_dict() and a.history == b.history
    assert all(r.violation_s == 0 for r in a.best.routes)
    dropped = {t for d in a.dropped for t in d}
    assert dropped == set(a.best.abandoned)
    a.best.check_exclusive(t.id for t in tasks)


def test_zero_tasks():
    fleet = [VehicleConfig(1, 1, 3600, ORIGIN, (100.0, 0.0, 0.0))]
    res = run_ga([], fleet, None, GaParams(population_size=4, max_iter=3))
    assert res.best.completed == 0 and res.best.routes[0].mission_time_s == 100.0


def test_final_repair_leaves_no_violation():
    # too few generations for the patience rule; the closing pass still repairs
    tasks, fleet, cl = _scenario(6, battery=1500)
    res = run_ga(tasks, fleet, cl, GaParams(population_size=10, max_iter=2, seed=0, drop_patience=50))
    assert all(r.violation_s == 0 for r in res.best.routes)
    assert sum(len(d) for d in res.dropped) > 0
    assert res.history[-1].iter == 2
    last = [h for h in res.history if h.iter == 2]
    assert [h.completed for h in last] == [len(r.task_ids) for r in res.best.routes]
    assert all(h.violation_s == 0 for h in last)
