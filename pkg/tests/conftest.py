import itertools
import math

import pytest
from hypothesis import HealthCheck, settings

from fleet_hfc.environment import TaskSpot
from fleet_hfc.kinematics import VehicleConfig

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_tasks(points, priority=50, injection=90.0):
    return [TaskSpot(i, (float(x), float(y), 0.0), priority, injection)
            for i, (x, y) in enumerate(points)]


def brute_force_tour(start, goal, points):
    """Shortest start -> permutation(points) -> goal length, by enumeration."""
    best = math.inf
    best_order = None
    for perm in itertools.permutations(range(len(points))):
        pts = [start] + [points[i] for i in perm] + [goal]
        length = sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))
        if length < best:
            best, best_order = length, perm
    return best, best_order


@pytest.fixture
def vehicle():
    return VehicleConfig(1, 1.0, 1e6, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


# lines printed by the acceptance module, repeated in the terminal summary
ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
