import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fleet_hfc.kinematics import VehicleConfig, VehicleState, heading_to, segment_distance, segment_time

coord = st.floats(-1e4, 1e4, allow_nan=False)
point = st.tuples(coord, coord, coord)


def test_heading_axis_aligned():
    assert heading_to((0, 0, 0), (1, 0, 0)) == (0.0, 0.0)
    yaw, pitch = heading_to((0, 0, 0), (0, 1, 0))
    assert yaw == pytest.approx(math.pi / 2)
    assert pitch == 0.0


def test_heading_climb_diagonal():
    # z down: dz = -sqrt(2) is a climb of sqrt(2) over a horizontal run of sqrt(2)
    yaw, pitch = heading_to((0, 0, 0), (1, 1, -math.sqrt(2)))
    assert yaw == pytest.approx(math.pi / 4, abs=1e-12)
    assert pitch == pytest.approx(math.pi / 4, abs=1e-12)


def test_heading_west_is_plus_pi():
    yaw, _ = heading_to((0, 0, 0), (-1, -0.0, 0))
    assert yaw == math.pi


def test_heading_coincident_raises():
    with pytest.raises(ValueError):
        heading_to((1, 2, 3), (1, 2, 3))


def test_distance_examples():
    assert segment_distance((0, 0, 0), (3, 4, 0)) == 5.0
    assert segment_distance((1, 2, 3), (1, 2, 3)) == 0.0
    assert segment_distance((1, 2, 3), (4, 6, 3)) == 5.0


def test_segment_time_examples():
    assert segment_time((0, 0, 0), (100, 0, 0), 1.0) == 100.0
    assert segment_time((5, 5, 5), (5, 5, 5), 1.0) == 0.0
    assert segment_time((0, 0, 0), (0, 250, 0), 2.5) == 100.0
    with pytest.raises(ValueError):
        segment_time((0, 0, 0), (1, 0, 0), 0.0)


@given(point, point)
def test_distance_symmetric_nonnegative(a, b):
    d = segment_distance(a, b)
    assert d >= 0
    assert d == segment_distance(b, a)
    if tuple(a) == tuple(b):
        assert d == 0


@given(point, point, point)
def test_distance_triangle(a, b, c):
    assert segment_distance(a, c) <= segment_distance(a, b) + segment_distance(b, c) + 1e-6


@given(point, point)
def test_heading_ranges(a, b):
    if tuple(a) == tuple(b):
        return
    yaw, pitch = heading_to(a, b)
    VehicleState(tuple(a), yaw, pitch)


def test_vehicle_validation():
    with pytest.raises(ValueError):
        VehicleConfig(1, 0.0, 10.0, (0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        VehicleConfig(1, 1.0, -1.0, (0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        VehicleState((0, 0, 0), yaw_rad=-math.pi)
