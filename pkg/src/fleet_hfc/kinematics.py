"""Straight-leg vehicle geometry at constant speed."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "VehicleConfig",
    "VehicleState",
    "heading_to",
    "segment_distance",
    "segment_time",
]

Point = Sequence[float]


@dataclass(frozen=True)
class VehicleConfig:
    id: int
    speed_mps: float
    battery_time_s: float
    start_xyz: tuple[float, float, float]
    goal_xyz: tuple[float, float, float]

    def __post_init__(self):
        if not self.speed_mps > 0:
            raise ValueError(f"vehicle {self.id}: speed must be positive")
        if not self.battery_time_s > 0:
            raise ValueError(f"vehicle {self.id}: battery time must be positive")


@dataclass(frozen=True)
class VehicleState:
    position_xyz: tuple[float, float, float]
    yaw_rad: float = 0.0
    pitch_rad: float = 0.0

    def __post_init__(self):
        if not -math.pi < self.yaw_rad <= math.pi:
            raise ValueError("yaw must lie in (-pi, pi]")
        if not -math.pi / 2 <= self.pitch_rad <= math.pi / 2:
            raise ValueError("pitch must lie in [-pi/2, pi/2]")


def heading_to(a: Point, b: Point) -> tuple[float, float]:
    """Yaw and pitch of the straight leg from ``a`` to ``b``.

    z points down, so a climb (negative dz) gives positive pitch.
    """
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    dz = b[2] - a[2]
    if dx == 0 and dy == 0 and dz == 0:
        raise ValueError("heading undefined between coincident points")
    yaw = math.atan2(dy, dx)
    if yaw == -math.pi:
        yaw = math.pi
    pitch = math.atan2(-dz, math.hypot(dx, dy))
    return yaw, pitch


def segment_distance(a: Point, b: Point) -> float:
    return math.sqrt((b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2 + (b[2] - a[2]) ** 2)


def segment_time(a: Point, b: Point, speed: float) -> float:
    if not speed > 0:
        raise ValueError("speed must be positive")
    return segment_distance(a, b) / speed
