"""Planar rigid-body poses and the handful of SE(2) operations the rest of
the package needs: composition, relative pose, and bearing to a point.

Angles are always kept in (-pi, pi]. Poses are immutable value objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoint

MIN_RANGE = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]. Angles already in range pass through exactly."""
    if -math.pi < theta <= math.pi:
        return theta
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


@dataclass(frozen=True)
class Pose2:
    """A planar pose (x, y, theta) with theta normalized to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @staticmethod
    def identity() -> "Pose2":
        return Pose2(0.0, 0.0, 0.0)

    @staticmethod
    def from_array(v) -> "Pose2":
        v = np.asarray(v, dtype=float)
        return Pose2(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Group composition a * b: apply b in the frame of a."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        wrap_angle(a.theta + b.theta),
    )


def inverse(p: Pose2) -> Pose2:
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose2(-(c * p.x + s * p.y), s * p.x - c * p.y, wrap_angle(-p.theta))


def between(a: Pose2, b: Pose2) -> Pose2:
    """Relative pose taking a to b, i.e. inverse(a) * b."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    dx, dy = b.x - a.x, b.y - a.y
    return Pose2(c * dx + s * dy, -s * dx + c * dy, wrap_angle(b.theta - a.theta))


def bearing(robot: Pose2, point) -> float:
    """Bearing angle from a robot pose to a 2D point, in the robot frame.

    Raises DegeneratePoint when the point is within MIN_RANGE of the robot.
    """
    px, py = float(point[0]), float(point[1])
    dx, dy = px - robot.x, py - robot.y
    if math.hypot(dx, dy) <= MIN_RANGE:
        raise DegeneratePoint(f"point ({px}, {py}) coincides with robot position")
    return wrap_angle(math.atan2(dy, dx) - robot.theta)
