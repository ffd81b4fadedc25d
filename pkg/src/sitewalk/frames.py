"""2D rigid-body poses and transforms.

A Pose2D doubles as the transform from its local frame into the frame it is
expressed in: rotate by theta, then translate by (x, y). Headings are kept
normalized in (-pi, pi] at every construction site so equality checks behave.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def compose(self, other: "Pose2D") -> "Pose2D":
        """Pose of `other` (given in this pose's frame) in the outer frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def inverse(self) -> "Pose2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            -(c * self.x + s * self.y),
            -(-s * self.x + c * self.y),
            -self.theta,
        )

    def transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map a point from this pose's local frame into the outer frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.x + c * px - s * py, self.y + s * px + c * py)

    def inverse_transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map an outer-frame point into this pose's local frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dy = px - self.x, py - self.y
        return (c * dx + s * dy, -s * dx + c * dy)

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Transform2D:
    """Explicit rotation + translation, for callers that want transform
    algebra without pose semantics."""

    rotation: float
    dx: float
    dy: float

    def __post_init__(self):
        object.__setattr__(self, "rotation", normalize_angle(self.rotation))

    @classmethod
    def from_pose(cls, pose: Pose2D) -> "Transform2D":
        return cls(pose.theta, pose.x, pose.y)

    def as_pose(self) -> Pose2D:
        return Pose2D(self.dx, self.dy, self.rotation)

    def compose(self, other: "Transform2D") -> "Transform2D":
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return Transform2D(
            self.rotation + other.rotation,
            self.dx + c * other.dx - s * other.dy,
            self.dy + s * other.dx + c * other.dy,
        )

    def inverse(self) -> "Transform2D":
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return Transform2D(
            -self.rotation,
            -(c * self.dx + s * self.dy),
            -(-s * self.dx + c * self.dy),
        )

    def apply(self, px: float, py: float) -> tuple[float, float]:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return (self.dx + c * px - s * py, self.dy + s * px + c * py)
