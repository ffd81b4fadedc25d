"""Fiducial-based localization: pose recovery from marker observations,
waypoint transforms into the robot frame, visibility and coverage checks,
and the marker-placement error model.

The robot localizes against the single nearest visible fiducial; there is
no multi-marker fusion. Visibility means within range and with a sight
line that crosses no wall or furniture footprint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from . import geometry
from .frames import Pose2D
from .model import BuildingModel

DEFAULT_VISIBILITY_RANGE = 8.0
DEFAULT_SAMPLE_STEP = 0.25


@lru_cache(maxsize=8)
def _sight_blockers(model: BuildingModel):
    """Blocking footprints with precomputed bboxes, cached per model."""
    return tuple((geometry.polygon_bounds(e.footprint), e.footprint)
                 for e in model.blocking_elements())


@dataclass(frozen=True)
class FiducialObservation:
    """Robot pose expressed in one fiducial's frame, plus the sensed range."""

    fiducial_id: str
    relative_pose: Pose2D
    range: float

    @classmethod
    def from_relative_pose(cls, fiducial_id: str, relative_pose: Pose2D
                           ) -> "FiducialObservation":
        return cls(fiducial_id, relative_pose,
                   math.hypot(relative_pose.x, relative_pose.y))


@dataclass(frozen=True)
class CoverageReport:
    covered: bool
    gaps: tuple[tuple[float, float], ...]
    max_gap_distance: float


def pose_from_fiducial(obs: FiducialObservation, fiducial_world: Pose2D) -> Pose2D:
    """World pose of the robot given its pose relative to a known fiducial."""
    return fiducial_world.compose(obs.relative_pose)


def observe_from(true_pose: Pose2D, fiducial_id: str,
                 fiducial_actual: Pose2D) -> FiducialObservation:
    """Simulate the marker detector: express `true_pose` in the frame of the
    fiducial as it is physically mounted (which may differ from the model)."""
    relative = fiducial_actual.inverse().compose(true_pose)
    return FiducialObservation.from_relative_pose(fiducial_id, relative)


def waypoint_to_robot_frame(waypoint: tuple[float, float],
                            robot_world: Pose2D) -> tuple[float, float]:
    """Vector from the robot to a waypoint, in the robot's own frame."""
    return robot_world.inverse_transform_point(waypoint[0], waypoint[1])


def visible_fiducials(pose: Pose2D, model: BuildingModel,
                      visibility_range: float = DEFAULT_VISIBILITY_RANGE
                      ) -> list[str]:
    """Ids of fiducials in range with a clear sight line, nearest first.

    Ties in distance break by id so the result is order-deterministic.
    """
    if visibility_range <= 0:
        raise ValueError("visibility_range must be positive")
    blockers = _sight_blockers(model)
    hits: list[tuple[float, str]] = []
    for fid in model.fiducials:
        dist = math.hypot(fid.pose.x - pose.x, fid.pose.y - pose.y)
        if dist > visibility_range:
            continue
        p1, p2 = (pose.x, pose.y), (fid.pose.x, fid.pose.y)
        if any(geometry.segment_crosses_polygon(p1, p2, poly, bounds)
               for bounds, poly in blockers):
            continue
        hits.append((dist, fid.id))
    hits.sort()
    return [fid_id for _, fid_id in hits]


def validate_fiducial_coverage(path_waypoints: list[tuple[float, float]],
                               model: BuildingModel,
                               visibility_range: float = DEFAULT_VISIBILITY_RANGE,
                               sample_step: float = DEFAULT_SAMPLE_STEP
                               ) -> CoverageReport:
    """Walk the path at `sample_step` arc-length increments and report the
    maximal intervals where no fiducial is visible."""
    if sample_step <= 0:
        raise ValueError("sample_step must be positive")

    samples: list[tuple[float, float, float]] = []  # (arc length, x, y)
    if not path_waypoints:
        return CoverageReport(covered=True, gaps=(), max_gap_distance=0.0)
    arc = 0.0
    samples.append((0.0, path_waypoints[0][0], path_waypoints[0][1]))
    for (x1, y1), (x2, y2) in zip(path_waypoints, path_waypoints[1:]):
        seg_len = math.hypot(x2 - x1, y2 - y1)
        if seg_len == 0.0:
            continue
        n = max(1, math.ceil(seg_len / sample_step))
        for i in range(1, n + 1):
            t = i / n
            samples.append((arc + t * seg_len,
                            x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
        arc += seg_len

    gaps: list[tuple[float, float]] = []
    gap_start: float | None = None
    last_s = 0.0
    for s, x, y in samples:
        seen = bool(visible_fiducials(Pose2D(x, y, 0.0), model, visibility_range))
        if seen:
            if gap_start is not None:
                gaps.append((gap_start, s))
                gap_start = None
        else:
            if gap_start is None:
                gap_start = s
        last_s = s
    if gap_start is not None:
        gaps.append((gap_start, last_s))

    max_gap = max((b - a for a, b in gaps), default=0.0)
    return CoverageReport(covered=not gaps, gaps=tuple(gaps),
                          max_gap_distance=max_gap)


def placement_error_deviation(distance: float, orientation_error: float) -> float:
    """Positional error of a pose at `distance` from a fiducial whose frame
    is rotated by `orientation_error`: the chord 2 * d * sin(|e| / 2)."""
    if distance < 0:
        raise ValueError("distance must be nonnegative")
    return 2.0 * distance * math.sin(abs(orientation_error) / 2.0)
