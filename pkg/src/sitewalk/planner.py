"""Capture-point tour ordering and mission assembly.

Ordering is greedy nearest-next by walkable (grid geodesic) distance, not
straight-line distance, so a point behind a wall is never preferred over a
genuinely closer one. Ties break by capture-point id. The composed mission
is the concatenation of the shortest walkable legs with capture waypoints
flagged in place.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import MissionParseError, NoPathError
from .frames import Pose2D
from .nav import NavGrid, grid_distances_from, shortest_path

DEFAULT_SPEED_MPS = 0.4
DEFAULT_DWELL_S = 20.667


@dataclass(frozen=True)
class DRP:
    """A user-chosen capture location."""

    id: str
    position: tuple[float, float]


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    is_drp: bool = False
    drp_id: str | None = None


@dataclass(frozen=True)
class Mission:
    mission_id: str
    created_at: str
    speed: float
    dwell: float
    waypoints: tuple[Waypoint, ...]

    @property
    def length(self) -> float:
        total = 0.0
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            total += math.hypot(b.x - a.x, b.y - a.y)
        return total

    @property
    def drp_ids(self) -> list[str]:
        return [w.drp_id for w in self.waypoints if w.is_drp]

    def estimated_duration(self) -> float:
        return self.length / self.speed + len(self.drp_ids) * self.dwell


def order_drps_greedy(grid: NavGrid, robot_position: tuple[float, float],
                      drps: list[DRP]) -> list[DRP]:
    """Visit order: repeatedly take the unvisited point with the smallest
    walkable distance from the current position."""
    if not drps:
        return []
    current = grid.snap_point(*robot_position)
    cells = {drp.id: grid.snap_point(*drp.position) for drp in drps}
    remaining = {drp.id: drp for drp in drps}
    order: list[DRP] = []
    while remaining:
        goals = {cells[drp_id] for drp_id in remaining}
        dists = grid_distances_from(grid, current, goals)
        best: tuple[float, str] | None = None
        for drp_id in remaining:
            cell = cells[drp_id]
            if cell not in dists:
                unreachable = sorted(
                    d for d in remaining if cells[d] not in dists)
                raise NoPathError(
                    f"capture point {unreachable[0]!r} is unreachable",
                    drp_id=unreachable[0])
            key = (dists[cell], drp_id)
            if best is None or key < best:
                best = key
        chosen = remaining.pop(best[1])
        order.append(chosen)
        current = cells[chosen.id]
    return order


def compose_mission(grid: NavGrid, robot_pose: Pose2D, drps: list[DRP],
                    speed: float = DEFAULT_SPEED_MPS,
                    dwell: float = DEFAULT_DWELL_S,
                    mission_id: str | None = None,
                    created_at: str | None = None) -> Mission:
    """Plan the full tour and package it as an executable mission."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    if dwell < 0:
        raise ValueError("dwell must be nonnegative")

    start = (robot_pose.x, robot_pose.y)
    if not drps:
        cell = grid.snap_point(*start)
        waypoints = (Waypoint(*grid.cell_center(*cell)),)
    else:
        order = order_drps_greedy(grid, start, drps)
        waypoints_list: list[Waypoint] = []
        position = start
        for drp in order:
            leg = shortest_path(grid, position, drp.position)
            pts = list(leg.waypoints)
            if waypoints_list:
                pts = pts[1:]  # joint point already emitted by the last leg
            for x, y in pts[:-1]:
                waypoints_list.append(Waypoint(x, y))
            end = pts[-1] if pts else leg.waypoints[-1]
            waypoints_list.append(Waypoint(end[0], end[1], True, drp.id))
            position = drp.position
        waypoints = tuple(waypoints_list)

    if mission_id is None:
        mission_id = _derive_mission_id(waypoints, speed, dwell)
    if created_at is None:
        created_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return Mission(mission_id=mission_id, created_at=created_at,
                   speed=speed, dwell=dwell, waypoints=waypoints)


def _derive_mission_id(waypoints: tuple[Waypoint, ...], speed: float,
                       dwell: float) -> str:
    digest = hashlib.sha256()
    digest.update(f"{speed:.6f}|{dwell:.6f}".encode())
    for w in waypoints:
        digest.update(f"|{w.x:.6f},{w.y:.6f},{w.is_drp},{w.drp_id}".encode())
    return "m-" + digest.hexdigest()[:12]


def serialize_mission(mission: Mission) -> str:
    """Render the wire document with fixed key order and 6-decimal floats,
    so identical missions serialize to identical bytes."""
    parts = []
    for w in mission.waypoints:
        parts.append(
            '{"x": %.6f, "y": %.6f, "is_drp": %s, "drp_id": %s}'
            % (w.x, w.y, "true" if w.is_drp else "false", json.dumps(w.drp_id)))
    return (
        '{"mission_id": %s, "created_at": %s, "speed_mps": %.6f, '
        '"dwell_s": %.6f, "waypoints": [%s]}'
        % (json.dumps(mission.mission_id), json.dumps(mission.created_at),
           mission.speed, mission.dwell, ", ".join(parts)))


def parse_mission(document: str | bytes) -> Mission:
    """Parse and validate a mission wire document."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MissionParseError(f"not UTF-8: {exc}") from None
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MissionParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise MissionParseError("mission document must be an object")
    try:
        waypoints = tuple(
            Waypoint(float(w["x"]), float(w["y"]), bool(w["is_drp"]),
                     w.get("drp_id"))
            for w in raw["waypoints"])
        mission = Mission(
            mission_id=str(raw["mission_id"]),
            created_at=str(raw["created_at"]),
            speed=float(raw["speed_mps"]),
            dwell=float(raw["dwell_s"]),
            waypoints=waypoints)
    except (KeyError, TypeError, ValueError) as exc:
        raise MissionParseError(f"bad mission field: {exc}") from None
    if not mission.waypoints:
        raise MissionParseError("mission needs at least one waypoint")
    for w in mission.waypoints:
        if w.is_drp and not w.drp_id:
            raise MissionParseError("capture waypoint missing drp_id")
    if mission.speed <= 0:
        raise MissionParseError("speed_mps must be positive")
    if mission.dwell < 0:
        raise MissionParseError("dwell_s must be nonnegative")
    return mission


def load_drp_list(document: str | bytes) -> list[DRP]:
    """Parse the capture-point fixture format: a JSON list of {id, x, y}."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MissionParseError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise MissionParseError("capture-point file must be a JSON list")
    drps = []
    seen = set()
    for entry in raw:
        try:
            drp = DRP(str(entry["id"]), (float(entry["x"]), float(entry["y"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise MissionParseError(f"bad capture point: {exc}") from None
        if drp.id in seen:
            raise MissionParseError(f"duplicate capture point id {drp.id!r}")
        seen.add(drp.id)
        drps.append(drp)
    return drps
