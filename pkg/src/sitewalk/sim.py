"""Kinematic simulation of the quadruped and its onboard 360 camera.

The robot follows mission waypoints at constant speed with instantaneous
heading changes at corners, dwells at each capture waypoint, and localizes
every step against the nearest visible fiducial. Fiducials are observed at
their physically mounted orientation (modeled heading plus the per-marker
orientation error), while pose recovery uses the modeled heading, so
marker placement error propagates into the estimate exactly as it would
on site. With no fiducial in view the estimate dead-reckons on commanded
motion and the telemetry is flagged degraded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

from . import localization, panorama
from .errors import SimulationInvariantError
from .frames import Pose2D
from .localization import observe_from, pose_from_fiducial, visible_fiducials
from .model import BuildingModel, WalkableRegion, extract_walkable_region
from .planner import Mission

DEFAULT_DT = 0.05


class Phase(str, Enum):
    MOVING = "moving"
    DWELLING = "dwelling"
    DONE = "done"


@dataclass(frozen=True)
class SimState:
    true_pose: Pose2D
    estimated_pose: Pose2D
    waypoint_index: int
    elapsed: float
    phase: Phase
    dwell_remaining: float = 0.0
    localization_degraded: bool = False


@dataclass
class Capture:
    capture_id: str
    mission_id: str
    drp_id: str
    pose_at_capture: Pose2D
    timestamp: float
    payload: bytes

    def payload_sha256(self) -> str:
        import hashlib
        return hashlib.sha256(self.payload).hexdigest()


@dataclass(frozen=True)
class TelemetrySample:
    t: float
    pose: Pose2D
    degraded: bool
    waypoint_index: int
    drps_done: int


@dataclass
class MissionLog:
    mission_id: str
    seed: int
    captures: list[Capture] = field(default_factory=list)
    telemetry: list[TelemetrySample] = field(default_factory=list)
    total_time: float = 0.0
    distance_travelled: float = 0.0
    max_localization_error: float = 0.0

    def to_json(self) -> str:
        """Canonical serialization; identical logs give identical bytes."""
        doc = {
            "mission_id": self.mission_id,
            "seed": self.seed,
            "total_time": repr(self.total_time),
            "distance_travelled": repr(self.distance_travelled),
            "max_localization_error": repr(self.max_localization_error),
            "captures": [
                {
                    "capture_id": c.capture_id,
                    "drp_id": c.drp_id,
                    "pose": [repr(c.pose_at_capture.x), repr(c.pose_at_capture.y),
                             repr(c.pose_at_capture.theta)],
                    "timestamp": repr(c.timestamp),
                    "payload_sha256": c.payload_sha256(),
                }
                for c in self.captures
            ],
            "telemetry": [
                [repr(s.t), repr(s.pose.x), repr(s.pose.y), repr(s.pose.theta),
                 s.degraded, s.waypoint_index, s.drps_done]
                for s in self.telemetry
            ],
        }
        return json.dumps(doc, separators=(",", ":"))


def capture_panorama(mission_id: str, drp_id: str, pose: Pose2D) -> Capture:
    """Produce the deterministic synthetic capture for one point."""
    payload = panorama.render_panorama(mission_id, drp_id, pose.x, pose.y,
                                       pose.theta)
    return Capture(
        capture_id=f"{mission_id}:{drp_id}",
        mission_id=mission_id,
        drp_id=drp_id,
        pose_at_capture=pose,
        timestamp=0.0,
        payload=payload,
    )


class Simulator:
    """Steps one mission to completion over a building model.

    `seed` is carried into the log for reproducibility bookkeeping; the
    nominal simulation has no stochastic terms (localization error comes
    from fiducial placement, not sensor noise).
    """

    def __init__(self, mission: Mission, model: BuildingModel, seed: int = 0,
                 dt: float = DEFAULT_DT,
                 visibility_range: float = localization.DEFAULT_VISIBILITY_RANGE,
                 region: WalkableRegion | None = None):
        if not mission.waypoints:
            raise ValueError("mission has no waypoints")
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.mission = mission
        self.model = model
        self.seed = seed
        self.dt = dt
        self.visibility_range = visibility_range
        self.region = region if region is not None else extract_walkable_region(model)
        self.log = MissionLog(mission_id=mission.mission_id, seed=seed)
        self._fiducial_actual = {
            f.id: Pose2D(f.pose.x, f.pose.y, f.pose.theta + f.orientation_error)
            for f in model.fiducials
        }

        first = mission.waypoints[0]
        heading = 0.0
        if len(mission.waypoints) > 1:
            nxt = mission.waypoints[1]
            if (nxt.x, nxt.y) != (first.x, first.y):
                heading = math.atan2(nxt.y - first.y, nxt.x - first.x)
        true_pose = Pose2D(first.x, first.y, heading)
        estimated, degraded = self._localize(true_pose, true_pose)

        # the robot spawns on waypoint 0: consume it up front so no step is
        # spent arriving at the start
        if first.is_drp:
            waypoint_index, phase = 0, Phase.DWELLING
            dwell_remaining = mission.dwell
        else:
            waypoint_index, phase, dwell_remaining = 1, Phase.MOVING, 0.0
            if waypoint_index >= len(mission.waypoints):
                phase = Phase.DONE

        self.state = SimState(
            true_pose=true_pose,
            estimated_pose=estimated,
            waypoint_index=waypoint_index,
            elapsed=0.0,
            phase=phase,
            dwell_remaining=dwell_remaining,
            localization_degraded=degraded,
        )
        self._record_telemetry()

    # -- localization ----------------------------------------------------

    def _localize(self, true_pose: Pose2D,
                  dead_reckoned: Pose2D) -> tuple[Pose2D, bool]:
        seen = visible_fiducials(true_pose, self.model, self.visibility_range)
        if not seen:
            return dead_reckoned, True
        fid = self.model.fiducial_by_id(seen[0])
        obs = observe_from(true_pose, fid.id, self._fiducial_actual[fid.id])
        return pose_from_fiducial(obs, fid.pose), False

    # -- stepping --------------------------------------------------------

    def step(self) -> SimState:
        """Advance one dt. Raises SimulationInvariantError if the robot
        somehow leaves the walkable region."""
        s = self.state
        if s.phase == Phase.DONE:
            return s

        true_pose = s.true_pose
        waypoint_index = s.waypoint_index
        phase = s.phase
        dwell_remaining = s.dwell_remaining
        moved = 0.0

        if phase == Phase.MOVING:
            target = self.mission.waypoints[waypoint_index]
            dx = target.x - true_pose.x
            dy = target.y - true_pose.y
            dist = math.hypot(dx, dy)
            advance = self.mission.speed * self.dt
            if dist > 1e-12:
                heading = math.atan2(dy, dx)
                if advance >= dist:
                    true_pose = Pose2D(target.x, target.y, heading)
                    moved = dist
                else:
                    true_pose = Pose2D(true_pose.x + dx / dist * advance,
                                       true_pose.y + dy / dist * advance,
                                       heading)
                    moved = advance
            arrived = math.hypot(target.x - true_pose.x,
                                 target.y - true_pose.y) <= 1e-12
            if arrived:
                if target.is_drp:
                    phase = Phase.DWELLING
                    dwell_remaining = self.mission.dwell
                else:
                    waypoint_index += 1
                    if waypoint_index >= len(self.mission.waypoints):
                        phase = Phase.DONE
        elif phase == Phase.DWELLING:
            dwell_remaining -= self.dt
            if dwell_remaining <= 1e-12:
                dwell_remaining = 0.0
                self._fire_capture(s)
                waypoint_index += 1
                phase = (Phase.DONE if waypoint_index >= len(self.mission.waypoints)
                         else Phase.MOVING)

        elapsed = s.elapsed + self.dt
        dead_reckoned = Pose2D(
            s.estimated_pose.x + (true_pose.x - s.true_pose.x),
            s.estimated_pose.y + (true_pose.y - s.true_pose.y),
            true_pose.theta,
        )
        estimated, degraded = self._localize(true_pose, dead_reckoned)

        if not self.region.contains(true_pose.x, true_pose.y):
            raise SimulationInvariantError(
                f"robot left the walkable region at "
                f"({true_pose.x:.3f}, {true_pose.y:.3f})")

        self.log.distance_travelled += moved
        err = estimated.distance_to(true_pose)
        if err > self.log.max_localization_error:
            self.log.max_localization_error = err

        self.state = SimState(
            true_pose=true_pose,
            estimated_pose=estimated,
            waypoint_index=waypoint_index,
            elapsed=elapsed,
            phase=phase,
            dwell_remaining=dwell_remaining,
            localization_degraded=degraded,
        )
        self._record_telemetry()
        return self.state

    def _fire_capture(self, s: SimState) -> None:
        target = self.mission.waypoints[s.waypoint_index]
        cap = capture_panorama(self.mission.mission_id, target.drp_id or "",
                               s.estimated_pose)
        cap.timestamp = s.elapsed
        self.log.captures.append(cap)

    def _record_telemetry(self) -> None:
        s = self.state
        self.log.telemetry.append(TelemetrySample(
            t=s.elapsed,
            pose=s.estimated_pose,
            degraded=s.localization_degraded,
            waypoint_index=s.waypoint_index,
            drps_done=len(self.log.captures),
        ))
        self.log.total_time = s.elapsed

    def run(self, max_time: float | None = None) -> Iterator[SimState]:
        """Step to completion, yielding each state."""
        while self.state.phase != Phase.DONE:
            if max_time is not None and self.state.elapsed > max_time:
                raise SimulationInvariantError(
                    f"mission exceeded time budget {max_time:.1f} s")
            yield self.step()


def step(state: SimState, mission: Mission, model: BuildingModel,
         dt: float) -> SimState:
    """Single-shot stepping from an arbitrary state; thin wrapper over
    Simulator for callers that manage state themselves."""
    sim = Simulator(mission, model, dt=dt)
    sim.state = state
    return sim.step()


def execute_mission(mission: Mission, model: BuildingModel, seed: int = 0,
                    dt: float = DEFAULT_DT,
                    visibility_range: float = localization.DEFAULT_VISIBILITY_RANGE,
                    on_step: Callable[[SimState], None] | None = None,
                    max_time: float | None = None) -> MissionLog:
    """Run a mission start to finish and return the full log."""
    sim = Simulator(mission, model, seed=seed, dt=dt,
                    visibility_range=visibility_range)
    for state in sim.run(max_time=max_time):
        if on_step is not None:
            on_step(state)
    return sim.log
