"""Site-side controller: executes dispatched missions on the simulated
robot and uploads capture bundles.

One mission may be in flight at a time; a second dispatch is refused with
BUSY. Captures are buffered in memory for the whole mission and uploaded
as a single CAPTURE_BUNDLE once it completes, never piecemeal. Robot state
queries are answered at any time, including mid-mission, from the latest
simulation snapshot.
"""

from __future__ import annotations

import argparse
import asyncio
import datetime
import json
import logging
import sys
from dataclasses import dataclass
from enum import Enum

from . import localization, protocol
from .errors import MissionParseError, SimulationInvariantError
from .frames import Pose2D
from .localization import observe_from, pose_from_fiducial, visible_fiducials
from .model import BuildingModel, extract_walkable_region, load_building_model
from .planner import parse_mission
from .protocol import Envelope
from .sim import Phase, Simulator

log = logging.getLogger("sitewalk.middleware")


class MiddlewareState(str, Enum):
    IDLE = "idle"
    EXECUTING = "executing"
    UPLOADING = "uploading"


@dataclass
class MiddlewareConfig:
    relay_host: str
    relay_port: int
    token: str
    project_id: str
    model_path: str
    spawn: Pose2D | None = None  # default: pose of the first fiducial
    dt: float = 0.05
    progress_interval: float = 0.2  # simulated seconds between PROGRESS
    realtime_factor: float = 0.0  # 0 = run unpaced; N = N x real time
    visibility_range: float = localization.DEFAULT_VISIBILITY_RANGE
    inspection_date: str | None = None  # default: today (UTC)
    timeout_factor: float = 3.0
    seed: int = 0

    @classmethod
    def from_file(cls, path: str) -> "MiddlewareConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        relay = doc["relay"]
        host, _, port = relay.rpartition(":")
        spawn = None
        if "spawn" in doc:
            spawn = Pose2D(doc["spawn"]["x"], doc["spawn"]["y"],
                           doc["spawn"].get("theta", 0.0))
        return cls(
            relay_host=host or "127.0.0.1",
            relay_port=int(port),
            token=doc["token"],
            project_id=doc["project_id"],
            model_path=doc["model"],
            spawn=spawn,
            dt=doc.get("dt", 0.05),
            progress_interval=doc.get("progress_interval", 0.2),
            realtime_factor=doc.get("realtime_factor", 0.0),
            visibility_range=doc.get("visibility_range",
                                     localization.DEFAULT_VISIBILITY_RANGE),
            inspection_date=doc.get("inspection_date"),
            timeout_factor=doc.get("timeout_factor", 3.0),
            seed=doc.get("seed", 0),
        )


class MiddlewareApp:
    def __init__(self, config: MiddlewareConfig,
                 model: BuildingModel | None = None):
        self.config = config
        if model is None:
            with open(config.model_path, "rb") as fh:
                model = load_building_model(fh.read())
        self.model = model
        self.region = extract_walkable_region(model)
        self.state = MiddlewareState.IDLE
        self.current_mission_id: str | None = None
        self._pose_snapshot = self._idle_snapshot()
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._exec_task: asyncio.Task | None = None
        self._connected = asyncio.Event()

    # -- localization snapshot --------------------------------------------

    def _idle_snapshot(self) -> dict:
        spawn = self.config.spawn
        if spawn is None:
            if not self.model.fiducials:
                raise ValueError("model has no fiducials and no spawn configured")
            spawn = self.model.fiducials[0].pose
        estimated, degraded = self._localize(spawn)
        return {"x": estimated.x, "y": estimated.y, "theta": estimated.theta,
                "degraded": degraded, "t": 0.0}

    def _localize(self, true_pose: Pose2D) -> tuple[Pose2D, bool]:
        seen = visible_fiducials(true_pose, self.model,
                                 self.config.visibility_range)
        if not seen:
            return true_pose, True
        fid = self.model.fiducial_by_id(seen[0])
        actual = Pose2D(fid.pose.x, fid.pose.y,
                        fid.pose.theta + fid.orientation_error)
        obs = observe_from(true_pose, fid.id, actual)
        return pose_from_fiducial(obs, fid.pose), False

    # -- relay session ------------------------------------------------------

    async def run(self) -> None:
        reader, writer = await asyncio.open_connection(
            self.config.relay_host, self.config.relay_port)
        self._reader, self._writer = reader, writer
        hello = protocol.make_envelope(
            protocol.HELLO, protocol.ROLE_MIDDLEWARE, self.config.project_id,
            body={"token": self.config.token})
        await protocol.write_frame(writer, hello.to_bytes())
        raw = await protocol.read_frame(reader)
        if raw is None:
            raise ConnectionError("relay closed during handshake")
        ack = Envelope.from_bytes(raw)
        if ack.type != protocol.HELLO_ACK:
            code = ack.body.get("code", "?")
            raise ConnectionError(f"relay refused session: {code}")
        log.info("connected to relay as middleware/%s", self.config.project_id)
        self._connected.set()

        while True:
            raw = await protocol.read_frame(reader)
            if raw is None:
                break
            envelope = Envelope.from_bytes(raw)
            await self._handle(envelope)

    async def _handle(self, envelope: Envelope) -> None:
        if envelope.type == protocol.ROBOT_STATE_REQUEST:
            await self._send(protocol.ROBOT_STATE, dict(self._pose_snapshot),
                             correlation_id=envelope.message_id)
        elif envelope.type == protocol.MISSION_DISPATCH:
            await self._handle_dispatch(envelope)
        elif envelope.type == protocol.ERROR:
            log.warning("relay error: %s", envelope.body)
        else:
            log.info("ignoring %s", envelope.type)

    async def _handle_dispatch(self, envelope: Envelope) -> None:
        if self.state != MiddlewareState.IDLE:
            await self._send_error(protocol.BUSY,
                                   "mission already executing",
                                   envelope.message_id)
            return
        doc = envelope.body.get("mission_doc")
        try:
            if not isinstance(doc, str):
                raise MissionParseError("dispatch body needs mission_doc string")
            mission = parse_mission(doc)
        except MissionParseError as exc:
            await self._send_error(protocol.MISSION_PARSE, str(exc),
                                   envelope.message_id)
            return
        self.state = MiddlewareState.EXECUTING
        self.current_mission_id = mission.mission_id
        await self._send(protocol.MISSION_ACK,
                         {"mission_id": mission.mission_id},
                         correlation_id=envelope.message_id)
        self._exec_task = asyncio.ensure_future(
            self._execute(mission, envelope.message_id))

    async def _execute(self, mission, dispatch_id: str) -> None:
        try:
            sim = Simulator(mission, self.model, seed=self.config.seed,
                            dt=self.config.dt,
                            visibility_range=self.config.visibility_range,
                            region=self.region)
            budget = max(self.config.timeout_factor * mission.estimated_duration(),
                         10.0)
            next_progress = 0.0
            # unpaced runs batch progress frames into fewer larger writes
            batch: list[bytes] = []
            batch_limit = 1 if self.config.realtime_factor > 0 else 64
            for state in sim.run(max_time=budget):
                self._pose_snapshot = {
                    "x": state.estimated_pose.x,
                    "y": state.estimated_pose.y,
                    "theta": state.estimated_pose.theta,
                    "degraded": state.localization_degraded,
                    "t": state.elapsed,
                }
                if state.elapsed >= next_progress or state.phase == Phase.DONE:
                    next_progress = state.elapsed + self.config.progress_interval
                    envelope = protocol.make_envelope(
                        protocol.MISSION_PROGRESS, protocol.ROLE_MIDDLEWARE,
                        self.config.project_id, body={
                            "mission_id": mission.mission_id,
                            "t": state.elapsed,
                            "x": state.estimated_pose.x,
                            "y": state.estimated_pose.y,
                            "theta": state.estimated_pose.theta,
                            "degraded": state.localization_degraded,
                            "waypoint_index": state.waypoint_index,
                            "n_waypoints": len(mission.waypoints),
                            "drps_done": len(sim.log.captures),
                            "n_drps": len(mission.drp_ids),
                            "phase": state.phase.value,
                        }, correlation_id=dispatch_id)
                    batch.append(protocol.frame_bytes(envelope.to_bytes()))
                    if len(batch) >= batch_limit or state.phase == Phase.DONE:
                        await self._flush(batch)
                    if self.config.realtime_factor > 0:
                        await asyncio.sleep(self.config.progress_interval
                                            / self.config.realtime_factor)
                    else:
                        await asyncio.sleep(0)
            await self._flush(batch)

            self.state = MiddlewareState.UPLOADING
            date = self.config.inspection_date or (
                datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%d"))
            captures = [protocol.capture_to_wire(c, i)
                        for i, c in enumerate(sim.log.captures)]
            await self._send(protocol.CAPTURE_BUNDLE, {
                "mission_id": mission.mission_id,
                "inspection_date": date,
                "captures": captures,
                "total_time": sim.log.total_time,
                "distance_travelled": sim.log.distance_travelled,
                "max_localization_error": sim.log.max_localization_error,
            }, correlation_id=dispatch_id)
            log.info("mission %s complete: %d captures in %.1f s simulated",
                     mission.mission_id, len(captures), sim.log.total_time)
        except SimulationInvariantError as exc:
            await self._send_error(protocol.EXECUTION, str(exc), dispatch_id)
        except asyncio.CancelledError:
            raise
        except Exception as exc:  # report, never wedge the session
            log.exception("mission execution failed")
            await self._send_error(protocol.EXECUTION, str(exc), dispatch_id)
        finally:
            self.state = MiddlewareState.IDLE
            self.current_mission_id = None

    async def _flush(self, batch: list[bytes]) -> None:
        if not batch or self._writer is None:
            batch.clear()
            return
        self._writer.write(b"".join(batch))
        batch.clear()
        await self._writer.drain()

    async def _send(self, env_type: str, body: dict,
                    correlation_id: str | None = None) -> None:
        if self._writer is None:
            return
        envelope = protocol.make_envelope(
            env_type, protocol.ROLE_MIDDLEWARE, self.config.project_id,
            body=body, correlation_id=correlation_id)
        await protocol.write_frame(self._writer, envelope.to_bytes())

    async def _send_error(self, code: str, detail: str,
                          correlation_id: str | None) -> None:
        await self._send(protocol.ERROR, {"code": code, "detail": detail},
                         correlation_id=correlation_id)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sitewalk-middleware",
        description="Site-side mission executor for the simulated robot")
    parser.add_argument("--config", required=True, help="JSON config file")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(message)s")
    config = MiddlewareConfig.from_file(args.config)
    app = MiddlewareApp(config)
    try:
        asyncio.run(app.run())
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
