"""Client-side core: plans missions locally, dispatches them through the
relay, tracks progress, and reassembles returned captures in path order.

Planning happens on the client, mirroring the division of labor where the
operator interface computes the tour and the site middleware only executes
it. All durable state lives in the relay; this module keeps only a live
SessionView snapshot.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from . import localization, nav, protocol
from .errors import (BusyError, ExecutionError, MissionTimeout,
                     RelayProtocolError)
from .frames import Pose2D
from .model import (DEFAULT_ROBOT_RADIUS, BuildingModel,
                    extract_walkable_region)
from .planner import (DRP, Mission, compose_mission, serialize_mission)
from .protocol import Envelope

log = logging.getLogger("sitewalk.client")

DEFAULT_STATE_TIMEOUT = 10.0
SUBSCRIBER_QUEUE_LIMIT = 1024


@dataclass
class InspectionRecord:
    """One mission's captures for one date, in path order."""

    project_id: str
    inspection_date: str
    mission_id: str
    captures: list[dict[str, Any]] = field(default_factory=list)

    @classmethod
    def from_wire(cls, record: dict[str, Any]) -> "InspectionRecord":
        captures = sorted(record.get("captures", []),
                          key=lambda c: c.get("order_index", 0))
        return cls(project_id=record["project_id"],
                   inspection_date=record["inspection_date"],
                   mission_id=record["mission_id"],
                   captures=captures)

    @property
    def drp_ids(self) -> list[str]:
        return [c["drp_id"] for c in self.captures]


@dataclass
class SessionView:
    """Live snapshot the operator console renders from."""

    robot_pose: dict[str, Any] | None = None  # x, y, theta, degraded, t
    robot_pose_at: float | None = None  # wall-clock freshness
    active_mission: dict[str, Any] | None = None  # id + progress counters
    last_result: InspectionRecord | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "robot_pose": self.robot_pose,
            "robot_pose_at": self.robot_pose_at,
            "active_mission": self.active_mission,
            "last_result": None if self.last_result is None else {
                "mission_id": self.last_result.mission_id,
                "inspection_date": self.last_result.inspection_date,
                "drp_ids": self.last_result.drp_ids,
            },
        }


class PlanContext:
    """Model + walkable region + grid, reused across plans."""

    def __init__(self, model: BuildingModel,
                 robot_radius: float = DEFAULT_ROBOT_RADIUS,
                 cell_size: float = nav.DEFAULT_CELL_SIZE):
        self.model = model
        self.region = extract_walkable_region(model, robot_radius)
        self.grid = nav.build_nav_grid(self.region, cell_size)

    def default_start(self) -> Pose2D:
        """Spawn next to the first fiducial, where the robot can localize."""
        if self.model.fiducials:
            return self.model.fiducials[0].pose
        x0, y0, x1, y1 = self.region.bounds
        return Pose2D((x0 + x1) / 2.0, (y0 + y1) / 2.0, 0.0)

    def plan(self, drps: list[DRP], robot_pose: Pose2D | None = None,
             speed: float | None = None, dwell: float | None = None,
             mission_id: str | None = None,
             created_at: str | None = None) -> Mission:
        pose = robot_pose if robot_pose is not None else self.default_start()
        kwargs: dict[str, Any] = {}
        if speed is not None:
            kwargs["speed"] = speed
        if dwell is not None:
            kwargs["dwell"] = dwell
        return compose_mission(self.grid, pose, drps,
                               mission_id=mission_id, created_at=created_at,
                               **kwargs)

    def coverage(self, mission: Mission,
                 visibility_range: float = localization.DEFAULT_VISIBILITY_RANGE):
        waypoints = [(w.x, w.y) for w in mission.waypoints]
        return localization.validate_fiducial_coverage(
            waypoints, self.model, visibility_range)


class RelayClient:
    """One authenticated client session on the relay."""

    def __init__(self, host: str, port: int, token: str, project_id: str):
        self.host = host
        self.port = port
        self.token = token
        self.project_id = project_id
        self.session_view = SessionView()
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._read_task: asyncio.Task | None = None
        self._waiters: dict[str, asyncio.Queue] = {}
        self._subscribers: list[asyncio.Queue] = []
        self._closed = False

    # -- lifecycle ---------------------------------------------------------

    async def connect(self) -> None:
        self._reader, self._writer = await asyncio.open_connection(
            self.host, self.port)
        hello = protocol.make_envelope(
            protocol.HELLO, protocol.ROLE_CLIENT, self.project_id,
            body={"token": self.token})
        await protocol.write_frame(self._writer, hello.to_bytes())
        raw = await protocol.read_frame(self._reader)
        if raw is None:
            raise ConnectionError("relay closed during handshake")
        ack = Envelope.from_bytes(raw)
        if ack.type == protocol.ERROR:
            raise RelayProtocolError(ack.body.get("code", "UNAUTHORIZED"),
                                     ack.body.get("detail", ""))
        if ack.type != protocol.HELLO_ACK:
            raise RelayProtocolError("MALFORMED",
                                     f"unexpected handshake reply {ack.type}")
        self._read_task = asyncio.ensure_future(self._read_loop())

    async def close(self) -> None:
        self._closed = True
        if self._read_task is not None:
            self._read_task.cancel()
        if self._writer is not None:
            self._writer.close()

    # -- fan-out -------------------------------------------------------------

    def subscribe(self) -> asyncio.Queue:
        """Queue of every envelope this session receives (for event streams).

        Oldest entries are dropped if the consumer falls behind.
        """
        queue: asyncio.Queue = asyncio.Queue(maxsize=SUBSCRIBER_QUEUE_LIMIT)
        self._subscribers.append(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        if queue in self._subscribers:
            self._subscribers.remove(queue)

    async def _read_loop(self) -> None:
        assert self._reader is not None
        try:
            while True:
                raw = await protocol.read_frame(self._reader)
                if raw is None:
                    break
                envelope = Envelope.from_bytes(raw)
                self._track_session_view(envelope)
                if (envelope.correlation_id
                        and envelope.correlation_id in self._waiters):
                    self._waiters[envelope.correlation_id].put_nowait(envelope)
                for queue in list(self._subscribers):
                    if queue.full():
                        try:
                            queue.get_nowait()
                        except asyncio.QueueEmpty:
                            pass
                    queue.put_nowait(envelope)
        except asyncio.CancelledError:
            pass
        finally:
            for queue in self._waiters.values():
                queue.put_nowait(None)  # wake waiters so they fail fast

    def _track_session_view(self, envelope: Envelope) -> None:
        loop_time = asyncio.get_event_loop().time()
        if envelope.type == protocol.ROBOT_STATE:
            self.session_view.robot_pose = dict(envelope.body)
            self.session_view.robot_pose_at = loop_time
        elif envelope.type == protocol.MISSION_PROGRESS:
            body = envelope.body
            self.session_view.robot_pose = {
                "x": body.get("x"), "y": body.get("y"),
                "theta": body.get("theta"),
                "degraded": body.get("degraded", False),
                "t": body.get("t"),
            }
            self.session_view.robot_pose_at = loop_time
            self.session_view.active_mission = {
                "mission_id": body.get("mission_id"),
                "waypoint_index": body.get("waypoint_index"),
                "n_waypoints": body.get("n_waypoints"),
                "drps_done": body.get("drps_done"),
                "n_drps": body.get("n_drps"),
                "phase": body.get("phase"),
            }
        elif envelope.type == protocol.CAPTURE_BUNDLE:
            record = InspectionRecord.from_wire({
                "project_id": envelope.project_id,
                "inspection_date": envelope.body.get("inspection_date", ""),
                "mission_id": envelope.body.get("mission_id", ""),
                "captures": envelope.body.get("captures", []),
            })
            self.session_view.last_result = record
            self.session_view.active_mission = None

    # -- requests ------------------------------------------------------------

    async def _send(self, env_type: str, body: dict[str, Any]) -> Envelope:
        if self._writer is None:
            raise ConnectionError("not connected")
        envelope = protocol.make_envelope(
            env_type, protocol.ROLE_CLIENT, self.project_id, body=body)
        await protocol.write_frame(self._writer, envelope.to_bytes())
        return envelope

    async def request_robot_state(self,
                                  timeout: float = DEFAULT_STATE_TIMEOUT
                                  ) -> dict[str, Any]:
        sent = await self._send(protocol.ROBOT_STATE_REQUEST, {})
        queue: asyncio.Queue = asyncio.Queue()
        self._waiters[sent.message_id] = queue
        try:
            while True:
                reply = await asyncio.wait_for(queue.get(), timeout)
                if reply is None:
                    raise ConnectionError("relay session closed")
                if reply.type == protocol.ERROR:
                    raise RelayProtocolError(reply.body.get("code", "?"),
                                             reply.body.get("detail", ""))
                if reply.type == protocol.ROBOT_STATE:
                    return dict(reply.body)
        except asyncio.TimeoutError:
            raise MissionTimeout("no robot state reply") from None
        finally:
            self._waiters.pop(sent.message_id, None)

    async def dispatch_and_collect(
            self, mission: Mission,
            timeout: float | None = None,
            on_progress: Callable[[dict[str, Any]], None] | None = None
            ) -> InspectionRecord:
        """Send a mission and wait for its capture bundle.

        The default deadline is three times the planner-estimated duration.
        Raises MissionTimeout on expiry, BusyError / ExecutionError /
        RelayProtocolError on reported failures.
        """
        if timeout is None:
            timeout = max(3.0 * mission.estimated_duration(), 10.0)
        doc = serialize_mission(mission)
        sent = await self._send(protocol.MISSION_DISPATCH, {"mission_doc": doc})
        queue: asyncio.Queue = asyncio.Queue()
        self._waiters[sent.message_id] = queue
        loop = asyncio.get_event_loop()
        deadline = loop.time() + timeout
        try:
            while True:
                remaining = deadline - loop.time()
                if remaining <= 0:
                    raise MissionTimeout(
                        f"mission {mission.mission_id} exceeded {timeout:.1f} s")
                try:
                    reply = await asyncio.wait_for(queue.get(), remaining)
                except asyncio.TimeoutError:
                    raise MissionTimeout(
                        f"mission {mission.mission_id} exceeded {timeout:.1f} s"
                    ) from None
                if reply is None:
                    raise ConnectionError("relay session closed")
                if reply.type == protocol.ERROR:
                    code = reply.body.get("code", "?")
                    detail = reply.body.get("detail", "")
                    if code == protocol.BUSY:
                        raise BusyError(detail or "robot busy")
                    if code in (protocol.EXECUTION, protocol.MISSION_PARSE):
                        raise ExecutionError(f"{code}: {detail}")
                    raise RelayProtocolError(code, detail)
                if reply.type == protocol.MISSION_ACK:
                    log.info("mission %s acknowledged", mission.mission_id)
                    continue
                if reply.type == protocol.MISSION_PROGRESS:
                    if on_progress is not None:
                        on_progress(dict(reply.body))
                    continue
                if reply.type == protocol.CAPTURE_BUNDLE:
                    return InspectionRecord.from_wire({
                        "project_id": self.project_id,
                        "inspection_date": reply.body.get("inspection_date", ""),
                        "mission_id": reply.body.get("mission_id", ""),
                        "captures": reply.body.get("captures", []),
                    })
        finally:
            self._waiters.pop(sent.message_id, None)

    async def query_captures(self, date: str | None,
                             timeout: float = DEFAULT_STATE_TIMEOUT
                             ) -> dict[str, Any]:
        """CAPTURES_RESULT body: dates plus records when a date was given."""
        body: dict[str, Any] = {"date": date} if date is not None else {}
        sent = await self._send(protocol.QUERY_CAPTURES, body)
        queue: asyncio.Queue = asyncio.Queue()
        self._waiters[sent.message_id] = queue
        try:
            reply = await asyncio.wait_for(queue.get(), timeout)
            if reply is None:
                raise ConnectionError("relay session closed")
            if reply.type == protocol.ERROR:
                raise RelayProtocolError(reply.body.get("code", "?"),
                                         reply.body.get("detail", ""))
            return dict(reply.body)
        except asyncio.TimeoutError:
            raise MissionTimeout("no captures result") from None
        finally:
            self._waiters.pop(sent.message_id, None)

    async def fetch_records(self, date: str) -> list[InspectionRecord]:
        result = await self.query_captures(date)
        return [InspectionRecord.from_wire(rec)
                for rec in result.get("records", [])]

    async def fetch_dates(self) -> list[str]:
        result = await self.query_captures(None)
        return list(result.get("dates", []))
