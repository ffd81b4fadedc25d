"""Local HTTP gateway bridging the relay protocol to the operator console.

Serves the building model, live session state, mission dispatch, a
server-sent event stream of robot telemetry, and date-indexed capture
queries with PNG image pass-through. All durable state stays in the relay;
restarting the gateway reproduces identical views from relay data alone.
"""

from __future__ import annotations

import asyncio
import json
import logging
from typing import Any

from aiohttp import web

from . import protocol
from .client import InspectionRecord, PlanContext, RelayClient
from .errors import (BusyError, ExecutionError, MissionTimeout, NoPathError,
                     RelayProtocolError)
from .frames import Pose2D
from .planner import DRP

log = logging.getLogger("sitewalk.gateway")


class Gateway:
    def __init__(self, plan_context: PlanContext, relay_client: RelayClient,
                 model_document: bytes, gateway_token: str | None = None,
                 static_dir: str | None = None,
                 schedule_document: bytes | None = None):
        self.ctx = plan_context
        self.relay = relay_client
        self.model_document = model_document
        self.gateway_token = gateway_token
        self.static_dir = static_dir
        self.schedule_document = schedule_document
        self.mission_active = False
        self._payload_cache: dict[str, bytes] = {}
        self._dispatch_task: asyncio.Task | None = None

    # -- app wiring ----------------------------------------------------------

    def build_app(self) -> web.Application:
        app = web.Application(middlewares=[self._auth_middleware])
        app.router.add_get("/model", self.handle_model)
        app.router.add_get("/state", self.handle_state)
        app.router.add_post("/missions", self.handle_dispatch)
        app.router.add_get("/events", self.handle_events)
        app.router.add_get("/captures", self.handle_captures)
        app.router.add_get("/captures/{capture_id}/image", self.handle_image)
        app.router.add_get("/dates", self.handle_dates)
        app.router.add_get("/schedule", self.handle_schedule)
        if self.static_dir:
            app.router.add_get("/", self._index)
            app.router.add_static("/app", self.static_dir)
        return app

    async def _index(self, request: web.Request) -> web.StreamResponse:
        return web.FileResponse(f"{self.static_dir}/index.html")

    @web.middleware
    async def _auth_middleware(self, request: web.Request, handler):
        if self.gateway_token is not None and request.path not in ("/", ):
            supplied = request.headers.get("Authorization", "")
            if supplied.startswith("Bearer "):
                supplied = supplied[7:]
            else:
                supplied = request.query.get("token", "")
            if supplied != self.gateway_token:
                return web.json_response({"error": "unauthorized"}, status=401)
        return await handler(request)

    # -- handlers ------------------------------------------------------------

    async def handle_model(self, request: web.Request) -> web.Response:
        return web.Response(body=self.model_document,
                            content_type="application/json")

    async def handle_state(self, request: web.Request) -> web.Response:
        view = self.relay.session_view.to_json()
        view["mission_active"] = self.mission_active
        return web.json_response(view)

    async def handle_dates(self, request: web.Request) -> web.Response:
        dates = await self.relay.fetch_dates()
        return web.json_response({"dates": dates})

    async def handle_schedule(self, request: web.Request) -> web.Response:
        if self.schedule_document is None:
            return web.json_response({"error": "no schedule configured"},
                                     status=404)
        return web.Response(body=self.schedule_document,
                            content_type="application/json")

    async def handle_dispatch(self, request: web.Request) -> web.Response:
        if self.mission_active:
            return web.json_response({"error": "mission already active"},
                                     status=409)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return web.json_response({"error": "body must be JSON"}, status=400)
        drps_raw = body.get("drps", [])
        try:
            drps = [DRP(str(d["id"]), (float(d["x"]), float(d["y"])))
                    for d in drps_raw]
        except (KeyError, TypeError, ValueError):
            return web.json_response(
                {"error": "drps must be [{id, x, y}, ...]"}, status=400)

        robot_pose = None
        try:
            state = await self.relay.request_robot_state(timeout=5.0)
            robot_pose = Pose2D(state["x"], state["y"], state.get("theta", 0.0))
        except RelayProtocolError as exc:
            if exc.code == protocol.NO_ROBOT_ONLINE:
                return web.json_response({"error": "NO_ROBOT_ONLINE"},
                                         status=503)
            raise
        except MissionTimeout:
            return web.json_response({"error": "NO_ROBOT_ONLINE"}, status=503)

        try:
            mission = self.ctx.plan(drps, robot_pose,
                                    speed=body.get("speed"),
                                    dwell=body.get("dwell"))
        except NoPathError as exc:
            return web.json_response({"error": f"planning failed: {exc}"},
                                     status=422)

        self.mission_active = True
        self._dispatch_task = asyncio.ensure_future(self._run_mission(mission))
        return web.json_response(
            {"mission_id": mission.mission_id,
             "n_waypoints": len(mission.waypoints),
             "n_drps": len(mission.drp_ids),
             "length_m": mission.length},
            status=202)

    async def _run_mission(self, mission) -> None:
        try:
            record = await self.relay.dispatch_and_collect(mission)
            for entry in record.captures:
                self._payload_cache[entry["capture_id"]] = (
                    protocol.wire_capture_payload(entry))
            log.info("mission %s returned %d captures", mission.mission_id,
                     len(record.captures))
        except (BusyError, ExecutionError, MissionTimeout,
                RelayProtocolError, ConnectionError) as exc:
            log.warning("mission %s failed: %s", mission.mission_id, exc)
        finally:
            self.mission_active = False

    async def handle_captures(self, request: web.Request) -> web.Response:
        date = request.query.get("date")
        if not date:
            return web.json_response({"error": "date query param required"},
                                     status=400)
        records = await self.relay.fetch_records(date)
        return web.json_response({
            "date": date,
            "records": [self._record_json(r) for r in records],
        })

    def _record_json(self, record: InspectionRecord) -> dict[str, Any]:
        captures = []
        for entry in record.captures:
            self._payload_cache[entry["capture_id"]] = (
                protocol.wire_capture_payload(entry))
            captures.append({
                "capture_id": entry["capture_id"],
                "drp_id": entry["drp_id"],
                "order_index": entry["order_index"],
                "pose": entry.get("pose"),
                "timestamp": entry.get("timestamp"),
                "image_url": f"/captures/{entry['capture_id']}/image",
            })
        return {
            "mission_id": record.mission_id,
            "inspection_date": record.inspection_date,
            "captures": captures,
        }

    async def handle_image(self, request: web.Request) -> web.Response:
        capture_id = request.match_info["capture_id"]
        payload = self._payload_cache.get(capture_id)
        if payload is None and request.query.get("date"):
            result = await self.relay.query_captures(request.query["date"])
            for rec in result.get("records", []):
                for entry in rec.get("captures", []):
                    self._payload_cache[entry["capture_id"]] = (
                        protocol.wire_capture_payload(entry))
            payload = self._payload_cache.get(capture_id)
        if payload is None:
            return web.json_response({"error": "unknown capture"}, status=404)
        return web.Response(body=payload, content_type="image/png")

    async def handle_events(self, request: web.Request) -> web.StreamResponse:
        response = web.StreamResponse(
            status=200,
            headers={
                "Content-Type": "text/event-stream",
                "Cache-Control": "no-cache",
                "Connection": "keep-alive",
            })
        await response.prepare(request)
        queue = self.relay.subscribe()
        try:
            while True:
                envelope = await queue.get()
                event = self._event_for(envelope)
                if event is None:
                    continue
                name, payload = event
                data = json.dumps(payload, separators=(",", ":"))
                await response.write(
                    f"event: {name}\ndata: {data}\n\n".encode("utf-8"))
        except (ConnectionResetError, asyncio.CancelledError):
            pass
        finally:
            self.relay.unsubscribe(queue)
        return response

    @staticmethod
    def _event_for(envelope) -> tuple[str, dict[str, Any]] | None:
        if envelope.type == protocol.MISSION_PROGRESS:
            return "progress", envelope.body
        if envelope.type == protocol.ROBOT_STATE:
            return "robot_state", envelope.body
        if envelope.type == protocol.CAPTURE_BUNDLE:
            return "result", {
                "mission_id": envelope.body.get("mission_id"),
                "inspection_date": envelope.body.get("inspection_date"),
                "n_captures": len(envelope.body.get("captures", [])),
            }
        if envelope.type == protocol.ERROR:
            return "error", envelope.body
        return None


async def serve_gateway(gateway: Gateway, host: str, port: int
                        ) -> web.AppRunner:
    runner = web.AppRunner(gateway.build_app())
    await runner.setup()
    site = web.TCPSite(runner, host, port)
    await site.start()
    log.info("gateway listening on %s:%d", host, port)
    return runner
