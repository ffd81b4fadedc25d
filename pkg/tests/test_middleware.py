"""End-to-end middleware tests: relay + middleware + client in one loop."""

import asyncio
import hashlib
import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from sitewalk import protocol
from sitewalk.client import PlanContext, RelayClient
from sitewalk.errors import BusyError, MissionTimeout
from sitewalk.frames import Pose2D
from sitewalk.middleware import MiddlewareApp, MiddlewareConfig, MiddlewareState
from sitewalk.model import load_building_model
from sitewalk.planner import load_drp_list
from sitewalk.relay import RelayConfig, RelayServer
from sitewalk.sim import execute_mission

TOKENS = {
    "tok-client": ("client", "p1"),
    "tok-mw": ("middleware", "p1"),
}

FIXTURES = Path(__file__).parent.parent / "fixtures"


def run(coro):
    return asyncio.run(coro)


class Harness:
    """Relay + in-process middleware + one client session."""

    def __init__(self, tmp_path, inspection_date="2026-08-07", **mw_overrides):
        self.tmp_path = tmp_path
        self.inspection_date = inspection_date
        self.mw_overrides = mw_overrides

    async def __aenter__(self):
        config = RelayConfig(tokens=TOKENS,
                             storage_path=str(self.tmp_path / "store.log"))
        self.server = RelayServer(config)
        host, port = await self.server.start()
        self.port = port

        mw_config = MiddlewareConfig(
            relay_host="127.0.0.1", relay_port=port, token="tok-mw",
            project_id="p1", model_path=str(FIXTURES / "bfh_approx.json"),
            inspection_date=self.inspection_date, **self.mw_overrides)
        self.middleware = MiddlewareApp(mw_config)
        self.mw_task = asyncio.ensure_future(self.middleware.run())
        await asyncio.wait_for(self.middleware._connected.wait(), 5)

        self.client = RelayClient("127.0.0.1", port, "tok-client", "p1")
        await self.client.connect()
        return self

    async def __aexit__(self, *exc):
        await self.client.close()
        self.mw_task.cancel()
        await self.server.stop()
        return False


def bfh_mission(start=Pose2D(11.0, 1.0, 1.5708), speed=0.4, dwell=20.667):
    model = load_building_model((FIXTURES / "bfh_approx.json").read_bytes())
    ctx = PlanContext(model)
    drps = load_drp_list((FIXTURES / "bfh_drps.json").read_text())
    return model, ctx.plan(drps, start, speed=speed, dwell=dwell)


class TestRobotState:
    def test_idle_state_query(self, tmp_path):
        async def scenario():
            async with Harness(tmp_path) as h:
                state = await h.client.request_robot_state()
                # spawn defaults to the first fiducial: fid1 at (11, 1)
                assert state["x"] == pytest.approx(11.0, abs=1e-6)
                assert state["y"] == pytest.approx(1.0, abs=1e-6)
                assert state["degraded"] is False
        run(scenario())

    def test_mid_mission_state_on_path(self, tmp_path):
        async def scenario():
            async with Harness(tmp_path, realtime_factor=500.0) as h:
                _, mission = bfh_mission()
                task = asyncio.ensure_future(
                    h.client.dispatch_and_collect(mission, timeout=60))
                await asyncio.sleep(0.3)
                state = await h.client.request_robot_state()
                assert h.middleware.state == MiddlewareState.EXECUTING
                record = await task
                assert len(record.captures) == 6
                # mid-mission pose lies on the planned polyline (within the
                # max localization error, zero here)
                px, py = state["x"], state["y"]
                dist = min(
                    _point_segment_dist(px, py, (a.x, a.y), (b.x, b.y))
                    for a, b in zip(mission.waypoints, mission.waypoints[1:]))
                assert dist < 0.05
        run(scenario())


def _point_segment_dist(px, py, a, b):
    import math
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    l2 = dx * dx + dy * dy
    if l2 == 0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / l2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


class TestMissionFlow:
    def test_six_drp_end_to_end(self, tmp_path):
        async def scenario():
            async with Harness(tmp_path) as h:
                model, mission = bfh_mission()
                progress = []
                record = await h.client.dispatch_and_collect(
                    mission, timeout=60, on_progress=progress.append)
                assert record.drp_ids == mission.drp_ids
                assert len(record.captures) == 6
                assert record.inspection_date == "2026-08-07"
                # progress telemetry is monotone in simulated time
                times = [p["t"] for p in progress]
                assert times == sorted(times)
                assert progress, "expected progress telemetry"

                # captures byte-identical to a local simulation of the same
                # mission (relay transparency end to end)
                local = execute_mission(mission, model, seed=0)
                for entry, cap in zip(record.captures, local.captures):
                    wire = protocol.wire_capture_payload(entry)
                    assert hashlib.sha256(wire).hexdigest() == \
                        hashlib.sha256(cap.payload).hexdigest()

                # record persisted and queryable
                fetched = await h.client.fetch_records("2026-08-07")
                assert len(fetched) == 1
                assert fetched[0].drp_ids == mission.drp_ids
        run(scenario())

    def test_busy_second_dispatch_rejected(self, tmp_path):
        async def scenario():
            async with Harness(tmp_path, realtime_factor=500.0) as h:
                _, mission = bfh_mission()
                task = asyncio.ensure_future(
                    h.client.dispatch_and_collect(mission, timeout=60))
                await asyncio.sleep(0.3)
                with pytest.raises(BusyError):
                    await h.client.dispatch_and_collect(mission, timeout=10)
                record = await task
                assert len(record.captures) == 6
        run(scenario())

    def test_malformed_mission_rejected_state_unchanged(self, tmp_path):
        async def scenario():
            async with Harness(tmp_path) as h:
                sent = await h.client._send(protocol.MISSION_DISPATCH,
                                            {"mission_doc": "{broken"})
                queue = asyncio.Queue()
                h.client._waiters[sent.message_id] = queue
                reply = await asyncio.wait_for(queue.get(), 5)
                assert reply.type == protocol.ERROR
                assert reply.body["code"] == protocol.MISSION_PARSE
                assert h.middleware.state == MiddlewareState.IDLE
                # still serves missions afterwards
                _, mission = bfh_mission()
                record = await h.client.dispatch_and_collect(mission,
                                                             timeout=60)
                assert len(record.captures) == 6
        run(scenario())

    def test_zero_drp_mission(self, tmp_path):
        async def scenario():
            async with Harness(tmp_path) as h:
                model = load_building_model(
                    (FIXTURES / "bfh_approx.json").read_bytes())
                ctx = PlanContext(model)
                mission = ctx.plan([], Pose2D(11.0, 1.0, 0.0))
                record = await h.client.dispatch_and_collect(mission,
                                                             timeout=30)
                assert record.captures == []
        run(scenario())


class TestFaultInjection:
    def test_middleware_killed_mid_mission(self, tmp_path):
        """Kill the middleware process mid-mission: the client times out
        with MissionTimeout and no partial bundle is persisted."""
        async def scenario():
            config = RelayConfig(tokens=TOKENS,
                                 storage_path=str(tmp_path / "store.log"))
            server = RelayServer(config)
            host, port = await server.start()

            mw_config = {
                "relay": f"127.0.0.1:{port}",
                "token": "tok-mw",
                "project_id": "p1",
                "model": str(FIXTURES / "bfh_approx.json"),
                "inspection_date": "2026-08-07",
                "realtime_factor": 50.0,
            }
            config_path = tmp_path / "mw.json"
            config_path.write_text(json.dumps(mw_config))
            proc = subprocess.Popen(
                [sys.executable, "-m", "sitewalk.middleware",
                 "--config", str(config_path)],
                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
            try:
                client = RelayClient("127.0.0.1", port, "tok-client", "p1")
                await client.connect()
                # wait for the middleware session to appear
                for _ in range(100):
                    if any(s.role == "middleware"
                           for s in server.sessions.values()):
                        break
                    await asyncio.sleep(0.05)
                else:
                    pytest.fail("middleware never connected")

                _, mission = bfh_mission()
                saw_progress = asyncio.Event()
                task = asyncio.ensure_future(client.dispatch_and_collect(
                    mission, timeout=3.0,
                    on_progress=lambda body: saw_progress.set()))
                await asyncio.wait_for(saw_progress.wait(), 10)
                proc.send_signal(signal.SIGKILL)
                with pytest.raises(MissionTimeout):
                    await task
                assert server.store.record_count() == 0
                await client.close()
            finally:
                if proc.poll() is None:
                    proc.kill()
                proc.wait()
                await server.stop()
        run(scenario())
