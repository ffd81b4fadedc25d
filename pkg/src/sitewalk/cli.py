"""Command-line interface: plan, dispatch, fetch, serve.

Exit codes are fixed for scripting: 0 ok, 2 planning failure, 3 relay or
robot connectivity, 4 authentication, 5 mission timeout.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys

from . import protocol
from .client import PlanContext, RelayClient
from .errors import (BusyError, ExecutionError, MissionTimeout, NoPathError,
                     ParseError, RelayProtocolError, SitewalkError,
                     ValidationError)
from .frames import Pose2D
from .gateway import Gateway, serve_gateway
from .model import load_building_model
from .planner import Mission, load_drp_list, serialize_mission

EXIT_OK = 0
EXIT_PLANNING = 2
EXIT_CONNECTIVITY = 3
EXIT_AUTH = 4
EXIT_TIMEOUT = 5

# created_at used for --dry-run so output is byte-stable across runs
DRY_RUN_EPOCH = "1970-01-01T00:00:00Z"


def _parse_pose(text: str) -> Pose2D:
    parts = [float(v) for v in text.split(",")]
    if len(parts) == 2:
        return Pose2D(parts[0], parts[1], 0.0)
    if len(parts) == 3:
        return Pose2D(parts[0], parts[1], parts[2])
    raise argparse.ArgumentTypeError("pose must be x,y or x,y,theta")


def _load_context(args) -> PlanContext:
    with open(args.model, "rb") as fh:
        model = load_building_model(fh.read())
    return PlanContext(model, robot_radius=args.robot_radius,
                       cell_size=args.cell_size)


def _relay_addr(args) -> tuple[str, int]:
    host, _, port = args.relay.rpartition(":")
    return host or "127.0.0.1", int(port)


async def _with_client(args, fn):
    host, port = _relay_addr(args)
    client = RelayClient(host, port, args.token, args.project)
    try:
        await client.connect()
    except (ConnectionError, OSError) as exc:
        print(f"error: cannot reach relay: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    except RelayProtocolError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_AUTH if exc.code == protocol.UNAUTHORIZED else EXIT_CONNECTIVITY
    try:
        return await fn(client)
    finally:
        await client.close()


# -- plan ---------------------------------------------------------------------

async def _cmd_plan(args) -> int:
    ctx = _load_context(args)
    drps = []
    if args.drp:
        with open(args.drp, "r", encoding="utf-8") as fh:
            drps = load_drp_list(fh.read())

    async def plan_with_pose(robot_pose) -> Mission:
        return ctx.plan(drps, robot_pose, speed=args.speed, dwell=args.dwell,
                        created_at=DRY_RUN_EPOCH if args.dry_run else None)

    try:
        if args.dry_run:
            mission = await plan_with_pose(args.start)
            print(serialize_mission(mission))
            return EXIT_OK

        async def fn(client):
            pose = args.start
            if pose is None:
                state = await client.request_robot_state()
                pose = Pose2D(state["x"], state["y"], state.get("theta", 0.0))
            mission = await plan_with_pose(pose)
            print(serialize_mission(mission))
            return EXIT_OK
        return await _with_client(args, fn)
    except NoPathError as exc:
        print(f"error: planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except RelayProtocolError as exc:
        print(f"error: {exc.code}", file=sys.stderr)
        return (EXIT_AUTH if exc.code == protocol.UNAUTHORIZED
                else EXIT_CONNECTIVITY)


# -- dispatch -------------------------------------------------------------------

async def _cmd_dispatch(args) -> int:
    ctx = _load_context(args)
    with open(args.drp, "r", encoding="utf-8") as fh:
        drps = load_drp_list(fh.read())

    async def fn(client) -> int:
        pose = args.start
        if pose is None:
            state = await client.request_robot_state()
            pose = Pose2D(state["x"], state["y"], state.get("theta", 0.0))
        try:
            mission = ctx.plan(drps, pose, speed=args.speed, dwell=args.dwell)
        except NoPathError as exc:
            print(f"error: planning failed: {exc}", file=sys.stderr)
            return EXIT_PLANNING
        print(f"dispatching mission {mission.mission_id} "
              f"({len(mission.drp_ids)} capture points, "
              f"{mission.length:.1f} m)")

        def progress(body):
            print(f"  t={body.get('t', 0.0):7.1f}s "
                  f"pose=({body.get('x', 0.0):.2f}, {body.get('y', 0.0):.2f}) "
                  f"captures {body.get('drps_done', 0)}/{body.get('n_drps', 0)}")

        record = await client.dispatch_and_collect(
            mission, timeout=args.timeout,
            on_progress=progress if args.verbose else None)
        print(f"mission {record.mission_id} complete on "
              f"{record.inspection_date}: {len(record.captures)} captures")
        for entry in record.captures:
            print(f"  [{entry['order_index']}] {entry['drp_id']} "
                  f"capture {entry['capture_id']}")
        return EXIT_OK

    try:
        return await _with_client(args, fn)
    except MissionTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except BusyError as exc:
        print(f"error: robot busy: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    except ExecutionError as exc:
        print(f"error: execution failed: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    except RelayProtocolError as exc:
        print(f"error: {exc.code}", file=sys.stderr)
        return (EXIT_AUTH if exc.code == protocol.UNAUTHORIZED
                else EXIT_CONNECTIVITY)


# -- fetch ----------------------------------------------------------------------

async def _cmd_fetch(args) -> int:
    async def fn(client) -> int:
        if args.date:
            records = await client.fetch_records(args.date)
            if not records:
                print(f"no inspections on {args.date}")
                return EXIT_OK
            for record in records:
                print(f"mission {record.mission_id} ({record.inspection_date})")
                for entry in record.captures:
                    pose = entry.get("pose") or {}
                    print(f"  [{entry['order_index']}] {entry['drp_id']} "
                          f"at ({pose.get('x', 0.0):.2f}, {pose.get('y', 0.0):.2f})")
        else:
            dates = await client.fetch_dates()
            if not dates:
                print("no inspections stored")
            for date in dates:
                print(date)
        return EXIT_OK

    try:
        return await _with_client(args, fn)
    except RelayProtocolError as exc:
        print(f"error: {exc.code}", file=sys.stderr)
        return (EXIT_AUTH if exc.code == protocol.UNAUTHORIZED
                else EXIT_CONNECTIVITY)


# -- serve ----------------------------------------------------------------------

async def _cmd_serve(args) -> int:
    ctx = _load_context(args)
    with open(args.model, "rb") as fh:
        model_document = fh.read()
    schedule_document = None
    if args.schedule:
        with open(args.schedule, "rb") as fh:
            schedule_document = fh.read()

    host, port = _relay_addr(args)
    client = RelayClient(host, port, args.token, args.project)
    try:
        await client.connect()
    except (ConnectionError, OSError) as exc:
        print(f"error: cannot reach relay: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    except RelayProtocolError as exc:
        print(f"error: {exc.code}", file=sys.stderr)
        return EXIT_AUTH if exc.code == protocol.UNAUTHORIZED else EXIT_CONNECTIVITY

    gateway = Gateway(ctx, client, model_document,
                      gateway_token=args.gateway_token,
                      static_dir=args.static,
                      schedule_document=schedule_document)
    listen_host, _, listen_port = args.listen.rpartition(":")
    runner = await serve_gateway(gateway, listen_host or "127.0.0.1",
                                 int(listen_port))
    print(f"gateway serving on {args.listen}", flush=True)
    try:
        await asyncio.Event().wait()
    finally:
        await runner.cleanup()
        await client.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sitewalk",
        description="Plan capture missions, run them on the simulated robot, "
                    "and browse date-indexed inspection records")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--relay", default="127.0.0.1:7601",
                        help="relay host:port")
    common.add_argument("--token", default="", help="relay auth token")
    common.add_argument("--project", default="default", help="project id")

    planning = argparse.ArgumentParser(add_help=False)
    planning.add_argument("--model", required=True,
                          help="building-model JSON file")
    planning.add_argument("--robot-radius", type=float, default=0.3)
    planning.add_argument("--cell-size", type=float, default=0.1)
    planning.add_argument("--speed", type=float, default=None,
                          help="robot speed, m/s")
    planning.add_argument("--dwell", type=float, default=None,
                          help="dwell per capture point, s")
    planning.add_argument("--start", type=_parse_pose, default=None,
                          help="robot start pose x,y[,theta]")

    p_plan = sub.add_parser("plan", parents=[common, planning],
                            help="compute a mission document")
    p_plan.add_argument("--drp", help="capture-point JSON file")
    p_plan.add_argument("--dry-run", action="store_true",
                        help="plan offline; never touch the relay")
    p_plan.set_defaults(fn=_cmd_plan)

    p_dispatch = sub.add_parser("dispatch", parents=[common, planning],
                                help="plan, execute, and collect captures")
    p_dispatch.add_argument("--drp", required=True)
    p_dispatch.add_argument("--timeout", type=float, default=None,
                            help="wall-clock deadline, s")
    p_dispatch.set_defaults(fn=_cmd_dispatch)

    p_fetch = sub.add_parser("fetch", parents=[common],
                             help="list stored inspections")
    p_fetch.add_argument("--date", help="inspection date YYYY-MM-DD")
    p_fetch.set_defaults(fn=_cmd_fetch)

    p_serve = sub.add_parser("serve", parents=[common, planning],
                             help="run the operator-console gateway")
    p_serve.add_argument("--listen", default="127.0.0.1:7680")
    p_serve.add_argument("--gateway-token", default=None)
    p_serve.add_argument("--static", default=None,
                         help="directory with the built console app")
    p_serve.add_argument("--schedule", default=None,
                         help="optional schedule document to serve verbatim")
    p_serve.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return asyncio.run(args.fn(args))
    except KeyboardInterrupt:
        return EXIT_OK
    except (ParseError, ValidationError) as exc:
        print(f"error: bad model: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except SitewalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY


if __name__ == "__main__":
    sys.exit(main())
