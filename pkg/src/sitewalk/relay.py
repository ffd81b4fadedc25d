"""Store-and-forward relay server.

Sessions authenticate with a pre-shared token bound to one (role, project)
pair. After HELLO, envelopes are routed to every session of the counterpart
role on the same project; the original frame bytes are forwarded untouched.
Capture bundles are persisted before forwarding and served back for
date queries. Per-session outbound queues keep one slow reader from
stalling the rest; only MISSION_PROGRESS may be dropped under backpressure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Any

from . import protocol
from .errors import RelayProtocolError, StorageError
from .protocol import Envelope
from .storage import CaptureStore

log = logging.getLogger("sitewalk.relay")

PROGRESS_QUEUE_LIMIT = 256


@dataclass
class RelayConfig:
    tokens: dict[str, tuple[str, str]]  # token -> (role, project_id)
    storage_path: str
    host: str = "127.0.0.1"
    port: int = 0

    @classmethod
    def from_file(cls, path: str) -> "RelayConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        tokens = {
            token: (entry["role"], entry["project_id"])
            for token, entry in doc.get("tokens", {}).items()
        }
        listen = doc.get("listen", "127.0.0.1:0")
        host, _, port = listen.rpartition(":")
        return cls(tokens=tokens, storage_path=doc["storage"],
                   host=host or "127.0.0.1", port=int(port))


@dataclass
class Session:
    session_id: str
    role: str
    project_id: str
    writer: asyncio.StreamWriter
    queue: asyncio.Queue = field(default_factory=asyncio.Queue)
    dropped_progress: int = 0
    writer_task: asyncio.Task | None = None


class RelayServer:
    def __init__(self, config: RelayConfig):
        self.config = config
        self.store = CaptureStore(config.storage_path)
        self.sessions: dict[str, Session] = {}
        self._server: asyncio.base_events.Server | None = None
        self._next_session = 0

    # -- lifecycle ---------------------------------------------------------

    async def start(self) -> tuple[str, int]:
        self._server = await asyncio.start_server(
            self._handle_connection, self.config.host, self.config.port)
        sock = self._server.sockets[0].getsockname()
        log.info("relay listening on %s:%s, %d records loaded",
                 sock[0], sock[1], self.store.record_count())
        return sock[0], sock[1]

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for session in list(self.sessions.values()):
            if session.writer_task is not None:
                session.writer_task.cancel()
            session.writer.close()
        self.sessions.clear()

    # -- connection handling ------------------------------------------------

    async def _handle_connection(self, reader: asyncio.StreamReader,
                                 writer: asyncio.StreamWriter) -> None:
        session: Session | None = None
        try:
            session = await self._authenticate(reader, writer)
            if session is None:
                return
            while True:
                raw = await protocol.read_frame(reader)
                if raw is None:
                    break
                try:
                    envelope = Envelope.from_bytes(raw)
                except RelayProtocolError as exc:
                    await self._send_error(session, exc.code, str(exc), None)
                    continue
                await self._route(session, envelope, raw)
        except (ConnectionResetError, RelayProtocolError) as exc:
            log.info("session dropped: %s", exc)
        finally:
            if session is not None:
                self.sessions.pop(session.session_id, None)
                if session.writer_task is not None:
                    session.writer_task.cancel()
            writer.close()

    async def _authenticate(self, reader: asyncio.StreamReader,
                            writer: asyncio.StreamWriter) -> Session | None:
        raw = await protocol.read_frame(reader)
        if raw is None:
            return None
        try:
            hello = Envelope.from_bytes(raw)
        except RelayProtocolError:
            await self._reject(writer, None, protocol.UNAUTHORIZED,
                               "malformed hello")
            return None
        if hello.type != protocol.HELLO:
            await self._reject(writer, hello, protocol.UNAUTHORIZED,
                               "first envelope must be HELLO")
            return None
        token = hello.body.get("token")
        entry = self.config.tokens.get(token)
        if entry is None:
            await self._reject(writer, hello, protocol.UNAUTHORIZED,
                               "unknown token")
            return None
        role, project_id = entry
        if role == protocol.ROLE_MIDDLEWARE and any(
                s.role == role and s.project_id == project_id
                for s in self.sessions.values()):
            await self._reject(writer, hello, protocol.CONFLICT,
                               "middleware already connected for project")
            return None

        self._next_session += 1
        session = Session(session_id=f"s{self._next_session}", role=role,
                          project_id=project_id, writer=writer)
        session.writer_task = asyncio.ensure_future(self._drain_queue(session))
        self.sessions[session.session_id] = session
        ack = protocol.make_envelope(
            protocol.HELLO_ACK, "server", project_id,
            body={"session_id": session.session_id, "role": role,
                  "project_id": project_id},
            correlation_id=hello.message_id)
        self._enqueue(session, ack.to_bytes(), ack.type)
        log.info("session %s authenticated as %s/%s", session.session_id,
                 role, project_id)
        return session

    async def _reject(self, writer: asyncio.StreamWriter,
                      hello: Envelope | None, code: str, detail: str) -> None:
        err = protocol.make_envelope(
            protocol.ERROR, "server", hello.project_id if hello else "",
            body={"code": code, "detail": detail},
            correlation_id=hello.message_id if hello else None)
        try:
            await protocol.write_frame(writer, err.to_bytes())
        except (ConnectionResetError, OSError):
            pass
        writer.close()

    async def _drain_queue(self, session: Session) -> None:
        # batch everything already queued into one write: large writes keep
        # syscall count down and avoid tiny-segment floods
        try:
            while True:
                chunks = [protocol.frame_bytes(await session.queue.get())]
                while not session.queue.empty() and len(chunks) < 512:
                    chunks.append(protocol.frame_bytes(session.queue.get_nowait()))
                session.writer.write(b"".join(chunks))
                await session.writer.drain()
        except (asyncio.CancelledError, ConnectionResetError, OSError):
            pass

    def _enqueue(self, session: Session, payload: bytes, env_type: str) -> None:
        if (env_type == protocol.MISSION_PROGRESS
                and session.queue.qsize() >= PROGRESS_QUEUE_LIMIT):
            session.dropped_progress += 1
            return
        session.queue.put_nowait(payload)

    # -- routing -------------------------------------------------------------

    def _peers(self, session: Session, role: str) -> list[Session]:
        return [s for s in self.sessions.values()
                if s.role == role and s.project_id == session.project_id]

    async def _route(self, session: Session, envelope: Envelope,
                     raw: bytes) -> None:
        allowed = (protocol.CLIENT_SENDS if session.role == protocol.ROLE_CLIENT
                   else protocol.MIDDLEWARE_SENDS)
        if envelope.type not in allowed:
            await self._send_error(session, protocol.ILLEGAL_TYPE,
                                   f"{session.role} may not send {envelope.type}",
                                   envelope.message_id)
            return
        if envelope.project_id != session.project_id:
            await self._send_error(session, protocol.ILLEGAL_TYPE,
                                   "project_id does not match session",
                                   envelope.message_id)
            return

        if envelope.type == protocol.QUERY_CAPTURES:
            await self._answer_query(session, envelope)
            return

        if envelope.type == protocol.CAPTURE_BUNDLE:
            try:
                protocol.validate_bundle_body(envelope.body)
                self._persist_bundle(session.project_id, envelope.body)
            except RelayProtocolError as exc:
                await self._send_error(session, exc.code, str(exc),
                                       envelope.message_id)
                return
            except StorageError as exc:
                await self._send_error(session, protocol.STORAGE, str(exc),
                                       envelope.message_id)
                return
            for peer in self._peers(session, protocol.ROLE_CLIENT):
                self._enqueue(peer, raw, envelope.type)
            return

        counterpart = (protocol.ROLE_MIDDLEWARE
                       if session.role == protocol.ROLE_CLIENT
                       else protocol.ROLE_CLIENT)
        peers = self._peers(session, counterpart)
        if session.role == protocol.ROLE_CLIENT and not peers:
            # nothing on site to take the request
            await self._send_error(session, protocol.NO_ROBOT_ONLINE,
                                   "no middleware connected for project",
                                   envelope.message_id)
            return
        for peer in peers:
            self._enqueue(peer, raw, envelope.type)

    def _persist_bundle(self, project_id: str, body: dict[str, Any]) -> None:
        record = {
            "project_id": project_id,
            "inspection_date": str(body["inspection_date"]),
            "mission_id": str(body["mission_id"]),
            "captures": body["captures"],
        }
        self.store.upsert(record)
        log.info("stored bundle %s/%s/%s with %d captures", project_id,
                 record["inspection_date"], record["mission_id"],
                 len(record["captures"]))

    async def _answer_query(self, session: Session, envelope: Envelope) -> None:
        date = envelope.body.get("date")
        body: dict[str, Any] = {
            "dates": self.store.dates(session.project_id),
        }
        if date is not None:
            body["date"] = date
            body["records"] = self.store.query(session.project_id, str(date))
        result = protocol.make_envelope(
            protocol.CAPTURES_RESULT, "server", session.project_id,
            body=body, correlation_id=envelope.message_id)
        self._enqueue(session, result.to_bytes(), result.type)

    async def _send_error(self, session: Session, code: str, detail: str,
                          correlation_id: str | None) -> None:
        err = protocol.make_envelope(
            protocol.ERROR, "server", session.project_id,
            body={"code": code, "detail": detail},
            correlation_id=correlation_id)
        self._enqueue(session, err.to_bytes(), err.type)


async def serve_forever(config: RelayConfig) -> None:
    server = RelayServer(config)
    host, port = await server.start()
    print(f"relay listening on {host}:{port}", flush=True)
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sitewalk-relay",
        description="Authenticated store-and-forward relay server")
    parser.add_argument("--config", help="JSON config with tokens/listen/storage")
    parser.add_argument("--listen", help="host:port (overrides config)")
    parser.add_argument("--storage", help="record log path (overrides config)")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(message)s")
    if args.config:
        config = RelayConfig.from_file(args.config)
    else:
        config = RelayConfig(tokens={}, storage_path="captures.log")
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        config.host = host or "127.0.0.1"
        config.port = int(port)
    if args.storage:
        config.storage_path = args.storage

    try:
        asyncio.run(serve_forever(config))
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
