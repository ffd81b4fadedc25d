"""Relay wire protocol: typed JSON envelopes in length-prefixed frames.

Frame layout: 4-byte big-endian payload length, then the UTF-8 JSON
envelope. Envelope keys: type, message_id, correlation_id, sender_role,
project_id, body. Capture payloads travel base64-encoded inside
CAPTURE_BUNDLE bodies. The relay forwards the original frame bytes
untouched, so body bytes received always equal body bytes sent.
"""

from __future__ import annotations

import asyncio
import base64
import json
import struct
import uuid
from dataclasses import dataclass, field
from typing import Any

from .errors import RelayProtocolError

MAX_FRAME_BYTES = 64 * 1024 * 1024

# envelope types
HELLO = "HELLO"
HELLO_ACK = "HELLO_ACK"
ROBOT_STATE_REQUEST = "ROBOT_STATE_REQUEST"
ROBOT_STATE = "ROBOT_STATE"
MISSION_DISPATCH = "MISSION_DISPATCH"
MISSION_ACK = "MISSION_ACK"
MISSION_PROGRESS = "MISSION_PROGRESS"
CAPTURE_BUNDLE = "CAPTURE_BUNDLE"
QUERY_CAPTURES = "QUERY_CAPTURES"
CAPTURES_RESULT = "CAPTURES_RESULT"
ERROR = "ERROR"

ALL_TYPES = frozenset({
    HELLO, HELLO_ACK, ROBOT_STATE_REQUEST, ROBOT_STATE, MISSION_DISPATCH,
    MISSION_ACK, MISSION_PROGRESS, CAPTURE_BUNDLE, QUERY_CAPTURES,
    CAPTURES_RESULT, ERROR,
})

ROLE_CLIENT = "client"
ROLE_MIDDLEWARE = "middleware"

# message types each role may send after HELLO
CLIENT_SENDS = frozenset({ROBOT_STATE_REQUEST, MISSION_DISPATCH, QUERY_CAPTURES})
MIDDLEWARE_SENDS = frozenset({ROBOT_STATE, MISSION_ACK, MISSION_PROGRESS,
                              CAPTURE_BUNDLE, ERROR})

# error codes
UNAUTHORIZED = "UNAUTHORIZED"
CONFLICT = "CONFLICT"
ILLEGAL_TYPE = "ILLEGAL_TYPE"
NO_ROBOT_ONLINE = "NO_ROBOT_ONLINE"
BUSY = "BUSY"
MISSION_PARSE = "MISSION_PARSE"
EXECUTION = "EXECUTION"
STORAGE = "STORAGE"


@dataclass
class Envelope:
    type: str
    message_id: str
    sender_role: str
    project_id: str
    body: dict[str, Any] = field(default_factory=dict)
    correlation_id: str | None = None

    def to_bytes(self) -> bytes:
        doc = {
            "type": self.type,
            "message_id": self.message_id,
            "correlation_id": self.correlation_id,
            "sender_role": self.sender_role,
            "project_id": self.project_id,
            "body": self.body,
        }
        return json.dumps(doc, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Envelope":
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise RelayProtocolError("MALFORMED", f"bad envelope: {exc}") from None
        if not isinstance(doc, dict):
            raise RelayProtocolError("MALFORMED", "envelope must be an object")
        env_type = doc.get("type")
        if env_type not in ALL_TYPES:
            raise RelayProtocolError("MALFORMED", f"unknown type {env_type!r}")
        message_id = doc.get("message_id")
        if not isinstance(message_id, str) or not message_id:
            raise RelayProtocolError("MALFORMED", "missing message_id")
        sender_role = doc.get("sender_role")
        if sender_role not in (ROLE_CLIENT, ROLE_MIDDLEWARE, "server"):
            raise RelayProtocolError("MALFORMED", f"bad sender_role {sender_role!r}")
        project_id = doc.get("project_id")
        if not isinstance(project_id, str):
            raise RelayProtocolError("MALFORMED", "missing project_id")
        body = doc.get("body")
        if not isinstance(body, dict):
            raise RelayProtocolError("MALFORMED", "body must be an object")
        return cls(type=env_type, message_id=message_id,
                   sender_role=sender_role, project_id=project_id, body=body,
                   correlation_id=doc.get("correlation_id"))


def make_envelope(env_type: str, sender_role: str, project_id: str,
                  body: dict[str, Any] | None = None,
                  correlation_id: str | None = None) -> Envelope:
    return Envelope(type=env_type, message_id=uuid.uuid4().hex,
                    sender_role=sender_role, project_id=project_id,
                    body=body or {}, correlation_id=correlation_id)


async def read_frame(reader: asyncio.StreamReader) -> bytes | None:
    """Read one length-prefixed frame; None on clean EOF."""
    try:
        header = await reader.readexactly(4)
    except (asyncio.IncompleteReadError, ConnectionResetError):
        return None
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME_BYTES:
        raise RelayProtocolError(
            "MALFORMED", f"frame of {length} bytes exceeds limit")
    try:
        return await reader.readexactly(length)
    except (asyncio.IncompleteReadError, ConnectionResetError):
        return None


def frame_bytes(payload: bytes) -> bytes:
    return struct.pack(">I", len(payload)) + payload


async def write_frame(writer: asyncio.StreamWriter, payload: bytes) -> None:
    writer.write(frame_bytes(payload))
    await writer.drain()


# -- capture wire records -------------------------------------------------

def capture_to_wire(capture, order_index: int) -> dict[str, Any]:
    """Flatten a sim Capture into the bundle/record entry format."""
    return {
        "capture_id": capture.capture_id,
        "mission_id": capture.mission_id,
        "drp_id": capture.drp_id,
        "order_index": order_index,
        "pose": {
            "x": capture.pose_at_capture.x,
            "y": capture.pose_at_capture.y,
            "theta": capture.pose_at_capture.theta,
        },
        "timestamp": capture.timestamp,
        "payload_b64": base64.b64encode(capture.payload).decode("ascii"),
    }


def wire_capture_payload(entry: dict[str, Any]) -> bytes:
    return base64.b64decode(entry["payload_b64"])


def validate_bundle_body(body: dict[str, Any]) -> None:
    """Reject malformed CAPTURE_BUNDLE bodies before they reach storage."""
    for key in ("mission_id", "inspection_date", "captures"):
        if key not in body:
            raise RelayProtocolError("MALFORMED", f"bundle missing {key!r}")
    if not isinstance(body["captures"], list):
        raise RelayProtocolError("MALFORMED", "bundle captures must be a list")
    for entry in body["captures"]:
        if not isinstance(entry, dict):
            raise RelayProtocolError("MALFORMED", "bundle capture must be object")
        for key in ("capture_id", "drp_id", "order_index", "payload_b64"):
            if key not in entry:
                raise RelayProtocolError(
                    "MALFORMED", f"bundle capture missing {key!r}")
