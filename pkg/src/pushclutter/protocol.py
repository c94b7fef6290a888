"""Wire protocol for the session service.

Length-delimited JSON text frames over a persistent bidirectional stream:
each frame is the payload byte count in ASCII decimal, a newline, then
that many bytes of UTF-8 JSON. One kind-tagged message per frame. The
schema is versioned; docs/protocol_v1.schema.json carries the same rules
for non-Python clients.
"""

import json

from .dynamics import SystemConfiguration
from .geometry import Pose2

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 1 << 20

HELLO = "hello"
OPEN_SESSION = "open_session"
STATE_SNAPSHOT = "state_snapshot"
STATUS_CHANGED = "status_changed"
SELECT_OBJECT = "select_object"
SELECT_POINT = "select_point"
REACH_GOAL = "reach_goal"
ACTION_OUTCOME = "action_outcome"
ABORT_SESSION = "abort_session"
CLOSED = "closed"
ERROR = "error"

AWAITING_INPUT = "awaiting_input"
PLANNING = "planning"
EXECUTING = "executing"
SUCCEEDED = "succeeded"
FAILED = "failed"
STATUSES = (AWAITING_INPUT, PLANNING, EXECUTING, SUCCEEDED, FAILED)

HITL = "hitl"
HEURISTIC = "heuristic"
NAMO = "namo"
SCRIPTED = "scripted"
BARE_RRT = "bare_rrt"
BARE_KPIECE = "bare_kpiece"
MODES = (HITL, HEURISTIC, NAMO, SCRIPTED, BARE_RRT, BARE_KPIECE)


class ProtocolError(ValueError):
    """Malformed frame or message."""


def _is_str(v):
    return isinstance(v, str) and bool(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_bool(v):
    return isinstance(v, bool)


def _is_pose(v):
    return (isinstance(v, list) and len(v) == 3
            and all(_is_num(x) for x in v))


def _is_point(v):
    return (isinstance(v, list) and len(v) == 2
            and all(_is_num(x) for x in v))


def _is_pose_map(v):
    return (isinstance(v, dict)
            and all(_is_str(k) and _is_pose(p) for k, p in v.items()))


def _is_centroid(v):
    return v is None or _is_point(v)


def _is_status(v):
    return v in STATUSES


def _is_mode(v):
    return v in MODES


def _is_algorithm(v):
    return v in ("rrt", "kpiece")


def _is_budgets(v):
    return (isinstance(v, dict)
            and set(v) == {"overall", "pushing", "mode"}
            and _is_num(v["overall"]) and _is_num(v["pushing"])
            and v["mode"] in ("wall", "iterations"))


def _is_stats(v):
    return isinstance(v, dict) and all(
        _is_str(k) and _is_num(x) for k, x in v.items())


# kind -> (required fields, optional fields); each field maps to a checker
_SHAPES = {
    HELLO: ({"version": _is_int, "max_sessions": _is_int}, {}),
    OPEN_SESSION: ({"session": _is_str, "mode": _is_mode, "scene": _is_str},
                   {"budgets": _is_budgets, "seed": _is_int,
                    "algorithm": _is_algorithm, "script": _is_str}),
    STATE_SNAPSHOT: ({"session": _is_str, "seq": _is_int, "robot": _is_pose,
                      "objects": _is_pose_map}, {}),
    STATUS_CHANGED: ({"session": _is_str, "status": _is_status},
                     {"stats": _is_stats, "detail": _is_str}),
    SELECT_OBJECT: ({"session": _is_str, "object": _is_str}, {}),
    SELECT_POINT: ({"session": _is_str, "x": _is_num, "y": _is_num}, {}),
    REACH_GOAL: ({"session": _is_str}, {}),
    ACTION_OUTCOME: ({"session": _is_str, "object": _is_str,
                      "centroid": _is_centroid, "success": _is_bool,
                      "plan_time": _is_num}, {}),
    ABORT_SESSION: ({"session": _is_str}, {}),
    CLOSED: ({"reason": _is_str}, {"session": _is_str}),
    ERROR: ({"message": _is_str}, {"session": _is_str}),
}


def validate_message(msg) -> dict:
    """Check a decoded message against the schema; returns it unchanged."""
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    kind = msg.get("kind")
    if kind not in _SHAPES:
        raise ProtocolError(f"unknown message kind {kind!r}")
    required, optional = _SHAPES[kind]
    for field, ok in required.items():
        if field not in msg:
            raise ProtocolError(f"{kind}: missing field {field!r}")
        if not ok(msg[field]):
            raise ProtocolError(f"{kind}.{field}: invalid value "
                                f"{msg[field]!r}")
    for field, value in msg.items():
        if field == "kind" or field in required:
            continue
        if field not in optional:
            raise ProtocolError(f"{kind}: unexpected field {field!r}")
        if not optional[field](value):
            raise ProtocolError(f"{kind}.{field}: invalid value {value!r}")
    return msg


def encode_message(msg: dict) -> bytes:
    """Validate and frame one message."""
    validate_message(msg)
    payload = json.dumps(msg, separators=(",", ":")).encode("utf-8")
    if len(payload) > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {len(payload)} bytes exceeds limit")
    return b"%d\n%s" % (len(payload), payload)


class FrameDecoder:
    """Incremental decoder; feed() bytes arrive in arbitrary chunks."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list:
        """Returns every complete, validated message in arrival order."""
        self._buf.extend(data)
        out = []
        while True:
            nl = self._buf.find(b"\n")
            if nl < 0:
                if len(self._buf) > 20:
                    raise ProtocolError("frame header too long")
                return out
            header = bytes(self._buf[:nl])
            if not header.isdigit():
                raise ProtocolError(f"bad frame header {header!r}")
            length = int(header)
            if length > MAX_FRAME_BYTES:
                raise ProtocolError(f"frame of {length} bytes exceeds limit")
            end = nl + 1 + length
            if len(self._buf) < end:
                return out
            payload = bytes(self._buf[nl + 1:end])
            del self._buf[:end]
            try:
                msg = json.loads(payload.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise ProtocolError(f"frame payload not JSON: {e}") from e
            out.append(validate_message(msg))


def _pose_list(p: Pose2) -> list:
    return [p.x, p.y, p.theta]


def snapshot_message(session: str, seq: int, q: SystemConfiguration) -> dict:
    return {"kind": STATE_SNAPSHOT, "session": session, "seq": seq,
            "robot": _pose_list(q.robot),
            "objects": {k: _pose_list(p) for k, p in q.objects.items()}}


def configuration_from_snapshot(msg: dict) -> SystemConfiguration:
    """Inverse of snapshot_message; exact, JSON floats round-trip."""
    validate_message(msg)
    if msg["kind"] != STATE_SNAPSHOT:
        raise ProtocolError(f"expected {STATE_SNAPSHOT}, got {msg['kind']!r}")
    return SystemConfiguration(
        robot=Pose2(*msg["robot"]),
        objects={k: Pose2(*v) for k, v in msg["objects"].items()})


def status_message(session: str, status: str, stats=None) -> dict:
    msg = {"kind": STATUS_CHANGED, "session": session, "status": status}
    if stats is not None:
        msg["stats"] = stats
    return msg
