"""Wire protocol: framing, message validation, and the snapshot
round trip. The JSON Schema document must agree with the Python
validator, so both get run over the same message battery."""

import json
import math
from pathlib import Path

import jsonschema
import pytest

from pushclutter.dynamics import SystemConfiguration
from pushclutter.geometry import Pose2
from pushclutter.protocol import (
    MAX_FRAME_BYTES, PROTOCOL_VERSION,
    FrameDecoder, ProtocolError, configuration_from_snapshot,
    encode_message, snapshot_message, status_message, validate_message,
)

from _util import config_bits

SCHEMA = json.loads(
    (Path(__file__).parent.parent / "docs" / "protocol_v1.schema.json")
    .read_text(encoding="utf-8"))

VALID_MESSAGES = [
    {"kind": "hello", "version": 1, "max_sessions": 8},
    {"kind": "open_session", "session": "s1", "mode": "hitl",
     "scene": "scene_format_version: 1\n"},
    {"kind": "open_session", "session": "s2", "mode": "scripted",
     "scene": "x", "script": "version: 1\n", "seed": 7,
     "algorithm": "kpiece",
     "budgets": {"overall": 300, "pushing": 10, "mode": "wall"}},
    {"kind": "state_snapshot", "session": "s1", "seq": 0,
     "robot": [0.0, -1.5, 3.14], "objects": {"a": [1, 2, 3]}},
    {"kind": "state_snapshot", "session": "s1", "seq": 4,
     "robot": [0, 0, 0], "objects": {}},
    {"kind": "status_changed", "session": "s1", "status": "planning"},
    {"kind": "status_changed", "session": "s1", "status": "failed",
     "stats": {"idle_time": 2.5, "proposed_actions": 4},
     "detail": "overall_timeout"},
    {"kind": "select_object", "session": "s1", "object": "crate_3"},
    {"kind": "select_point", "session": "s1", "x": 0.45, "y": -0.4},
    {"kind": "reach_goal", "session": "s1"},
    {"kind": "action_outcome", "session": "s1", "object": "crate_3",
     "centroid": [0.45, 0.4], "success": True, "plan_time": 2.31},
    {"kind": "action_outcome", "session": "s1", "object": "goal",
     "centroid": None, "success": False, "plan_time": 10.0},
    {"kind": "abort_session", "session": "s1"},
    {"kind": "closed", "session": "s1", "reason": "finished"},
    {"kind": "closed", "reason": "shutting down"},
    {"kind": "error", "message": "unknown session 'zz'", "session": "zz"},
    {"kind": "error", "message": "bad frame"},
]

INVALID_MESSAGES = [
    {"kind": "nonsense"},
    {"kind": "hello", "version": 1},
    {"kind": "hello", "version": "1", "max_sessions": 8},
    {"kind": "hello", "version": 1, "max_sessions": 8, "extra": 1},
    {"kind": "open_session", "session": "", "mode": "hitl", "scene": "x"},
    {"kind": "open_session", "session": "s", "mode": "manual", "scene": "x"},
    {"kind": "open_session", "session": "s", "mode": "hitl", "scene": "x",
     "algorithm": "prm"},
    {"kind": "open_session", "session": "s", "mode": "hitl", "scene": "x",
     "budgets": {"overall": 300, "pushing": 10}},
    {"kind": "open_session", "session": "s", "mode": "hitl", "scene": "x",
     "budgets": {"overall": 300, "pushing": 10, "mode": "steps"}},
    {"kind": "state_snapshot", "session": "s", "seq": 0,
     "robot": [0.0, 1.0], "objects": {}},
    {"kind": "state_snapshot", "session": "s", "seq": 0,
     "robot": [0, 0, 0], "objects": {"a": [1, 2]}},
    {"kind": "status_changed", "session": "s", "status": "resting"},
    {"kind": "status_changed", "session": "s", "status": "failed",
     "stats": {"note": "text"}},
    {"kind": "select_point", "session": "s", "x": "0.4", "y": 0.0},
    {"kind": "action_outcome", "session": "s", "object": "a",
     "centroid": [1.0], "success": True, "plan_time": 0.0},
    {"kind": "action_outcome", "session": "s", "object": "a",
     "centroid": None, "success": 1, "plan_time": 0.0},
    {"kind": "closed"},
    {"kind": "error", "session": "s"},
]


# ---------------------------------------------------------------------------
# validation

@pytest.mark.parametrize("msg", VALID_MESSAGES,
                         ids=lambda m: m["kind"])
def test_validator_accepts(msg):
    assert validate_message(msg) is msg


@pytest.mark.parametrize("msg", INVALID_MESSAGES,
                         ids=lambda m: str(sorted(m.items()))[:60])
def test_validator_rejects(msg):
    with pytest.raises(ProtocolError):
        validate_message(msg)


def test_validator_rejects_non_object():
    with pytest.raises(ProtocolError):
        validate_message(["kind", "hello"])


def test_schema_document_agrees_with_validator():
    jsonschema.Draft202012Validator.check_schema(SCHEMA)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    for msg in VALID_MESSAGES:
        validator.validate(msg)
    for msg in INVALID_MESSAGES:
        assert not validator.is_valid(msg), msg


# ---------------------------------------------------------------------------
# framing

def test_encode_decode_single_frame():
    msg = {"kind": "reach_goal", "session": "s1"}
    data = encode_message(msg)
    count, payload = data.split(b"\n", 1)
    assert int(count) == len(payload)
    assert FrameDecoder().feed(data) == [msg]


def test_decoder_handles_arbitrary_chunking():
    frames = b"".join(encode_message(m) for m in VALID_MESSAGES)
    for chunk in (1, 2, 3, 7, 64):
        dec = FrameDecoder()
        out = []
        for i in range(0, len(frames), chunk):
            out.extend(dec.feed(frames[i:i + chunk]))
        assert out == VALID_MESSAGES


def test_decoder_returns_batch_in_order():
    frames = b"".join(encode_message(m) for m in VALID_MESSAGES)
    assert FrameDecoder().feed(frames) == VALID_MESSAGES


def test_decoder_keeps_partial_frame_pending():
    data = encode_message({"kind": "reach_goal", "session": "s1"})
    dec = FrameDecoder()
    assert dec.feed(data[:-1]) == []
    assert dec.feed(data[-1:]) == [{"kind": "reach_goal", "session": "s1"}]


def test_decoder_rejects_oversize_frame():
    dec = FrameDecoder()
    with pytest.raises(ProtocolError):
        dec.feed(b"%d\n" % (MAX_FRAME_BYTES + 1))


def test_encode_rejects_oversize_message():
    msg = {"kind": "error", "message": "x" * (MAX_FRAME_BYTES + 1)}
    with pytest.raises(ProtocolError):
        encode_message(msg)


def test_decoder_rejects_bad_header():
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(b"12a\n{}")


def test_decoder_rejects_unterminated_header():
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(b"1" * 21)


def test_decoder_rejects_non_json_payload():
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(b"3\nnop")


def test_decoder_rejects_invalid_message():
    payload = json.dumps({"kind": "nonsense"}).encode()
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(b"%d\n%s" % (len(payload), payload))


def test_frame_payload_length_counts_bytes_not_chars():
    msg = {"kind": "error", "message": "éé"}
    data = encode_message(msg)
    assert FrameDecoder().feed(data) == [msg]


# ---------------------------------------------------------------------------
# snapshots

def test_snapshot_round_trip_is_bit_exact():
    q = SystemConfiguration(
        robot=Pose2(math.pi, -0.0, 1 / 3),
        objects={"a": Pose2(0.1 + 0.2, -1e-17, 2.5),
                 "b": Pose2(-5.5, 1e300, -math.pi)})
    msg = snapshot_message("s1", 3, q)
    wire = FrameDecoder().feed(encode_message(msg))[0]
    back = configuration_from_snapshot(wire)
    assert config_bits(back) == config_bits(q)
    assert wire["seq"] == 3


def test_snapshot_survives_json_text_round_trip():
    q = SystemConfiguration(robot=Pose2(math.pi, 0.3, -2.71),
                            objects={"a": Pose2(1 / 3, 2 / 3, 0.0)})
    msg = snapshot_message("s", 0, q)
    back = configuration_from_snapshot(json.loads(json.dumps(msg)))
    assert config_bits(back) == config_bits(q)


def test_configuration_from_snapshot_rejects_other_kinds():
    with pytest.raises(ProtocolError):
        configuration_from_snapshot(
            {"kind": "reach_goal", "session": "s1"})


def test_status_message_shapes():
    msg = status_message("s1", "succeeded", {"idle_time": 1.5})
    assert validate_message(msg) is msg
    bare = status_message("s1", "planning")
    assert "stats" not in bare
    assert validate_message(bare) is bare
    assert PROTOCOL_VERSION == 1
