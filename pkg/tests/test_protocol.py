from __future__ import annotations

import json

import pytest

from gazenav.protocol import (
    PROTOCOL_VERSION,
    ProtocolError,
    Session,
    encode,
    validate_client_message,
)


def gaze(t, x, y):
    return {"v": PROTOCOL_VERSION, "type": "gaze", "t": t, "x": x, "y": y}


def set_msg(**overrides):
    msg = {
        "v": PROTOCOL_VERSION,
        "type": "set",
        "technique": "sliding-ring",
        "graph": "metro",
        "path_kind": "weighted",
        "task": "selection",
        "seed": 3,
    }
    msg.update(overrides)
    return msg


# ---------------------------------------------------------------------------
# Schema validation
# ---------------------------------------------------------------------------


def test_valid_messages_pass():
    validate_client_message(gaze(0.0, 1.0, 1.0))
    validate_client_message(set_msg())


def test_unknown_fields_rejected():
    bad = gaze(0.0, 1.0, 1.0)
    bad["extra"] = True
    with pytest.raises(ProtocolError, match="unknown field"):
        validate_client_message(bad)


def test_missing_fields_rejected():
    bad = gaze(0.0, 1.0, 1.0)
    del bad["x"]
    with pytest.raises(ProtocolError, match="missing field"):
        validate_client_message(bad)


def test_wrong_types_rejected():
    bad = gaze(0.0, "left", 1.0)
    with pytest.raises(ProtocolError, match="wrong type"):
        validate_client_message(bad)


def test_wrong_version_rejected():
    bad = gaze(0.0, 1.0, 1.0)
    bad["v"] = 99
    with pytest.raises(ProtocolError, match="version"):
        validate_client_message(bad)


def test_unknown_enum_values_rejected():
    with pytest.raises(ProtocolError, match="technique"):
        validate_client_message(set_msg(technique="levitate"))
    with pytest.raises(ProtocolError, match="graph"):
        validate_client_message(set_msg(graph="torus"))
    with pytest.raises(ProtocolError, match="task"):
        validate_client_message(set_msg(task="hover"))


def test_unknown_message_type_rejected():
    with pytest.raises(ProtocolError, match="message type"):
        validate_client_message({"v": PROTOCOL_VERSION, "type": "dance"})


# ---------------------------------------------------------------------------
# Session behavior
# ---------------------------------------------------------------------------


def test_set_returns_scene():
    session = Session()
    reply = session.handle(set_msg())
    assert reply["type"] == "scene"
    assert len(reply["graph"]["nodes"]) == 302
    assert len(reply["path"]["nodes"]) == 8
    assert reply["path"]["start"] == reply["path"]["nodes"][0]


def test_gaze_before_set_is_protocol_error():
    session = Session()
    with pytest.raises(ProtocolError, match="set message"):
        session.handle(gaze(0.0, 1.0, 1.0))


def test_one_frame_reply_per_gaze():
    session = Session()
    scene = session.handle(set_msg())
    start = scene["path"]["nodes"][0]
    node = next(n for n in scene["graph"]["nodes"] if n["id"] == start)
    reply = session.handle(gaze(0.0, node["x"], node["y"]))
    assert reply["type"] == "frame"
    assert set(reply) == {"v", "type", "overlay", "task", "events"}
    assert reply["overlay"]["gaze"] == [node["x"], node["y"]]
    assert reply["task"]["kind"] == "selection"


def test_transcript_replay_reproduces_frames():
    """The same message stream always yields byte-identical replies."""

    def run():
        session = Session()
        out = [session.handle(set_msg(seed=5))]
        scene = out[0]
        start = scene["path"]["nodes"][0]
        node = next(n for n in scene["graph"]["nodes"] if n["id"] == start)
        x, y = node["x"], node["y"]
        for k in range(40):
            out.append(session.handle(gaze(k / 60, x + 0.004 * k, y + 0.001 * (k % 5))))
        return [encode(m) for m in out]

    assert run() == run()


def test_encode_is_newline_terminated_json():
    line = encode({"v": 1, "type": "x"})
    assert line.endswith("\n")
    assert json.loads(line) == {"v": 1, "type": "x"}


def test_session_tracing_progress_snapshot():
    session = Session()
    scene = session.handle(set_msg(task="tracing", technique="baseline"))
    start = scene["path"]["nodes"][0]
    node = next(n for n in scene["graph"]["nodes"] if n["id"] == start)
    reply = session.handle(gaze(0.0, node["x"], node["y"]))
    task = reply["task"]
    assert task["kind"] == "tracing"
    assert "frontier_fraction" in task
    assert task["elements"][0]["done"] is True  # start node touched
