"""Session protocol for the interactive demo.

A WebSocket endpoint speaks newline-terminated JSON messages in a
versioned envelope. Each gaze message gets exactly one frame reply; a
"set" message (re)builds the session and replies with the full scene so
the client can draw the shared graph. Unknown message fields are
rejected, which keeps client and engine schemas honest.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field, replace

from .engine import (
    EngineEvent,
    EngineState,
    GazeSample,
    NavEngine,
    OverlayFrame,
    Technique,
    TechniqueConfig,
)
from .generate import generate_small_world, load_metro
from .graph import Graph
from .paths import TaskPath, sample_task_path
from .tasks import (
    SelectionState,
    TaskRules,
    TracingState,
    advance_selection,
    advance_tracing,
    progress_snapshot,
)

PROTOCOL_VERSION = 1

GRAPH_KINDS = ("metro", "small-world")
PATH_KINDS = ("weighted", "homogeneous")
TASKS = ("selection", "tracing")


class ProtocolError(ValueError):
    """Client message failed schema validation."""


def _require_keys(obj: dict, required: dict, optional: dict | None = None) -> None:
    optional = optional or {}
    for key, typ in required.items():
        if key not in obj:
            raise ProtocolError(f"missing field {key!r}")
        if not isinstance(obj[key], typ):
            raise ProtocolError(f"field {key!r} has wrong type")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ProtocolError(f"unknown field {key!r}")
    for key, typ in optional.items():
        if key in obj and not isinstance(obj[key], typ):
            raise ProtocolError(f"field {key!r} has wrong type")


def validate_client_message(obj: object) -> dict:
    """Validate one client->engine message, returning it typed."""
    if not isinstance(obj, dict):
        raise ProtocolError("message must be an object")
    if obj.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {obj.get('v')!r}")
    kind = obj.get("type")
    if kind == "gaze":
        _require_keys(
            obj,
            {"v": int, "type": str, "t": (int, float), "x": (int, float), "y": (int, float)},
        )
        return obj
    if kind == "set":
        _require_keys(
            obj,
            {"v": int, "type": str, "technique": str, "graph": str, "path_kind": str, "task": str},
            {"seed": int},
        )
        if obj["technique"] not in [t.value for t in Technique]:
            raise ProtocolError(f"unknown technique {obj['technique']!r}")
        if obj["graph"] not in GRAPH_KINDS:
            raise ProtocolError(f"unknown graph {obj['graph']!r}")
        if obj["path_kind"] not in PATH_KINDS:
            raise ProtocolError(f"unknown path_kind {obj['path_kind']!r}")
        if obj["task"] not in TASKS:
            raise ProtocolError(f"unknown task {obj['task']!r}")
        return obj
    raise ProtocolError(f"unknown message type {kind!r}")


# ---------------------------------------------------------------------------
# Serialization of engine output
# ---------------------------------------------------------------------------


def _point(p) -> list[float]:
    return [float(p[0]), float(p[1])]


def frame_to_json(frame: OverlayFrame) -> dict:
    out: dict = {"gaze": _point(frame.gaze)}
    out["ring"] = _point(frame.ring) if frame.ring is not None else None
    out["trail"] = [_point(frame.trail[0]), _point(frame.trail[1])] if frame.trail else None
    out["rope"] = [_point(frame.rope[0]), _point(frame.rope[1])] if frame.rope else None
    if frame.elastic is not None:
        out["elastic"] = {
            "points": [_point(p) for p in frame.elastic.points],
            "tethers": [[_point(d), _point(o)] for d, o in frame.elastic.tethers],
            "alpha": float(frame.elastic_alpha),
        }
    else:
        out["elastic"] = None
    out["rays"] = [
        {"link": r.link, "point": _point(r.point), "intensity": float(r.intensity)}
        for r in frame.rays
    ]
    return out


def event_to_json(e: EngineEvent) -> dict:
    out: dict = {"kind": e.kind}
    for name in ("node", "link", "subpath"):
        value = getattr(e, name)
        if value is not None:
            out[name] = value
    return out


def graph_to_json(graph: Graph) -> dict:
    return {
        "display_extent": {"w": graph.display_extent[0], "h": graph.display_extent[1]},
        "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in graph.nodes],
        "links": [{"id": l.id, "a": l.a, "b": l.b, "w": l.w} for l in graph.links],
    }


# ---------------------------------------------------------------------------
# Session
# ---------------------------------------------------------------------------


@dataclass
class Session:
    """One engine/task instance driven by a stream of protocol messages."""

    graph: Graph | None = None
    path: TaskPath | None = None
    engine: NavEngine | None = None
    state: EngineState | None = None
    task: str = "selection"
    task_state: SelectionState | TracingState | None = None
    rules: TaskRules = field(default_factory=TaskRules)

    def handle(self, message: dict) -> dict:
        msg = validate_client_message(message)
        if msg["type"] == "set":
            return self._handle_set(msg)
        return self._handle_gaze(msg)

    def _handle_set(self, msg: dict) -> dict:
        seed = msg.get("seed", 0)
        if msg["graph"] == "metro":
            base = load_metro()
        else:
            base = generate_small_world(180, 4, 0.1, seed=seed)
        path, graph = sample_task_path(
            base,
            kind=msg["path_kind"],
            require_long_link=(msg["graph"] == "small-world"),
            seed=seed,
        )
        self.graph = graph
        self.path = path
        self.task = msg["task"]
        self.engine = NavEngine(msg["technique"], graph, start_hint=path.start_node)
        self.state = self.engine.initial_state()
        if self.task == "selection":
            self.task_state = SelectionState(path)
        else:
            self.task_state = TracingState(path)
        return {
            "v": PROTOCOL_VERSION,
            "type": "scene",
            "technique": msg["technique"],
            "task": self.task,
            "path_kind": msg["path_kind"],
            "graph": graph_to_json(graph),
            "path": {
                "nodes": list(path.nodes),
                "links": list(path.links),
                "start": path.start_node,
            },
        }

    def _handle_gaze(self, msg: dict) -> dict:
        if self.engine is None or self.state is None or self.task_state is None:
            raise ProtocolError("no session configured; send a set message first")
        sample = GazeSample(float(msg["t"]), (float(msg["x"]), float(msg["y"])))
        self.state, frame, events = self.engine.step(self.state, sample)
        if self.task == "selection":
            self.task_state = advance_selection(self.task_state, events, sample.t, self.rules)
        else:
            tracer = self.engine.active_point(self.state, sample.pos)
            self.task_state = advance_tracing(
                self.task_state, tracer, sample.t, self.graph, self.rules
            )
        return {
            "v": PROTOCOL_VERSION,
            "type": "frame",
            "overlay": frame_to_json(frame),
            "task": progress_snapshot(self.task_state, self.graph),
            "events": [event_to_json(e) for e in events],
        }


def encode(message: dict) -> str:
    return json.dumps(message, separators=(",", ":")) + "\n"


async def _serve_connection(websocket) -> None:
    session = Session()
    async for raw in websocket:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            await websocket.send(encode({"v": PROTOCOL_VERSION, "type": "error", "reason": f"bad json: {e.msg}"}))
            continue
        try:
            reply = session.handle(obj)
        except ProtocolError as e:
            reply = {"v": PROTOCOL_VERSION, "type": "error", "reason": str(e)}
        await websocket.send(encode(reply))


async def serve(host: str = "127.0.0.1", port: int = 8765) -> None:
    """Run the session endpoint until cancelled."""
    import websockets

    async with websockets.serve(_serve_connection, host, port):
        await asyncio.Future()


def run_server(host: str = "127.0.0.1", port: int = 8765) -> None:
    asyncio.run(serve(host, port))
