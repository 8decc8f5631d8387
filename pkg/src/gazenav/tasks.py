"""Task state machines for the two trial types.

Selection walks an ordered node/link sequence where a touch or attachment
completes each element; tracing additionally requires sweeping every link
along its full length, resuming at the frontier after leaving it. Both
machines are pure: ``advance_*`` returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from .engine import EngineEvent
from .geometry import Point, project_point_segment
from .graph import Graph
from .paths import TaskPath


@dataclass(frozen=True)
class TaskRules:
    node_hit_radius: float = 0.015
    trace_lateral_tol: float = 0.01
    # Resume-capture reach ahead of the frontier. Large enough that the
    # techniques' intrinsic handover jumps at a node (the magnet releases
    # the old link ~2.5 cm past it; a decisive slice exit commits ~3 cm
    # out) do not strand the fill, small enough that leaving a link still
    # means returning to resume rather than teleporting ahead.
    capture_window: float = 0.04


@dataclass(frozen=True)
class SelectionState:
    path: TaskPath
    next_index: int = 0
    start_t: float | None = None
    end_t: float | None = None

    @property
    def elements(self) -> tuple[tuple[str, str], ...]:
        return self.path.elements()

    @property
    def done(self) -> bool:
        return self.next_index >= len(self.elements)


@dataclass(frozen=True)
class TracingState:
    path: TaskPath
    next_index: int = 0
    frontier: float = 0.0
    start_t: float | None = None
    end_t: float | None = None

    @property
    def elements(self) -> tuple[tuple[str, str], ...]:
        return self.path.elements()

    @property
    def done(self) -> bool:
        return self.next_index >= len(self.elements)

    @property
    def current_link_index(self) -> int:
        """Index of the link being traced (next link element / 2)."""
        return self.next_index // 2


def _clocked(state, advanced: bool, was_index: int, t: float):
    if not advanced:
        return state
    if was_index == 0 and state.next_index > 0 and state.start_t is None:
        state = replace(state, start_t=t)
    if state.done and state.end_t is None:
        state = replace(state, end_t=t)
    return state


def advance_selection(
    state: SelectionState,
    events: Iterable[EngineEvent],
    t: float,
    rules: TaskRules | None = None,
) -> SelectionState:
    """Complete as many expected elements as this step's evidence allows.

    Node evidence is a cursor_over_node event (the engine emits those from
    whatever point the technique designates); link evidence is the link
    under the cursor/ring/magnet or a committed slice choice. Touches that
    are not the next expected element are ignored.
    """
    if state.done:
        return state
    nodes_touched = set()
    links_touched = set()
    for e in events:
        if e.kind == "cursor_over_node":
            nodes_touched.add(e.node)
        elif e.kind in ("cursor_over_link", "slice_committed"):
            links_touched.add(e.link)

    was = state.next_index
    elements = state.elements
    idx = state.next_index
    while idx < len(elements):
        kind, ident = elements[idx]
        if kind == "node" and ident in nodes_touched:
            idx += 1
        elif kind == "link" and ident in links_touched:
            idx += 1
        else:
            break
    if idx == state.next_index:
        return state
    return _clocked(replace(state, next_index=idx), True, was, t)


def _oriented_link_segment(graph: Graph, path: TaskPath, link_index: int) -> tuple[Point, Point, float]:
    a = graph.node(path.nodes[link_index]).pos
    b = graph.node(path.nodes[link_index + 1]).pos
    return a, b, math.dist(a, b)


def advance_tracing(
    state: TracingState,
    tracer_point: Point | None,
    t: float,
    graph: Graph,
    rules: TaskRules | None = None,
) -> TracingState:
    """Advance the frontier along the current link and touch nodes in order.

    The frontier moves to the tracer's projection only while the tracer
    stays within the lateral tolerance and the projection lands inside the
    capture window ahead of the frontier, so jumping ahead never skips
    length and returning to the frontier resumes exactly there.
    """
    if state.done or tracer_point is None:
        return state
    rules = rules or TaskRules()
    was = state.next_index
    elements = state.elements
    advanced = False

    for _ in range(len(elements) + 2):
        if state.next_index >= len(elements):
            break
        kind, ident = elements[state.next_index]
        if kind == "node":
            pos = graph.node(ident).pos
            if math.dist(tracer_point, pos) <= rules.node_hit_radius:
                state = replace(state, next_index=state.next_index + 1, frontier=0.0)
                advanced = True
                continue
            break
        link_index = state.next_index // 2
        a, b, seg_len = _oriented_link_segment(graph, state.path, link_index)
        pr = project_point_segment(tracer_point, a, b)
        if (
            pr.distance <= rules.trace_lateral_tol
            and state.frontier <= pr.arclen <= state.frontier + rules.capture_window
        ):
            new_frontier = pr.arclen
            if new_frontier >= seg_len - 1e-12:
                state = replace(state, next_index=state.next_index + 1, frontier=seg_len)
                advanced = True
                continue
            if new_frontier > state.frontier:
                state = replace(state, frontier=new_frontier)
                advanced = True
        break

    return _clocked(state, advanced, was, t)


def trial_complete(state: SelectionState | TracingState) -> tuple[bool, float | None]:
    """Completion flag and elapsed seconds (None before the start touch)."""
    if state.done and state.start_t is not None and state.end_t is not None:
        return True, state.end_t - state.start_t
    return False, None


def progress_snapshot(state: SelectionState | TracingState, graph: Graph | None = None) -> dict:
    """Per-element status plus the current frontier fraction, for rendering."""
    elements = state.elements
    out = {
        "kind": "tracing" if isinstance(state, TracingState) else "selection",
        "next_index": state.next_index,
        "done": state.done,
        "started": state.start_t is not None,
        "elements": [
            {"kind": kind, "id": ident, "done": i < state.next_index}
            for i, (kind, ident) in enumerate(elements)
        ],
    }
    if isinstance(state, TracingState):
        frac = 0.0
        if not state.done and graph is not None:
            kind, _ = elements[state.next_index]
            if kind == "link":
                _, _, seg_len = _oriented_link_segment(graph, state.path, state.current_link_index)
                frac = state.frontier / seg_len if seg_len > 0 else 0.0
        elif state.done:
            frac = 1.0
        out["frontier_fraction"] = frac
        out["frontier"] = state.frontier
    out["start_t"] = state.start_t
    out["end_t"] = state.end_t
    return out
