"""Trial and experiment runners over the technique/graph/path/task grid.

The simulator measures mechanism cost, not human timing: scripted
trajectories are driven through the engine and task harness, and when a
trajectory stalls (no task progress inside a window), a corrective
sub-route toward the next expected element is injected, the way a person
would re-orient. Only orderings of the resulting times are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .engine import GazeSample, NavEngine, Technique, TechniqueConfig
from .generate import generate_small_world, load_metro
from .geometry import Point, project_point_segment
from .graph import Graph
from .paths import TaskPath, sample_task_path
from .tasks import (
    SelectionState,
    TaskRules,
    TracingState,
    advance_selection,
    advance_tracing,
    trial_complete,
)
from .trajectory import RouteSampler, TrajectoryProfile, ideal_route

RESULT_COLUMNS = (
    "technique",
    "graph",
    "path_kind",
    "task",
    "trial",
    "seed",
    "time_s",
    "detaches",
    "attaches",
    "ring_jumps",
    "distance_m",
    "completed",
)

RING_JUMP_THRESHOLD = 0.1


@dataclass(frozen=True)
class TrialResult:
    technique: str
    graph: str
    path_kind: str
    task: str
    trial: int
    seed: int
    time_s: float
    detaches: int
    attaches: int
    ring_jumps: int
    distance_m: float
    completed: bool

    def row(self) -> str:
        return ",".join(
            (
                self.technique,
                self.graph,
                self.path_kind,
                self.task,
                str(self.trial),
                str(self.seed),
                f"{self.time_s:.6f}",
                str(self.detaches),
                str(self.attaches),
                str(self.ring_jumps),
                f"{self.distance_m:.6f}",
                "true" if self.completed else "false",
            )
        )


DETOUR_DIST = 0.06  # past the candidate radius: breaks a stuck attachment
EXIT_REACH = 0.038  # decisive slice exit: beyond the commit radius, inside the capture reach


def _unit(v: Point) -> Point:
    n = math.hypot(*v)
    return (v[0] / n, v[1] / n) if n > 1e-12 else (1.0, 0.0)


AIM_PRACTICE = 0.6  # how far toward the true zone center a user's exit leans


def _exit_aim_point(engine: NavEngine, path: TaskPath, j: int) -> Point | None:
    """Where a practiced sliding user exits node j of the path.

    The ring forgives gaze deviations from the path, so users exit a
    branch node with an exaggerated movement toward where they have
    learned their intended link's influence lies (the fanning spreads
    zones away from crowded link directions). The lean toward the true
    zone center is partial: practice is imperfect.
    """
    node_id = path.nodes[j]
    target = path.links[j]
    arrival = path.links[j - 1] if j > 0 else None
    links, slices = engine.node_slices(node_id, arrival)
    if target not in links or len(links) == 1:
        return None
    lo, hi = slices.zones[links.index(target)]
    center = ((lo + hi) / 2.0) % 360.0
    origin = engine.graph.node(node_id).pos
    other = engine.graph.node(engine.graph.link(target).other(node_id)).pos
    raw = math.degrees(math.atan2(other[1] - origin[1], other[0] - origin[0])) % 360.0
    lean = (center - raw + 180.0) % 360.0 - 180.0
    ang = math.radians(raw + AIM_PRACTICE * lean)
    return (
        origin[0] + EXIT_REACH * math.cos(ang),
        origin[1] + EXIT_REACH * math.sin(ang),
    )


def sliding_route(path: TaskPath, graph: Graph, profile, engine: NavEngine) -> list[Point]:
    """Ideal route as driven by a practiced sliding-technique user.

    Node-to-node course with corner overshoot at the nodes themselves,
    plus an exit kink through the intended slice zone after every branch
    node. Overshoot is not applied at kink corners: those are deliberate,
    not ballistic.
    """
    out: list[Point] = [graph.node(path.nodes[0]).pos]
    for j in range(len(path.links)):
        node = graph.node(path.nodes[j]).pos
        if j > 0:
            prev = out[-2] if len(out) >= 2 else out[-1]
            d_in = _unit((node[0] - prev[0], node[1] - prev[1]))
            nxt = graph.node(path.nodes[j + 1]).pos
            d_out = _unit((nxt[0] - node[0], nxt[1] - node[1]))
            cosang = d_in[0] * d_out[0] + d_in[1] * d_out[1]
            if cosang < math.cos(math.radians(15.0)) and profile.corner_overshoot > 0:
                out.append(
                    (
                        node[0] + d_in[0] * profile.corner_overshoot,
                        node[1] + d_in[1] * profile.corner_overshoot,
                    )
                )
        kink = _exit_aim_point(engine, path, j)
        if kink is not None:
            out.append(kink)
        out.append(graph.node(path.nodes[j + 1]).pos)
    return out


def _drag_waypoints(sp, from_arclen: float, to_arclen: float) -> list[Point]:
    """Waypoints gliding along a subpath polyline between two arc lengths.

    A gaze following these pulls a sliding ring continuously (the ring is
    the nearest-point projection, and the gaze sits on the polyline).
    """
    from .geometry import point_at_arclen

    pts = [point_at_arclen(sp.polyline, from_arclen, sp.cum_lengths)]
    if to_arclen >= from_arclen:
        for v, c in zip(sp.polyline, sp.cum_lengths):
            if from_arclen < c < to_arclen:
                pts.append(v)
    else:
        for v, c in reversed(list(zip(sp.polyline, sp.cum_lengths))):
            if to_arclen < c < from_arclen:
                pts.append(v)
    pts.append(point_at_arclen(sp.polyline, to_arclen, sp.cum_lengths))
    return pts


def _tracer_visibly_off(
    task_state: TracingState, tracer: Point | None, graph: Graph, rules: TaskRules
) -> bool:
    """Whether the on-screen state says tracing cannot be progressing.

    True when there is no tracer at all (a magnet with nothing attached),
    when the tracer sits visibly off the current link, or when it runs
    ahead of the progress fill beyond the capture reach.
    """
    if tracer is None:
        return True
    j = task_state.next_index // 2
    a = graph.node(task_state.path.nodes[j]).pos
    b = graph.node(task_state.path.nodes[j + 1]).pos
    pr = project_point_segment(tracer, a, b)
    if pr.distance > rules.trace_lateral_tol + 1e-3:
        return True
    return pr.arclen > task_state.frontier + rules.capture_window + 1e-3


def _shortest_node_route(graph: Graph, source: str, targets: set[str]) -> dict[str, list[str]]:
    """Geometric-shortest node sequences from each target to ``source``.

    One Dijkstra run from the source; deterministic tie-breaking by node id.
    """
    import heapq

    dist: dict[str, float] = {source: 0.0}
    parent: dict[str, str] = {}
    heap: list[tuple[float, str]] = [(0.0, source)]
    remaining = set(targets)
    remaining.discard(source)
    while heap and remaining:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        remaining.discard(u)
        for lid in graph.incident(u):
            v = graph.link(lid).other(u)
            nd = d + math.dist(graph.node(u).pos, graph.node(v).pos)
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    routes: dict[str, list[str]] = {}
    for t in targets:
        if t == source:
            routes[t] = [source]
            continue
        if t not in dist:
            continue
        seq = [t]
        while seq[-1] != source:
            seq.append(parent[seq[-1]])
        routes[t] = seq  # runs target -> source
    return routes


def _sliding_recovery_prefix(
    task_state: SelectionState | TracingState,
    gaze: Point,
    graph: Graph,
    subpath,
    ring_arclen: float,
    target_node: str,
) -> tuple[list[Point], bool]:
    """Route prefix that walks the ring somewhere useful.

    A sliding ring moves only along the network, so recovery means
    sliding: drag the ring along its chain to the better endpoint, then
    glide the gaze link-by-link over a shortest graph route to the target
    node, pulling the ring across each branch point. If the attached
    chain already carries the expected element, drag straight onto it.
    """
    kind, ident = task_state.elements[task_state.next_index]
    j = task_state.next_index // 2
    path = task_state.path

    if kind == "node" and ident in subpath.nodes:
        to_arc = subpath.arclen_of_node(ident)
        return [gaze] + _drag_waypoints(subpath, ring_arclen, to_arc), True
    if kind == "link" and ident in subpath.links:
        # Drag to the path-wise start of the link, then sweep it in path
        # order; the ring is the tracer, so this also feeds the frontier.
        start_arc = subpath.arclen_of_node(path.nodes[j])
        end_arc = subpath.arclen_of_node(path.nodes[j + 1])
        pts = [gaze] + _drag_waypoints(subpath, ring_arclen, start_arc)
        pts += _drag_waypoints(subpath, start_arc, end_arc)[1:]
        return pts, True

    ends = {subpath.nodes[0]: 0.0, subpath.nodes[-1]: subpath.total_length}
    routes = _shortest_node_route(graph, target_node, set(ends))
    best = None
    for end_node, end_arc in ends.items():
        if end_node not in routes:
            continue
        walk = sum(
            math.dist(graph.node(a).pos, graph.node(b).pos)
            for a, b in zip(routes[end_node], routes[end_node][1:])
        )
        score = abs(end_arc - ring_arclen) + walk
        if best is None or score < best[0]:
            best = (score, end_arc, routes[end_node])
    if best is None:
        return [gaze], False
    _, end_arc, node_seq = best
    pts = [gaze] + _drag_waypoints(subpath, ring_arclen, end_arc)
    pts += [graph.node(n).pos for n in node_seq[1:]]  # endpoint -> ... -> target
    return pts, kind == "node"


def _corrective_route(
    task_state: SelectionState | TracingState,
    gaze: Point,
    graph: Graph,
    rules: TaskRules,
    retry: int = 0,
    subpath=None,
    ring_arclen: float | None = None,
    attached_link: str | None = None,
    engine: NavEngine | None = None,
) -> list[Point] | None:
    """Waypoints from the current gaze back toward the next expected element.

    Link elements are re-approached through their start node so a sliding
    ring stranded on a neighboring chain gets dragged back across the
    branch point, then swept along the full link. Repeated stalls add an
    exaggerated detour that swings wide of the target before approaching,
    the way a user breaks a magnet stuck on a nearly parallel neighbor:
    past the candidate radius everything releases, and the re-approach
    from the open side acquires the intended element.
    """
    if task_state.done:
        return None
    path = task_state.path
    kind, ident = task_state.elements[task_state.next_index]
    j = task_state.next_index // 2

    # Exiting a node in a jitter-random direction causes random slice
    # choices, so routes never park on a node: they push on toward the
    # element that follows.
    if kind == "node":
        onward_idx = j + 1
    else:
        onward_idx = j + 2
    onward = (
        [graph.node(path.nodes[onward_idx]).pos]
        if onward_idx < len(path.nodes)
        else []
    )

    prefix: list[Point] = [gaze]
    if subpath is not None and ring_arclen is not None:
        target_node = ident if kind == "node" else path.nodes[j]
        prefix, handled = _sliding_recovery_prefix(
            task_state, gaze, graph, subpath, ring_arclen, target_node
        )
        if handled:
            return prefix + onward

    if kind == "node":
        target = graph.node(ident).pos
        route = list(prefix)
        if attached_link is not None:
            # A magnet stuck on a link passing close by the node blocks the
            # touch; hovering on the node's far side flips the values in
            # favor of an incident link.
            a, b = graph.segment(attached_link)
            pr = project_point_segment(target, a, b)
            away = _unit((target[0] - pr.point[0], target[1] - pr.point[1]))
            rot = math.radians(((retry % 3) - 1) * 35.0)
            c, s = math.cos(rot), math.sin(rot)
            u = (away[0] * c - away[1] * s, away[0] * s + away[1] * c)
            route.append((target[0] + u[0] * 0.05, target[1] + u[1] * 0.05))
        elif retry > 0:
            prev = graph.node(path.nodes[j - 1]).pos if j > 0 else gaze
            along = _unit((target[0] - prev[0], target[1] - prev[1]))
            perp = (-along[1], along[0])
            u = (along, perp, (-perp[0], -perp[1]))[(retry - 1) % 3]
            route.append((target[0] + u[0] * DETOUR_DIST, target[1] + u[1] * DETOUR_DIST))
        route.append(target)
        return route + onward

    a = graph.node(path.nodes[j]).pos
    b = graph.node(path.nodes[j + 1]).pos
    seg_len = math.dist(a, b)
    entry_arc = 0.0
    if isinstance(task_state, TracingState) and task_state.frontier > 0:
        # Aim just inside the capture reach behind the frontier: far enough
        # back to resume, close enough not to re-cross the start node.
        entry_arc = min(max(task_state.frontier - rules.capture_window / 2, 0.0), seg_len)
    f = entry_arc / seg_len if seg_len > 0 else 0.0
    entry = (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))

    route = list(prefix)
    if retry == 0:
        route.append(a)
        if subpath is not None and engine is not None and entry_arc <= rules.capture_window:
            kink = _exit_aim_point(engine, task_state.path, j)
            if kink is not None:
                route.append(kink)
    else:
        # Swing out on the side away from the previous path node (flipping
        # sides on later retries) before coming back in at the entry point.
        along = _unit((b[0] - a[0], b[1] - a[1]))
        perp = (-along[1], along[0])
        if j > 0:
            prev = graph.node(path.nodes[j - 1]).pos
            side = (prev[0] - a[0]) * perp[0] + (prev[1] - a[1]) * perp[1]
            sign = -1.0 if side > 0 else 1.0
        else:
            sign = 1.0
        if retry % 2 == 0:
            sign = -sign
        route.append((entry[0] + perp[0] * sign * DETOUR_DIST, entry[1] + perp[1] * sign * DETOUR_DIST))
    if entry_arc > 0 or retry > 0:
        route.append(entry)
    route.append(b)
    return route + onward


def run_trial(
    graph: Graph,
    task_path: TaskPath,
    technique: Technique | str,
    task: str,
    config: TechniqueConfig | None = None,
    profile: TrajectoryProfile | None = None,
    rules: TaskRules | None = None,
    budget_s: float = 240.0,
    stall_window_s: float = 2.0,
    reaction_s: float = 0.4,
    label_graph: str = "",
    label_path_kind: str = "",
    trial: int = 0,
) -> TrialResult:
    """Drive one scripted trial to completion or until the budget runs out.

    Two recovery triggers model a human operator. The stall window is the
    blind fallback: no task progress for that long forces a corrective
    re-route. The reaction delay covers what the person can see on screen
    during tracing: a cursor visibly off the link, or running ahead of the
    progress fill, prompts a correction much sooner than the blind window.
    """
    if task not in ("selection", "tracing"):
        raise ValueError(f"unknown task {task!r}")
    technique = Technique(technique)
    profile = profile or TrajectoryProfile()
    rules = rules or TaskRules()

    engine = NavEngine(technique, graph, config, start_hint=task_path.start_node)
    state = engine.initial_state()
    task_state: SelectionState | TracingState
    task_state = SelectionState(task_path) if task == "selection" else TracingState(task_path)

    if task == "tracing":
        # Tracing is a steering task: people pace themselves by the width
        # of the corridor the technique demands. The raw cursor must stay
        # inside the lateral tolerance, a magnet inside its influence
        # radius; a sliding ring projects from anywhere, so it is swept at
        # full speed.
        if technique is Technique.BASELINE:
            corridor = rules.trace_lateral_tol
        elif technique.is_magnetic:
            corridor = engine.config.influence_radius
        else:
            corridor = math.inf
        factor = 1.0 if math.isinf(corridor) else corridor / (corridor + 0.008)
        profile = replace(profile, speed=profile.speed * factor)

    # Care zones: people slow near path nodes when precision is needed.
    # Sliding always shepherds the ring through its slice choice; the raw
    # cursor always needs aiming at the node glyph; a magnet needs care
    # only while tracing (handover watching). In selection its projection
    # clamps to the node from anywhere in the outside wedge, so there is
    # nothing to aim.
    centers = [graph.node(nid).pos for nid in task_path.nodes]
    if technique.is_sliding:
        care = 0.55
    elif technique.is_magnetic:
        care = 0.65 if task == "tracing" else 1.0
    else:
        care = 0.65

    def pace(p: Point) -> float:
        if care >= 1.0:
            return 1.0
        for cx, cy in centers:
            if (p[0] - cx) ** 2 + (p[1] - cy) ** 2 < 0.06 * 0.06:
                return care
        return 1.0

    sampler = RouteSampler(profile, pace=pace)
    if technique.is_sliding:
        sampler.set_route(sliding_route(task_path, graph, profile, engine))
    else:
        sampler.set_route(ideal_route(task_path, graph, profile))

    detaches = attaches = ring_jumps = 0
    distance = 0.0
    prev_pos: Point | None = None
    prev_ring = state.ring_arclen
    prev_sp = state.attached_subpath
    last_progress_t = 0.0
    t = 0.0
    retries: dict[int, int] = {}
    bad_since: float | None = None

    def progress_sig(ts):
        if isinstance(ts, TracingState):
            return (ts.next_index, ts.frontier)
        return (ts.next_index,)

    def inject_corrective(from_pos):
        element = task_state.next_index
        retry = retries.get(element, 0)
        sp = None
        arclen = None
        if technique.is_sliding and state.attached_subpath is not None:
            sp = engine.subpaths.by_key(state.attached_subpath)
            arclen = state.ring_arclen
        route = _corrective_route(
            task_state,
            from_pos,
            graph,
            rules,
            retry=retry,
            subpath=sp,
            ring_arclen=arclen,
            attached_link=state.attached_link,
            engine=engine,
        )
        if route is None:
            return False
        retries[element] = retry + 1
        sampler.set_route(route)
        return True

    sig = progress_sig(task_state)

    while t < budget_s and not task_state.done:
        sample = sampler.next_sample() if not sampler.exhausted() else None
        if sample is None:
            if not inject_corrective(prev_pos or sampler.position or (0.0, 0.0)):
                break
            last_progress_t = t
            continue
        t = sample.t
        state, frame, events = engine.step(state, sample)

        for e in events:
            if e.kind == "detached":
                detaches += 1
            elif e.kind == "attached":
                attaches += 1
        if (
            prev_sp is not None
            and state.attached_subpath == prev_sp
            and prev_ring is not None
            and state.ring_arclen is not None
            and abs(state.ring_arclen - prev_ring) > RING_JUMP_THRESHOLD
        ):
            ring_jumps += 1
        prev_ring = state.ring_arclen
        prev_sp = state.attached_subpath
        if prev_pos is not None:
            distance += math.dist(prev_pos, sample.pos)
        prev_pos = sample.pos

        if task == "selection":
            task_state = advance_selection(task_state, events, sample.t, rules)
            # The expected element not lighting up while the cursor is
            # right there is visible on screen, so the user reacts well
            # before the blind stall window.
            blocked = False
            wiggle = None
            if not task_state.done:
                kind, ident = task_state.elements[task_state.next_index]
                if kind == "node":
                    npos = graph.node(ident).pos
                    active = engine.active_point(state, sample.pos)
                    near = math.dist(sample.pos, npos) <= 2 * engine.config.influence_radius
                    touched = active is not None and math.dist(active, npos) <= rules.node_hit_radius
                    blocked = near and not touched
                elif technique.is_magnetic and state.attached_link not in (None, ident):
                    # Rope visibly glued to a neighboring link while the
                    # gaze rides the intended one: swing wide of both so
                    # the magnet releases, and re-acquire from the far
                    # side. A parallel neighbor inside the hysteresis
                    # margin cannot be shaken off any other way.
                    a, b = graph.segment(ident)
                    pr = project_point_segment(sample.pos, a, b)
                    margin = 2 * rules.node_hit_radius
                    seg_len = math.dist(a, b)
                    if pr.distance <= engine.config.influence_radius / 2 and margin < pr.arclen < seg_len - margin:
                        blocked = True
                        ba, bb = graph.segment(state.attached_link)
                        bpr = project_point_segment(pr.point, ba, bb)
                        away = _unit((pr.point[0] - bpr.point[0], pr.point[1] - bpr.point[1]))
                        far = (pr.point[0] + away[0] * 0.065, pr.point[1] + away[1] * 0.065)
                        back = (pr.point[0] + away[0] * 0.03, pr.point[1] + away[1] * 0.03)
                        j = task_state.next_index // 2
                        onward = [graph.node(task_state.path.nodes[j + 1]).pos]
                        wiggle = [sample.pos, far, back] + onward
            if blocked:
                if bad_since is None:
                    bad_since = t
                elif t - bad_since >= reaction_s:
                    if wiggle is not None:
                        sampler.set_route(wiggle)
                    else:
                        inject_corrective(sample.pos)
                    last_progress_t = t
                    bad_since = None
            else:
                bad_since = None
        else:
            tracer = engine.active_point(state, sample.pos)
            task_state = advance_tracing(task_state, tracer, sample.t, graph, rules)
            if not task_state.done and task_state.next_index % 2 == 1:
                if _tracer_visibly_off(task_state, tracer, graph, rules):
                    if bad_since is None:
                        bad_since = t
                    elif t - bad_since >= reaction_s:
                        inject_corrective(sample.pos)
                        last_progress_t = t
                        bad_since = None
                else:
                    bad_since = None
            else:
                bad_since = None

        new_sig = progress_sig(task_state)
        if new_sig != sig:
            if new_sig[0] != sig[0]:
                # Element completed: its retry escalation is over. Frontier
                # creep alone does not reset it, or a failing approach would
                # repeat verbatim forever while gaining millimeters.
                retries.clear()
            sig = new_sig
            last_progress_t = t
        elif t - last_progress_t >= stall_window_s:
            inject_corrective(sample.pos)
            last_progress_t = t

    completed, elapsed = trial_complete(task_state)
    if completed:
        time_s = elapsed if elapsed is not None else t
    else:
        start = task_state.start_t if task_state.start_t is not None else 0.0
        time_s = max(t - start, 0.0)
    return TrialResult(
        technique=technique.value,
        graph=label_graph,
        path_kind=label_path_kind,
        task=task,
        trial=trial,
        seed=profile.seed,
        time_s=time_s,
        detaches=detaches,
        attaches=attaches,
        ring_jumps=ring_jumps,
        distance_m=distance,
        completed=completed,
    )


# ---------------------------------------------------------------------------
# Experiment plans
# ---------------------------------------------------------------------------

ALL_TECHNIQUES = tuple(t.value for t in Technique)
ELASTIC_TECHNIQUES = (Technique.SLIDING_ELASTIC.value, Technique.MAGNETIC_ELASTIC.value)


@dataclass(frozen=True)
class ExperimentPlan:
    """Full factorial condition grid; elastic variants sit out the tracing task."""

    techniques: tuple[str, ...] = ALL_TECHNIQUES
    graphs: tuple[str, ...] = ("metro", "small-world")
    path_kinds: tuple[str, ...] = ("weighted", "homogeneous")
    tasks: tuple[str, ...] = ("selection", "tracing")
    trials: int = 6
    master_seed: int = 1
    small_world: tuple[int, int, float] = (180, 4, 0.1)
    profile: TrajectoryProfile = field(default_factory=TrajectoryProfile)
    budget_s: float = 240.0
    stall_window_s: float = 2.0

    def cells(self) -> list[tuple[str, str, str, str]]:
        out = []
        for task in self.tasks:
            for graph in self.graphs:
                for path_kind in self.path_kinds:
                    for tech in self.techniques:
                        if task == "tracing" and tech in ELASTIC_TECHNIQUES:
                            continue
                        out.append((tech, graph, path_kind, task))
        return out


def _derive_seed(master: int, *parts: int) -> int:
    return int(np.random.SeedSequence((master,) + parts).generate_state(1)[0])


def build_graph(plan: ExperimentPlan, kind: str) -> Graph:
    if kind == "metro":
        return load_metro()
    if kind == "small-world":
        n, k, p = plan.small_world
        return generate_small_world(n, k, p, seed=plan.master_seed)
    raise ValueError(f"unknown graph kind {kind!r}")


def run_experiment(
    plan: ExperimentPlan,
    out_path: str | Path | None = None,
    config: TechniqueConfig | None = None,
    rules: TaskRules | None = None,
) -> list[TrialResult]:
    """All cells x trials, deterministically seeded from the master seed.

    Individual trial failures (budget exceeded) are recorded as
    ``completed=false`` rows; the run always continues. Results are merged
    in (cell, trial) order regardless of execution order.
    """
    graphs = {kind: build_graph(plan, kind) for kind in plan.graphs}
    results: list[TrialResult] = []
    for cell_index, (tech, graph_kind, path_kind, task) in enumerate(plan.cells()):
        base = graphs[graph_kind]
        for trial in range(plan.trials):
            path_seed = _derive_seed(plan.master_seed, cell_index, trial, 1)
            jitter_seed = _derive_seed(plan.master_seed, cell_index, trial, 2)
            path, g = sample_task_path(
                base,
                kind=path_kind,
                require_long_link=(graph_kind == "small-world"),
                seed=path_seed,
            )
            profile = replace(plan.profile, seed=jitter_seed)
            results.append(
                run_trial(
                    g,
                    path,
                    tech,
                    task,
                    config=config,
                    profile=profile,
                    rules=rules,
                    budget_s=plan.budget_s,
                    stall_window_s=plan.stall_window_s,
                    label_graph=graph_kind,
                    label_path_kind=path_kind,
                    trial=trial,
                )
            )
    if out_path is not None:
        write_results(results, out_path)
        write_summary(results, Path(out_path).with_suffix(".summary.csv"))
    return results


def write_results(results: list[TrialResult], path: str | Path) -> None:
    lines = [",".join(RESULT_COLUMNS)]
    lines.extend(r.row() for r in results)
    Path(path).write_text("\n".join(lines) + "\n")


def summarize(results: list[TrialResult]) -> list[dict]:
    """Per-cell means, in first-appearance cell order."""
    cells: dict[tuple[str, str, str, str], list[TrialResult]] = {}
    for r in results:
        cells.setdefault((r.technique, r.graph, r.path_kind, r.task), []).append(r)
    out = []
    for (tech, graph, path_kind, task), rows in cells.items():
        n = len(rows)
        out.append(
            {
                "technique": tech,
                "graph": graph,
                "path_kind": path_kind,
                "task": task,
                "n": n,
                "completed": sum(1 for r in rows if r.completed),
                "mean_time_s": sum(r.time_s for r in rows) / n,
                "mean_detaches": sum(r.detaches for r in rows) / n,
                "mean_attaches": sum(r.attaches for r in rows) / n,
                "mean_ring_jumps": sum(r.ring_jumps for r in rows) / n,
                "mean_distance_m": sum(r.distance_m for r in rows) / n,
            }
        )
    return out


def write_summary(results: list[TrialResult], path: str | Path) -> None:
    rows = summarize(results)
    header = (
        "technique,graph,path_kind,task,n,completed,"
        "mean_time_s,mean_detaches,mean_attaches,mean_ring_jumps,mean_distance_m"
    )
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['technique']},{r['graph']},{r['path_kind']},{r['task']},{r['n']},"
            f"{r['completed']},{r['mean_time_s']:.6f},{r['mean_detaches']:.6f},"
            f"{r['mean_attaches']:.6f},{r['mean_ring_jumps']:.6f},{r['mean_distance_m']:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def mean_time(results: list[TrialResult], **filters) -> float:
    rows = [
        r
        for r in results
        if all(getattr(r, k) == v for k, v in filters.items())
    ]
    if not rows:
        raise ValueError(f"no rows match {filters}")
    return sum(r.time_s for r in rows) / len(rows)
