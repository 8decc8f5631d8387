"""Per-technique state machines mapping gaze samples to overlay frames.

The engine is a pure step function over an explicit state value: given
the previous state and a gaze sample it returns the next state, the
overlay primitives an AR layer would draw, and the discrete events a task
harness consumes. A :class:`NavEngine` instance only holds immutable,
precomputed geometry for one (technique, graph, config) combination.

Two coupling styles are implemented. Sliding techniques keep a permanent
attachment to a maximal degree-2 chain (subpath) and move a ring along
it; the ring transfers to a neighboring chain at branch nodes, chosen
either by angular slice zones (gaze inside the node) or by a
distance-and-weight score (gaze beyond the node). Magnetic techniques
attach transiently to whichever nearby link scores best, with a
hysteresis discount that makes the current link sticky.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    ElasticCurve,
    Point,
    Projection,
    SliceSet,
    bearing_deg,
    cumulative_lengths,
    elastic_deform,
    fan_slices,
    point_at_arclen,
    project_point_polyline,
)
from .graph import Graph, Subpath

_END_EPS = 1e-9


class Technique(str, Enum):
    BASELINE = "baseline"
    SLIDING_RING = "sliding-ring"
    SLIDING_ELASTIC = "sliding-elastic"
    MAGNETIC_AREA = "magnetic-area"
    MAGNETIC_ELASTIC = "magnetic-elastic"

    @property
    def is_sliding(self) -> bool:
        return self in (Technique.SLIDING_RING, Technique.SLIDING_ELASTIC)

    @property
    def is_magnetic(self) -> bool:
        return self in (Technique.MAGNETIC_AREA, Technique.MAGNETIC_ELASTIC)


@dataclass(frozen=True)
class TechniqueConfig:
    """Tunable constants shared by the techniques.

    ``candidate_radius`` defaults to twice the influence radius and
    ``w_max`` to the maximum link weight of the graph; both are filled in
    by :meth:`resolved`.
    """

    influence_radius: float = 0.05
    candidate_radius: float | None = None
    c1: float = 0.1
    c_a: float = 0.75
    ray_cap: int = 5
    node_hit_radius: float = 0.015
    # A slice choice commits only on a decisive exit this far beyond the
    # hit radius, so pointer jitter at the boundary cannot fire it.
    node_exit_deadband: float = 0.015
    # How long the just-traversed link stays excluded at the entry node.
    # Prevents an accidental bounce straight back, without ever barring a
    # deliberate reversal.
    entry_grace_s: float = 0.5
    base_link_width: float = 0.006
    hover_pad: float = 0.005
    w_max: int | None = None

    def resolved(self, graph: Graph) -> "TechniqueConfig":
        cand = self.candidate_radius if self.candidate_radius is not None else 2 * self.influence_radius
        wmax = self.w_max if self.w_max is not None else graph.w_max
        cfg = replace(self, candidate_radius=cand, w_max=wmax)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.influence_radius > 0:
            raise ValueError("influence_radius must be > 0")
        if self.candidate_radius is not None and self.candidate_radius < self.influence_radius:
            raise ValueError("candidate_radius must be >= influence_radius")
        if not 0 < self.c_a < 1:
            raise ValueError("c_a must be in (0, 1)")
        if not self.c1 > 0:
            raise ValueError("c1 must be > 0")
        if self.ray_cap < 1:
            raise ValueError("ray_cap must be >= 1")


@dataclass(frozen=True)
class GazeSample:
    t: float
    pos: Point


@dataclass(frozen=True)
class EngineEvent:
    """Discrete engine output; ``kind`` selects which payload fields apply."""

    kind: str
    node: str | None = None
    link: str | None = None
    subpath: str | None = None
    arclen: float | None = None
    distance: float | None = None


@dataclass(frozen=True)
class Ray:
    link: str
    point: Point
    intensity: float


@dataclass(frozen=True)
class OverlayFrame:
    gaze: Point
    ring: Point | None = None
    trail: tuple[Point, Point] | None = None
    elastic: ElasticCurve | None = None
    elastic_alpha: float = 1.0
    rope: tuple[Point, Point] | None = None
    rays: tuple[Ray, ...] = ()


@dataclass(frozen=True)
class InNode:
    node: str
    slice_links: tuple[str, ...]
    slices: SliceSet


@dataclass(frozen=True)
class EngineState:
    technique: Technique
    attached_subpath: str | None = None
    attached_link: str | None = None
    ring_arclen: float | None = None
    in_node: InNode | None = None
    # Node and link through which the ring entered the current subpath;
    # the entry link is what "arrived on" means at the entry-side end.
    entry_node: str | None = None
    entry_link: str | None = None
    entry_t: float | None = None
    last_gaze: Point | None = None
    last_t: float | None = None


# ---------------------------------------------------------------------------
# Value formulas
# ---------------------------------------------------------------------------


def weight_distance(w: int, w_max: int) -> int:
    """Distance from the maximum weight: smaller for heavier links."""
    return w_max + 1 - w


def magnetic_value(d_gc: float, w: int, attached: bool, config: TechniqueConfig) -> float:
    """Attraction score of a link for the magnet (lower wins).

    The ``c1`` term keeps a crossing link (distance zero) from instantly
    stealing the attachment; the currently attached link gets the extra
    ``c_a`` discount so detaching requires a strictly better candidate.
    """
    assert config.w_max is not None
    guard = config.c1 * (config.c_a if attached else 1.0)
    return (d_gc + guard) * weight_distance(w, config.w_max)


def sliding_value(d_gc: float, w: int, w_max: int) -> float:
    """Score for picking the next link past a node (lower wins)."""
    return d_gc * weight_distance(w, w_max)


def elastic_fade(intensities: Iterable[float]) -> float:
    """Remaining opacity of an elastic copy given competitor intensities."""
    worst = max((min(max(i, 0.0), 1.0) for i in intensities), default=0.0)
    return 1.0 - worst


# ---------------------------------------------------------------------------
# Spatial indexing
# ---------------------------------------------------------------------------


def _neighborhoods(cover: dict[tuple[int, int], set[int]]):
    """3x3 cell unions so each query touches a single precomputed pack."""
    if cover:
        xs = [c[0] for c in cover]
        ys = [c[1] for c in cover]
        rng = (min(xs), max(xs), min(ys), max(ys))
    else:
        rng = (0, 0, 0, 0)
    hoods: dict[tuple[int, int], list[int]] = {}
    lo_x, hi_x, lo_y, hi_y = rng
    for cx in range(lo_x, hi_x + 1):
        for cy in range(lo_y, hi_y + 1):
            union: set[int] = set()
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    union |= cover.get((cx + dx, cy + dy), set())
            if union:
                hoods[(cx, cy)] = sorted(union)
    return rng, hoods


class _GeomPack:
    """Contiguous per-neighborhood copies of segment geometry (shared)."""

    __slots__ = ("sel", "idx", "ids", "ax", "ay", "dx", "dy", "len2", "length", "rank")

    def __init__(self, geom: "_SegmentGeometry", members: list[int]) -> None:
        sel = np.array(members, dtype=int)
        self.sel = sel
        self.idx = sel
        self.ids = [geom.ids[i] for i in members]
        self.ax = geom.ax[sel].copy()
        self.ay = geom.ay[sel].copy()
        self.dx = geom.dx[sel].copy()
        self.dy = geom.dy[sel].copy()
        self.len2 = geom.len2[sel].copy()
        self.length = geom.length[sel].copy()
        self.rank = geom.rank[sel].copy()


class _SegmentGeometry:
    """Weight-independent segment arrays and grid, cached per graph geometry."""

    def __init__(self, graph: Graph, cell: float) -> None:
        links = graph.links
        self.ids = [l.id for l in links]
        self.index_of = {l.id: i for i, l in enumerate(links)}
        ax = np.array([graph.node(l.a).x for l in links])
        ay = np.array([graph.node(l.a).y for l in links])
        bx = np.array([graph.node(l.b).x for l in links])
        by = np.array([graph.node(l.b).y for l in links])
        self.ax, self.ay = ax, ay
        self.dx, self.dy = bx - ax, by - ay
        self.len2 = np.maximum(self.dx**2 + self.dy**2, 1e-18)
        self.length = np.sqrt(self.len2)
        order = sorted(range(len(links)), key=lambda i: self.ids[i])
        self.rank = np.empty(len(links), dtype=int)
        for r, i in enumerate(order):
            self.rank[i] = r
        self.cell = cell
        cover: dict[tuple[int, int], set[int]] = {}
        for i in range(len(links)):
            lo_x = int(math.floor(min(ax[i], bx[i]) / cell))
            hi_x = int(math.floor(max(ax[i], bx[i]) / cell))
            lo_y = int(math.floor(min(ay[i], by[i]) / cell))
            hi_y = int(math.floor(max(ay[i], by[i]) / cell))
            for cx in range(lo_x, hi_x + 1):
                for cy in range(lo_y, hi_y + 1):
                    cover.setdefault((cx, cy), set()).add(i)
        self.range, hoods = _neighborhoods(cover)
        self.packs = {key: _GeomPack(self, members) for key, members in hoods.items()}


class _SegmentPack:
    """A shared geometry pack plus this engine's weight-derived arrays."""

    __slots__ = ("geom", "w", "wd", "hover")

    def __init__(self, geom: _GeomPack, w: np.ndarray, wd: np.ndarray, hover: np.ndarray) -> None:
        self.geom = geom
        self.w = w[geom.sel].copy()
        self.wd = wd[geom.sel].copy()
        self.hover = hover[geom.sel].copy()

    @property
    def idx(self):
        return self.geom.idx

    @property
    def ids(self):
        return self.geom.ids

    @property
    def length(self):
        return self.geom.length

    @property
    def rank(self):
        return self.geom.rank

    def project(self, p: Point):
        g = self.geom
        t = ((p[0] - g.ax) * g.dx + (p[1] - g.ay) * g.dy) / g.len2
        np.clip(t, 0.0, 1.0, out=t)
        qx = g.ax + t * g.dx
        qy = g.ay + t * g.dy
        dist = np.hypot(p[0] - qx, p[1] - qy)
        return t, qx, qy, dist


class _SegmentField:
    """Vectorized link segments with a uniform-grid neighborhood index."""

    def __init__(self, graph: Graph, cell: float, wd: np.ndarray, hover: np.ndarray) -> None:
        geom = _geometry_cache(graph, cell)
        self._geom = geom
        self.ids = geom.ids
        self.index_of = geom.index_of
        self.ax, self.ay = geom.ax, geom.ay
        self.dx, self.dy = geom.dx, geom.dy
        self.len2 = geom.len2
        self.length = geom.length
        self.rank = geom.rank
        self.cell = cell
        self.w = np.array([l.w for l in graph.links], dtype=float)
        self.wd = np.asarray(wd, dtype=float)
        self.hover = np.asarray(hover, dtype=float)
        self._range = geom.range
        self._packs = {
            key: _SegmentPack(gp, self.w, self.wd, self.hover)
            for key, gp in geom.packs.items()
        }

    def pack_near(self, p: Point) -> _SegmentPack | None:
        lo_x, hi_x, lo_y, hi_y = self._range
        cx = min(max(int(math.floor(p[0] / self.cell)), lo_x), hi_x)
        cy = min(max(int(math.floor(p[1] / self.cell)), lo_y), hi_y)
        return self._packs.get((cx, cy))

    def project_one(self, i: int, p: Point) -> tuple[float, float, float, float]:
        """Scalar projection of ``p`` onto segment ``i``: (t, qx, qy, dist)."""
        ax, ay = self.ax[i], self.ay[i]
        dx, dy = self.dx[i], self.dy[i]
        t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / self.len2[i]
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        qx, qy = ax + t * dx, ay + t * dy
        return float(t), float(qx), float(qy), math.hypot(p[0] - qx, p[1] - qy)


class _PointField:
    """Node positions with the same grid trick as the segments."""

    def __init__(self, graph: Graph, cell: float) -> None:
        self.ids = [n.id for n in graph.nodes]
        self.x = np.array([n.x for n in graph.nodes])
        self.y = np.array([n.y for n in graph.nodes])
        self.cell = cell
        cover: dict[tuple[int, int], set[int]] = {}
        for i in range(len(self.ids)):
            key = (int(math.floor(self.x[i] / cell)), int(math.floor(self.y[i] / cell)))
            cover.setdefault(key, set()).add(i)
        self._range, hoods = _neighborhoods(cover)
        # Members are stored sorted by node id so hits come out ordered.
        self._packs: dict[tuple[int, int], tuple[list[str], np.ndarray, np.ndarray]] = {}
        for key, members in hoods.items():
            ordered = sorted(members, key=lambda i: self.ids[i])
            self._packs[key] = (
                [self.ids[i] for i in ordered],
                self.x[np.array(ordered, dtype=int)].copy(),
                self.y[np.array(ordered, dtype=int)].copy(),
            )

    def within(self, p: Point, radius: float) -> list[str]:
        lo_x, hi_x, lo_y, hi_y = self._range
        cx = min(max(int(math.floor(p[0] / self.cell)), lo_x), hi_x)
        cy = min(max(int(math.floor(p[1] / self.cell)), lo_y), hi_y)
        pack = self._packs.get((cx, cy))
        if pack is None:
            return []
        ids, xs, ys = pack
        d2 = (xs - p[0]) ** 2 + (ys - p[1]) ** 2
        r2 = radius * radius
        return [ids[i] for i in range(len(ids)) if d2[i] <= r2]


_GEOM_CACHE: "weakref.WeakKeyDictionary[object, dict]" = None  # type: ignore[assignment]


def _geometry_cache(graph: Graph, cell: float) -> _SegmentGeometry:
    global _GEOM_CACHE
    if _GEOM_CACHE is None:
        _GEOM_CACHE = weakref.WeakKeyDictionary()
    token = graph._geom_token
    per_token = _GEOM_CACHE.get(token)
    if per_token is None:
        per_token = {}
        _GEOM_CACHE[token] = per_token
    geom = per_token.get(("segments", cell))
    if geom is None:
        geom = _SegmentGeometry(graph, cell)
        per_token[("segments", cell)] = geom
    return geom


def _node_field_cache(graph: Graph, cell: float) -> _PointField:
    global _GEOM_CACHE
    if _GEOM_CACHE is None:
        _GEOM_CACHE = weakref.WeakKeyDictionary()
    token = graph._geom_token
    per_token = _GEOM_CACHE.get(token)
    if per_token is None:
        per_token = {}
        _GEOM_CACHE[token] = per_token
    field = per_token.get(("nodes", cell))
    if field is None:
        field = _PointField(graph, cell)
        per_token[("nodes", cell)] = field
    return field


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


class NavEngine:
    """Immutable per-(technique, graph, config) context plus the step function."""

    def __init__(
        self,
        technique: Technique | str,
        graph: Graph,
        config: TechniqueConfig | None = None,
        start_hint: str | None = None,
    ) -> None:
        try:
            self.technique = Technique(technique)
        except ValueError:
            raise ValueError(f"unknown technique {technique!r}") from None
        self.graph = graph
        self.config = (config or TechniqueConfig()).resolved(graph)
        self.start_hint = start_hint
        if start_hint is not None:
            graph.node(start_hint)
        cell = self.config.candidate_radius
        wd = np.array(
            [weight_distance(l.w, self.config.w_max) for l in graph.links], dtype=float
        )
        hover = (
            np.array([l.w for l in graph.links], dtype=float) * self.config.base_link_width / 2
            + self.config.hover_pad
        )
        self.links = _SegmentField(graph, cell, wd, hover)
        self.nodes = _node_field_cache(graph, cell)
        self.subpaths = graph.subpaths()

    # -- public API ----------------------------------------------------------

    def initial_state(self) -> EngineState:
        return EngineState(technique=self.technique)

    def step(self, state: EngineState, sample: GazeSample) -> tuple[EngineState, OverlayFrame, tuple[EngineEvent, ...]]:
        if state.last_t is not None and sample.t < state.last_t:
            raise ValueError("gaze sample times must be non-decreasing")
        if self.technique.is_sliding:
            return self._sliding_step(state, sample)
        if self.technique.is_magnetic:
            return self._magnetic_step(state, sample)
        return self._baseline_step(state, sample)

    def active_point(self, state: EngineState, gaze: Point) -> Point | None:
        """The point that touches nodes/links for this technique.

        The raw gaze for the baseline, the ring mapped onto the original
        graph for sliding, and the attachment projection for magnetic
        (None while unattached).
        """
        if self.technique is Technique.BASELINE:
            return gaze
        if self.technique.is_sliding:
            if state.attached_subpath is None or state.ring_arclen is None:
                return None
            sp = self.subpaths.by_key(state.attached_subpath)
            return point_at_arclen(sp.polyline, state.ring_arclen, sp.cum_lengths)
        if state.attached_link is None:
            return None
        i = self.links.index_of[state.attached_link]
        _, qx, qy, _ = self.links.project_one(i, gaze)
        return (qx, qy)

    # -- baseline -------------------------------------------------------------

    def _baseline_step(self, state, sample):
        gaze = sample.pos
        events = self._touch_events(gaze, hover=True)
        new_state = EngineState(
            technique=state.technique, last_gaze=gaze, last_t=sample.t
        )
        return new_state, OverlayFrame(gaze=gaze), tuple(events)

    def _touch_events(self, point: Point, hover: bool) -> list[EngineEvent]:
        """CursorOverNode / CursorOverLink events around the active point."""
        events = [
            EngineEvent("cursor_over_node", node=nid)
            for nid in self.nodes.within(point, self.config.node_hit_radius)
        ]
        if hover:
            pack = self.links.pack_near(point)
            if pack is not None:
                t, qx, qy, dist = pack.project(point)
                hit = dist <= pack.hover
                if hit.any():
                    hits = [
                        (pack.ids[j], float(dist[j]), float(t[j] * pack.length[j]))
                        for j in np.nonzero(hit)[0]
                    ]
                    for lid, d, arc in sorted(hits):
                        events.append(
                            EngineEvent("cursor_over_link", link=lid, distance=d, arclen=arc)
                        )
        return events

    # -- magnetic --------------------------------------------------------------

    def magnetic_retarget(
        self, attached: str | None, gaze: Point
    ) -> tuple[str | None, tuple[Ray, ...]]:
        """Re-evaluate the attachment and the warning rays at one gaze point.

        Candidates are links within the influence radius; the attached link
        competes with its hysteresis discount and wins ties, other ties go
        to the lower link id. Rays cover up to ``ray_cap`` non-attached
        links inside the candidate radius; intensity 1 means a competitor
        has reached the detachment boundary.
        """
        out = self._retarget_full(attached, gaze)
        return out[0], out[1]

    def _retarget_full(self, attached: str | None, gaze: Point):
        cfg = self.config
        pack = self.links.pack_near(gaze)
        if pack is None:
            return None, (), None
        t, qx, qy, dist = pack.project(gaze)

        att_i = self.links.index_of[attached] if attached is not None else -1
        att_mask = pack.idx == att_i
        vals = (dist + cfg.c1) * pack.wd
        vals_eff = np.where(att_mask, (dist + cfg.c1 * cfg.c_a) * pack.wd, vals)
        cand = dist <= cfg.influence_radius
        if not cand.any():
            return None, (), None
        masked = np.where(cand, vals_eff, np.inf)
        vmin = masked.min()
        ties = np.nonzero(masked == vmin)[0]
        if len(ties) == 1:
            j_best = int(ties[0])
        else:
            j_best = int(min(ties, key=lambda j: (0 if att_mask[j] else 1, pack.rank[j])))
        new_link = pack.ids[j_best]

        v_att = (dist[j_best] + cfg.c1 * cfg.c_a) * pack.wd[j_best]
        ray_mask = (dist <= cfg.candidate_radius) & (pack.idx != pack.idx[j_best])
        rays: tuple[Ray, ...] = ()
        if ray_mask.any():
            js = np.nonzero(ray_mask)[0]
            inten = np.minimum(np.maximum(v_att / vals[js], 0.0), 1.0)
            order = np.lexsort((pack.rank[js], -inten))[: cfg.ray_cap]
            rays = tuple(
                Ray(pack.ids[js[k]], (float(qx[js[k]]), float(qy[js[k]])), float(inten[k]))
                for k in order
            )
        attach_info = (float(t[j_best]), float(qx[j_best]), float(qy[j_best]), float(dist[j_best]))
        return new_link, rays, attach_info

    def _magnetic_step(self, state, sample):
        gaze = sample.pos
        new_link, rays, attach_info = self._retarget_full(state.attached_link, gaze)
        events: list[EngineEvent] = []
        if new_link != state.attached_link:
            if state.attached_link is not None:
                events.append(EngineEvent("detached", link=state.attached_link))
            if new_link is not None:
                events.append(EngineEvent("attached", link=new_link))

        rope = None
        curve = None
        alpha = 1.0
        # Hovering a node with the raw gaze counts alongside the attachment
        # projection: a magnet stuck on a link passing near the node must
        # not block the touch.
        touched = self.nodes.within(gaze, self.config.node_hit_radius)
        if new_link is not None:
            t_best, qx, qy, d_best = attach_info
            attach_pt = (qx, qy)
            if self.technique is Technique.MAGNETIC_AREA:
                rope = (gaze, attach_pt)
            else:
                sp = self.subpaths.for_link(new_link)
                anchor = self._subpath_arclen_of_link_point(sp, new_link, t_best)
                curve = elastic_deform(sp.polyline, gaze, anchor, source=sp.key)
                alpha = elastic_fade(r.intensity for r in rays)
            for nid in self.nodes.within(attach_pt, self.config.node_hit_radius):
                if nid not in touched:
                    touched.append(nid)
        events.extend(EngineEvent("cursor_over_node", node=nid) for nid in sorted(touched))
        if new_link is not None:
            i = self.links.index_of[new_link]
            events.append(
                EngineEvent(
                    "cursor_over_link",
                    link=new_link,
                    distance=attach_info[3],
                    arclen=attach_info[0] * float(self.links.length[i]),
                )
            )

        frame = OverlayFrame(
            gaze=gaze,
            rope=rope,
            rays=rays if self.technique is Technique.MAGNETIC_AREA else (),
            elastic=curve,
            elastic_alpha=alpha,
        )
        new_state = EngineState(
            technique=state.technique,
            attached_link=new_link,
            last_gaze=gaze,
            last_t=sample.t,
        )
        return new_state, frame, tuple(events)

    def _subpath_arclen_of_link_point(self, sp: Subpath, link_id: str, t: float) -> float:
        """Arc length within a subpath of a point given on one of its links."""
        k = sp.links.index(link_id)
        seg_len = sp.cum_lengths[k + 1] - sp.cum_lengths[k]
        link = self.graph.link(link_id)
        # The subpath may traverse the link from its b-end.
        forward = sp.nodes[k] == link.a
        frac = t if forward else 1.0 - t
        return sp.cum_lengths[k] + frac * seg_len

    # -- sliding ---------------------------------------------------------------

    def sliding_choose_link(
        self,
        node_id: str,
        gaze: Point,
        gaze_inside_node: bool,
        slice_set: SliceSet | None = None,
        slice_links: Sequence[str] | None = None,
        arrival_link: str | None = None,
    ) -> str:
        """Pick the next link at a branch node.

        Inside the node, the gaze exit bearing selects a fanned slice;
        outside, the distance times distance-from-max-weight score picks
        the winner (ties to the lower link id). The arrival link only
        competes when it is the node's sole link.
        """
        candidates = self._node_candidates(node_id, arrival_link)
        if len(candidates) == 1:
            return candidates[0]
        if gaze_inside_node:
            if slice_set is None or slice_links is None:
                slice_links, slice_set = self._node_slices(node_id, arrival_link)
            bearing = bearing_deg(self.graph.node(node_id).pos, gaze)
            return slice_links[slice_set.link_for_bearing(bearing)]
        best: tuple[float, str] | None = None
        for lid in candidates:
            i = self.links.index_of[lid]
            _, _, _, dist = self.links.project_one(i, gaze)
            v = sliding_value(dist, int(self.links.w[i]), self.config.w_max)
            if best is None or (v, lid) < best:
                best = (v, lid)
        assert best is not None
        return best[1]

    def _node_candidates(self, node_id: str, arrival_link: str | None) -> list[str]:
        incident = list(self.graph.incident(node_id))
        others = [lid for lid in incident if lid != arrival_link]
        return others if others else incident

    def node_slices(self, node_id: str, arrival_link: str | None) -> tuple[tuple[str, ...], SliceSet]:
        """Fanned slice zones a ring user faces at this node."""
        return self._node_slices(node_id, arrival_link)

    def _node_slices(self, node_id: str, arrival_link: str | None) -> tuple[tuple[str, ...], SliceSet]:
        links = self._node_candidates(node_id, arrival_link)
        origin = self.graph.node(node_id).pos
        angles = []
        weights = []
        for lid in links:
            l = self.graph.link(lid)
            other = self.graph.node(l.other(node_id)).pos
            angles.append(bearing_deg(origin, other))
            weights.append(l.w)
        return tuple(links), fan_slices(angles, weights)

    def _sliding_step(self, state, sample):
        gaze = sample.pos
        events: list[EngineEvent] = []

        if state.attached_subpath is None:
            attach = self._first_attachment(gaze)
            if attach is None:
                idle = EngineState(
                    technique=state.technique, last_gaze=gaze, last_t=sample.t
                )
                return idle, OverlayFrame(gaze=gaze), tuple(self._touch_events(gaze, hover=True))
            sp = self.subpaths.for_link(attach)
            pr0 = self._project_subpath(sp, gaze)
            # A fresh attachment near a chain end gets a no-exclusion grace
            # window there: the ring has not traveled, so nothing counts as
            # the link it arrived on.
            fresh_entry = None
            if pr0.arclen <= self._entry_window():
                fresh_entry = sp.nodes[0]
            elif pr0.arclen >= sp.total_length - self._entry_window():
                fresh_entry = sp.nodes[-1]
            state = replace(
                state,
                attached_subpath=sp.key,
                ring_arclen=pr0.arclen,
                entry_node=fresh_entry,
                entry_link=None,
            )
            events.append(EngineEvent("attached", subpath=sp.key, link=attach))

        sp = self.subpaths.by_key(state.attached_subpath)

        if self.technique is Technique.SLIDING_RING:
            pr = self._project_subpath(sp, gaze)
            ring_arclen = pr.arclen
        else:
            prev_curve = self._elastic_curve(sp, state)
            pr_curve = project_point_polyline(gaze, prev_curve.points)
            curve_len = cumulative_lengths(prev_curve.points)[-1]
            frac = pr_curve.arclen / curve_len if curve_len > 0 else 0.0
            ring_arclen = frac * sp.total_length

        was_at_end = state.ring_arclen is not None and self._end_node_at(sp, state.ring_arclen) is not None
        in_node = state.in_node
        entry_node = state.entry_node
        entry_link = state.entry_link
        entry_t = state.entry_t
        expired = (
            entry_link is not None
            and entry_t is not None
            and sample.t - entry_t > self.config.entry_grace_s
        )
        if expired or self._entry_cleared(sp, entry_node, ring_arclen):
            entry_node = entry_link = entry_t = None

        end_node = self._end_node_at(sp, ring_arclen)
        if end_node is not None and not was_at_end:
            events.append(EngineEvent("ring_at_node", node=end_node))

        if in_node is not None:
            npos = self.graph.node(in_node.node).pos
            if math.dist(gaze, npos) > self.config.node_hit_radius + self.config.node_exit_deadband:
                idx = in_node.slices.link_for_bearing(bearing_deg(npos, gaze))
                chosen = in_node.slice_links[idx]
                events.append(EngineEvent("slice_committed", link=chosen, node=in_node.node))
                sp, ring_arclen, moved, entry = self._transfer(
                    sp, in_node.node, chosen, ring_arclen, events
                )
                if moved:
                    entry_node, entry_link = entry
                    entry_t = sample.t
                in_node = None
        else:
            near = self._nearby_subpath_end(sp, gaze)
            if near is not None:
                arrival = self._exclusion_at(sp, near, entry_node, entry_link, ring_arclen)
                slice_links, slices = self._node_slices(near, arrival)
                in_node = InNode(near, slice_links, slices)
            elif self.technique is Technique.SLIDING_RING:
                end = self._end_node_at(sp, ring_arclen)
                if end is not None:
                    arrival = self._exclusion_at(sp, end, entry_node, entry_link, ring_arclen)
                    stay_link = self._subpath_link_at(sp, end, ring_arclen)
                    chosen = self.sliding_choose_link(
                        end, gaze, gaze_inside_node=False, arrival_link=arrival
                    )
                    if chosen != stay_link and self._improves_on_stay(stay_link, chosen, gaze):
                        sp, ring_arclen, moved, entry = self._transfer(
                            sp, end, chosen, ring_arclen, events
                        )
                        if moved:
                            entry_node, entry_link = entry
                            entry_t = sample.t

        ring_pt = point_at_arclen(sp.polyline, ring_arclen, sp.cum_lengths)

        if self.technique is Technique.SLIDING_RING:
            frame = OverlayFrame(gaze=gaze, ring=ring_pt, trail=(gaze, ring_pt))
        else:
            curve = elastic_deform(sp.polyline, gaze, ring_arclen, source=sp.key)
            frame = OverlayFrame(
                gaze=gaze,
                ring=curve.points[curve.anchor_index],
                elastic=curve,
                trail=None,
            )

        events.extend(self._touch_events(ring_pt, hover=False))
        events.append(
            EngineEvent(
                "cursor_over_link",
                link=sp.link_at_arclen(ring_arclen),
                arclen=ring_arclen,
                distance=0.0,
            )
        )

        new_state = EngineState(
            technique=state.technique,
            attached_subpath=sp.key,
            ring_arclen=ring_arclen,
            in_node=in_node,
            entry_node=entry_node,
            entry_link=entry_link,
            entry_t=entry_t,
            last_gaze=gaze,
            last_t=sample.t,
        )
        return new_state, frame, tuple(events)

    def _first_attachment(self, gaze: Point) -> str | None:
        pack = self.links.pack_near(gaze)
        if pack is None:
            return None
        t, qx, qy, dist = pack.project(gaze)
        hint_links: set[str] = set()
        if self.start_hint is not None:
            hint_links = set(self.graph.incident(self.start_hint))
        best: tuple[int, float, str] | None = None
        for j in np.nonzero(dist <= pack.hover)[0]:
            lid = pack.ids[j]
            key = (0 if lid in hint_links else 1, float(dist[j]), lid)
            if best is None or key < best:
                best = key
        return best[2] if best else None

    def _project_subpath(self, sp: Subpath, p: Point) -> Projection:
        return project_point_polyline(p, sp.polyline)

    def _elastic_curve(self, sp: Subpath, state: EngineState) -> ElasticCurve:
        if state.last_gaze is None or state.ring_arclen is None:
            return ElasticCurve(sp.polyline, tuple((q, q) for q in sp.polyline), 0, sp.key)
        return elastic_deform(sp.polyline, state.last_gaze, state.ring_arclen, source=sp.key)

    def _end_node_at(self, sp: Subpath, arclen: float) -> str | None:
        if arclen <= _END_EPS:
            return sp.nodes[0]
        if arclen >= sp.total_length - _END_EPS:
            return sp.nodes[-1]
        return None

    def _nearby_subpath_end(self, sp: Subpath, gaze: Point) -> str | None:
        ends = [sp.nodes[0]] if sp.nodes[0] == sp.nodes[-1] else [sp.nodes[0], sp.nodes[-1]]
        best = None
        for nid in ends:
            d = math.dist(gaze, self.graph.node(nid).pos)
            if d <= self.config.node_hit_radius and (best is None or d < best[0]):
                best = (d, nid)
        return best[1] if best else None

    def _subpath_link_at(self, sp: Subpath, node_id: str, ring_arclen: float) -> str:
        """The subpath's own link incident to the given endpoint node."""
        if sp.nodes[0] == sp.nodes[-1]:
            return sp.links[0] if ring_arclen <= sp.total_length / 2 else sp.links[-1]
        return sp.links[0] if node_id == sp.nodes[0] else sp.links[-1]

    def _exclusion_at(
        self,
        sp: Subpath,
        node_id: str,
        entry_node: str | None,
        entry_link: str | None,
        ring_arclen: float,
    ) -> str | None:
        """The link the ring arrived on at this node, excluded from choices.

        At the far end of a slide that is the subpath's own link; at the
        end the ring entered through, it is the previous chain's link, so
        continuing forward stays available. A fresh attachment has no
        travel history, so its start node excludes nothing.
        """
        if node_id == entry_node:
            return entry_link
        return self._subpath_link_at(sp, node_id, ring_arclen)

    def _entry_window(self) -> float:
        return 3.0 * self.config.node_hit_radius

    def _entry_cleared(self, sp: Subpath, entry_node: str | None, ring_arclen: float) -> bool:
        """The immediate-backtrack window closes once the ring slides away."""
        if entry_node is None:
            return False
        if sp.nodes[0] == sp.nodes[-1]:
            near = min(ring_arclen, sp.total_length - ring_arclen)
        elif entry_node == sp.nodes[0]:
            near = ring_arclen
        elif entry_node == sp.nodes[-1]:
            near = sp.total_length - ring_arclen
        else:
            return True
        return near > self._entry_window()

    def _improves_on_stay(self, stay_link: str, chosen: str, gaze: Point) -> bool:
        """Hysteresis for the beyond-the-node rule: only swap subpaths for a
        strictly better-scoring link, so a stationary gaze cannot flap."""

        def value(lid: str) -> float:
            i = self.links.index_of[lid]
            _, _, _, dist = self.links.project_one(i, gaze)
            return sliding_value(dist, int(self.links.w[i]), self.config.w_max)

        return value(chosen) < value(stay_link)

    def _transfer(
        self,
        sp: Subpath,
        node_id: str,
        link_id: str,
        ring_arclen: float,
        events: list[EngineEvent],
    ):
        """Move the attachment onto `link_id`'s chain with the ring at the node.

        Returns (subpath, ring_arclen, moved, (entry_node, entry_link));
        the entry link is the old chain's link at the shared node.
        """
        sp2 = self.subpaths.for_link(link_id)
        came_on = self._subpath_link_at(sp, node_id, ring_arclen)
        if sp2.key == sp.key:
            arclen = sp.arclen_of_node(node_id)
            return sp, arclen, False, (None, None)
        if sp2.links[0] == link_id and sp2.nodes[0] == node_id:
            arclen = 0.0
        elif sp2.links[-1] == link_id and sp2.nodes[-1] == node_id:
            arclen = sp2.total_length
        else:
            arclen = sp2.arclen_of_node(node_id)
        events.append(EngineEvent("attached", subpath=sp2.key, link=link_id))
        return sp2, arclen, True, (node_id, came_on)
