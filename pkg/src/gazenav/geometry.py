"""Planar geometry for gaze-driven graph navigation.

Distances are meters in the display plane. Angles are degrees, measured
counter-clockwise from the +x axis and treated modulo 360 where noted.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

Point = tuple[float, float]

_EPS = 1e-12


@dataclass(frozen=True)
class Projection:
    """Closest point on a segment or polyline to a query point.

    ``arclen`` is measured along the geometry from its start vertex,
    ``distance`` is the Euclidean distance from the query to ``point``.
    """

    point: Point
    arclen: float
    distance: float
    segment_index: int = 0


def project_point_segment(p: Point, a: Point, b: Point) -> Projection:
    """Project ``p`` onto segment ``ab``, clamping to the endpoints."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    len2 = dx * dx + dy * dy
    if len2 <= _EPS * _EPS:
        raise ValueError("degenerate segment: endpoints coincide")
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / len2
    if t <= 0.0:
        t = 0.0
    elif t >= 1.0:
        t = 1.0
    qx, qy = ax + t * dx, ay + t * dy
    return Projection(
        point=(qx, qy),
        arclen=t * math.sqrt(len2),
        distance=math.hypot(p[0] - qx, p[1] - qy),
        segment_index=0,
    )


def cumulative_lengths(points: Sequence[Point]) -> list[float]:
    """Arc length of each vertex from the first; ``len(points)`` entries."""
    out = [0.0]
    for i in range(1, len(points)):
        out.append(out[-1] + math.dist(points[i - 1], points[i]))
    return out


def polyline_length(points: Sequence[Point]) -> float:
    return cumulative_lengths(points)[-1]


def point_at_arclen(points: Sequence[Point], arclen: float, cums: Sequence[float] | None = None) -> Point:
    """Point on the polyline at the given arc length, clamped to [0, total]."""
    if len(points) == 1:
        return points[0]
    cums = cums if cums is not None else cumulative_lengths(points)
    total = cums[-1]
    if arclen <= 0.0:
        return points[0]
    if arclen >= total:
        return points[-1]
    i = bisect_left(cums, arclen)
    if cums[i] == arclen:
        return points[i]
    a, b = points[i - 1], points[i]
    seg = cums[i] - cums[i - 1]
    t = (arclen - cums[i - 1]) / seg
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def project_point_polyline(p: Point, points: Sequence[Point]) -> Projection:
    """Global minimum-distance projection of ``p`` onto a polyline.

    Ties are broken in favor of the smaller arc length.
    """
    if len(points) < 2:
        raise ValueError("polyline needs at least 2 points")
    best: Projection | None = None
    offset = 0.0
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        seg_len = math.dist(a, b)
        if seg_len <= _EPS:
            continue
        pr = project_point_segment(p, a, b)
        if best is None or pr.distance < best.distance - _EPS:
            best = Projection(pr.point, offset + pr.arclen, pr.distance, i)
        offset += seg_len
    if best is None:
        raise ValueError("polyline has no non-degenerate segment")
    return best


def bearing_deg(origin: Point, p: Point) -> float:
    """Direction from ``origin`` to ``p`` in degrees, normalized to [0, 360)."""
    ang = math.degrees(math.atan2(p[1] - origin[1], p[0] - origin[0]))
    return ang % 360.0


def segments_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool:
    """True when the two segments properly cross (interior intersection).

    Shared endpoints and mere touching do not count as crossings.
    """

    def orient(p: Point, q: Point, r: Point) -> float:
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1 = orient(a1, a2, b1)
    d2 = orient(a1, a2, b2)
    d3 = orient(b1, b2, a1)
    d4 = orient(b1, b2, a2)
    return d1 * d2 < -_EPS and d3 * d4 < -_EPS


# ---------------------------------------------------------------------------
# Angular fanning: proxies on a circle with a best-fit rotation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SliceSet:
    """Angular zones around a node, one contiguous zone per link.

    ``zones[i]`` is a half-open interval (lo, hi] for input link ``i``,
    stored with ``lo`` normalized to [0, 360) and ``hi = lo + width`` (so
    ``hi`` may exceed 360; membership is evaluated modulo 360). The zones
    partition the full circle. ``rotation`` is the fitted rotation applied
    to the evenly spaced proxies, in degrees.
    """

    zones: tuple[tuple[float, float], ...]
    rotation: float
    proxy_angles: tuple[float, ...]
    proxy_owner: tuple[int, ...]

    def contains(self, link_index: int, bearing: float) -> bool:
        lo, hi = self.zones[link_index]
        width = hi - lo
        if width >= 360.0 - 1e-12:
            return True
        x = (bearing - lo) % 360.0
        return 0.0 < x <= width

    def link_for_bearing(self, bearing: float) -> int:
        for i in range(len(self.zones)):
            if self.contains(i, bearing):
                return i
        # Numerical fallback: nearest zone boundary owner.
        return min(
            range(len(self.zones)),
            key=lambda i: abs((bearing - self.zones[i][0]) % 360.0 - (self.zones[i][1] - self.zones[i][0]) / 2.0),
        )


def fan_slices(link_angles: Sequence[float], weights: Sequence[int]) -> SliceSet:
    """Assign each link a contiguous angular zone proportional to its weight.

    Each link gets ``weight`` proxies. All proxies are spaced evenly around
    the circle and rotated as a rigid set so that they sit as close as
    possible to their parent links (maximum of sum of cosines of angular
    residuals, solved in closed form). A link's zone is the union of the
    equal slices centered on its proxies; proxies are dealt to links in
    blocks, in circular order of the link angles starting from the smallest,
    which keeps every zone contiguous.
    """
    if len(link_angles) == 0:
        raise ValueError("at least one link required")
    if len(link_angles) != len(weights):
        raise ValueError("angles and weights must have equal length")
    if any(w < 1 for w in weights):
        raise ValueError("weights must be >= 1")

    n = len(link_angles)
    total = sum(weights)
    step = 360.0 / total

    order = sorted(range(n), key=lambda i: (link_angles[i] % 360.0, i))

    # Proxy j (0-based, consecutive) belongs to ordered link blocks.
    parent: list[int] = []
    for i in order:
        parent.extend([i] * weights[i])

    sin_sum = 0.0
    cos_sum = 0.0
    for j, i in enumerate(parent):
        resid = math.radians(link_angles[i] - j * step)
        sin_sum += math.sin(resid)
        cos_sum += math.cos(resid)
    rotation = math.degrees(math.atan2(sin_sum, cos_sum))

    proxy_angles = tuple((rotation + j * step) % 360.0 for j in range(total))

    # Block boundaries halfway between the last proxy of one block and the
    # first proxy of the next; computing each boundary once keeps adjacent
    # zones exactly flush.
    starts = [0]
    for i in order[:-1]:
        starts.append(starts[-1] + weights[i])
    boundaries = [rotation + (s - 0.5) * step for s in starts]
    boundaries.append(boundaries[0] + 360.0)

    zones: list[tuple[float, float]] = [(0.0, 0.0)] * n
    for m, i in enumerate(order):
        lo = boundaries[m]
        width = weights[i] * step
        lo_norm = lo % 360.0
        zones[i] = (lo_norm, lo_norm + width)

    return SliceSet(
        zones=tuple(zones),
        rotation=rotation,
        proxy_angles=proxy_angles,
        proxy_owner=tuple(parent),
    )


# ---------------------------------------------------------------------------
# Elastic deformation of a subpath polyline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElasticCurve:
    """A subpath copy pulled toward a point, endpoints pinned.

    ``points`` is the deformed polyline; ``tethers`` pairs each deformed
    source vertex with its original position (endpoint tethers are
    degenerate). ``anchor_index`` is the vertex that was pulled onto the
    target point.
    """

    points: tuple[Point, ...]
    tethers: tuple[tuple[Point, Point], ...]
    anchor_index: int
    source: str | None = None


def elastic_deform(
    polyline: Sequence[Point],
    gaze_point: Point,
    anchor_arclen: float,
    source: str | None = None,
) -> ElasticCurve:
    """Deform a polyline so the point at ``anchor_arclen`` lands on ``gaze_point``.

    Every vertex is translated by the anchor offset scaled with a tent
    weight over arc length: 1 at the anchor, falling linearly to 0 at both
    endpoints, which therefore never move. If the anchor sits at an
    endpoint, pinned endpoints win and the curve is returned undeformed.
    """
    pts = [(float(x), float(y)) for x, y in polyline]
    if len(pts) < 2:
        raise ValueError("polyline needs at least 2 points")
    cums = cumulative_lengths(pts)
    total = cums[-1]
    if total <= _EPS:
        raise ValueError("polyline has zero length")

    anchor = min(max(anchor_arclen, 0.0), total)

    def identity(anchor_idx: int) -> ElasticCurve:
        tup = tuple(pts)
        return ElasticCurve(tup, tuple((p, p) for p in tup), anchor_idx, source)

    if anchor <= _EPS:
        return identity(0)
    if anchor >= total - _EPS:
        return identity(len(pts) - 1)

    # Insert a vertex exactly at the anchor unless one already sits there.
    verts: list[Point] = []
    arcs: list[float] = []
    is_source: list[bool] = []
    anchor_index = -1
    for i, p in enumerate(pts):
        if anchor_index < 0 and cums[i] > anchor + _EPS:
            verts.append(point_at_arclen(pts, anchor, cums))
            arcs.append(anchor)
            is_source.append(False)
            anchor_index = len(verts) - 1
        verts.append(p)
        arcs.append(cums[i])
        is_source.append(True)
        if anchor_index < 0 and abs(cums[i] - anchor) <= _EPS:
            anchor_index = len(verts) - 1

    anchor_point = verts[anchor_index]
    off = (gaze_point[0] - anchor_point[0], gaze_point[1] - anchor_point[1])

    deformed: list[Point] = []
    for p, s in zip(verts, arcs):
        if s <= anchor:
            t = s / anchor
        else:
            t = (total - s) / (total - anchor)
        deformed.append((p[0] + off[0] * t, p[1] + off[1] * t))

    tethers = tuple(
        (deformed[i], verts[i]) for i in range(len(verts)) if is_source[i]
    )
    return ElasticCurve(tuple(deformed), tethers, anchor_index, source)
