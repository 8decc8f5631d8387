"""Graph generation and layout.

Provides the small-world generator and the bundled quasi-planar
metro-style fixture, plus a deterministic force-directed layout that fits
positions into the display extent.
"""

from __future__ import annotations

import json
import math
import random
from importlib import resources

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .geometry import segments_cross
from .graph import Graph, GraphError, Link, Node, graph_from_json

DEFAULT_EXTENT = (2.0, 1.96)
MARGIN_FRACTION = 0.05
METRO_FIXTURE = "metro.graph"


def _margin_box(extent: tuple[float, float]) -> tuple[float, float, float, float]:
    w, h = extent
    return (w * MARGIN_FRACTION, h * MARGIN_FRACTION, w * (1 - MARGIN_FRACTION), h * (1 - MARGIN_FRACTION))


# ---------------------------------------------------------------------------
# Force-directed layout
# ---------------------------------------------------------------------------


def layout_force_directed(
    graph: Graph,
    iterations: int = 50,
    seed: int = 0,
    min_spacing: float = 0.05,
) -> Graph:
    """Deterministic spring embedding scaled into the display extent.

    Positions always end up inside the extent with a 5% margin; a
    relaxation pass then pushes nodes apart until no pair is closer than
    half of ``min_spacing``.
    """
    if not graph.nodes:
        raise GraphError("cannot lay out an empty graph")
    x0, y0, x1, y1 = _margin_box(graph.display_extent)
    if len(graph.nodes) == 1:
        n = graph.nodes[0]
        return graph.with_positions({n.id: ((x0 + x1) / 2, (y0 + y1) / 2)})

    g = nx.Graph()
    g.add_nodes_from(n.id for n in graph.nodes)
    g.add_edges_from((l.a, l.b) for l in graph.links)
    pos = nx.spring_layout(g, iterations=iterations, seed=seed)

    ids = [n.id for n in graph.nodes]
    pts = np.array([pos[i] for i in ids], dtype=float)
    for axis, (lo, hi) in enumerate(((x0, x1), (y0, y1))):
        mn, mx = pts[:, axis].min(), pts[:, axis].max()
        if mx - mn < 1e-12:
            pts[:, axis] = (lo + hi) / 2
        else:
            pts[:, axis] = lo + (pts[:, axis] - mn) / (mx - mn) * (hi - lo)

    pts = _relax_spacing(pts, min_spacing, (x0, y0, x1, y1), seed)
    return graph.with_positions({i: (float(p[0]), float(p[1])) for i, p in zip(ids, pts)})


def _relax_spacing(
    pts: np.ndarray,
    min_spacing: float,
    box: tuple[float, float, float, float],
    seed: int,
    max_rounds: int = 80,
) -> np.ndarray:
    x0, y0, x1, y1 = box
    rng = random.Random(seed)
    pts = pts.copy()
    for _ in range(max_rounds):
        pairs = sorted(cKDTree(pts).query_pairs(min_spacing))
        if not pairs:
            break
        for i, j in pairs:
            d = pts[j] - pts[i]
            dist = float(np.hypot(*d))
            if dist < 1e-9:
                ang = rng.uniform(0, 2 * math.pi)
                d = np.array([math.cos(ang), math.sin(ang)])
                dist = 1.0
            push = (min_spacing - dist) / 2 / dist
            pts[i] -= d * push
            pts[j] += d * push
            np.clip(pts[i : i + 1], (x0, y0), (x1, y1), out=pts[i : i + 1])
            np.clip(pts[j : j + 1], (x0, y0), (x1, y1), out=pts[j : j + 1])
    return pts


# ---------------------------------------------------------------------------
# Small-world generator
# ---------------------------------------------------------------------------


def generate_small_world(
    n: int,
    k: int,
    p: float,
    seed: int = 0,
    extent: tuple[float, float] = DEFAULT_EXTENT,
    layout_iterations: int = 50,
) -> Graph:
    """Connected small-world graph with ``n * k / 2`` links, laid out to fit.

    ``k`` is the even ring-lattice degree, ``p`` the rewiring probability.
    Output is reproducible per seed.
    """
    if k % 2 != 0 or k < 2:
        raise GraphError("k must be an even integer >= 2")
    if not n > k:
        raise GraphError("n must be greater than k")
    if not 0.0 <= p <= 1.0:
        raise GraphError("p must be in [0, 1]")
    g = nx.connected_watts_strogatz_graph(n, k, p, tries=500, seed=seed)

    width = len(str(n - 1))
    name = {i: f"n{i:0{width}d}" for i in g.nodes}
    nodes = [Node(name[i], 0.0, 0.0) for i in sorted(g.nodes)]
    edges = sorted((min(u, v), max(u, v)) for u, v in g.edges)
    ewidth = len(str(len(edges) - 1))
    links = [Link(f"e{idx:0{ewidth}d}", name[u], name[v], 1) for idx, (u, v) in enumerate(edges)]

    rough = Graph(nodes, links, extent, validate=False)
    return layout_force_directed(rough, iterations=layout_iterations, seed=seed)


# ---------------------------------------------------------------------------
# Quasi-planar metro-style fixture
# ---------------------------------------------------------------------------


def make_metro_graph(
    seed: int = 7,
    n_nodes: int = 302,
    n_links: int = 369,
    n_hubs: int = 100,
    extent: tuple[float, float] = DEFAULT_EXTENT,
) -> Graph:
    """Build a metro-map-like quasi-planar graph with exact node/link counts.

    Interchange hubs are spread over the display and joined by a connected
    subset of their Delaunay edges (so the backbone is crossing-free); the
    remaining nodes subdivide backbone edges into chains of intermediate
    degree-2 stations, gently bowed like metro lines. Offsets are shrunk
    until no two links cross.
    """
    n_stations = n_nodes - n_hubs
    n_backbone = n_links - n_stations
    if n_backbone < n_hubs - 1:
        raise GraphError("not enough links for a connected backbone")

    rng = random.Random(seed)
    x0, y0, x1, y1 = _margin_box(extent)

    hubs = _poisson_points(rng, n_hubs, (x0, y0, x1, y1))
    backbone = _planar_backbone(hubs, n_backbone)

    # Distribute subdivision stations over backbone edges by length.
    lengths = [math.dist(hubs[u], hubs[v]) for u, v in backbone]
    total_len = sum(lengths)
    quota = [length / total_len * n_stations for length in lengths]
    counts = [int(q) for q in quota]
    remainders = sorted(
        range(len(backbone)), key=lambda i: (-(quota[i] - counts[i]), i)
    )
    short = n_stations - sum(counts)
    for i in remainders[:short]:
        counts[i] += 1

    amp = 0.35
    for _ in range(12):
        nodes, links = _build_metro(hubs, backbone, counts, amp, rng=random.Random(seed + 1))
        pos = {n.id: n.pos for n in nodes}
        segs = [(pos[l.a], pos[l.b]) for l in links]
        if not _any_crossing(segs):
            graph = Graph(nodes, links, extent)
            if len(graph.nodes) != n_nodes or len(graph.links) != n_links:
                raise GraphError("metro construction lost nodes or links")
            return graph
        amp *= 0.5
    raise GraphError("could not build a crossing-free metro graph")


def _poisson_points(
    rng: random.Random, count: int, box: tuple[float, float, float, float]
) -> list[tuple[float, float]]:
    x0, y0, x1, y1 = box
    spacing = math.sqrt((x1 - x0) * (y1 - y0) / count) * 0.72
    pts: list[tuple[float, float]] = []
    while len(pts) < count:
        attempts = 0
        while True:
            cand = (rng.uniform(x0, x1), rng.uniform(y0, y1))
            if all(math.dist(cand, p) >= spacing for p in pts):
                pts.append(cand)
                break
            attempts += 1
            if attempts > 4000:
                spacing *= 0.9
                attempts = 0
    return pts


def _planar_backbone(
    hubs: list[tuple[float, float]], n_edges: int
) -> list[tuple[int, int]]:
    """Connected crossing-free edge set: length-sorted Kruskal tree + extras."""
    tri = Delaunay(np.array(hubs))
    cand: set[tuple[int, int]] = set()
    for simplex in tri.simplices:
        for i in range(3):
            u, v = int(simplex[i]), int(simplex[(i + 1) % 3])
            cand.add((min(u, v), max(u, v)))
    ranked = sorted(cand, key=lambda e: (math.dist(hubs[e[0]], hubs[e[1]]), e))

    parent = list(range(len(hubs)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    chosen: list[tuple[int, int]] = []
    degree = [0] * len(hubs)
    rest: list[tuple[int, int]] = []
    for u, v in ranked:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            chosen.append((u, v))
            degree[u] += 1
            degree[v] += 1
        else:
            rest.append((u, v))
    if len(chosen) < len(hubs) - 1:
        raise GraphError("Delaunay backbone is not connected")
    for cap in (6, 8, 12):
        for u, v in rest:
            if len(chosen) >= n_edges:
                break
            if degree[u] < cap and degree[v] < cap and (u, v) not in chosen:
                chosen.append((u, v))
                degree[u] += 1
                degree[v] += 1
        if len(chosen) >= n_edges:
            break
    if len(chosen) < n_edges:
        raise GraphError("not enough Delaunay edges for the requested link count")
    return chosen


def _build_metro(
    hubs: list[tuple[float, float]],
    backbone: list[tuple[int, int]],
    counts: list[int],
    amp: float,
    rng: random.Random,
) -> tuple[list[Node], list[Link]]:
    nodes = [Node(f"n{i:03d}", x, y) for i, (x, y) in enumerate(hubs)]
    links: list[Link] = []
    next_node = len(hubs)
    next_link = 0

    def node_id(i: int) -> str:
        return f"n{i:03d}"

    for (u, v), n_mid in zip(backbone, counts):
        ax, ay = hubs[u]
        bx, by = hubs[v]
        length = math.dist(hubs[u], hubs[v])
        nx_, ny_ = (by - ay) / length, -(bx - ax) / length
        side = rng.choice((-1.0, 1.0))
        bow = min(amp * length, 0.02)
        chain = [node_id(u)]
        for m in range(n_mid):
            t = (m + 1) / (n_mid + 1)
            off = side * bow * math.sin(math.pi * t)
            nodes.append(
                Node(
                    node_id(next_node),
                    ax + (bx - ax) * t + nx_ * off,
                    ay + (by - ay) * t + ny_ * off,
                )
            )
            chain.append(node_id(next_node))
            next_node += 1
        chain.append(node_id(v))
        for s in range(len(chain) - 1):
            links.append(Link(f"e{next_link:03d}", chain[s], chain[s + 1], 1))
            next_link += 1
    return nodes, links


def _any_crossing(segs: list[tuple[tuple[float, float], tuple[float, float]]]) -> bool:
    # O(n^2) sweep is fine at fixture scale.
    for i in range(len(segs)):
        a1, a2 = segs[i]
        for j in range(i + 1, len(segs)):
            b1, b2 = segs[j]
            if segments_cross(a1, a2, b1, b2):
                return True
    return False


def load_metro() -> Graph:
    """Load the bundled metro fixture."""
    text = resources.files("gazenav").joinpath("data", METRO_FIXTURE).read_text()
    return graph_from_json(json.loads(text))
