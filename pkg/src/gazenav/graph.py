"""Graph data model, validation, file I/O, and subpath extraction.

A graph is the shared-display context visualization: nodes with 2D
positions in meters (origin bottom-left of the display plane) and
weighted undirected links. Graphs are immutable after construction, so
they can be shared freely across concurrent trial runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping

from .geometry import Point, cumulative_lengths

GRAPH_FILE_VERSION = 1


class GraphError(ValueError):
    """Raised for malformed graph documents or invariant violations."""


class _GeomToken:
    """Weak-referenceable identity for a graph's geometry."""

    __slots__ = ("__weakref__",)


@dataclass(frozen=True)
class Node:
    id: str
    x: float
    y: float

    @property
    def pos(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class Link:
    id: str
    a: str
    b: str
    w: int = 1

    def other(self, node_id: str) -> str:
        if node_id == self.a:
            return self.b
        if node_id == self.b:
            return self.a
        raise KeyError(f"node {node_id!r} is not an endpoint of link {self.id!r}")


@dataclass(frozen=True)
class Subpath:
    """Maximal chain of links whose interior nodes have degree exactly 2.

    ``nodes`` and ``links`` are ordered along the chain; ``polyline`` is the
    node positions in that order. Orientation is canonical (see
    :func:`extract_subpath`), so extracting from any member link yields an
    identical value.
    """

    key: str
    links: tuple[str, ...]
    nodes: tuple[str, ...]
    polyline: tuple[Point, ...]
    cum_lengths: tuple[float, ...]

    @property
    def total_length(self) -> float:
        return self.cum_lengths[-1]

    def link_at_arclen(self, arclen: float) -> str:
        """Link id owning the given arc length (boundaries go to the earlier link)."""
        if arclen <= 0.0:
            return self.links[0]
        for i in range(len(self.links)):
            if arclen <= self.cum_lengths[i + 1]:
                return self.links[i]
        return self.links[-1]

    def arclen_of_node(self, node_id: str) -> float:
        return self.cum_lengths[self.nodes.index(node_id)]


class Graph:
    """Validated immutable node-link graph."""

    def __init__(
        self,
        nodes: Iterable[Node],
        links: Iterable[Link],
        display_extent: tuple[float, float] = (2.0, 1.96),
        validate: bool = True,
    ) -> None:
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.links: tuple[Link, ...] = tuple(links)
        self.display_extent: tuple[float, float] = (
            float(display_extent[0]),
            float(display_extent[1]),
        )
        self._node_by_id = {n.id: n for n in self.nodes}
        self._link_by_id = {l.id: l for l in self.links}
        incident: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for l in self.links:
            if validate:
                if l.a not in self._node_by_id:
                    raise GraphError(f"link {l.id!r}: dangling endpoint {l.a!r}")
                if l.b not in self._node_by_id:
                    raise GraphError(f"link {l.id!r}: dangling endpoint {l.b!r}")
            incident[l.a].append(l.id)
            incident[l.b].append(l.id)
        self._incident = {k: tuple(sorted(v)) for k, v in incident.items()}
        # Subpaths and the geometry token are shared with weight-only
        # copies (weights play no role in either), so spatial indexes and
        # chain extraction are computed once per geometry.
        self._subpath_box: list[SubpathIndex | None] = [None]
        self._geom_token = _GeomToken()
        if validate:
            self._validate()

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        if len(self._node_by_id) != len(self.nodes):
            seen: set[str] = set()
            for n in self.nodes:
                if n.id in seen:
                    raise GraphError(f"duplicate node id {n.id!r}")
                seen.add(n.id)
        if len(self._link_by_id) != len(self.links):
            seen = set()
            for l in self.links:
                if l.id in seen:
                    raise GraphError(f"duplicate link id {l.id!r}")
                seen.add(l.id)
        w, h = self.display_extent
        if not (w > 0 and h > 0) or not (math.isfinite(w) and math.isfinite(h)):
            raise GraphError("display_extent must be positive and finite")
        for n in self.nodes:
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                raise GraphError(f"node {n.id!r}: position not finite")
            if not (0.0 <= n.x <= w and 0.0 <= n.y <= h):
                raise GraphError(
                    f"node {n.id!r}: position ({n.x}, {n.y}) outside display extent"
                )
        pairs: set[frozenset[str]] = set()
        for l in self.links:
            if l.a == l.b:
                raise GraphError(f"link {l.id!r}: self-loop on node {l.a!r}")
            if not isinstance(l.w, int) or l.w < 1:
                raise GraphError(f"link {l.id!r}: weight < 1 (got {l.w!r})")
            pair = frozenset((l.a, l.b))
            if pair in pairs:
                raise GraphError(f"link {l.id!r}: duplicate link between {l.a!r} and {l.b!r}")
            pairs.add(pair)

    # -- lookups ------------------------------------------------------------

    def node(self, node_id: str) -> Node:
        try:
            return self._node_by_id[node_id]
        except KeyError:
            raise GraphError(f"unknown node {node_id!r}") from None

    def link(self, link_id: str) -> Link:
        try:
            return self._link_by_id[link_id]
        except KeyError:
            raise GraphError(f"unknown link {link_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._node_by_id

    def degree(self, node_id: str) -> int:
        self.node(node_id)
        return len(self._incident[node_id])

    def incident(self, node_id: str) -> tuple[str, ...]:
        self.node(node_id)
        return self._incident[node_id]

    def segment(self, link_id: str) -> tuple[Point, Point]:
        l = self.link(link_id)
        return (self.node(l.a).pos, self.node(l.b).pos)

    @property
    def w_max(self) -> int:
        return max((l.w for l in self.links), default=1)

    def link_lengths(self) -> dict[str, float]:
        return {
            l.id: math.dist(self.node(l.a).pos, self.node(l.b).pos)
            for l in self.links
        }

    # -- derived graphs -----------------------------------------------------

    def with_weights(self, weights: Mapping[str, int]) -> Graph:
        """New graph with some link weights replaced; everything else shared."""
        links = tuple(
            Link(l.id, l.a, l.b, int(weights.get(l.id, l.w))) for l in self.links
        )
        out = Graph(self.nodes, links, self.display_extent)
        out._geom_token = self._geom_token
        out._subpath_box = self._subpath_box
        return out

    def with_positions(self, positions: Mapping[str, Point]) -> Graph:
        nodes = tuple(
            Node(n.id, *positions.get(n.id, (n.x, n.y))) for n in self.nodes
        )
        return Graph(nodes, self.links, self.display_extent)

    # -- subpaths ------------------------------------------------------------

    def subpaths(self) -> "SubpathIndex":
        if self._subpath_box[0] is None:
            self._subpath_box[0] = SubpathIndex(self)
        return self._subpath_box[0]

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": GRAPH_FILE_VERSION,
            "display_extent": {"w": self.display_extent[0], "h": self.display_extent[1]},
            "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in self.nodes],
            "links": [{"id": l.id, "a": l.a, "b": l.b, "w": l.w} for l in self.links],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise GraphError(f"{where}: {msg}")


def graph_from_json(doc: dict) -> Graph:
    _require(isinstance(doc, dict), "document", "top level must be an object")
    _require(doc.get("version") == GRAPH_FILE_VERSION, "version", f"expected {GRAPH_FILE_VERSION}")
    ext = doc.get("display_extent")
    _require(
        isinstance(ext, dict) and "w" in ext and "h" in ext,
        "display_extent",
        "expected object with w and h",
    )
    raw_nodes = doc.get("nodes")
    raw_links = doc.get("links")
    _require(isinstance(raw_nodes, list), "nodes", "expected a list")
    _require(isinstance(raw_links, list), "links", "expected a list")

    nodes = []
    for i, nd in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        _require(isinstance(nd, dict), where, "expected an object")
        _require(isinstance(nd.get("id"), str), where, "id must be a string")
        for f in ("x", "y"):
            _require(isinstance(nd.get(f), (int, float)), where, f"{f} must be a number")
        nodes.append(Node(nd["id"], float(nd["x"]), float(nd["y"])))
    links = []
    for i, ld in enumerate(raw_links):
        where = f"links[{i}]"
        _require(isinstance(ld, dict), where, "expected an object")
        _require(isinstance(ld.get("id"), str), where, "id must be a string")
        for f in ("a", "b"):
            _require(isinstance(ld.get(f), str), where, f"{f} must be a node id string")
        w = ld.get("w", 1)
        _require(isinstance(w, int) and not isinstance(w, bool), where, "w must be an integer")
        _require(w >= 1, where, f"weight < 1 (link {ld['id']!r})")
        links.append(Link(ld["id"], ld["a"], ld["b"], w))
    return Graph(nodes, links, (float(ext["w"]), float(ext["h"])))


def load_graph(source: str | Path | IO[str]) -> Graph:
    """Load and validate a graph document (JSON text, see ``to_json``)."""
    if hasattr(source, "read"):
        text = source.read()  # type: ignore[union-attr]
    else:
        text = Path(source).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphError(f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return graph_from_json(doc)


# ---------------------------------------------------------------------------
# Subpath extraction
# ---------------------------------------------------------------------------


def extract_subpath(graph: Graph, link_id: str) -> Subpath:
    """The unique maximal degree-2 chain containing ``link_id``.

    The chain is extended through interior nodes of degree exactly 2 in
    both directions. Orientation is canonical so repeated extraction from
    any member link returns the same value: the endpoint with the lower
    node id comes first; for closed loops the chain starts and ends at the
    lowest node id on the loop, headed along its lower-id link.
    """
    start = graph.link(link_id)

    def walk(from_node: str, via: Link) -> tuple[list[str], list[str]]:
        """Follow the chain away from ``from_node`` until a branch or loop."""
        nodes = [from_node]
        links = [via.id]
        current = via.other(from_node)
        prev_link = via
        while graph.degree(current) == 2 and current != from_node:
            nodes.append(current)
            nxt_id = next(i for i in graph.incident(current) if i != prev_link.id)
            prev_link = graph.link(nxt_id)
            links.append(prev_link.id)
            current = prev_link.other(current)
        nodes.append(current)
        return nodes, links

    a_nodes, a_links = walk(start.b, start)  # toward a-side: ends past a
    # a_nodes runs from start.b through start.a onwards; reverse it so the
    # chain reads tail ... start.a start.b.
    if a_nodes[-1] == start.b and len(a_links) > 1:
        # Closed loop through the seed link: canonicalize directly.
        loop_nodes = a_nodes[:-1]
        loop_links = a_links
        return _canonical_loop(graph, loop_nodes, loop_links)

    b_nodes, b_links = walk(start.a, start)
    nodes = list(reversed(a_nodes)) + b_nodes[2:]
    links = list(reversed(a_links[1:])) + b_links
    return _canonical_chain(graph, nodes, links)


def _canonical_chain(graph: Graph, nodes: list[str], links: list[str]) -> Subpath:
    if nodes[0] == nodes[-1]:
        return _canonical_loop(graph, nodes[:-1], links)
    if nodes[-1] < nodes[0]:
        nodes = list(reversed(nodes))
        links = list(reversed(links))
    elif nodes[-1] == nodes[0]:  # pragma: no cover - loop handled above
        pass
    return _build_subpath(graph, nodes, links)


def _canonical_loop(graph: Graph, loop_nodes: list[str], loop_links: list[str]) -> Subpath:
    """Rotate/orient a closed chain into a canonical form.

    Anchored at the branch node when the loop hangs off one (the only
    valid endpoint), otherwise at the lowest node id on the loop.
    """
    n = len(loop_nodes)
    branch = [i for i in range(n) if graph.degree(loop_nodes[i]) != 2]
    if branch:
        k = branch[0]
    else:
        k = min(range(n), key=lambda i: loop_nodes[i])
    nodes = [loop_nodes[(k + i) % n] for i in range(n)] + [loop_nodes[k]]
    links = [loop_links[(k + i) % n] for i in range(n)]
    rev_nodes = [nodes[0]] + list(reversed(nodes[1:-1])) + [nodes[0]]
    rev_links = list(reversed(links))
    if (rev_links[0], rev_nodes[1]) < (links[0], nodes[1]):
        nodes, links = rev_nodes, rev_links
    return _build_subpath(graph, nodes, links)


def _build_subpath(graph: Graph, nodes: list[str], links: list[str]) -> Subpath:
    polyline = tuple(graph.node(n).pos for n in nodes)
    cums = tuple(cumulative_lengths(polyline))
    key = "sp:" + min(links)
    return Subpath(key, tuple(links), tuple(nodes), polyline, cums)


class SubpathIndex:
    """All maximal subpaths of a graph, with a link-id lookup.

    Subpaths partition the link set; the index is computed once per graph
    by extracting from each link in id order.
    """

    def __init__(self, graph: Graph) -> None:
        self.subpaths: list[Subpath] = []
        self._by_link: dict[str, Subpath] = {}
        for link in sorted(graph.links, key=lambda l: l.id):
            if link.id in self._by_link:
                continue
            sp = extract_subpath(graph, link.id)
            self.subpaths.append(sp)
            for lid in sp.links:
                self._by_link[lid] = sp

    def for_link(self, link_id: str) -> Subpath:
        return self._by_link[link_id]

    def by_key(self, key: str) -> Subpath:
        for sp in self.subpaths:
            if sp.key == key:
                return sp
        raise KeyError(key)
