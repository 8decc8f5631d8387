"""Sampling of trial task paths over a graph.

A task path is a simple alternating node/link sequence of fixed length
whose links can be promoted to a high personal weight.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .geometry import segments_cross
from .graph import Graph, GraphError

PATH_WEIGHT = 3
LONG_LINK_PERCENTILE = 75.0


@dataclass(frozen=True)
class TaskPath:
    """Ordered route of ``len(links)`` links and ``len(links)+1`` nodes."""

    nodes: tuple[str, ...]
    links: tuple[str, ...]

    @property
    def start_node(self) -> str:
        return self.nodes[0]

    def elements(self) -> tuple[tuple[str, str], ...]:
        """Alternating ("node", id) / ("link", id) sequence, start first."""
        out: list[tuple[str, str]] = [("node", self.nodes[0])]
        for i, lid in enumerate(self.links):
            out.append(("link", lid))
            out.append(("node", self.nodes[i + 1]))
        return tuple(out)

    def validate(self, graph: Graph) -> None:
        if len(self.nodes) != len(self.links) + 1:
            raise GraphError("task path must alternate nodes and links")
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError("task path must be simple (no repeated node)")
        for i, lid in enumerate(self.links):
            l = graph.link(lid)
            if {l.a, l.b} != {self.nodes[i], self.nodes[i + 1]}:
                raise GraphError(f"link {lid!r} does not join consecutive path nodes")


class PathSamplingError(RuntimeError):
    """No valid task path found within the retry budget."""


def _path_self_crossings(graph: Graph, node_seq: list[str]) -> bool:
    segs = [
        (graph.node(node_seq[i]).pos, graph.node(node_seq[i + 1]).pos)
        for i in range(len(node_seq) - 1)
    ]
    for i in range(len(segs)):
        for j in range(i + 2, len(segs)):
            if segments_cross(segs[i][0], segs[i][1], segs[j][0], segs[j][1]):
                return True
    return False


def sample_task_path(
    graph: Graph,
    length: int = 7,
    kind: str = "weighted",
    require_long_link: bool = False,
    seed: int = 0,
    max_tries: int = 20000,
) -> tuple[TaskPath, Graph]:
    """Sample a simple task path and reweight the graph to match.

    ``kind="weighted"`` returns a graph whose path links carry weight 3 and
    every other link weight 1; ``kind="homogeneous"`` returns an all-ones
    graph. Path links never cross each other geometrically. With
    ``require_long_link``, at least one path link is at or above the 75th
    percentile of all link lengths in the graph.
    """
    if kind not in ("weighted", "homogeneous"):
        raise ValueError(f"unknown path kind {kind!r}")
    if length < 1:
        raise ValueError("length must be >= 1")

    rng = random.Random(seed)
    node_ids = sorted(n.id for n in graph.nodes)
    lengths = graph.link_lengths()
    long_cut = float(np.percentile(sorted(lengths.values()), LONG_LINK_PERCENTILE)) if lengths else 0.0

    for _ in range(max_tries):
        start = rng.choice(node_ids)
        nodes = [start]
        links: list[str] = []
        seen = {start}
        ok = True
        for _ in range(length):
            current = nodes[-1]
            options = [
                lid
                for lid in graph.incident(current)
                if graph.link(lid).other(current) not in seen
            ]
            if not options:
                ok = False
                break
            lid = rng.choice(options)
            nxt = graph.link(lid).other(current)
            links.append(lid)
            nodes.append(nxt)
            seen.add(nxt)
        if not ok:
            continue
        if require_long_link and max(lengths[lid] for lid in links) < long_cut:
            continue
        if _path_self_crossings(graph, nodes):
            continue

        path = TaskPath(tuple(nodes), tuple(links))
        if kind == "weighted":
            weights = {l.id: 1 for l in graph.links}
            weights.update({lid: PATH_WEIGHT for lid in links})
        else:
            weights = {l.id: 1 for l in graph.links}
        out = graph.with_weights(weights)
        path.validate(out)
        return path, out

    raise PathSamplingError(
        f"no valid {length}-link path found in {max_tries} tries (seed {seed})"
    )
