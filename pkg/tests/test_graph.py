from __future__ import annotations

import io
import json
import math
import random

import pytest

from gazenav.geometry import segments_cross
from gazenav.graph import (
    Graph,
    GraphError,
    Link,
    Node,
    extract_subpath,
    graph_from_json,
    load_graph,
)


def doc(nodes, links, extent=(2.0, 1.96)):
    return {
        "version": 1,
        "display_extent": {"w": extent[0], "h": extent[1]},
        "nodes": [{"id": i, "x": x, "y": y} for i, x, y in nodes],
        "links": [{"id": i, "a": a, "b": b, "w": w} for i, a, b, w in links],
    }


def chain_graph(*xs):
    """Straight chain n0-n1-...: one link per consecutive pair."""
    nodes = [Node(f"n{i}", x, 0.5) for i, x in enumerate(xs)]
    links = [Link(f"e{i}", f"n{i}", f"n{i+1}", 1) for i in range(len(xs) - 1)]
    return Graph(nodes, links)


# ---------------------------------------------------------------------------
# Loading and validation
# ---------------------------------------------------------------------------


def test_load_minimal_graph():
    d = doc([("a", 0.1, 0.1), ("b", 0.4, 0.1)], [("e1", "a", "b", 1)])
    g = load_graph(io.StringIO(json.dumps(d)))
    assert len(g.nodes) == 2
    assert len(g.links) == 1
    assert len(g.subpaths().subpaths) == 1


def test_load_rejects_zero_weight():
    d = doc([("a", 0.1, 0.1), ("b", 0.4, 0.1)], [("e1", "a", "b", 0)])
    with pytest.raises(GraphError, match="weight < 1"):
        load_graph(io.StringIO(json.dumps(d)))


def test_load_rejects_dangling_endpoint():
    d = doc([("a", 0.1, 0.1)], [("e1", "a", "zz", 1)])
    with pytest.raises(GraphError, match="dangling"):
        graph_from_json(d)


def test_load_rejects_duplicate_node_id():
    d = doc([("a", 0.1, 0.1), ("a", 0.3, 0.1)], [])
    with pytest.raises(GraphError, match="duplicate node"):
        graph_from_json(d)


def test_load_rejects_parse_error():
    with pytest.raises(GraphError, match="parse error"):
        load_graph(io.StringIO("{not json"))


def test_validate_rejects_self_loop():
    with pytest.raises(GraphError, match="self-loop"):
        Graph([Node("a", 0.1, 0.1)], [Link("e", "a", "a", 1)])


def test_validate_rejects_duplicate_pair():
    with pytest.raises(GraphError, match="duplicate link"):
        Graph(
            [Node("a", 0.1, 0.1), Node("b", 0.2, 0.2)],
            [Link("e1", "a", "b", 1), Link("e2", "b", "a", 1)],
        )


def test_validate_rejects_out_of_extent():
    with pytest.raises(GraphError, match="outside display extent"):
        Graph([Node("a", 5.0, 0.1)], [])


def test_metro_fixture_counts(metro):
    assert len(metro.nodes) == 302
    assert len(metro.links) == 369


def test_metro_fixture_is_crossing_free(metro):
    pos = {n.id: n.pos for n in metro.nodes}
    segs = [(pos[l.a], pos[l.b]) for l in metro.links]
    crossings = sum(
        1
        for i in range(len(segs))
        for j in range(i + 1, len(segs))
        if segments_cross(segs[i][0], segs[i][1], segs[j][0], segs[j][1])
    )
    assert crossings == 0


def test_roundtrip_save_load(tmp_path, metro):
    path = tmp_path / "m.graph"
    metro.save(path)
    again = load_graph(path)
    assert [n.id for n in again.nodes] == [n.id for n in metro.nodes]
    assert [(l.id, l.a, l.b, l.w) for l in again.links] == [
        (l.id, l.a, l.b, l.w) for l in metro.links
    ]


# ---------------------------------------------------------------------------
# Degree
# ---------------------------------------------------------------------------


def test_degree_isolated_chain_star():
    g = Graph(
        [Node("iso", 0.1, 0.1), Node("c", 1.0, 1.0)]
        + [Node(f"s{i}", 1.0 + 0.05 * (i + 1), 1.0) for i in range(5)],
        [Link(f"e{i}", "c", f"s{i}", 1) for i in range(5)],
    )
    assert g.degree("iso") == 0
    assert g.degree("c") == 5
    chain = chain_graph(0.1, 0.2, 0.3)
    assert chain.degree("n1") == 2
    with pytest.raises(GraphError, match="unknown node"):
        chain.degree("nope")


# ---------------------------------------------------------------------------
# Subpath extraction
# ---------------------------------------------------------------------------


def test_subpath_simple_chain():
    g = chain_graph(0.1, 0.2, 0.3)
    sp = extract_subpath(g, "e0")
    assert sp.links == ("e0", "e1")
    assert sp.nodes == ("n0", "n1", "n2")
    assert sp.total_length == pytest.approx(0.2)


def test_subpath_between_branch_nodes_is_single_link():
    # x-a-y where both a endpoints have degree 3
    nodes = [
        Node("a", 1.0, 1.0),
        Node("b", 1.4, 1.0),
        Node("a1", 0.8, 1.2),
        Node("a2", 0.8, 0.8),
        Node("b1", 1.6, 1.2),
        Node("b2", 1.6, 0.8),
    ]
    links = [
        Link("mid", "a", "b", 1),
        Link("l1", "a", "a1", 1),
        Link("l2", "a", "a2", 1),
        Link("r1", "b", "b1", 1),
        Link("r2", "b", "b2", 1),
    ]
    g = Graph(nodes, links)
    sp = extract_subpath(g, "mid")
    assert sp.links == ("mid",)
    assert sp.nodes == ("a", "b")


def test_subpath_unknown_link():
    g = chain_graph(0.1, 0.2)
    with pytest.raises(GraphError, match="unknown link"):
        extract_subpath(g, "nope")


def test_subpath_orientation_stable_from_any_member():
    g = chain_graph(0.1, 0.2, 0.3, 0.4, 0.5)
    expect = extract_subpath(g, "e0")
    for lid in ("e1", "e2", "e3"):
        assert extract_subpath(g, lid) == expect
    assert expect.nodes[0] == "n0"  # lower endpoint id first


def test_subpath_loop_with_branch_anchor():
    # Triangle hanging off a hub that also has a pendant link.
    nodes = [
        Node("hub", 1.0, 1.0),
        Node("p", 0.5, 1.0),
        Node("u", 1.2, 1.2),
        Node("v", 1.2, 0.8),
    ]
    links = [
        Link("pen", "hub", "p", 1),
        Link("c1", "hub", "u", 1),
        Link("c2", "u", "v", 1),
        Link("c3", "v", "hub", 1),
    ]
    g = Graph(nodes, links)
    for lid in ("c1", "c2", "c3"):
        sp = extract_subpath(g, lid)
        assert sp.nodes[0] == "hub"
        assert sp.nodes[-1] == "hub"
        assert set(sp.links) == {"c1", "c2", "c3"}
    pen = extract_subpath(g, "pen")
    assert pen.links == ("pen",)


def test_subpath_partition_on_random_graphs():
    rng = random.Random(4)
    for _ in range(8):
        n = rng.randint(2, 24)
        nodes = [
            Node(f"n{i}", 0.1 + 1.8 * rng.random(), 0.1 + 1.7 * rng.random())
            for i in range(n)
        ]
        pairs = set()
        links = []
        for i in range(rng.randint(1, min(40, n * (n - 1) // 2))):
            a, b = rng.sample(range(n), 2)
            key = frozenset((a, b))
            if key in pairs:
                continue
            pairs.add(key)
            links.append(Link(f"e{i}", f"n{a}", f"n{b}", 1))
        if not links:
            continue
        g = Graph(nodes, links)
        seen: dict[str, str] = {}
        for l in g.links:
            sp = extract_subpath(g, l.id)
            # idempotent and orientation-stable from any member link
            for member in sp.links:
                assert extract_subpath(g, member) == sp
            for member in sp.links:
                if member in seen:
                    assert seen[member] == sp.key
                seen[member] = sp.key
        assert set(seen) == {l.id for l in g.links}


def test_metro_subpaths_match_bruteforce_chain_walk(metro):
    """Every link's subpath equals an independently walked degree-2 chain."""

    def brute_chain(link_id):
        l = metro.link(link_id)
        members = {link_id}
        for end in (l.a, l.b):
            prev, cur = link_id, end
            while metro.degree(cur) == 2:
                nxt = next(i for i in metro.incident(cur) if i != prev)
                if nxt in members:
                    break
                members.add(nxt)
                prev = nxt
                cur = metro.link(nxt).other(cur)
        return members

    idx = metro.subpaths()
    for l in metro.links:
        assert set(idx.for_link(l.id).links) == brute_chain(l.id)


def test_metro_subpath_interior_degrees(metro):
    for sp in metro.subpaths().subpaths:
        for nid in sp.nodes[1:-1]:
            assert metro.degree(nid) == 2
        if sp.nodes[0] != sp.nodes[-1]:
            assert metro.degree(sp.nodes[0]) != 2
            assert metro.degree(sp.nodes[-1]) != 2


def test_with_weights_returns_new_graph(metro):
    target = metro.links[0].id
    g2 = metro.with_weights({target: 3})
    assert g2.link(target).w == 3
    assert metro.link(target).w == 1
    assert g2.w_max == 3
