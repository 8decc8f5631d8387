from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazenav.geometry import project_point_polyline
from gazenav.graph import Graph, Link, Node
from gazenav.engine import (
    EngineState,
    GazeSample,
    NavEngine,
    Technique,
    TechniqueConfig,
    elastic_fade,
    magnetic_value,
    sliding_value,
    weight_distance,
)


def cross_scene(w_attached=1, w_crossing=1):
    """Horizontal link la crossed by vertical link lb at (1, 1)."""
    return Graph(
        [
            Node("a1", 0.5, 1.0),
            Node("a2", 1.5, 1.0),
            Node("b1", 1.0, 0.5),
            Node("b2", 1.0, 1.5),
        ],
        [
            Link("la", "a1", "a2", w_attached),
            Link("lb", "b1", "b2", w_crossing),
        ],
    )


def chain_scene(n=5, step=0.2):
    return Graph(
        [Node(f"n{i}", 0.2 + step * i, 1.0) for i in range(n)],
        [Link(f"e{i}", f"n{i}", f"n{i+1}", 1) for i in range(n - 1)],
    )


def t_junction(w_up=1, w_down=1):
    """Horizontal approach chain into node c, with up/down continuations."""
    return Graph(
        [
            Node("a", 0.4, 1.0),
            Node("b", 0.7, 1.0),
            Node("c", 1.0, 1.0),
            Node("up", 1.0, 1.4),
            Node("dn", 1.0, 0.6),
        ],
        [
            Link("in1", "a", "b", 1),
            Link("in2", "b", "c", 1),
            Link("up", "c", "up", w_up),
            Link("dn", "c", "dn", w_down),
        ],
    )


def drive(engine, state, points, t0=0.0, dt=1 / 60):
    frames, events = [], []
    t = t0
    for p in points:
        state, frame, evs = engine.step(state, GazeSample(t, p))
        frames.append(frame)
        events.extend(evs)
        t += dt
    return state, frames, events


# ---------------------------------------------------------------------------
# Value formulas
# ---------------------------------------------------------------------------


def test_weight_distance():
    assert weight_distance(3, 3) == 1
    assert weight_distance(1, 3) == 3
    assert weight_distance(1, 1) == 1


def test_magnetic_value_examples():
    cfg = TechniqueConfig(w_max=3).resolved(cross_scene())
    assert magnetic_value(0.02, 3, False, cfg) == pytest.approx(0.12)
    assert magnetic_value(0.02, 3, True, cfg) == pytest.approx(0.095)
    assert magnetic_value(0.0, 1, False, cfg) == pytest.approx(0.3)
    # Crossing a plain link over a weighted attachment does not detach.
    assert magnetic_value(0.0, 1, False, cfg) > magnetic_value(0.02, 3, True, cfg)


def test_value_argmin_invariant_under_weight_distance_scaling():
    cfg = TechniqueConfig(w_max=3)
    cands = [(0.011, 1), (0.02, 3), (0.0, 2), (0.04, 3)]

    def ranking(scale):
        vals = [
            (d + cfg.c1) * (weight_distance(w, 3) * scale) for d, w in cands
        ]
        return min(range(len(cands)), key=lambda i: (vals[i], i))

    assert ranking(1.0) == ranking(7.5) == ranking(0.01)

    def sliding_ranking(scale):
        vals = [d * weight_distance(w, 3) * scale for d, w in cands]
        return min(range(len(cands)), key=lambda i: (vals[i], i))

    assert sliding_ranking(1.0) == sliding_ranking(123.0)


def test_elastic_fade_law():
    assert elastic_fade([]) == pytest.approx(1.0)
    assert elastic_fade([1.0]) == pytest.approx(0.0)
    assert elastic_fade([0.5, 0.2]) == pytest.approx(0.5)
    # competitor value twice the attached value -> intensity 0.5 -> alpha 0.5
    assert elastic_fade([1.0 / 2.0]) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# init
# ---------------------------------------------------------------------------


def test_init_baseline_unattached():
    eng = NavEngine(Technique.BASELINE, cross_scene())
    st = eng.initial_state()
    assert st.attached_link is None
    assert st.attached_subpath is None


def test_init_rejects_unknown_technique():
    with pytest.raises(ValueError, match="unknown technique"):
        NavEngine("teleport", cross_scene())


def test_sliding_attaches_on_first_link_hover():
    eng = NavEngine(Technique.SLIDING_RING, chain_scene())
    st, _, events = eng.step(eng.initial_state(), GazeSample(0.0, (0.3, 1.0)))
    kinds = [e.kind for e in events]
    assert "attached" in kinds
    assert st.attached_subpath is not None


def test_magnetic_unattached_when_nothing_in_radius():
    eng = NavEngine(Technique.MAGNETIC_AREA, cross_scene())
    st, frame, events = eng.step(eng.initial_state(), GazeSample(0.0, (0.2, 0.2)))
    assert st.attached_link is None
    assert frame.rays == ()
    assert frame.rope is None
    assert all(e.kind not in ("attached", "detached") for e in events)


# ---------------------------------------------------------------------------
# Magnetic behavior
# ---------------------------------------------------------------------------


def test_magnetic_homogeneous_detach_boundary():
    # Crossing link at distance 0 steals the attachment iff the attached
    # link is more than c1*(1 - c_a) = 0.025 m away.
    for d_att, expect in ((0.024, "la"), (0.025, "la"), (0.026, "lb")):
        eng = NavEngine(Technique.MAGNETIC_AREA, cross_scene())
        st = eng.initial_state()
        st, _, _ = eng.step(st, GazeSample(0.0, (0.7, 1.0)))
        assert st.attached_link == "la"
        st, _, _ = eng.step(st, GazeSample(0.1, (1.0, 1.0 + d_att)))
        assert st.attached_link == expect, f"d_att={d_att}"


def test_magnetic_weighted_attachment_survives_crossing_everywhere_in_radius():
    g = cross_scene(w_attached=3, w_crossing=1)
    eng = NavEngine(Technique.MAGNETIC_AREA, g)
    st = eng.initial_state()
    st, _, _ = eng.step(st, GazeSample(0.0, (0.7, 1.0)))
    assert st.attached_link == "la"
    t = 0.1
    for k in range(50):
        d = k * 0.001  # sweep strictly inside the influence radius
        st, _, _ = eng.step(st, GazeSample(t, (1.0, 1.0 + d)))
        assert st.attached_link == "la", f"detached at d={d}"
        t += 0.1
    # Beyond R the attached link leaves the candidate set and the crossing
    # link legitimately takes over.
    st, _, _ = eng.step(st, GazeSample(t, (1.0, 1.06)))
    assert st.attached_link == "lb"


def test_magnetic_detach_event_when_leaving_influence():
    eng = NavEngine(Technique.MAGNETIC_AREA, cross_scene())
    st = eng.initial_state()
    st, _, _ = eng.step(st, GazeSample(0.0, (0.7, 1.0)))
    st, frame, events = eng.step(st, GazeSample(0.1, (0.7, 1.2)))
    assert st.attached_link is None
    assert [e.kind for e in events if e.kind in ("attached", "detached")] == ["detached"]
    assert frame.rope is None and frame.rays == ()


def test_magnetic_hysteresis_fixed_point_under_static_gaze():
    eng = NavEngine(Technique.MAGNETIC_AREA, cross_scene())
    st = eng.initial_state()
    gaze = (1.0, 1.013)  # between both links
    st, _, _ = eng.step(st, GazeSample(0.0, gaze))
    first = st.attached_link
    assert first is not None
    for k in range(5):
        st, _, events = eng.step(st, GazeSample(0.1 + k * 0.1, gaze))
        assert st.attached_link == first
        assert all(e.kind != "detached" for e in events)


def test_magnetic_rays_cap_and_intensity_order():
    nodes = [Node("c", 1.0, 1.0)]
    links = []
    for i in range(8):
        ang = math.radians(i * 45)
        nodes.append(Node(f"p{i}", 1.0 + 0.4 * math.cos(ang), 1.0 + 0.4 * math.sin(ang)))
        links.append(Link(f"l{i}", "c", f"p{i}", 1))
    g = Graph(nodes, links)
    eng = NavEngine(Technique.MAGNETIC_AREA, g)
    st, frame, _ = eng.step(eng.initial_state(), GazeSample(0.0, (1.0, 1.02)))
    assert st.attached_link is not None
    assert 1 <= len(frame.rays) <= 5
    ints = [r.intensity for r in frame.rays]
    assert ints == sorted(ints, reverse=True)
    assert all(0.0 <= v <= 1.0 for v in ints)
    for ray in frame.rays:
        a, b = g.segment(ray.link)
        assert project_point_polyline(ray.point, [a, b]).distance < 1e-9


def test_magnetic_elastic_frame_has_no_rays_but_fades():
    g = cross_scene()
    eng = NavEngine(Technique.MAGNETIC_ELASTIC, g)
    st = eng.initial_state()
    st, frame, _ = eng.step(st, GazeSample(0.0, (0.7, 1.0)))
    assert frame.rays == ()
    assert frame.elastic is not None
    assert frame.elastic_alpha == pytest.approx(1.0)  # nothing else within 2R
    st, frame, _ = eng.step(st, GazeSample(0.1, (1.0, 1.02)))
    assert frame.elastic is not None
    assert 0.0 <= frame.elastic_alpha < 1.0  # crossing link now competes


def test_magnetic_elastic_alpha_zero_at_detachment_boundary():
    eng = NavEngine(Technique.MAGNETIC_ELASTIC, cross_scene())
    st = eng.initial_state()
    st, _, _ = eng.step(st, GazeSample(0.0, (0.7, 1.0)))
    # At d_att = 0.025 on the crossing the competitor value equals the
    # attached value: intensity 1, alpha 0, attachment still held.
    st, frame, _ = eng.step(st, GazeSample(0.1, (1.0, 1.025)))
    assert st.attached_link == "la"
    assert frame.elastic_alpha == pytest.approx(0.0, abs=1e-9)


def test_magnetic_active_point_is_attachment_projection():
    eng = NavEngine(Technique.MAGNETIC_AREA, cross_scene())
    st = eng.initial_state()
    assert eng.active_point(st, (0.7, 1.1)) is None
    st, _, _ = eng.step(st, GazeSample(0.0, (0.7, 1.03)))
    pt = eng.active_point(st, (0.7, 1.03))
    assert pt == pytest.approx((0.7, 1.0))


# ---------------------------------------------------------------------------
# Sliding behavior
# ---------------------------------------------------------------------------


def test_sliding_ring_stays_attached_far_away():
    eng = NavEngine(Technique.SLIDING_RING, chain_scene())
    st = eng.initial_state()
    st, _, _ = eng.step(st, GazeSample(0.0, (0.3, 1.0)))
    key = st.attached_subpath
    st, frame, events = eng.step(st, GazeSample(0.1, (0.5, 0.5)))
    assert st.attached_subpath == key
    assert frame.ring == pytest.approx((0.5, 1.0))
    assert frame.trail == ((0.5, 0.5), frame.ring)
    assert all(e.kind != "detached" for e in events)


def test_sliding_ring_containment_random_walk(metro):
    import random

    rng = random.Random(5)
    eng = NavEngine(Technique.SLIDING_RING, metro)
    st = eng.initial_state()
    start = metro.nodes[40].pos
    st, _, _ = eng.step(st, GazeSample(0.0, start))
    pos = start
    t = 1 / 60
    detached = 0
    for k in range(400):
        pos = (pos[0] + rng.uniform(-0.03, 0.03), pos[1] + rng.uniform(-0.03, 0.03))
        st, frame, events = eng.step(st, GazeSample(t, pos))
        t += 1 / 60
        detached += sum(1 for e in events if e.kind == "detached")
        if st.attached_subpath is not None and frame.ring is not None:
            sp = eng.subpaths.by_key(st.attached_subpath)
            assert project_point_polyline(frame.ring, sp.polyline).distance < 1e-9
    assert detached == 0
    assert st.attached_subpath is not None


def test_sliding_outside_node_prefers_weighted_link():
    g = t_junction(w_up=3, w_down=1)
    eng = NavEngine(Technique.SLIDING_RING, g)
    # d=0.04 to the weighted link, d=0.02 to the plain one: weighted wins.
    gaze = (1.04, 1.02)
    chosen = eng.sliding_choose_link("c", gaze, gaze_inside_node=False, arrival_link="in2")
    d_up = 0.04 * weight_distance(3, 3)
    d_dn = 0.02 * weight_distance(1, 3)
    assert d_up < d_dn
    assert chosen == "up"


def test_sliding_choose_link_single_incident():
    g = chain_scene(3)
    eng = NavEngine(Technique.SLIDING_RING, g)
    assert (
        eng.sliding_choose_link("n0", (0.0, 0.0), gaze_inside_node=False, arrival_link="e0")
        == "e0"
    )


def test_sliding_slice_exit_picks_zone_link():
    g = t_junction()
    eng = NavEngine(Technique.SLIDING_RING, g)
    # links up (bearing 90) and dn (bearing 270) from c; exit at bearing 10
    # degrees must pick whichever zone contains it.
    links, slices = eng._node_slices("c", "in2")
    chosen = eng.sliding_choose_link(
        "c",
        (1.0 + 0.05 * math.cos(math.radians(10)), 1.0 + 0.05 * math.sin(math.radians(10))),
        gaze_inside_node=True,
        slice_set=slices,
        slice_links=links,
        arrival_link="in2",
    )
    assert chosen == "up"


def test_sliding_full_transfer_through_node():
    g = t_junction(w_up=3, w_down=1)
    eng = NavEngine(Technique.SLIDING_RING, g)
    st = eng.initial_state()
    xs = [0.45 + 0.05 * k for k in range(12)]  # slide along the approach
    route = [(x, 1.0) for x in xs] + [(1.0, 1.0)] + [(1.0, 1.0 + 0.03 * k) for k in range(1, 8)]
    st, frames, events = drive(eng, st, route)
    kinds = [e.kind for e in events]
    assert "slice_committed" in kinds or kinds.count("attached") >= 2
    sp = eng.subpaths.by_key(st.attached_subpath)
    assert "up" in sp.links
    assert all(k != "detached" for k in kinds)


def test_sliding_elastic_identity_on_anchor():
    g = chain_scene()
    eng = NavEngine(Technique.SLIDING_ELASTIC, g)
    st = eng.initial_state()
    st, _, _ = eng.step(st, GazeSample(0.0, (0.3, 1.0)))
    st, frame, _ = eng.step(st, GazeSample(0.1, (0.5, 1.0)))
    # gaze on the path: curve equals the original subpath
    for (d, o) in frame.elastic.tethers:
        assert d == pytest.approx(o, abs=1e-12)
    assert frame.ring == pytest.approx((0.5, 1.0))


def test_sliding_elastic_transfers_only_via_slice_exit():
    g = t_junction(w_up=3, w_down=1)
    eng = NavEngine(Technique.SLIDING_ELASTIC, g)
    st = eng.initial_state()
    st, _, _ = eng.step(st, GazeSample(0.0, (0.5, 1.0)))
    first = st.attached_subpath
    # Gaze jumps beyond the node but never inside its hit radius: the
    # elastic variant must NOT transfer via the beyond-node shortcut.
    st, _, events = eng.step(st, GazeSample(0.1, (1.3, 1.0)))
    assert st.attached_subpath == first
    # Now pass through the node and exit upward: slice commit transfers.
    st, _, _ = eng.step(st, GazeSample(0.2, (1.0, 1.0)))
    st, _, events = eng.step(st, GazeSample(0.3, (1.0, 1.05)))
    kinds = [e.kind for e in events]
    assert "slice_committed" in kinds
    sp = eng.subpaths.by_key(st.attached_subpath)
    assert "up" in sp.links


def test_sliding_elastic_curve_endpoints_pinned(metro):
    eng = NavEngine(Technique.SLIDING_ELASTIC, metro)
    st = eng.initial_state()
    start = metro.nodes[10].pos
    st, _, _ = eng.step(st, GazeSample(0.0, start))
    if st.attached_subpath is None:
        st, _, _ = eng.step(st, GazeSample(0.05, metro.links[0] and metro.node(metro.links[0].a).pos))
    st, frame, _ = eng.step(st, GazeSample(0.1, (start[0] + 0.2, start[1] + 0.2)))
    sp = eng.subpaths.by_key(st.attached_subpath)
    assert frame.elastic.points[0] == sp.polyline[0]
    assert frame.elastic.points[-1] == sp.polyline[-1]
    # ring sits on the deformed curve
    assert project_point_polyline(frame.ring, frame.elastic.points).distance < 1e-9


# ---------------------------------------------------------------------------
# Baseline
# ---------------------------------------------------------------------------


def test_baseline_frame_is_gaze_echo_only():
    eng = NavEngine(Technique.BASELINE, cross_scene())
    _, frame, _ = eng.step(eng.initial_state(), GazeSample(0.0, (0.7, 1.2)))
    assert frame.ring is None and frame.trail is None
    assert frame.rope is None and frame.elastic is None and frame.rays == ()
    assert frame.gaze == (0.7, 1.2)


def test_baseline_hover_tolerance_scales_with_weight():
    g = cross_scene(w_attached=3, w_crossing=1)
    cfg = TechniqueConfig(base_link_width=0.006, hover_pad=0.005)
    eng = NavEngine(Technique.BASELINE, g, cfg)
    # la has w=3: tolerance 0.009 + 0.005 = 0.014
    _, _, events = eng.step(eng.initial_state(), GazeSample(0.0, (0.7, 1.0135)))
    assert any(e.kind == "cursor_over_link" and e.link == "la" for e in events)
    _, _, events = eng.step(eng.initial_state(), GazeSample(0.0, (0.7, 1.0145)))
    assert not any(e.kind == "cursor_over_link" and e.link == "la" for e in events)
    # lb has w=1: tolerance 0.008
    _, _, events = eng.step(eng.initial_state(), GazeSample(0.0, (1.0075, 0.7)))
    assert any(e.kind == "cursor_over_link" and e.link == "lb" for e in events)
    _, _, events = eng.step(eng.initial_state(), GazeSample(0.0, (1.0085, 0.7)))
    assert not any(e.kind == "cursor_over_link" and e.link == "lb" for e in events)


def test_baseline_node_touch():
    eng = NavEngine(Technique.BASELINE, cross_scene())
    _, _, events = eng.step(eng.initial_state(), GazeSample(0.0, (0.51, 1.01)))
    assert any(e.kind == "cursor_over_node" and e.node == "a1" for e in events)


# ---------------------------------------------------------------------------
# Determinism and persistence properties
# ---------------------------------------------------------------------------


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=12, deadline=None)
def test_sliding_persistence_random_walks(seed):
    import random

    rng = random.Random(seed)
    g = t_junction(w_up=rng.choice((1, 3)), w_down=1)
    tech = rng.choice((Technique.SLIDING_RING, Technique.SLIDING_ELASTIC))
    eng = NavEngine(tech, g)
    st = eng.initial_state()
    pos = (0.5, 1.0)
    t = 0.0
    attached_seen = False
    for _ in range(120):
        st, _, events = eng.step(st, GazeSample(t, pos))
        if st.attached_subpath is not None:
            attached_seen = True
        if attached_seen:
            assert st.attached_subpath is not None  # persistent forever
        assert all(e.kind != "detached" for e in events)
        pos = (pos[0] + rng.uniform(-0.04, 0.04), pos[1] + rng.uniform(-0.04, 0.04))
        t += 1 / 60


def test_step_rejects_time_travel():
    eng = NavEngine(Technique.BASELINE, cross_scene())
    st, _, _ = eng.step(eng.initial_state(), GazeSample(1.0, (0.7, 1.0)))
    with pytest.raises(ValueError):
        eng.step(st, GazeSample(0.5, (0.7, 1.0)))


def test_identical_streams_identical_logs(metro):
    stream = []
    x, y = metro.nodes[40].pos
    for k in range(60):
        stream.append(GazeSample(k / 60, (x + 0.004 * k, y + 0.002 * (k % 7))))

    def run():
        eng = NavEngine(Technique.MAGNETIC_AREA, metro)
        st = eng.initial_state()
        log = []
        for s in stream:
            st, frame, events = eng.step(st, s)
            log.append((repr(frame), tuple(repr(e) for e in events)))
        return log

    assert run() == run()


def test_config_validation():
    with pytest.raises(ValueError):
        TechniqueConfig(influence_radius=0.0).resolved(cross_scene())
    with pytest.raises(ValueError):
        TechniqueConfig(candidate_radius=0.01).resolved(cross_scene())
    with pytest.raises(ValueError):
        TechniqueConfig(c_a=1.5).resolved(cross_scene())
    cfg = TechniqueConfig().resolved(cross_scene(w_attached=3))
    assert cfg.candidate_radius == pytest.approx(0.1)
    assert cfg.w_max == 3
