import pytest

from raildesk import mesh, optimizer, sim, traffic
from raildesk.errors import UnknownBoundaryNode, UnpartitionableNetwork
from raildesk.infra import load_network
from raildesk.mesh import BoundaryHandoff, SectionRules
from raildesk.scenarios import fig5_doc


def independent_transition_scan(doc):
    """Test-local oracle: nodes joining single- and double-track running.

    Double track: a node pair with one-way sections both ways.  Station
    interiors (same-direction or bidirectional platform parallels) and
    crossing loops stay single.
    """
    sections = {s["id"]: s for s in doc["sections"]}

    def pair(s):
        return frozenset((s["from_node"], s["to_node"]))

    platform = set()
    for st in doc.get("stations", []):
        plats = [sections[p] for p in st["platform_sections"] if p in sections]
        for i, s1 in enumerate(plats):
            for s2 in plats[i + 1:]:
                if pair(s1) != pair(s2):
                    continue
                if (
                    s1["from_node"] == s2["from_node"]
                    or s1.get("bidirectional")
                    or s2.get("bidirectional")
                ):
                    platform.update((s1["id"], s2["id"]))

    one_way_dirs = {}
    for s in doc["sections"]:
        if s["id"] in platform or s.get("bidirectional"):
            continue
        one_way_dirs.setdefault(pair(s), set()).add((s["from_node"], s["to_node"]))

    out = set()
    for node in doc["nodes"]:
        classes = set()
        for s in doc["sections"]:
            if s["id"] in platform:
                continue
            if node["id"] in (s["from_node"], s["to_node"]):
                double = len(one_way_dirs.get(pair(s), ())) >= 2
                classes.add("d" if double else "s")
        if classes == {"s", "d"}:
            out.add(node["id"])
    return out


def test_fig5_boundaries_exactly_at_double_track_transitions():
    doc = fig5_doc()
    net = load_network(doc)
    expected = independent_transition_scan(doc)
    assert expected == {"T1", "T2"}
    assert mesh.double_track_transition_nodes(net) == expected
    areas = mesh.section_network(net)
    assert len(areas) == 3
    cut_nodes = set().union(*(a.boundary_nodes for a in areas))
    assert cut_nodes == expected


def test_every_section_in_exactly_one_area():
    net = load_network(fig5_doc())
    areas = mesh.section_network(net)
    seen = []
    for a in areas:
        seen.extend(a.section_ids)
    assert sorted(seen) == sorted(net.sections)


def test_pure_double_track_is_one_area():
    doc = {
        "nodes": [
            {"id": "a", "kind": "MainSignal"},
            {"id": "b", "kind": "MainSignal"},
        ],
        "sections": [
            {"id": "e", "from_node": "a", "to_node": "b", "length": 1000, "speed_limit": 30},
            {"id": "w", "from_node": "b", "to_node": "a", "length": 1000, "speed_limit": 30},
        ],
        "routes": [
            {"id": "re", "section_ids": ["e"], "entry_signal": "a", "exit_signal": "b"},
            {"id": "rw", "section_ids": ["w"], "entry_signal": "b", "exit_signal": "a"},
        ],
    }
    areas = mesh.section_network(load_network(doc))
    assert [a.id for a in areas] == ["A"]
    assert areas[0].section_ids == {"e", "w"}


def test_manual_boundaries_override_rules():
    net = load_network(fig5_doc())
    areas = mesh.section_network(net, SectionRules(manual_boundaries=("M1",)))
    assert len(areas) == 2
    assert all(a.boundary_nodes <= {"M1"} for a in areas)


def test_unpartitionable_when_no_candidates_and_over_cap():
    doc = {
        "nodes": [
            {"id": "a", "kind": "MainSignal"},
            {"id": "b", "kind": "MainSignal"},
        ],
        "sections": [
            {"id": "s", "from_node": "a", "to_node": "b", "length": 1000,
             "speed_limit": 30, "bidirectional": True}
        ],
        "routes": [
            {"id": "r", "section_ids": ["s"], "entry_signal": "a", "exit_signal": "b"}
        ],
    }
    with pytest.raises(UnpartitionableNetwork):
        mesh.section_network(load_network(doc), SectionRules(max_sections=0))


# -- handoffs -------------------------------------------------------------------


def fig6_setup():
    loaded = sim.load_scenario("fig6")
    areas = {a.id: a for a in loaded.areas}
    return loaded, areas


def solve_area(loaded, area, snap=None):
    snap = snap or traffic.build_snapshot(loaded.world, area.id, area.horizon)
    model = optimizer.build_model(snap, loaded.network)
    sol = optimizer.solve(model, params=optimizer.SolveParams(time_limit=10))
    return snap, sol


def test_no_crossing_trains_publish_nothing():
    doc = fig5_doc()
    doc["train_runs"] = []
    doc["trains"] = []
    loaded = sim.load_scenario(doc)
    area = loaded.areas[0]
    snap, sol = solve_area(loaded, area)
    out = mesh.publish_handoffs(area, sol, snap, loaded.areas, loaded.network)
    assert out == {}


def test_fig6_publishes_swapped_order_to_area_b():
    loaded, areas = fig6_setup()
    snapA, solA = solve_area(loaded, areas["A"])
    # prognosis order at the boundary is red first
    progs = traffic.prognosis(snapA, loaded.network)
    assert progs["red"].entry_time_at("BND") < progs["blue"].entry_time_at("BND")
    out = mesh.publish_handoffs(areas["A"], solA, snapA, loaded.areas, loaded.network, 1)
    handoffs = out["B"]
    by_train = {h.train_id: h for h in handoffs}
    assert set(by_train) == {"red", "blue"}
    assert by_train["blue"].boundary_order_seq == ("blue", "red")
    assert by_train["blue"].earliest_entry < by_train["red"].earliest_entry


def test_handoff_count_equals_outbound_crossings():
    loaded, areas = fig6_setup()
    snapA, solA = solve_area(loaded, areas["A"])
    out = mesh.publish_handoffs(areas["A"], solA, snapA, loaded.areas, loaded.network, 1)
    crossings = sum(
        1
        for traj in solA.trajectories.values()
        if traj.events[-1].kind.value == "AreaExit"
        and traj.exit_node in areas["A"].boundary_nodes
    )
    assert sum(len(v) for v in out.values()) == crossings


def test_wire_format_round_trip():
    h = BoundaryHandoff("t", "n", 120, 22.5, ("t", "u"), 3)
    wire = h.to_wire()
    assert set(wire) == {
        "train_id", "entry_node", "earliest_entry", "entry_speed",
        "order_seq", "produced_round",
    }
    assert BoundaryHandoff.from_wire(wire) == h


def test_apply_handoffs_empty_is_identity():
    loaded, areas = fig6_setup()
    snap = traffic.build_snapshot(loaded.world, "B", 1800)
    assert mesh.apply_handoffs(snap, [], areas["B"]) == snap


def test_apply_handoffs_entry_bound_is_max_of_both():
    loaded, areas = fig6_setup()
    snap = traffic.build_snapshot(loaded.world, "B", 1800)
    state = snap.state_of("red")
    earlier = BoundaryHandoff("red", "BND", state.earliest_entry - 100, 20.0, ())
    later = BoundaryHandoff("red", "BND", state.earliest_entry + 100, 20.0, ())
    snap_earlier = mesh.apply_handoffs(snap, [earlier], areas["B"])
    snap_later = mesh.apply_handoffs(snap, [later], areas["B"])
    # cannot enter earlier than physics allows
    assert snap_earlier.state_of("red").earliest_entry == state.earliest_entry
    assert snap_later.state_of("red").earliest_entry == state.earliest_entry + 100


def test_apply_handoffs_unknown_boundary_rejected():
    loaded, areas = fig6_setup()
    snap = traffic.build_snapshot(loaded.world, "B", 1800)
    with pytest.raises(UnknownBoundaryNode):
        mesh.apply_handoffs(snap, [BoundaryHandoff("red", "NB3", 0, 0.0, ())], areas["B"])


def test_green_exit_improves_with_exchange():
    loaded, areas = fig6_setup()
    snapA, solA = solve_area(loaded, areas["A"])
    out = mesh.publish_handoffs(areas["A"], solA, snapA, loaded.areas, loaded.network, 1)
    snapB = traffic.build_snapshot(loaded.world, "B", 1800)
    _, cold = solve_area(loaded, areas["B"], snapB)
    snapB2 = mesh.apply_handoffs(snapB, out["B"], areas["B"])
    _, warm = solve_area(loaded, areas["B"], snapB2)
    assert warm.trajectories["green"].exit_time < cold.trajectories["green"].exit_time


def test_single_area_round_equals_direct_solve():
    loaded = sim.load_scenario("fig7")
    area = loaded.areas[0]
    state = mesh.run_round(loaded.areas, loaded.world, params=optimizer.SolveParams(time_limit=10))
    snap, direct = solve_area(loaded, area)
    assert state.solutions[area.id].objective == direct.objective


def test_fig6_rounds_reach_fixed_point():
    loaded, areas = fig6_setup()
    state = mesh.run_rounds(
        loaded.areas, loaded.world, max_rounds=10,
        params=optimizer.SolveParams(time_limit=10),
    )
    assert state.errors == {}
    assert state.fixed_point_round is not None
    assert state.fixed_point_round <= 10


def test_no_backward_loop_per_train():
    # every handoff follows its train's direction of travel: the flow graph
    # per train is a simple forward chain, hence acyclic
    loaded, areas = fig6_setup()
    state = mesh.run_rounds(loaded.areas, loaded.world, max_rounds=4,
                             params=optimizer.SolveParams(time_limit=10))
    for source, handoffs in state.published.items():
        for h in handoffs:
            traj = state.solutions[source].trajectories[h.train_id]
            assert traj.exit_node == h.entry_node
            assert traj.exit_time == h.earliest_entry


def test_handoffs_never_relax_entry_bounds_in_any_round():
    # In every round the applied bound stays at or above the snapshot's own
    # prognosis bound.  (Across rounds a bound may legitimately drop when an
    # upstream area finds a better plan and hands off an earlier incursion.)
    loaded, areas = fig6_setup()
    state = mesh.MeshState()
    for _ in range(4):
        state = mesh.run_round(
            loaded.areas, loaded.world, state,
            params=optimizer.SolveParams(time_limit=10),
        )
        for area_id, applied in state.snapshots.items():
            fresh = traffic.build_snapshot(
                loaded.world, area_id, areas[area_id].horizon
            )
            for st in applied.train_states:
                try:
                    base = fresh.state_of(st.train_id)
                except KeyError:
                    continue
                assert st.earliest_entry >= base.earliest_entry


def test_one_failing_area_does_not_abort_others():
    loaded, areas = fig6_setup()

    class BrokenWorld:
        def __getattr__(self, name):
            return getattr(loaded.world, name)

    broken_area = mesh.ObservationArea(
        id="Z", section_ids=frozenset({"missing"}), boundary_nodes=frozenset()
    )
    loaded.world.areas["Z"] = broken_area
    state = mesh.run_round(
        list(loaded.areas) + [broken_area],
        loaded.world,
        params=optimizer.SolveParams(time_limit=10),
    )
    assert "Z" in state.errors
    assert set(state.solutions) == {"A", "B"}
