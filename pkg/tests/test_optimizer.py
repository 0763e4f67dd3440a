import pytest

from bruteforce import combo_count, exhaustive_optimum
from raildesk import optimizer, scenarios, sim, traffic
from raildesk.conflicts import detect_conflicts
from raildesk.errors import CycleDetected, InfeasibleInput
from raildesk.optimizer import Decisions, SolveParams, SolveStatus
from raildesk.traffic import Snapshot, Train, TrainCategory, TrainRun, TrainState


def oracle_models(count, max_free=3, max_combos=4000, level_cap=None, start_seed=1):
    """Deterministic stream of small models with a bounded decision space."""
    seed = start_seed - 1
    produced = 0
    while produced < count:
        seed += 1
        net, snap, factors = scenarios.oracle_instance(seed)
        try:
            model = optimizer.build_model(snap, net, level_factors=factors)
        except Exception:
            continue
        routes = {t: model.entries[t].route_ids[0] for t in model.entries}
        free = [
            k
            for k in model.disjunctions(routes)
            if k not in model.forced_orders(routes)
        ]
        if len(free) > max_free or combo_count(model) > max_combos:
            continue
        produced += 1
        yield seed, model


def fig6_model(area_id="B", horizon=1800):
    loaded = sim.load_scenario("fig6")
    snap = traffic.build_snapshot(loaded.world, area_id, horizon)
    return loaded, optimizer.build_model(snap, loaded.network)


# -- build_model ---------------------------------------------------------------


def single_train_snapshot():
    doc = {
        "nodes": [
            {"id": "a", "kind": "MainSignal"},
            {"id": "b", "kind": "MainSignal", "station": "E"},
        ],
        "sections": [
            {"id": "s", "from_node": "a", "to_node": "b", "length": 3000, "speed_limit": 30}
        ],
        "routes": [
            {"id": "r", "section_ids": ["s"], "entry_signal": "a", "exit_signal": "b"}
        ],
        "stations": [{"id": "E", "name": "E", "platform_sections": ["s"]}],
        "trains": [{"id": "t", "priority_weight": 1.0, "v_max": 30, "accel": 0.5,
                     "decel": 0.5, "category": "Local"}],
        "train_runs": [{"train_id": "t", "entry_signal": "a", "exit_signal": "b",
                         "scheduled_entry": 0,
                         "stops": [{"station_id": "E", "arrival": 200, "departure": 200,
                                     "min_dwell": 0}],
                         "scheduled_route_id": "r"}],
    }
    loaded = sim.load_scenario(doc)
    return loaded, traffic.build_snapshot(loaded.world, "A", 1200)


def test_single_train_model_has_no_disjunctions():
    loaded, snap = single_train_snapshot()
    model = optimizer.build_model(snap, loaded.network)
    routes = {t: model.entries[t].route_ids[0] for t in model.entries}
    assert model.disjunctions(routes) == {}


def test_two_trains_sharing_single_track_give_one_pair():
    doc = {
        "nodes": [
            {"id": "a", "kind": "MainSignal"},
            {"id": "b", "kind": "MainSignal", "station": "E"},
            {"id": "c", "kind": "MainSignal"},
        ],
        "sections": [
            {"id": "s1", "from_node": "a", "to_node": "b", "length": 3000, "speed_limit": 30},
            {"id": "s2", "from_node": "c", "to_node": "b", "length": 3000, "speed_limit": 30},
            {"id": "shared", "from_node": "b", "to_node": "b2", "length": 2000,
             "speed_limit": 30},
            {"id": "tail", "from_node": "b2", "to_node": "b3", "length": 500,
             "speed_limit": 30},
        ],
        "routes": [],
    }
    doc["nodes"] += [{"id": "b2", "kind": "MainSignal"}, {"id": "b3", "kind": "MainSignal", "station": "T"}]
    doc["routes"] = [
        {"id": "r1", "section_ids": ["s1", "shared", "tail"], "entry_signal": "a", "exit_signal": "b3"},
        {"id": "r2", "section_ids": ["s2", "shared", "tail"], "entry_signal": "c", "exit_signal": "b3"},
    ]
    doc["stations"] = [{"id": "E", "name": "E", "platform_sections": ["s1"]},
                        {"id": "T", "name": "T", "platform_sections": ["tail"]}]
    doc["trains"] = [
        {"id": "t1", "priority_weight": 1.0, "v_max": 30, "accel": 0.5, "decel": 0.5, "category": "Local"},
        {"id": "t2", "priority_weight": 1.0, "v_max": 30, "accel": 0.5, "decel": 0.5, "category": "Local"},
    ]
    doc["train_runs"] = [
        {"train_id": "t1", "entry_signal": "a", "exit_signal": "b3", "scheduled_entry": 0,
         "stops": [{"station_id": "T", "arrival": 400, "departure": 400, "min_dwell": 0}],
         "scheduled_route_id": "r1"},
        {"train_id": "t2", "entry_signal": "c", "exit_signal": "b3", "scheduled_entry": 30,
         "stops": [{"station_id": "T", "arrival": 430, "departure": 430, "min_dwell": 0}],
         "scheduled_route_id": "r2"},
    ]
    loaded = sim.load_scenario(doc)
    snap = traffic.build_snapshot(loaded.world, "A", 1200)
    model = optimizer.build_model(snap, loaded.network)
    routes = {t: model.entries[t].route_ids[0] for t in model.entries}
    pairs = {(a, b) for a, b, _ in model.disjunctions(routes)}
    assert pairs == {("t1", "t2")}
    # shared + tail are adjacent in both paths: one implied decision class
    classes = set(model.order_classes(routes).values())
    assert len(classes) == 1


def test_fig6_area_b_disjunction_count_matches_pair_scan():
    loaded, model = fig6_model("B")
    routes = {t: model.entries[t].route_ids[0] for t in model.entries}
    got = set(model.disjunctions(routes))
    # independent brute scan over shared sections of the chosen paths
    expected = set()
    ids = sorted(model.entries)
    for i, a in enumerate(ids):
        sa = set(model.entries[a].paths[routes[a]].sections)
        for b in ids[i + 1:]:
            sb = set(model.entries[b].paths[routes[b]].sections)
            for sid in sa & sb:
                expected.add((a, b, sid))
    assert got == expected
    assert expected  # the scenario is genuinely contended


def test_infeasible_input_when_no_alternative():
    loaded, snap = single_train_snapshot()
    broken = Snapshot(
        taken_at=snap.taken_at,
        area_id=snap.area_id,
        horizon=snap.horizon,
        train_states=tuple(
            TrainState(
                train_id=st.train_id,
                train=st.train,
                run=st.run,
                set_route_id=st.set_route_id,
                anchor_node="b",  # past everything: nothing remains
                earliest_entry=st.earliest_entry,
                entry_speed=st.entry_speed,
            )
            for st in snap.train_states
        ),
        area_sections=snap.area_sections,
    )
    with pytest.raises(InfeasibleInput):
        optimizer.build_model(broken, loaded.network)


# -- objective ------------------------------------------------------------------


def _solution_with(trajectories, snapshot):
    return trajectories, snapshot


def test_objective_zero_when_on_time():
    loaded, snap = single_train_snapshot()
    model = optimizer.build_model(snap, loaded.network)
    sol = optimizer.solve(model, params=SolveParams(time_limit=5))
    assert sol.objective == optimizer.objective_value(sol.trajectories, snap) == 0


def test_objective_weighted_examples():
    from raildesk.traffic import StopTime, Trajectory, TrajEvent, EventKind

    def traj_with_delay(train_id, dep_delay):
        stop = StopTime("S", 100, 300 + dep_delay, 100, 300, True)
        return Trajectory(
            train_id=train_id,
            route_id="r",
            events=(TrajEvent("n", EventKind.AREA_ENTRY, 0, 0.0),),
            occupations=(),
            stop_times=(stop,),
        )

    def snap_with_weights(weights):
        states = []
        for tid, w in weights.items():
            train = Train(tid, w, 30, 0.5, 0.5, TrainCategory.LOCAL)
            run = TrainRun(tid, "a", "b", 0, (), "r")
            states.append(TrainState(tid, train, run, None, "a", 0, 0.0))
        return Snapshot(0, "A", 1200, tuple(states))

    # one train weight 2, one stop 180 s late -> 360
    snap = snap_with_weights({"x": 2.0})
    assert optimizer.objective_value({"x": traj_with_delay("x", 180)}, snap) == 360
    # two trains (w=1 at 60 s, w=4 at 30 s) -> 180
    snap = snap_with_weights({"x": 1.0, "y": 4.0})
    value = optimizer.objective_value(
        {"x": traj_with_delay("x", 60), "y": traj_with_delay("y", 30)}, snap
    )
    assert value == 180


# -- lower_bound -----------------------------------------------------------------


def test_fully_decided_bound_equals_objective():
    for _seed, model in oracle_models(5):
        sol = optimizer.solve(model, params=SolveParams(time_limit=10, gap_target=1e-9))
        assert sol.decisions is not None
        bound = optimizer.lower_bound(model, sol.decisions)
        assert bound == sol.objective


def test_empty_decision_bound_exact_on_conflict_free_input():
    loaded, snap = single_train_snapshot()
    model = optimizer.build_model(snap, loaded.network)
    sol = optimizer.solve(model, params=SolveParams(time_limit=5, gap_target=1e-9))
    assert optimizer.lower_bound(model) == sol.objective


def test_bound_admissible_against_exhaustive_enumeration():
    for _seed, model in oracle_models(15):
        optimum = exhaustive_optimum(model)
        if optimum is None:
            continue
        assert optimizer.lower_bound(model) <= optimum


def test_cycle_detected_for_contradictory_orders():
    loaded, model = fig6_model("B")
    routes = {t: model.entries[t].route_ids[0] for t in model.entries}
    classes = model.order_classes(routes)
    by_root = {}
    for key, root in classes.items():
        by_root.setdefault(root, []).append(key)
    twins = next(keys for keys in by_root.values() if len(keys) >= 2)
    a, b, _ = twins[0]
    # opposing orders inside one implication class are physically cyclic
    orders = {twins[0]: a, twins[1]: b}
    with pytest.raises(CycleDetected):
        optimizer.lower_bound(model, Decisions(routes=routes, plans={}, orders=orders))


# -- solve ------------------------------------------------------------------------


def test_zero_conflict_snapshot_solves_to_prognosis():
    loaded, snap = single_train_snapshot()
    model = optimizer.build_model(snap, loaded.network)
    sol = optimizer.solve(model, params=SolveParams(time_limit=5))
    assert sol.status is SolveStatus.OPTIMAL_WITHIN_GAP
    assert sol.gap == 0.0
    prog = traffic.prognosis(snap, loaded.network)["t"]
    assert sol.trajectories["t"].events == prog.events


def test_heavier_train_goes_first_on_single_track():
    # symmetric head-on meeting, weight 1 vs 3: the heavy train crosses first
    doc = {
        "nodes": [
            {"id": "w", "kind": "MainSignal", "station": "W"},
            {"id": "m1", "kind": "MainSignal", "station": "M"},
            {"id": "m2", "kind": "MainSignal", "station": "M"},
            {"id": "e", "kind": "MainSignal", "station": "E"},
        ],
        "sections": [
            {"id": "wl", "from_node": "w", "to_node": "m1", "length": 2000,
             "speed_limit": 25, "bidirectional": True},
            {"id": "pa", "from_node": "m1", "to_node": "m2", "length": 500,
             "speed_limit": 25, "bidirectional": True},
            {"id": "pb", "from_node": "m1", "to_node": "m2", "length": 500,
             "speed_limit": 25, "bidirectional": True},
            {"id": "el", "from_node": "m2", "to_node": "e", "length": 2000,
             "speed_limit": 25, "bidirectional": True},
        ],
        "routes": [
            {"id": "east", "section_ids": ["wl", "pa", "el"], "entry_signal": "w", "exit_signal": "e"},
            {"id": "west", "section_ids": ["el", "pb", "wl"], "entry_signal": "e", "exit_signal": "w"},
        ],
        "stations": [
            {"id": "W", "name": "W", "platform_sections": ["wl"]},
            {"id": "M", "name": "M", "platform_sections": ["pa", "pb"]},
            {"id": "E", "name": "E", "platform_sections": ["el"]},
        ],
        "trains": [
            {"id": "light", "priority_weight": 1.0, "v_max": 25, "accel": 0.5, "decel": 0.5, "category": "Local"},
            {"id": "heavy", "priority_weight": 3.0, "v_max": 25, "accel": 0.5, "decel": 0.5, "category": "Local"},
        ],
        "train_runs": [
            {"train_id": "light", "entry_signal": "w", "exit_signal": "e", "scheduled_entry": 0,
             "stops": [{"station_id": "E", "arrival": 250, "departure": 250, "min_dwell": 0}],
             "scheduled_route_id": "east"},
            {"train_id": "heavy", "entry_signal": "e", "exit_signal": "w", "scheduled_entry": 0,
             "stops": [{"station_id": "W", "arrival": 250, "departure": 250, "min_dwell": 0}],
             "scheduled_route_id": "west"},
        ],
    }
    loaded = sim.load_scenario(doc)
    snap = traffic.build_snapshot(loaded.world, "A", 3600)
    model = optimizer.build_model(snap, loaded.network)
    sol = optimizer.solve(model, params=SolveParams(time_limit=10, gap_target=1e-9))
    heavy = sol.trajectories["heavy"].stop_times[-1]
    light = sol.trajectories["light"].stop_times[-1]
    assert heavy.arrival_delay < light.arrival_delay


def test_solve_matches_exhaustive_optimum_on_small_instances():
    checked = 0
    for _seed, model in oracle_models(25):
        optimum = exhaustive_optimum(model)
        sol = optimizer.solve(model, params=SolveParams(time_limit=20, gap_target=1e-9))
        assert sol.objective == optimum
        checked += 1
    assert checked == 25


def test_solution_statuses_and_gap_invariant():
    for _seed, model in oracle_models(10):
        sol = optimizer.solve(model, params=SolveParams(time_limit=10))
        assert sol.gap >= 0.0
        assert sol.objective is None or sol.objective >= sol.lower_bound
        if sol.status is SolveStatus.OPTIMAL_WITHIN_GAP:
            assert sol.gap <= 0.10


def test_solution_is_conflict_free_and_holds_departures():
    loaded, model = fig6_model("B")
    sol = optimizer.solve(model, params=SolveParams(time_limit=10))
    found = detect_conflicts(sol.trajectories, loaded.network, schedule=False)
    assert found == []
    for traj in sol.trajectories.values():
        for stop in traj.stop_times:
            if stop.departure is not None:
                assert stop.departure >= stop.scheduled_departure


def test_solver_is_deterministic():
    loaded, model = fig6_model("B")
    a = optimizer.solve(model, params=SolveParams(time_limit=10))
    b = optimizer.solve(model, params=SolveParams(time_limit=10))
    assert a.objective == b.objective
    assert a.decisions == b.decisions
    assert a.node_count == b.node_count


# -- hints --------------------------------------------------------------------------


def test_identical_snapshot_hints_reproduce_previous_solution():
    loaded, model = fig6_model("B")
    snap = model.snapshot
    cold = optimizer.solve(model, params=SolveParams(time_limit=10))
    hints = optimizer.make_hints(cold, snap, loaded.network)
    assert hints.warm_incumbent == cold.decisions
    assert set(hints.suggested_profiles) == set(cold.decisions.plans)
    for key, first in hints.fixed_orders.items():
        assert cold.decisions.orders[key] == first


def test_departed_train_absent_from_hints():
    loaded, model = fig6_model("B")
    cold = optimizer.solve(model, params=SolveParams(time_limit=10))
    snap = model.snapshot
    reduced = Snapshot(
        taken_at=snap.taken_at,
        area_id=snap.area_id,
        horizon=snap.horizon,
        train_states=tuple(s for s in snap.train_states if s.train_id != "green"),
        area_sections=snap.area_sections,
    )
    hints = optimizer.make_hints(cold, reduced, loaded.network)
    assert "green" not in hints.suggested_profiles
    assert all("green" not in (a, b) for a, b, _ in hints.fixed_orders)


def test_warm_solve_explores_no_more_nodes():
    loaded, model = fig6_model("B")
    cold = optimizer.solve(model, params=SolveParams(time_limit=10))
    hints = optimizer.make_hints(cold, model.snapshot, loaded.network)
    warm = optimizer.solve(model, hints, SolveParams(time_limit=10))
    assert warm.objective == cold.objective
    assert warm.node_count <= cold.node_count
    assert warm.first_incumbent_node <= cold.first_incumbent_node


# -- predict_profiles -----------------------------------------------------------------


def test_empty_history_gives_no_suggestions():
    loaded, model = fig6_model("B")
    assert optimizer.predict_profiles(model.snapshot, [], loaded.network) == {}


def test_single_exact_match_history_returns_it():
    loaded, model = fig6_model("B")
    features = optimizer.situation_features(model.snapshot, loaded.network)
    probe = features["blue"]
    record = optimizer.HistoryRecord(
        category=probe.category, features=probe.features, plan_signature=(("p",),)
    )
    out = optimizer.predict_profiles(model.snapshot, [record], loaded.network, k=1)
    assert out["blue"] == (("p",),)


def test_adversarial_suggestions_do_not_change_the_optimum():
    for _seed, model in oracle_models(8):
        optimum = exhaustive_optimum(model)
        # suggest every train its slowest plan signature
        worst = {}
        for t, entry in model.entries.items():
            rid = entry.route_ids[0]
            worst[t] = entry.plans[rid][-1].profiles
        hints = optimizer.HintSet(suggested_profiles=worst)
        sol = optimizer.solve(model, hints, SolveParams(time_limit=20, gap_target=1e-9))
        assert sol.objective == optimum
