"""Bundled scenario documents, presets, and seeded instance generators.

Scenario documents follow the combined JSON schema: network arrays plus
``trains``, ``train_runs``, ``injections`` and optional ``areas``.  Preset
names are stable identifiers used by the CLI and tests.
"""
from __future__ import annotations

import random
from typing import Callable

from . import traffic
from .infra import load_network
from .traffic import Snapshot, TrainState

DESK_SCALE_DIVISOR = 20

# Journeys per day and category mix of the deployment rows backing the
# table1-row* presets: (journeys, urban, local, long_distance, freight).
TABLE1_ROWS = {
    1: (1800, True, False, False, False),
    2: (500, True, True, True, True),
    3: (2200, True, True, True, True),
    4: (950, True, True, True, True),
    5: (900, True, False, False, False),
    6: (500, True, True, True, True),
}

_CATEGORY_SPEC = {
    "Urban": dict(v_max=22.0, accel=0.9, decel=1.0, weight=2.0),
    "Local": dict(v_max=30.0, accel=0.7, decel=0.8, weight=2.0),
    "LongDistance": dict(v_max=44.0, accel=0.5, decel=0.7, weight=4.0),
    "Freight": dict(v_max=20.0, accel=0.35, decel=0.45, weight=1.0),
}


def _train(tid: str, category: str, weight: float | None = None) -> dict:
    spec = _CATEGORY_SPEC[category]
    return {
        "id": tid,
        "priority_weight": weight if weight is not None else spec["weight"],
        "v_max": spec["v_max"],
        "accel": spec["accel"],
        "decel": spec["decel"],
        "category": category,
    }


# ---------------------------------------------------------------------------
# fig5: two single-track branches joining a double-track trunk.  Boundary
# candidates sit exactly at the single-to-double transitions.
# ---------------------------------------------------------------------------

def fig5_doc() -> dict:
    nodes = [
        {"id": "W1", "kind": "MainSignal", "station": "SW1"},
        {"id": "W2", "kind": "MainSignal", "station": "SW2"},
        {"id": "T1", "kind": "MainSignal"},
        {"id": "M1", "kind": "MainSignal", "station": "SM1"},
        {"id": "M2", "kind": "MainSignal", "station": "SM2"},
        {"id": "T2", "kind": "MainSignal"},
        {"id": "E1", "kind": "MainSignal", "station": "SE1"},
        {"id": "E2", "kind": "MainSignal", "station": "SE2"},
    ]
    sections = [
        # west single-track branch
        {"id": "w12", "from_node": "W1", "to_node": "W2", "length": 4000, "speed_limit": 30, "bidirectional": True},
        {"id": "w2t", "from_node": "W2", "to_node": "T1", "length": 3000, "speed_limit": 30, "bidirectional": True},
        # double-track trunk T1..T2 (paired one-way tracks)
        {"id": "m1e", "from_node": "T1", "to_node": "M1", "length": 5000, "speed_limit": 40},
        {"id": "m1w", "from_node": "M1", "to_node": "T1", "length": 5000, "speed_limit": 40},
        {"id": "m2e", "from_node": "M1", "to_node": "M2", "length": 5000, "speed_limit": 40},
        {"id": "m2w", "from_node": "M2", "to_node": "M1", "length": 5000, "speed_limit": 40},
        {"id": "m3e", "from_node": "M2", "to_node": "T2", "length": 5000, "speed_limit": 40},
        {"id": "m3w", "from_node": "T2", "to_node": "M2", "length": 5000, "speed_limit": 40},
        # east single-track branch
        {"id": "e12", "from_node": "T2", "to_node": "E1", "length": 3500, "speed_limit": 30, "bidirectional": True},
        {"id": "e23", "from_node": "E1", "to_node": "E2", "length": 3500, "speed_limit": 30, "bidirectional": True},
    ]
    routes = [
        {"id": "west-east", "section_ids": ["w12", "w2t", "m1e", "m2e", "m3e", "e12", "e23"],
         "entry_signal": "W1", "exit_signal": "E2"},
        {"id": "east-west", "section_ids": ["e23", "e12", "m3w", "m2w", "m1w", "w2t", "w12"],
         "entry_signal": "E2", "exit_signal": "W1"},
    ]
    stations = [
        {"id": "SW1", "name": "West End", "platform_sections": ["w12"]},
        {"id": "SW2", "name": "West Mid", "platform_sections": ["w12", "w2t"]},
        {"id": "SM1", "name": "Trunk 1", "platform_sections": ["m1e", "m1w"]},
        {"id": "SM2", "name": "Trunk 2", "platform_sections": ["m2e", "m2w"]},
        {"id": "SE1", "name": "East Mid", "platform_sections": ["e12", "e23"]},
        {"id": "SE2", "name": "East End", "platform_sections": ["e23"]},
    ]
    trains = [_train("101", "Local"), _train("102", "Local")]
    train_runs = [
        {"train_id": "101", "entry_signal": "W1", "exit_signal": "E2", "scheduled_entry": 0,
         "stops": [{"station_id": "SM2", "arrival": 560, "departure": 620, "min_dwell": 30}],
         "scheduled_route_id": "west-east"},
        {"train_id": "102", "entry_signal": "E2", "exit_signal": "W1", "scheduled_entry": 120,
         "stops": [{"station_id": "SM1", "arrival": 760, "departure": 820, "min_dwell": 30}],
         "scheduled_route_id": "east-west"},
    ]
    return {
        "name": "fig5",
        "nodes": nodes,
        "sections": sections,
        "routes": routes,
        "exclusions": [],
        "restrictions": [],
        "stations": stations,
        "trains": trains,
        "train_runs": train_runs,
        "injections": [],
    }


# ---------------------------------------------------------------------------
# fig6: double-track area A feeding a single-track area B over boundary BND.
# red (slow, ahead) and blue (fast, catching up) run east; green runs west
# and must cross both at station SB1.
# ---------------------------------------------------------------------------

def fig6_doc() -> dict:
    nodes = [
        {"id": "NA0", "kind": "MainSignal", "station": "SA1"},
        {"id": "NAa", "kind": "Junction"},
        {"id": "NAb", "kind": "Junction"},
        {"id": "NAc", "kind": "Junction"},
        {"id": "NA1", "kind": "MainSignal", "station": "SA2"},
        {"id": "NA2", "kind": "MainSignal", "station": "SA2"},
        {"id": "BND", "kind": "Boundary"},
        {"id": "NB1", "kind": "MainSignal", "station": "SB1"},
        {"id": "NB2", "kind": "MainSignal", "station": "SB1"},
        {"id": "NB3", "kind": "MainSignal", "station": "SB2"},
    ]
    sections = [
        # area A: double track NA0..NA1 in four blocks (east) + west track
        {"id": "e1a", "from_node": "NA0", "to_node": "NAa", "length": 3000, "speed_limit": 50},
        {"id": "e1b", "from_node": "NAa", "to_node": "NAb", "length": 3000, "speed_limit": 50},
        {"id": "e1c", "from_node": "NAb", "to_node": "NAc", "length": 3000, "speed_limit": 50},
        {"id": "e1d", "from_node": "NAc", "to_node": "NA1", "length": 3000, "speed_limit": 50},
        {"id": "w1a", "from_node": "NAa", "to_node": "NA0", "length": 3000, "speed_limit": 50},
        {"id": "w1b", "from_node": "NAb", "to_node": "NAa", "length": 3000, "speed_limit": 50},
        {"id": "w1c", "from_node": "NAc", "to_node": "NAb", "length": 3000, "speed_limit": 50},
        {"id": "w1d", "from_node": "NA1", "to_node": "NAc", "length": 3000, "speed_limit": 50},
        # overtaking station SA2: two eastbound platform tracks + west bypass
        {"id": "p1", "from_node": "NA1", "to_node": "NA2", "length": 700, "speed_limit": 45},
        {"id": "p2", "from_node": "NA1", "to_node": "NA2", "length": 700, "speed_limit": 25},
        {"id": "pw", "from_node": "NA2", "to_node": "NA1", "length": 700, "speed_limit": 45},
        # approach to the boundary (still double)
        {"id": "e2", "from_node": "NA2", "to_node": "BND", "length": 3000, "speed_limit": 50},
        {"id": "w2", "from_node": "BND", "to_node": "NA2", "length": 3000, "speed_limit": 50},
        # area B: single track with one crossing station SB1
        {"id": "s1", "from_node": "BND", "to_node": "NB1", "length": 6000, "speed_limit": 40, "bidirectional": True},
        {"id": "q1", "from_node": "NB1", "to_node": "NB2", "length": 500, "speed_limit": 30, "bidirectional": True},
        {"id": "q2", "from_node": "NB1", "to_node": "NB2", "length": 500, "speed_limit": 30, "bidirectional": True},
        {"id": "s2", "from_node": "NB2", "to_node": "NB3", "length": 4500, "speed_limit": 40, "bidirectional": True},
    ]
    routes = [
        {"id": "east-main", "section_ids": ["e1a", "e1b", "e1c", "e1d", "p1", "e2", "s1", "q1", "s2"],
         "entry_signal": "NA0", "exit_signal": "NB3"},
        {"id": "east-loop", "section_ids": ["e1a", "e1b", "e1c", "e1d", "p2", "e2", "s1", "q1", "s2"],
         "entry_signal": "NA0", "exit_signal": "NB3"},
        {"id": "west-main", "section_ids": ["s2", "q2", "s1", "w2", "pw", "w1d", "w1c", "w1b", "w1a"],
         "entry_signal": "NB3", "exit_signal": "NA0"},
        {"id": "west-alt", "section_ids": ["s2", "q1", "s1", "w2", "pw", "w1d", "w1c", "w1b", "w1a"],
         "entry_signal": "NB3", "exit_signal": "NA0"},
    ]
    stations = [
        {"id": "SA1", "name": "Alpha", "platform_sections": ["e1a", "w1a"]},
        {"id": "SA2", "name": "Bravo", "platform_sections": ["p1", "p2", "pw"]},
        {"id": "SB1", "name": "Carol", "platform_sections": ["q1", "q2"]},
        {"id": "SB2", "name": "Delta", "platform_sections": ["s2"]},
    ]
    trains = [
        _train("red", "Freight", weight=1.0),
        _train("blue", "LongDistance", weight=4.0),
        _train("green", "Local", weight=2.0),
    ]
    train_runs = [
        # red: slow, enters first, no intermediate stop, terminates at SB2
        {"train_id": "red", "entry_signal": "NA0", "exit_signal": "NB3", "scheduled_entry": 0,
         "stops": [{"station_id": "SB2", "arrival": 1400, "departure": 1400, "min_dwell": 0}],
         "scheduled_route_id": "east-main"},
        # blue: fast, enters behind red and catches up inside area A;
        # customer stops at SA2 (area A) and SB1, terminates SB2
        {"train_id": "blue", "entry_signal": "NA0", "exit_signal": "NB3", "scheduled_entry": 450,
         "stops": [{"station_id": "SA2", "arrival": 790, "departure": 830, "min_dwell": 30},
                    {"station_id": "SB1", "arrival": 1080, "departure": 1120, "min_dwell": 30},
                    {"station_id": "SB2", "arrival": 1320, "departure": 1320, "min_dwell": 0}],
         "scheduled_route_id": "east-main"},
        # green: westbound, crosses red/blue in area B, terminates at SA1
        {"train_id": "green", "entry_signal": "NB3", "exit_signal": "NA0", "scheduled_entry": 600,
         "stops": [{"station_id": "SB1", "arrival": 800, "departure": 840, "min_dwell": 30},
                    {"station_id": "SA1", "arrival": 1560, "departure": 1560, "min_dwell": 0}],
         "scheduled_route_id": "west-main"},
    ]
    return {
        "name": "fig6",
        "nodes": nodes,
        "sections": sections,
        "routes": routes,
        "exclusions": [],
        "restrictions": [],
        "stations": stations,
        "trains": trains,
        "train_runs": train_runs,
        "injections": [],
        "areas": [
            {"id": "A", "section_ids": ["e1a", "e1b", "e1c", "e1d", "w1a", "w1b", "w1c", "w1d",
                                          "p1", "p2", "pw", "e2", "w2"], "horizon": 1200},
            {"id": "B", "section_ids": ["s1", "q1", "q2", "s2"], "horizon": 1800},
        ],
    }


# ---------------------------------------------------------------------------
# fig7: station X with two platform tracks; punctual stopper 1234 ahead of
# the faster 567 running three minutes late.  The good move is an overtake
# at X.
# ---------------------------------------------------------------------------

def fig7_doc() -> dict:
    nodes = [
        {"id": "X0", "kind": "MainSignal"},
        {"id": "X1", "kind": "MainSignal", "station": "X"},
        {"id": "X2", "kind": "MainSignal", "station": "X"},
        {"id": "XJ1", "kind": "Junction"},
        {"id": "XJ2", "kind": "Junction"},
        {"id": "X3", "kind": "MainSignal", "station": "Y"},
    ]
    sections = [
        {"id": "x01", "from_node": "X0", "to_node": "X1", "length": 3000, "speed_limit": 45},
        {"id": "xp1", "from_node": "X1", "to_node": "X2", "length": 600, "speed_limit": 35},
        {"id": "xp2", "from_node": "X1", "to_node": "X2", "length": 600, "speed_limit": 25},
        {"id": "x23a", "from_node": "X2", "to_node": "XJ1", "length": 2000, "speed_limit": 45},
        {"id": "x23b", "from_node": "XJ1", "to_node": "XJ2", "length": 6000, "speed_limit": 45},
        {"id": "x23c", "from_node": "XJ2", "to_node": "X3", "length": 6000, "speed_limit": 45},
    ]
    routes = [
        {"id": "x-main", "section_ids": ["x01", "xp1", "x23a", "x23b", "x23c"],
         "entry_signal": "X0", "exit_signal": "X3"},
        {"id": "x-loop", "section_ids": ["x01", "xp2", "x23a", "x23b", "x23c"],
         "entry_signal": "X0", "exit_signal": "X3"},
    ]
    stations = [
        {"id": "X", "name": "Station X", "platform_sections": ["xp1", "xp2"]},
        {"id": "Y", "name": "Station Y", "platform_sections": ["x23c"]},
    ]
    trains = [
        _train("1234", "Urban", weight=2.0),
        _train("567", "LongDistance", weight=4.0),
    ]
    train_runs = [
        # 1234: slow stopper, punctual; dwells at X, terminates at Y
        {"train_id": "1234", "entry_signal": "X0", "exit_signal": "X3", "scheduled_entry": 0,
         "stops": [{"station_id": "X", "arrival": 190, "departure": 380, "min_dwell": 60},
                    {"station_id": "Y", "arrival": 1040, "departure": 1040, "min_dwell": 0}],
         "scheduled_route_id": "x-main"},
        # 567: fast through train, terminates at Y; loses three minutes
        # before entering, so it shows up right behind 1234
        {"train_id": "567", "entry_signal": "X0", "exit_signal": "X3", "scheduled_entry": 120,
         "stops": [{"station_id": "Y", "arrival": 610, "departure": 610, "min_dwell": 0}],
         "scheduled_route_id": "x-main"},
    ]
    return {
        "name": "fig7",
        "nodes": nodes,
        "sections": sections,
        "routes": routes,
        "exclusions": [],
        "restrictions": [],
        "stations": stations,
        "trains": trains,
        "train_runs": train_runs,
        "injections": [{"train_id": "567", "at_node": "X0", "amount": 180}],
        "areas": [{"id": "A",
                    "section_ids": ["x01", "xp1", "xp2", "x23a", "x23b", "x23c"],
                    "horizon": 1200}],
    }


# ---------------------------------------------------------------------------
# table1 rows: scaled-down deployment mixes on a generated corridor.
# ---------------------------------------------------------------------------

def table1_row_doc(row: int, seed: int = 0) -> dict:
    journeys, urban, local, long_distance, freight = TABLE1_ROWS[row]
    n_journeys = int(journeys / DESK_SCALE_DIVISOR + 0.5)
    categories = [
        c
        for c, enabled in (
            ("Urban", urban),
            ("Local", local),
            ("LongDistance", long_distance),
            ("Freight", freight),
        )
        if enabled
    ]
    rng = random.Random(seed * 10007 + row)
    doc = _corridor_doc(name=f"table1-row{row}", stations=4, double=True)
    day = 86400
    spacing = max(120, day // max(1, n_journeys))
    for i in range(n_journeys):
        cat = categories[i % len(categories)]
        tid = f"j{i:03d}"
        doc["trains"].append(_train(tid, cat))
        entry = i * spacing + rng.randrange(0, 60)
        east = i % 2 == 0
        doc["train_runs"].append(
            _corridor_run(doc, tid, entry, east=east, stop_every=2, rng=rng)
        )
    return doc


def _corridor_doc(name: str, stations: int, double: bool) -> dict:
    """Linear corridor: `stations` stations, one inter-station block each way."""
    nodes, sections, station_defs = [], [], []
    for i in range(stations):
        nodes.append({"id": f"C{i}", "kind": "MainSignal", "station": f"ST{i}"})
        station_defs.append({"id": f"ST{i}", "name": f"Stop {i}", "platform_sections": []})
    east_ids, west_ids = [], []
    for i in range(stations - 1):
        e = {"id": f"ce{i}", "from_node": f"C{i}", "to_node": f"C{i+1}",
             "length": 4000, "speed_limit": 40}
        sections.append(e)
        east_ids.append(e["id"])
        if double:
            w = {"id": f"cw{i}", "from_node": f"C{i+1}", "to_node": f"C{i}",
                 "length": 4000, "speed_limit": 40}
            sections.append(w)
            west_ids.append(w["id"])
        else:
            e["bidirectional"] = True
            west_ids.append(e["id"])
    for i, st in enumerate(station_defs):
        touching = [s["id"] for s in sections
                    if f"C{i}" in (s["from_node"], s["to_node"])]
        st["platform_sections"] = touching
    routes = [
        {"id": "corridor-east", "section_ids": east_ids,
         "entry_signal": "C0", "exit_signal": f"C{stations-1}"},
        {"id": "corridor-west", "section_ids": list(reversed(west_ids)),
         "entry_signal": f"C{stations-1}", "exit_signal": "C0"},
    ]
    return {
        "name": name,
        "nodes": nodes,
        "sections": sections,
        "routes": routes,
        "exclusions": [],
        "restrictions": [],
        "stations": station_defs,
        "trains": [],
        "train_runs": [],
        "injections": [],
    }


def _corridor_run(doc: dict, tid: str, entry: int, east: bool, stop_every: int, rng) -> dict:
    import re

    route = "corridor-east" if east else "corridor-west"
    n = sum(1 for nd in doc["nodes"] if re.fullmatch(r"C\d+", nd["id"]))
    order = range(1, n) if east else range(n - 2, -1, -1)
    stops = []
    t = entry + 290
    for idx, i in enumerate(order):
        if idx % stop_every == 0 or idx == len(list(order)) - 1:
            stops.append({"station_id": f"ST{i}", "arrival": t, "departure": t + 60,
                          "min_dwell": 30})
        t += 290
    exit_sig = f"C{n-1}" if east else "C0"
    entry_sig = "C0" if east else f"C{n-1}"
    return {"train_id": tid, "entry_signal": entry_sig, "exit_signal": exit_sig,
            "scheduled_entry": entry, "stops": stops, "scheduled_route_id": route}


# ---------------------------------------------------------------------------
# peak: a contended mixed-traffic corridor with an overtaking loop and a
# single-track tail, plus injected delays.  Used by the gap/termination
# acceptance run.
# ---------------------------------------------------------------------------

def peak_doc(n_trains: int = 15, n_injections: int = 5, seed: int = 7) -> dict:
    rng = random.Random(seed)
    doc = _corridor_doc(name="peak", stations=6, double=True)
    # overtaking loop at the middle station so slow traffic can be passed
    doc["nodes"].append({"id": "C2b", "kind": "MainSignal", "station": "ST2"})
    doc["sections"].append({"id": "loop2", "from_node": "C2", "to_node": "C2b",
                             "length": 700, "speed_limit": 25})
    doc["sections"].append({"id": "link2", "from_node": "C2b", "to_node": "C3",
                             "length": 3300, "speed_limit": 40})
    doc["stations"][2]["platform_sections"].append("loop2")
    doc["routes"].append({"id": "east-loop2",
                           "section_ids": ["ce0", "ce1", "loop2", "link2", "ce3", "ce4"],
                           "entry_signal": "C0", "exit_signal": "C5"})
    categories = ["Urban", "Local", "LongDistance", "Freight"]
    base_gap = 170
    for i in range(n_trains):
        cat = categories[i % len(categories)]
        tid = f"p{i:02d}"
        doc["trains"].append(_train(tid, cat))
        east = i % 3 != 2
        entry = i * base_gap + rng.randrange(0, 45)
        doc["train_runs"].append(
            _corridor_run(doc, tid, entry, east=east, stop_every=2, rng=rng)
        )
    victims = rng.sample([r["train_id"] for r in doc["train_runs"]],
                         min(n_injections, n_trains))
    for v in victims:
        run = next(r for r in doc["train_runs"] if r["train_id"] == v)
        doc["injections"].append(
            {"train_id": v, "at_node": run["entry_signal"],
             "amount": rng.randrange(90, 300)}
        )
    # one observation area covering the whole corridor
    doc["areas"] = [
        {"id": "A", "section_ids": [s["id"] for s in doc["sections"]],
         "horizon": 1200}
    ]
    return doc


# ---------------------------------------------------------------------------
# Random desk-size instances with a known-small decision space, built
# directly as (network, snapshot) pairs for oracle comparison.
# ---------------------------------------------------------------------------

def oracle_instance(seed: int) -> tuple:
    """Seeded (network, snapshot, level_factors) with a tiny decision space."""
    rng = random.Random(seed)
    kind = rng.choice(("crossing", "overtake", "merge"))
    if kind == "crossing":
        doc, runs_spec = _oracle_crossing(rng)
    elif kind == "overtake":
        doc, runs_spec = _oracle_overtake(rng)
    else:
        doc, runs_spec = _oracle_merge(rng)
    network = load_network(doc)
    trains, runs = traffic.load_traffic(doc, network)
    states = tuple(
        TrainState(
            train_id=tid,
            train=trains[tid],
            run=runs[tid],
            set_route_id=None,
            anchor_node=runs[tid].entry_signal,
            earliest_entry=runs[tid].scheduled_entry,
            entry_speed=0.0,
        )
        for tid in sorted(runs)
    )
    snapshot = Snapshot(taken_at=0, area_id="A", horizon=3600, train_states=states)
    return network, snapshot, (1.0,)


def _speed(rng) -> float:
    return rng.choice((16.0, 20.0, 25.0, 32.0, 40.0))


def _oracle_train(rng, tid: str) -> dict:
    cat = rng.choice(list(_CATEGORY_SPEC))
    base = dict(_train(tid, cat))
    base["v_max"] = _speed(rng)
    base["priority_weight"] = rng.choice((1.0, 1.0, 2.0, 3.0, 4.0))
    base["accel"] = rng.choice((0.35, 0.5, 0.65))
    base["decel"] = rng.choice((0.45, 0.6, 0.8))
    return base


def _oracle_crossing(rng) -> tuple[dict, None]:
    """Single-track line, crossing loop at the middle station, 2-3 trains."""
    la = rng.randrange(15, 40) * 100
    lb = rng.randrange(15, 40) * 100
    lim = rng.choice((25.0, 30.0, 40.0))
    doc = {
        "name": "oracle-crossing",
        "nodes": [
            {"id": "M0", "kind": "MainSignal", "station": "S0"},
            {"id": "M1", "kind": "MainSignal", "station": "SX"},
            {"id": "M2", "kind": "MainSignal", "station": "SX"},
            {"id": "M3", "kind": "MainSignal", "station": "S3"},
        ],
        "sections": [
            {"id": "a", "from_node": "M0", "to_node": "M1", "length": la, "speed_limit": lim, "bidirectional": True},
            {"id": "la", "from_node": "M1", "to_node": "M2", "length": 600, "speed_limit": lim, "bidirectional": True},
            {"id": "lb", "from_node": "M1", "to_node": "M2", "length": 600, "speed_limit": 20.0, "bidirectional": True},
            {"id": "b", "from_node": "M2", "to_node": "M3", "length": lb, "speed_limit": lim, "bidirectional": True},
        ],
        "routes": [
            {"id": "em", "section_ids": ["a", "la", "b"], "entry_signal": "M0", "exit_signal": "M3"},
            {"id": "el", "section_ids": ["a", "lb", "b"], "entry_signal": "M0", "exit_signal": "M3"},
            {"id": "wm", "section_ids": ["b", "la", "a"], "entry_signal": "M3", "exit_signal": "M0"},
            {"id": "wl", "section_ids": ["b", "lb", "a"], "entry_signal": "M3", "exit_signal": "M0"},
        ],
        "exclusions": [],
        "restrictions": [],
        "stations": [
            {"id": "S0", "name": "S0", "platform_sections": ["a"]},
            {"id": "SX", "name": "SX", "platform_sections": ["la", "lb"]},
            {"id": "S3", "name": "S3", "platform_sections": ["b"]},
        ],
        "trains": [],
        "train_runs": [],
        "injections": [],
    }
    n_east = rng.choice((1, 1, 2))
    n_west = rng.choice((1, 1, 2))
    idx = 0
    for i in range(n_east):
        tid = f"t{idx}"
        idx += 1
        doc["trains"].append(_oracle_train(rng, tid))
        entry = rng.randrange(0, 5) * 60
        stop_here = rng.random() < 0.7
        stops = []
        if stop_here:
            arr = entry + rng.randrange(2, 7) * 60
            stops.append({"station_id": "SX", "arrival": arr, "departure": arr + 60, "min_dwell": 30})
        term = entry + rng.randrange(8, 14) * 60
        stops.append({"station_id": "S3", "arrival": term, "departure": term + 120, "min_dwell": 0})
        doc["train_runs"].append({"train_id": tid, "entry_signal": "M0", "exit_signal": "M3",
                                    "scheduled_entry": entry, "stops": _fix_stop_order(stops),
                                    "scheduled_route_id": "em"})
    for i in range(n_west):
        tid = f"t{idx}"
        idx += 1
        doc["trains"].append(_oracle_train(rng, tid))
        entry = rng.randrange(0, 5) * 60
        stops = []
        if rng.random() < 0.7:
            arr = entry + rng.randrange(2, 7) * 60
            stops.append({"station_id": "SX", "arrival": arr, "departure": arr + 60, "min_dwell": 30})
        term = entry + rng.randrange(8, 14) * 60
        stops.append({"station_id": "S0", "arrival": term, "departure": term + 120, "min_dwell": 0})
        doc["train_runs"].append({"train_id": tid, "entry_signal": "M3", "exit_signal": "M0",
                                    "scheduled_entry": entry, "stops": _fix_stop_order(stops),
                                    "scheduled_route_id": "wm"})
    if rng.random() < 0.25:
        start = rng.randrange(2, 8) * 60
        doc["restrictions"].append({"section_id": rng.choice(("a", "b")),
                                      "window": [start, start + rng.randrange(2, 6) * 60]})
    return doc, None


def _oracle_overtake(rng) -> tuple[dict, None]:
    """One-way line with a two-track station, 2-3 trains same direction."""
    la = rng.randrange(15, 40) * 100
    lb = rng.randrange(15, 45) * 100
    lim = rng.choice((30.0, 40.0, 45.0))
    doc = {
        "name": "oracle-overtake",
        "nodes": [
            {"id": "N0", "kind": "MainSignal", "station": "S0"},
            {"id": "N1", "kind": "MainSignal", "station": "SX"},
            {"id": "N2", "kind": "MainSignal", "station": "SX"},
            {"id": "N3", "kind": "MainSignal", "station": "S3"},
        ],
        "sections": [
            {"id": "a", "from_node": "N0", "to_node": "N1", "length": la, "speed_limit": lim},
            {"id": "p1", "from_node": "N1", "to_node": "N2", "length": 600, "speed_limit": lim},
            {"id": "p2", "from_node": "N1", "to_node": "N2", "length": 600, "speed_limit": 22.0},
            {"id": "b", "from_node": "N2", "to_node": "N3", "length": lb, "speed_limit": lim},
        ],
        "routes": [
            {"id": "main", "section_ids": ["a", "p1", "b"], "entry_signal": "N0", "exit_signal": "N3"},
            {"id": "loop", "section_ids": ["a", "p2", "b"], "entry_signal": "N0", "exit_signal": "N3"},
        ],
        "exclusions": [],
        "restrictions": [],
        "stations": [
            {"id": "S0", "name": "S0", "platform_sections": ["a"]},
            {"id": "SX", "name": "SX", "platform_sections": ["p1", "p2"]},
            {"id": "S3", "name": "S3", "platform_sections": ["b"]},
        ],
        "trains": [],
        "train_runs": [],
        "injections": [],
    }
    n = rng.choice((2, 2, 3))
    for i in range(n):
        tid = f"t{i}"
        doc["trains"].append(_oracle_train(rng, tid))
        entry = i * rng.randrange(1, 4) * 60
        stops = []
        if rng.random() < 0.8:
            arr = entry + rng.randrange(2, 6) * 60
            stops.append({"station_id": "SX", "arrival": arr, "departure": arr + rng.choice((40, 90)),
                          "min_dwell": 30})
        term = entry + rng.randrange(7, 12) * 60
        stops.append({"station_id": "S3", "arrival": term, "departure": term + 60, "min_dwell": 0})
        doc["train_runs"].append({"train_id": tid, "entry_signal": "N0", "exit_signal": "N3",
                                    "scheduled_entry": entry, "stops": _fix_stop_order(stops),
                                    "scheduled_route_id": "main"})
    return doc, None


def _oracle_merge(rng) -> tuple[dict, None]:
    """Two branches merging into a shared trunk with a terminal station."""
    lim = rng.choice((25.0, 32.0, 40.0))
    doc = {
        "name": "oracle-merge",
        "nodes": [
            {"id": "A0", "kind": "MainSignal", "station": "SA"},
            {"id": "B0", "kind": "MainSignal", "station": "SB"},
            {"id": "J", "kind": "MainSignal"},
            {"id": "E", "kind": "MainSignal", "station": "SE"},
        ],
        "sections": [
            {"id": "ba", "from_node": "A0", "to_node": "J", "length": rng.randrange(10, 30) * 100, "speed_limit": lim},
            {"id": "bb", "from_node": "B0", "to_node": "J", "length": rng.randrange(10, 30) * 100, "speed_limit": lim},
            {"id": "tr", "from_node": "J", "to_node": "E", "length": rng.randrange(20, 45) * 100, "speed_limit": lim},
        ],
        "routes": [
            {"id": "from-a", "section_ids": ["ba", "tr"], "entry_signal": "A0", "exit_signal": "E"},
            {"id": "from-b", "section_ids": ["bb", "tr"], "entry_signal": "B0", "exit_signal": "E"},
        ],
        "exclusions": [],
        "restrictions": [],
        "stations": [
            {"id": "SA", "name": "SA", "platform_sections": ["ba"]},
            {"id": "SB", "name": "SB", "platform_sections": ["bb"]},
            {"id": "SE", "name": "SE", "platform_sections": ["tr"]},
        ],
        "trains": [],
        "train_runs": [],
        "injections": [],
    }
    n = rng.choice((2, 3, 3, 4))
    for i in range(n):
        tid = f"t{i}"
        doc["trains"].append(_oracle_train(rng, tid))
        from_a = rng.random() < 0.5
        entry = rng.randrange(0, 6) * 60
        arr = entry + rng.randrange(5, 11) * 60
        doc["train_runs"].append({
            "train_id": tid,
            "entry_signal": "A0" if from_a else "B0",
            "exit_signal": "E",
            "scheduled_entry": entry,
            "stops": [{"station_id": "SE", "arrival": arr, "departure": arr, "min_dwell": 0}],
            "scheduled_route_id": "from-a" if from_a else "from-b",
        })
    if rng.random() < 0.2:
        start = rng.randrange(1, 6) * 60
        doc["restrictions"].append({"section_id": "tr", "window": [start, start + 180]})
    return doc, None


def _fix_stop_order(stops: list[dict]) -> list[dict]:
    stops.sort(key=lambda s: s["arrival"])
    t = None
    for s in stops:
        if t is not None and s["arrival"] < t:
            shift = t - s["arrival"]
            s["arrival"] += shift
            s["departure"] += shift
        t = s["departure"] + 60
    return stops


PRESETS: dict[str, Callable[..., dict]] = {
    "fig5": fig5_doc,
    "fig6": fig6_doc,
    "fig7": fig7_doc,
    "peak": peak_doc,
}
for _row in TABLE1_ROWS:
    PRESETS[f"table1-row{_row}"] = (lambda r: (lambda seed=0: table1_row_doc(r, seed)))(_row)
