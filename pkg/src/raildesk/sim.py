"""Discrete-event world simulator.

Moves trains along their routes at 1 Hz with simple accelerate/cruise/brake
dynamics, injects declared delays, honors realized dispatching measures,
and emits position reports at node passages.  Stands in for the live feed
of an operations centre; deterministic for a given scenario and seed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import mesh, scenarios, traffic
from .errors import MalformedDocument
from .planning import stop_node_on_path
from .infra import Network, load_network
from .traffic import PositionReport, Train, TrainRun


@dataclass(frozen=True)
class DelayInjection:
    train_id: str
    amount: int
    at_node: str | None = None
    at_time: int | None = None

    def __post_init__(self) -> None:
        if self.amount <= 0:
            raise MalformedDocument("injection amount must be > 0")
        if (self.at_node is None) == (self.at_time is None):
            raise MalformedDocument("injection needs exactly one of at_node/at_time")


@dataclass
class TrainDyn:
    """Mutable movement state of one train."""

    train_id: str
    route_id: str
    status: str = "pending"  # pending | running | done
    section_idx: int = -1
    offset: float = 0.0
    speed: float = 0.0
    dwell_until: int | None = None
    hold_seconds: int = 0
    stopped_at_node: str | None = None
    served_stops: set[str] = field(default_factory=set)


@dataclass
class RealizedHold:
    """A realized order change: held_train waits for until_train to clear."""

    held_train: str
    until_train: str
    section_id: str


class WorldState:
    """Single-writer simulation world; snapshots are taken via traffic."""

    def __init__(
        self,
        network: Network,
        trains: Mapping[str, Train],
        runs: Mapping[str, TrainRun],
        injections: list[DelayInjection],
        areas: list[mesh.ObservationArea],
    ) -> None:
        self.network = network
        self.trains = dict(trains)
        self.runs = dict(runs)
        self.injections = list(injections)
        self.areas = {a.id: a for a in areas}
        self.clock = 0
        self.reports: list[PositionReport] = []
        self.events: list[dict] = []
        self.route_override: dict[str, str] = {}
        self.holds: list[RealizedHold] = []
        self._dyn: dict[str, TrainDyn] = {
            tid: TrainDyn(train_id=tid, route_id=runs[tid].scheduled_route_id)
            for tid in sorted(runs)
        }
        self._occupancy: dict[str, str] = {}  # section -> train
        self._pending_time_inj: list[DelayInjection] = [
            i for i in injections if i.at_time is not None
        ]

    # -- snapshot interface (duck-typed for traffic.build_snapshot) --

    def anchor(self, train_id: str) -> tuple[str, int, float] | None:
        dyn = self._dyn[train_id]
        run = self.runs[train_id]
        if dyn.status == "done":
            return None
        if dyn.status == "pending":
            # entry delays are announced by the upstream feed
            due = run.scheduled_entry + self._spawn_delay(train_id)
            return (run.entry_signal, max(due, self.clock), 0.0)
        last = self.last_report(train_id)
        if last is None:
            return (run.entry_signal, self.clock, dyn.speed)
        return (last.node_id, last.time, last.speed)

    def set_route(self, train_id: str) -> str | None:
        return self.route_override.get(train_id)

    def last_report(self, train_id: str) -> PositionReport | None:
        for report in reversed(self.reports):
            if report.train_id == train_id:
                return report
        return None

    # -- dispatching measures --

    def apply_decision(self, decision: Mapping) -> None:
        """Realize an accepted measure: an order hold or a route change."""
        if decision.get("type") == "hold":
            self.holds.append(
                RealizedHold(
                    held_train=decision["held_train"],
                    until_train=decision["until_train"],
                    section_id=decision["section_id"],
                )
            )
            self.events.append({"type": "hold", "ts": self.clock, **dict(decision)})
        elif decision.get("type") == "route":
            tid = decision["train_id"]
            dyn = self._dyn[tid]
            new_route = self.network.routes[decision["route_id"]]
            if dyn.status == "running":
                current = self._sections(tid)
                passed = current[: dyn.section_idx + 1]
                if list(new_route.section_ids[: len(passed)]) != list(passed):
                    return  # divergence already passed; measure is void
            self.route_override[tid] = decision["route_id"]
            if dyn.status != "done":
                dyn.route_id = decision["route_id"]
            self.events.append(
                {"type": "set_route", "ts": self.clock, "train_id": tid,
                 "route_id": decision["route_id"]}
            )

    # -- movement --

    def _sections(self, train_id: str) -> tuple[str, ...]:
        return self.network.routes[self._dyn[train_id].route_id].section_ids

    def _route_nodes(self, train_id: str) -> tuple[str, ...]:
        route = self.network.routes[self._dyn[train_id].route_id]
        return self.network.route_nodes(route)

    def _emit(self, train_id: str, node_id: str, speed: float) -> None:
        report = PositionReport(train_id, node_id, self.clock, round(speed, 2))
        self.reports.append(report)
        self.events.append(
            {"type": "position", "ts": self.clock, "train_id": train_id,
             "node_id": node_id, "speed": round(speed, 2)}
        )

    def _cleared(self, hold: RealizedHold) -> bool:
        other = self._dyn[hold.until_train]
        if other.status == "done":
            return True
        if other.status == "pending":
            return False
        sections = self._sections(hold.until_train)
        if hold.section_id not in sections:
            return True
        return other.section_idx > sections.index(hold.section_id)

    def _entry_blocked(self, train_id: str, section_id: str) -> bool:
        holder = self._occupancy.get(section_id)
        if holder is not None and holder != train_id:
            return True
        for hold in self.holds:
            if hold.held_train == train_id and hold.section_id == section_id:
                if not self._cleared(hold):
                    return True
        return False

    def _stop_here(self, train_id: str, node_id: str) -> traffic.ScheduledStop | None:
        dyn = self._dyn[train_id]
        run = self.runs[train_id]
        nodes = self._route_nodes(train_id)
        sections = self._sections(train_id)
        for stop in run.stops:
            if stop.station_id in dyn.served_stops:
                continue
            stop_node = stop_node_on_path(self.network, nodes, sections, stop.station_id)
            if stop_node == node_id:
                return stop
        return None

    def _spawn_delay(self, train_id: str) -> int:
        run = self.runs[train_id]
        return sum(
            i.amount
            for i in self.injections
            if i.train_id == train_id and i.at_node == run.entry_signal
        )

    def _node_injection(self, train_id: str, node_id: str) -> int:
        run = self.runs[train_id]
        if node_id == run.entry_signal:
            return 0  # applied as spawn delay
        return sum(
            i.amount
            for i in self.injections
            if i.train_id == train_id and i.at_node == node_id
        )

    def _tick(self) -> None:
        self.clock += 1
        for inj in list(self._pending_time_inj):
            if inj.at_time is not None and self.clock >= inj.at_time:
                dyn = self._dyn[inj.train_id]
                if dyn.status == "running":
                    dyn.hold_seconds += inj.amount
                    self._pending_time_inj.remove(inj)

        for tid in sorted(self._dyn):
            dyn = self._dyn[tid]
            if dyn.status == "pending":
                run = self.runs[tid]
                due = run.scheduled_entry + self._spawn_delay(tid)
                if self.clock >= due:
                    first = self._sections(tid)[0]
                    if not self._entry_blocked(tid, first):
                        dyn.status = "running"
                        dyn.section_idx = 0
                        dyn.offset = 0.0
                        dyn.speed = 0.0
                        self._occupancy[first] = tid
                        self._emit(tid, run.entry_signal, 0.0)
                continue
            if dyn.status != "running":
                continue
            if dyn.hold_seconds > 0:
                dyn.hold_seconds -= 1
                dyn.speed = 0.0
                continue
            if dyn.dwell_until is not None:
                if self.clock < dyn.dwell_until:
                    dyn.speed = 0.0
                    continue
                dyn.dwell_until = None
            if dyn.stopped_at_node is not None:
                self._try_advance(tid, dyn)
                continue
            self._move(tid, dyn)

    def _move(self, tid: str, dyn: TrainDyn) -> None:
        train = self.trains[tid]
        sections = self._sections(tid)
        section = self.network.section(sections[dyn.section_idx])
        cap = min(train.v_max, section.speed_limit)
        remaining = section.length - dyn.offset

        must_stop = self._must_stop_at_next(tid, dyn)
        brake_dist = dyn.speed * dyn.speed / (2.0 * train.decel)
        if must_stop and brake_dist >= remaining - dyn.speed:
            dyn.speed = max(0.0, dyn.speed - train.decel)
        else:
            dyn.speed = min(cap, dyn.speed + train.accel)
        dyn.offset += dyn.speed
        if dyn.offset >= section.length - 1e-6:
            self._arrive_at_node(tid, dyn)

    def _must_stop_at_next(self, tid: str, dyn: TrainDyn) -> bool:
        nodes = self._route_nodes(tid)
        node = nodes[dyn.section_idx + 1]
        sections = self._sections(tid)
        if self._stop_here(tid, node) is not None:
            return True
        if dyn.section_idx + 1 >= len(sections):
            return True  # end of run
        if self._node_injection(tid, node) > 0:
            return True
        return self._entry_blocked(tid, sections[dyn.section_idx + 1])

    def _arrive_at_node(self, tid: str, dyn: TrainDyn) -> None:
        nodes = self._route_nodes(tid)
        node = nodes[dyn.section_idx + 1]
        sections = self._sections(tid)
        last = dyn.section_idx + 1 >= len(sections)
        stop = self._stop_here(tid, node)
        inj = self._node_injection(tid, node)
        if stop is not None or inj > 0 or last:
            dyn.speed = 0.0
        self._emit(tid, node, dyn.speed)
        if inj > 0:
            dyn.hold_seconds += inj
        if stop is not None:
            dyn.served_stops.add(stop.station_id)
            dyn.dwell_until = max(self.clock + stop.min_dwell, stop.departure)
        if last:
            self._occupancy.pop(sections[dyn.section_idx], None)
            dyn.status = "done"
            dyn.section_idx += 1
            return
        dyn.stopped_at_node = node
        dyn.offset = self.network.section(sections[dyn.section_idx]).length
        self._try_advance(tid, dyn)

    def _try_advance(self, tid: str, dyn: TrainDyn) -> None:
        if dyn.dwell_until is not None or dyn.hold_seconds > 0:
            dyn.speed = 0.0
            return
        sections = self._sections(tid)
        nxt = sections[dyn.section_idx + 1]
        if self._entry_blocked(tid, nxt):
            dyn.speed = 0.0
            return
        self._occupancy.pop(sections[dyn.section_idx], None)
        dyn.section_idx += 1
        dyn.offset = 0.0
        dyn.stopped_at_node = None
        self._occupancy[nxt] = tid

    def dyn(self, train_id: str) -> TrainDyn:
        return self._dyn[train_id]

    def all_done(self) -> bool:
        return all(d.status == "done" for d in self._dyn.values())


def step(world: WorldState, dt: int) -> WorldState:
    """Advance the world by dt seconds (1 Hz substeps)."""
    if dt <= 0:
        raise MalformedDocument("dt must be > 0")
    for _ in range(int(dt)):
        world._tick()
    return world


@dataclass
class LoadedScenario:
    world: WorldState
    network: Network
    areas: list[mesh.ObservationArea]
    document: dict


def load_scenario(source, seed: int = 0) -> LoadedScenario:
    """Load a scenario document, preset name, path, or dict into a world."""
    if isinstance(source, (str, Path)) and str(source) in scenarios.PRESETS:
        builder = scenarios.PRESETS[str(source)]
        try:
            document = builder(seed=seed)
        except TypeError:
            document = builder()
    elif isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    elif isinstance(source, Mapping):
        document = dict(source)
    else:
        raise MalformedDocument(f"cannot load scenario from {type(source)!r}")

    network = load_network(document)
    trains, runs = traffic.load_traffic(document, network)
    injections = [
        DelayInjection(
            train_id=str(raw["train_id"]),
            amount=int(raw["amount"]),
            at_node=raw.get("at_node"),
            at_time=raw.get("at_time"),
        )
        for raw in document.get("injections", [])
    ]
    areas = mesh.areas_from_document(document, network)
    world = WorldState(network, trains, runs, injections, areas)
    return LoadedScenario(world=world, network=network, areas=areas, document=document)
