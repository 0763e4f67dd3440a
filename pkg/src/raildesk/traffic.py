"""Trains, timetables, live state, snapshots, and the unimpeded prognosis."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Mapping

from . import planning, vprofile
from .errors import MalformedDocument, NoFeasiblePath, UnknownArea
from .infra import Network

if TYPE_CHECKING:  # pragma: no cover
    from .mesh import BoundaryHandoff


class TrainCategory(str, Enum):
    URBAN = "Urban"
    LOCAL = "Local"
    LONG_DISTANCE = "LongDistance"
    FREIGHT = "Freight"


class EventKind(str, Enum):
    ARRIVE = "Arrive"
    DEPART = "Depart"
    AREA_ENTRY = "AreaEntry"
    AREA_EXIT = "AreaExit"


@dataclass(frozen=True)
class Train:
    id: str
    priority_weight: float
    v_max: float
    accel: float
    decel: float
    category: TrainCategory

    def __post_init__(self) -> None:
        if self.priority_weight <= 0:
            raise MalformedDocument(f"train {self.id}: priority_weight must be > 0")
        if min(self.v_max, self.accel, self.decel) <= 0:
            raise MalformedDocument(f"train {self.id}: v_max/accel/decel must be > 0")


@dataclass(frozen=True)
class ScheduledStop:
    station_id: str
    arrival: int
    departure: int
    min_dwell: int = 0
    is_customer_stop: bool = True

    def __post_init__(self) -> None:
        if self.departure - self.arrival < self.min_dwell:
            raise MalformedDocument(
                f"stop at {self.station_id}: scheduled dwell below min_dwell"
            )


@dataclass(frozen=True)
class TrainRun:
    train_id: str
    entry_signal: str
    exit_signal: str
    scheduled_entry: int
    stops: tuple[ScheduledStop, ...]
    scheduled_route_id: str

    def __post_init__(self) -> None:
        arrivals = [s.arrival for s in self.stops]
        if arrivals != sorted(arrivals):
            raise MalformedDocument(f"run {self.train_id}: stops not ordered by arrival")


@dataclass(frozen=True)
class PositionReport:
    train_id: str
    node_id: str
    time: int
    speed: float


@dataclass(frozen=True)
class SetRoute:
    train_id: str
    route_id: str
    set_at: int


@dataclass(frozen=True)
class TrainState:
    """One train's anchored remaining run inside a snapshot."""

    train_id: str
    train: Train
    run: TrainRun
    set_route_id: str | None
    anchor_node: str
    earliest_entry: int
    entry_speed: float
    last_report: PositionReport | None = None


@dataclass(frozen=True)
class Snapshot:
    """Frozen operating situation for one area and horizon; immutable.

    area_sections is the spatial scope: remaining runs are clipped to it,
    and empty means unclipped (whole network).
    """

    taken_at: int
    area_id: str
    horizon: int
    train_states: tuple[TrainState, ...]
    boundary_constraints: tuple["BoundaryHandoff", ...] = ()
    area_sections: frozenset[str] = frozenset()

    @property
    def clip(self) -> frozenset[str] | None:
        return self.area_sections or None

    def state_of(self, train_id: str) -> TrainState:
        for st in self.train_states:
            if st.train_id == train_id:
                return st
        raise KeyError(train_id)


@dataclass(frozen=True)
class TrajEvent:
    node_id: str
    kind: EventKind
    time: int
    speed: float = 0.0


@dataclass(frozen=True)
class StopTime:
    station_id: str
    arrival: int
    departure: int | None
    scheduled_arrival: int
    scheduled_departure: int
    is_customer_stop: bool

    @property
    def arrival_delay(self) -> int:
        return max(0, self.arrival - self.scheduled_arrival)

    @property
    def departure_delay(self) -> int:
        if self.departure is None:
            return 0
        return max(0, self.departure - self.scheduled_departure)


@dataclass(frozen=True)
class Trajectory:
    train_id: str
    route_id: str | None
    events: tuple[TrajEvent, ...]
    occupations: tuple[tuple[str, int, int], ...]
    stop_times: tuple[StopTime, ...]

    @property
    def exit_time(self) -> int:
        return self.events[-1].time

    @property
    def exit_node(self) -> str:
        return self.events[-1].node_id

    @property
    def exit_speed(self) -> float:
        return self.events[-1].speed

    def entry_time_at(self, node_id: str) -> int | None:
        for ev in self.events:
            if ev.node_id == node_id:
                return ev.time
        return None


def load_traffic(
    document: Mapping, network: Network
) -> tuple[dict[str, Train], dict[str, TrainRun]]:
    """Parse and validate the traffic part of a scenario document."""
    trains: dict[str, Train] = {}
    for raw in document.get("trains", []):
        train = Train(
            id=str(raw["id"]),
            priority_weight=float(raw["priority_weight"]),
            v_max=float(raw["v_max"]),
            accel=float(raw["accel"]),
            decel=float(raw["decel"]),
            category=TrainCategory(raw.get("category", "Local")),
        )
        if train.id in trains:
            raise MalformedDocument(f"duplicate train {train.id}")
        trains[train.id] = train

    runs: dict[str, TrainRun] = {}
    for raw in document.get("train_runs", []):
        run = TrainRun(
            train_id=str(raw["train_id"]),
            entry_signal=str(raw["entry_signal"]),
            exit_signal=str(raw["exit_signal"]),
            scheduled_entry=int(raw["scheduled_entry"]),
            stops=tuple(
                ScheduledStop(
                    station_id=str(s["station_id"]),
                    arrival=int(s["arrival"]),
                    departure=int(s["departure"]),
                    min_dwell=int(s.get("min_dwell", 0)),
                    is_customer_stop=bool(s.get("is_customer_stop", True)),
                )
                for s in raw.get("stops", [])
            ),
            scheduled_route_id=str(raw["scheduled_route_id"]),
        )
        if run.train_id not in trains:
            raise MalformedDocument(f"run references unknown train {run.train_id}")
        if run.scheduled_route_id not in network.routes:
            raise MalformedDocument(
                f"run {run.train_id} references unknown route {run.scheduled_route_id}"
            )
        if run.train_id in runs:
            raise MalformedDocument(f"duplicate run for train {run.train_id}")
        runs[run.train_id] = run
    return trains, runs


def predict_run(
    network: Network,
    train: Train,
    run: TrainRun,
    anchor_node: str,
    anchor_time: int,
    anchor_speed: float,
    route_id: str | None = None,
    factors=vprofile.DEFAULT_LEVEL_FACTORS,
    allowed_sections: frozenset[str] | None = None,
) -> Trajectory:
    """Unimpeded forward prediction from an anchor.

    Set route (route_id) is respected, the scheduled route otherwise; the
    fastest feasible plan is driven; scheduled departures are honored (no
    early departure from scheduled stops); restrictions and other trains are
    deliberately ignored.
    """
    chosen = route_id or run.scheduled_route_id
    path = planning.build_path(
        network, train, run, chosen, anchor_node, allowed_sections
    )
    if path is None:
        raise NoFeasiblePath(
            f"train {train.id}: route {chosen} unusable from {anchor_node}"
        )
    plan = planning.enumerate_plans(path, train, anchor_speed, factors)[0]
    return drive_path(path, plan, anchor_time, run)


def drive_path(
    path: planning.TrainPath, plan: planning.Plan, start_time: int, run: TrainRun
) -> Trajectory:
    """Walk a path under a plan from start_time, honoring scheduled dwells."""
    m = len(path.chains)
    events: list[TrajEvent] = []
    occupations: list[tuple[str, int, int]] = []
    stop_times: list[StopTime] = []

    bnodes = path.boundary_nodes
    t = start_time
    events.append(TrajEvent(bnodes[0], EventKind.AREA_ENTRY, t, plan.boundary_speeds[0]))
    for ci in range(m):
        chain = path.chains[ci]
        for si, sid in enumerate(chain.sections):
            off_in, off_out = plan.offsets[ci][si]
            occupations.append((sid, t + off_in, t + off_out))
        arrive = t + plan.chain_times[ci]
        node = bnodes[ci + 1]
        stop = path.boundary_stops[ci + 1]
        last = ci + 1 == m
        if stop is not None:
            events.append(TrajEvent(node, EventKind.ARRIVE, arrive, 0.0))
            if last:
                stop_times.append(
                    StopTime(
                        stop.station_id, arrive, None,
                        stop.arrival, stop.departure, stop.is_customer_stop,
                    )
                )
                break
            depart = max(arrive + stop.min_dwell, stop.departure)
            stop_times.append(
                StopTime(
                    stop.station_id, arrive, depart,
                    stop.arrival, stop.departure, stop.is_customer_stop,
                )
            )
            events.append(TrajEvent(node, EventKind.DEPART, depart, 0.0))
            # dwelling at the stop keeps the platform section occupied
            sid, occ_in, _ = occupations[-1]
            occupations[-1] = (sid, occ_in, depart)
            t = depart
        elif last:
            kind = EventKind.ARRIVE if path.terminal else EventKind.AREA_EXIT
            events.append(TrajEvent(node, kind, arrive, plan.boundary_speeds[ci + 1]))
        else:
            events.append(
                TrajEvent(node, EventKind.ARRIVE, arrive, plan.boundary_speeds[ci + 1])
            )
            t = arrive
    return Trajectory(
        train_id=path.train_id,
        route_id=path.route_id,
        events=tuple(events),
        occupations=tuple(occupations),
        stop_times=tuple(stop_times),
    )


def prognosis(snapshot: Snapshot, network: Network) -> dict[str, Trajectory]:
    """Per-train unimpeded trajectory for every train in the snapshot."""
    out: dict[str, Trajectory] = {}
    for st in snapshot.train_states:
        out[st.train_id] = predict_run(
            network,
            st.train,
            st.run,
            st.anchor_node,
            st.earliest_entry,
            st.entry_speed,
            route_id=st.set_route_id,
            allowed_sections=snapshot.clip,
        )
    return out


def build_snapshot(world, area_id: str, horizon: int) -> Snapshot:
    """Freeze the operating situation of one area over [taken_at, taken_at+horizon].

    Contains exactly the trains whose predicted presence intersects the area
    within the window; deterministic for a frozen world.
    """
    if horizon <= 0:
        raise MalformedDocument("horizon must be > 0")
    areas = getattr(world, "areas", {})
    if area_id not in areas:
        raise UnknownArea(area_id)
    area = areas[area_id]
    network: Network = world.network
    taken_at = world.clock
    window = (taken_at, taken_at + horizon)

    area_sections = set(area.section_ids)
    area_nodes: set[str] = set()
    for sid in area_sections:
        sec = network.section(sid)
        area_nodes.update(sec.ends())

    states: list[TrainState] = []
    for train_id in sorted(world.runs):
        anchor = world.anchor(train_id)
        if anchor is None:
            continue  # run completed
        node, time, speed = anchor
        run = world.runs[train_id]
        train = world.trains[train_id]
        set_route = world.set_route(train_id)
        try:
            traj = predict_run(network, train, run, node, time, speed, set_route)
        except NoFeasiblePath:
            continue

        in_window = [
            (sid, t_in, t_out)
            for sid, t_in, t_out in traj.occupations
            if sid in area_sections and t_in <= window[1] and t_out >= window[0]
        ]
        if not in_window:
            continue

        # Anchor on the first predicted in-area event not yet in the past;
        # a running train is mid-section, so its anchor is the next node
        # ahead with its predicted passing time and speed.  The final event
        # is the run's end: a train whose only future event is its terminal
        # arrival is mid-way through its last chain, so anchor at the chain
        # start instead (clamped into the window, conservatively late).
        candidates = [
            ev
            for ev in traj.events[:-1]
            if ev.time >= taken_at and ev.node_id in area_nodes
        ]
        if candidates:
            ev = candidates[0]
            entry_node, entry_time, entry_speed = ev.node_id, ev.time, ev.speed
        else:
            launches = [ev for ev in traj.events[:-1] if ev.node_id in area_nodes]
            if not launches:
                continue  # nothing left to plan for this train
            ev = launches[-1]
            entry_node = ev.node_id
            entry_time = max(taken_at, ev.time)
            entry_speed = ev.speed
        if entry_time > window[1]:
            continue
        # a train anchored at its area-exit has nothing left to plan here
        route_id = set_route or run.scheduled_route_id
        remaining = planning.remaining_sections(network, route_id, entry_node)
        if not remaining or remaining[0] not in area_sections:
            continue
        states.append(
            TrainState(
                train_id=train_id,
                train=train,
                run=run,
                set_route_id=set_route,
                anchor_node=entry_node,
                earliest_entry=int(entry_time),
                entry_speed=entry_speed,
                last_report=world.last_report(train_id),
            )
        )
    return Snapshot(
        taken_at=taken_at,
        area_id=area_id,
        horizon=horizon,
        train_states=tuple(states),
        area_sections=frozenset(area_sections),
    )
