"""Observation areas and cross-boundary coordination.

The network is cut into areas at nodes where no dispatching changes are
made (by default the transitions between single- and double-track running),
each area solves on its own, and solved exit times flow downstream as
boundary handoffs.  There is no backward loop: a handoff follows its
train's direction of travel.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from . import optimizer, traffic
from .errors import UnknownBoundaryNode, UnpartitionableNetwork
from .infra import Network, NodeKind
from .traffic import EventKind, Snapshot

DEFAULT_HORIZON = 1200
DEFAULT_MAX_SECTIONS = 500
DEFAULT_MAX_ROUNDS = 10


@dataclass(frozen=True)
class ObservationArea:
    id: str
    section_ids: frozenset[str]
    boundary_nodes: frozenset[str]
    horizon: int = DEFAULT_HORIZON
    gap_target: float = 0.10

    def nodes(self, network: Network) -> set[str]:
        out: set[str] = set()
        for sid in self.section_ids:
            out.update(network.section(sid).ends())
        return out


@dataclass(frozen=True)
class BoundaryHandoff:
    """Earliest possible incursion of one train into a downstream area."""

    train_id: str
    entry_node: str
    earliest_entry: int
    entry_speed: float
    boundary_order_seq: tuple[str, ...] = ()
    produced_round: int = 0

    def to_wire(self) -> dict:
        return {
            "train_id": self.train_id,
            "entry_node": self.entry_node,
            "earliest_entry": self.earliest_entry,
            "entry_speed": self.entry_speed,
            "order_seq": list(self.boundary_order_seq),
            "produced_round": self.produced_round,
        }

    @classmethod
    def from_wire(cls, raw: Mapping) -> "BoundaryHandoff":
        return cls(
            train_id=str(raw["train_id"]),
            entry_node=str(raw["entry_node"]),
            earliest_entry=int(raw["earliest_entry"]),
            entry_speed=float(raw["entry_speed"]),
            boundary_order_seq=tuple(raw.get("order_seq", ())),
            produced_round=int(raw.get("produced_round", 0)),
        )


@dataclass(frozen=True)
class SectionRules:
    manual_boundaries: tuple[str, ...] | None = None
    max_sections: int = DEFAULT_MAX_SECTIONS
    horizon: int = DEFAULT_HORIZON
    gap_target: float = 0.10


def _pair_key(section) -> frozenset[str]:
    return frozenset(section.ends())


def double_track_transition_nodes(network: Network) -> set[str]:
    """Nodes where single-track running meets double-track running.

    Double track means a node pair carrying one-way sections in both
    directions.  Bidirectional parallels (crossing loops) and platform
    tracks stay single, so stations on a single-track line do not read as
    double-track islands.
    """
    # Station interiors are parallel platform tracks serving the same
    # direction (or bidirectional loops); a stop on a plain running line
    # does not make that line a station interior.
    platform: set[str] = set()
    for st in network.stations.values():
        secs = [
            network.sections[p]
            for p in st.platform_sections
            if p in network.sections
        ]
        for i, s1 in enumerate(secs):
            for s2 in secs[i + 1 :]:
                if _pair_key(s1) != _pair_key(s2):
                    continue
                same_direction = (
                    s1.from_node == s2.from_node
                    or s1.bidirectional
                    or s2.bidirectional
                )
                if same_direction:
                    platform.update((s1.id, s2.id))
    directions: dict[frozenset[str], set[tuple[str, str]]] = {}
    for sec in network.sections.values():
        if sec.id in platform or sec.bidirectional:
            continue
        directions.setdefault(_pair_key(sec), set()).add((sec.from_node, sec.to_node))

    def is_double(sec) -> bool:
        if sec.id in platform:
            return False
        return len(directions.get(_pair_key(sec), ())) >= 2

    out: set[str] = set()
    for node_id in network.nodes:
        classes = set()
        for sec in network.sections.values():
            if sec.id in platform or node_id not in sec.ends():
                continue
            classes.add("double" if is_double(sec) else "single")
        if classes == {"single", "double"}:
            out.add(node_id)
    return out


def section_network(network: Network, rules: SectionRules | None = None) -> list[ObservationArea]:
    """Partition the network into observation areas.

    Cuts at the rule set's boundary candidates; every section lands in
    exactly one area (areas overlap only at boundary nodes).
    """
    rules = rules or SectionRules()
    if rules.manual_boundaries is not None:
        candidates = set(rules.manual_boundaries)
    else:
        candidates = double_track_transition_nodes(network)
        candidates.update(
            n.id for n in network.nodes.values() if n.kind is NodeKind.BOUNDARY
        )

    if not candidates:
        if len(network.sections) > rules.max_sections:
            raise UnpartitionableNetwork(
                f"no boundary candidates and {len(network.sections)} sections "
                f"exceed the {rules.max_sections}-section cap"
            )
        return [
            ObservationArea(
                id="A",
                section_ids=frozenset(network.sections),
                boundary_nodes=frozenset(),
                horizon=rules.horizon,
                gap_target=rules.gap_target,
            )
        ]

    # Flood-fill sections across shared non-boundary nodes.
    unassigned = set(network.sections)
    components: list[set[str]] = []
    while unassigned:
        start = min(unassigned)
        comp = {start}
        unassigned.discard(start)
        frontier = [start]
        while frontier:
            sid = frontier.pop()
            sec = network.section(sid)
            for node in sec.ends():
                if node in candidates:
                    continue
                for other in list(unassigned):
                    if node in network.section(other).ends():
                        unassigned.discard(other)
                        comp.add(other)
                        frontier.append(other)
        components.append(comp)
    components.sort(key=min)

    areas = []
    for i, comp in enumerate(components):
        name = chr(ord("A") + i) if i < 26 else f"Z{i}"
        touching = {
            n
            for sid in comp
            for n in network.section(sid).ends()
            if n in candidates
        }
        areas.append(
            ObservationArea(
                id=name,
                section_ids=frozenset(comp),
                boundary_nodes=frozenset(touching),
                horizon=rules.horizon,
                gap_target=rules.gap_target,
            )
        )
    return areas


def areas_from_document(document: Mapping, network: Network) -> list[ObservationArea]:
    """Areas as declared in a scenario document, with derived boundary nodes."""
    declared = document.get("areas") or []
    if not declared:
        return section_network(network)
    node_areas: dict[str, set[str]] = {}
    for raw in declared:
        for sid in raw["section_ids"]:
            for n in network.section(sid).ends():
                node_areas.setdefault(n, set()).add(raw["id"])
    out = []
    for raw in sorted(declared, key=lambda r: r["id"]):
        sections = frozenset(str(s) for s in raw["section_ids"])
        touching = {
            n
            for sid in sections
            for n in network.section(sid).ends()
            if len(node_areas[n]) > 1 or network.nodes[n].kind is NodeKind.BOUNDARY
        }
        out.append(
            ObservationArea(
                id=str(raw["id"]),
                section_ids=sections,
                boundary_nodes=frozenset(touching),
                horizon=int(raw.get("horizon", DEFAULT_HORIZON)),
                gap_target=float(raw.get("gap_target", 0.10)),
            )
        )
    return out


def publish_handoffs(
    area: ObservationArea,
    solution: optimizer.Solution,
    snapshot: Snapshot,
    areas: Sequence[ObservationArea],
    network: Network,
    produced_round: int = 0,
) -> dict[str, list[BoundaryHandoff]]:
    """Handoffs per downstream neighbor for trains leaving over a boundary.

    Only outbound crossings are published; nothing flows upstream against a
    train's direction of travel.
    """
    exits: list[tuple[str, str, int, float]] = []  # (node, train, time, speed)
    for train_id in sorted(solution.trajectories):
        traj = solution.trajectories[train_id]
        last = traj.events[-1]
        if last.kind is not EventKind.AREA_EXIT:
            continue
        if last.node_id not in area.boundary_nodes:
            continue
        exits.append((last.node_id, train_id, last.time, last.speed))

    order_at_node: dict[str, tuple[str, ...]] = {}
    for node in {e[0] for e in exits}:
        ordered = sorted((e for e in exits if e[0] == node), key=lambda e: (e[2], e[1]))
        order_at_node[node] = tuple(e[1] for e in ordered)

    out: dict[str, list[BoundaryHandoff]] = {}
    for node, train_id, t_exit, speed in sorted(exits):
        neighbor = _downstream_area(
            network, areas, area, snapshot, train_id, node
        )
        if neighbor is None:
            continue
        out.setdefault(neighbor, []).append(
            BoundaryHandoff(
                train_id=train_id,
                entry_node=node,
                earliest_entry=t_exit,
                entry_speed=speed,
                boundary_order_seq=order_at_node[node],
                produced_round=produced_round,
            )
        )
    return out


def _downstream_area(
    network: Network,
    areas: Sequence[ObservationArea],
    area: ObservationArea,
    snapshot: Snapshot,
    train_id: str,
    node: str,
) -> str | None:
    try:
        state = snapshot.state_of(train_id)
    except KeyError:
        return None
    route_id = state.set_route_id or state.run.scheduled_route_id
    route = network.routes.get(route_id)
    if route is None:
        return None
    nodes = network.route_nodes(route)
    if node not in nodes:
        return None
    idx = nodes.index(node)
    if idx >= len(route.section_ids):
        return None
    next_section = route.section_ids[idx]
    for other in areas:
        if other.id != area.id and next_section in other.section_ids:
            return other.id
    return None


def apply_handoffs(
    snapshot: Snapshot,
    handoffs: Iterable[BoundaryHandoff],
    area: ObservationArea,
) -> Snapshot:
    """Merge handoffs into a snapshot: entry bounds, speeds, entry order.

    The entry bound is the max of the prognosis bound and the handoff (a
    train cannot enter earlier than physics allows); application is
    idempotent per (train, boundary, round).
    """
    handoffs = list(handoffs)
    if not handoffs:
        return snapshot
    for h in handoffs:
        if h.entry_node not in area.boundary_nodes:
            raise UnknownBoundaryNode(
                f"{h.entry_node} is not a boundary of area {area.id}"
            )

    latest: dict[tuple[str, str], BoundaryHandoff] = {}
    for existing in snapshot.boundary_constraints:
        latest[(existing.train_id, existing.entry_node)] = existing
    for h in handoffs:
        key = (h.train_id, h.entry_node)
        if key not in latest or h.produced_round >= latest[key].produced_round:
            latest[key] = h

    states = []
    for st in snapshot.train_states:
        h = latest.get((st.train_id, st.anchor_node))
        if h is not None and h.earliest_entry >= st.earliest_entry:
            st = replace(
                st, earliest_entry=h.earliest_entry, entry_speed=h.entry_speed
            )
        states.append(st)
    return replace(
        snapshot,
        train_states=tuple(states),
        boundary_constraints=tuple(
            latest[k] for k in sorted(latest)
        ),
    )


@dataclass
class MeshState:
    """Rolling state of the per-area solve rounds."""

    round_no: int = 0
    inboxes: dict[str, list[BoundaryHandoff]] = field(default_factory=dict)
    solutions: dict[str, optimizer.Solution] = field(default_factory=dict)
    snapshots: dict[str, Snapshot] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    published: dict[str, list[BoundaryHandoff]] = field(default_factory=dict)
    fixed_point_round: int | None = None


def _handoff_fingerprint(published: Mapping[str, list[BoundaryHandoff]]) -> tuple:
    flat = []
    for target in sorted(published):
        for h in published[target]:
            wire = h.to_wire()
            wire.pop("produced_round")
            flat.append((target, tuple(sorted(wire.items(), key=lambda kv: kv[0], )) ))
    return tuple(sorted(flat, key=repr))


def run_round(
    areas: Sequence[ObservationArea],
    world,
    state: MeshState | None = None,
    params: optimizer.SolveParams | None = None,
) -> MeshState:
    """One asynchronous solve round over all areas.

    Every area solves against the handoffs published in the previous round
    (possibly stale); new handoffs become visible only next round.  One
    area failing does not abort the others.
    """
    state = state or MeshState()
    params = params or optimizer.SolveParams()
    round_no = state.round_no + 1
    new_inboxes: dict[str, list[BoundaryHandoff]] = {}
    published: dict[str, list[BoundaryHandoff]] = {}
    solutions: dict[str, optimizer.Solution] = {}
    snapshots: dict[str, Snapshot] = {}
    errors: dict[str, str] = {}

    for area in sorted(areas, key=lambda a: a.id):
        try:
            snap = traffic.build_snapshot(world, area.id, area.horizon)
            snap = apply_handoffs(snap, state.inboxes.get(area.id, []), area)
            snapshots[area.id] = snap
            model = optimizer.build_model(snap, world.network)
            hints = optimizer.make_hints(
                state.solutions.get(area.id), snap, world.network
            )
            solution = optimizer.solve(model, hints, params)
            solutions[area.id] = solution
            outbound = publish_handoffs(
                area, solution, snap, areas, world.network, produced_round=round_no
            )
            published[area.id] = [h for hs in outbound.values() for h in hs]
            for target, hs in outbound.items():
                new_inboxes.setdefault(target, []).extend(hs)
        except Exception as exc:  # noqa: BLE001 - per-area isolation is the contract
            errors[area.id] = f"{type(exc).__name__}: {exc}"

    fixed = None
    if state.round_no > 0 and _handoff_fingerprint(published) == _handoff_fingerprint(
        state.published
    ):
        fixed = state.fixed_point_round or round_no

    return MeshState(
        round_no=round_no,
        inboxes=new_inboxes,
        solutions=solutions,
        snapshots=snapshots,
        errors=errors,
        published=published,
        fixed_point_round=fixed,
    )


def run_rounds(
    areas: Sequence[ObservationArea],
    world,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    params: optimizer.SolveParams | None = None,
) -> MeshState:
    """Iterate rounds on a frozen world until a fixed point or max_rounds."""
    state = MeshState()
    for _ in range(max_rounds):
        state = run_round(areas, world, state, params)
        if state.fixed_point_round is not None:
            break
    return state
