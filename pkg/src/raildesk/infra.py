"""Static microscopic infrastructure model.

Networks are immutable after ``load_network`` and safe to share across
concurrent readers.  All times are integer seconds since the scenario epoch,
lengths are meters, speeds m/s.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import (
    DanglingReference,
    DuplicateId,
    MalformedDocument,
    NonPositiveLength,
    UnknownNode,
    UnknownSection,
)

# Route enumeration is bounded to simple paths so cyclic topologies terminate.
MAX_ROUTE_SECTIONS = 32


class NodeKind(str, Enum):
    MAIN_SIGNAL = "MainSignal"
    STATION_POINT = "StationPoint"
    JUNCTION = "Junction"
    BOUNDARY = "Boundary"


# Trains can be held at main signals and at area boundaries; velocity-profile
# chains are split at these nodes and at scheduled stop nodes.
HOLDABLE_KINDS = (NodeKind.MAIN_SIGNAL, NodeKind.BOUNDARY)


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    station: str | None = None


@dataclass(frozen=True)
class TrackSection:
    id: str
    from_node: str
    to_node: str
    length: float
    speed_limit: float
    bidirectional: bool = False

    def ends(self) -> tuple[str, str]:
        return (self.from_node, self.to_node)

    def other_end(self, node_id: str) -> str:
        return self.to_node if node_id == self.from_node else self.from_node

    def traversable_from(self, node_id: str) -> bool:
        if node_id == self.from_node:
            return True
        return self.bidirectional and node_id == self.to_node


@dataclass(frozen=True)
class Route:
    id: str
    section_ids: tuple[str, ...]
    entry_signal: str
    exit_signal: str


@dataclass(frozen=True)
class AvailabilityRestriction:
    section_id: str
    window: tuple[int, int]  # [start, end)


@dataclass(frozen=True)
class Station:
    id: str
    name: str
    platform_sections: tuple[str, ...]
    is_customer_stop_capable: bool = True


@dataclass(frozen=True)
class Chain:
    """Maximal run of sections between two consecutive holdable/stop nodes."""

    nodes: tuple[str, ...]  # len(sections) + 1
    sections: tuple[str, ...]
    lengths: tuple[float, ...]
    limits: tuple[float, ...]

    @property
    def entry_node(self) -> str:
        return self.nodes[0]

    @property
    def exit_node(self) -> str:
        return self.nodes[-1]

    @property
    def length(self) -> float:
        return sum(self.lengths)


@dataclass(frozen=True)
class Network:
    nodes: Mapping[str, Node]
    sections: Mapping[str, TrackSection]
    routes: Mapping[str, Route]
    exclusions: frozenset[frozenset[str]]
    restrictions: tuple[AvailabilityRestriction, ...]
    stations: Mapping[str, Station]

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def section(self, section_id: str) -> TrackSection:
        try:
            return self.sections[section_id]
        except KeyError:
            raise UnknownSection(section_id) from None

    def restrictions_for(self, section_id: str) -> list[tuple[int, int]]:
        self.section(section_id)
        return [r.window for r in self.restrictions if r.section_id == section_id]

    def sections_from(self, node_id: str) -> list[TrackSection]:
        """Sections leaving node_id, honoring directionality."""
        return [s for s in self.sections.values() if s.traversable_from(node_id)]

    def excluded(self, route_a: str, route_b: str) -> bool:
        return frozenset((route_a, route_b)) in self.exclusions

    def route_nodes(self, route: Route) -> tuple[str, ...]:
        return _orient_sections(self, route.section_ids, route.entry_signal)

    def to_document(self) -> dict:
        """Serialize back to the scenario schema (round-trip stable)."""
        return {
            "nodes": [
                {"id": n.id, "kind": n.kind.value, "station": n.station}
                for n in self.nodes.values()
            ],
            "sections": [
                {
                    "id": s.id,
                    "from_node": s.from_node,
                    "to_node": s.to_node,
                    "length": s.length,
                    "speed_limit": s.speed_limit,
                    "bidirectional": s.bidirectional,
                }
                for s in self.sections.values()
            ],
            "routes": [
                {
                    "id": r.id,
                    "section_ids": list(r.section_ids),
                    "entry_signal": r.entry_signal,
                    "exit_signal": r.exit_signal,
                }
                for r in self.routes.values()
            ],
            "exclusions": sorted(
                {"route_a": a, "route_b": b}
                for a, b in (sorted(pair) for pair in self.exclusions)
            ),
            "restrictions": [
                {"section_id": r.section_id, "window": list(r.window)}
                for r in self.restrictions
            ],
            "stations": [
                {
                    "id": st.id,
                    "name": st.name,
                    "platform_sections": list(st.platform_sections),
                    "is_customer_stop_capable": st.is_customer_stop_capable,
                }
                for st in self.stations.values()
            ],
        }


def _orient_sections(
    network: Network, section_ids: Sequence[str], entry_node: str
) -> tuple[str, ...]:
    """Node sequence of a section chain starting at entry_node.

    Raises MalformedDocument if the sections do not form a connected chain.
    """
    nodes = [entry_node]
    at = entry_node
    for sid in section_ids:
        sec = network.section(sid)
        if sec.from_node == at:
            at = sec.to_node
        elif sec.to_node == at and sec.bidirectional:
            at = sec.from_node
        elif sec.to_node == at:
            raise MalformedDocument(
                f"section {sid} is one-way and cannot be traversed from {at}"
            )
        else:
            raise MalformedDocument(f"section {sid} does not continue from node {at}")
        nodes.append(at)
    return tuple(nodes)


def load_network(document: Mapping) -> Network:
    """Validate and build a Network from the scenario document (network part)."""
    if not isinstance(document, Mapping):
        raise MalformedDocument("scenario document must be a JSON object")

    nodes: dict[str, Node] = {}
    for raw in document.get("nodes", []):
        try:
            node = Node(
                id=str(raw["id"]),
                kind=NodeKind(raw["kind"]),
                station=raw.get("station"),
            )
        except (KeyError, ValueError) as exc:
            raise MalformedDocument(f"bad node entry {raw!r}: {exc}") from None
        if node.id in nodes:
            raise DuplicateId(f"node {node.id}")
        nodes[node.id] = node

    sections: dict[str, TrackSection] = {}
    for raw in document.get("sections", []):
        try:
            sec = TrackSection(
                id=str(raw["id"]),
                from_node=str(raw["from_node"]),
                to_node=str(raw["to_node"]),
                length=float(raw["length"]),
                speed_limit=float(raw["speed_limit"]),
                bidirectional=bool(raw.get("bidirectional", False)),
            )
        except (KeyError, ValueError) as exc:
            raise MalformedDocument(f"bad section entry {raw!r}: {exc}") from None
        if sec.id in sections:
            raise DuplicateId(f"section {sec.id}")
        if sec.length <= 0:
            raise NonPositiveLength(f"section {sec.id} length {sec.length}")
        if sec.speed_limit <= 0:
            raise NonPositiveLength(f"section {sec.id} speed_limit {sec.speed_limit}")
        if sec.from_node == sec.to_node:
            raise MalformedDocument(f"section {sec.id} loops on {sec.from_node}")
        for end in sec.ends():
            if end not in nodes:
                raise DanglingReference(f"section {sec.id} references node {end}")
        sections[sec.id] = sec

    stations: dict[str, Station] = {}
    for raw in document.get("stations", []):
        st = Station(
            id=str(raw["id"]),
            name=str(raw.get("name", raw["id"])),
            platform_sections=tuple(raw.get("platform_sections", [])),
            is_customer_stop_capable=bool(raw.get("is_customer_stop_capable", True)),
        )
        if st.id in stations:
            raise DuplicateId(f"station {st.id}")
        for sid in st.platform_sections:
            if sid not in sections:
                raise DanglingReference(f"station {st.id} references section {sid}")
        stations[st.id] = st

    routes: dict[str, Route] = {}
    for raw in document.get("routes", []):
        route = Route(
            id=str(raw["id"]),
            section_ids=tuple(raw["section_ids"]),
            entry_signal=str(raw["entry_signal"]),
            exit_signal=str(raw["exit_signal"]),
        )
        if route.id in routes:
            raise DuplicateId(f"route {route.id}")
        for end in (route.entry_signal, route.exit_signal):
            if end not in nodes:
                raise DanglingReference(f"route {route.id} references node {end}")
        for sid in route.section_ids:
            if sid not in sections:
                raise DanglingReference(f"route {route.id} references section {sid}")
        routes[route.id] = route

    exclusions: set[frozenset[str]] = set()
    for raw in document.get("exclusions", []):
        a, b = str(raw["route_a"]), str(raw["route_b"])
        if a == b:
            raise MalformedDocument(f"exclusion of route {a} with itself")
        for rid in (a, b):
            if rid not in routes:
                raise DanglingReference(f"exclusion references route {rid}")
        exclusions.add(frozenset((a, b)))

    restrictions: list[AvailabilityRestriction] = []
    for raw in document.get("restrictions", []):
        window = tuple(int(t) for t in raw["window"])
        if len(window) != 2 or window[0] >= window[1]:
            raise MalformedDocument(f"bad restriction window {raw!r}")
        if raw["section_id"] not in sections:
            raise DanglingReference(f"restriction references section {raw['section_id']}")
        restrictions.append(
            AvailabilityRestriction(section_id=str(raw["section_id"]), window=window)
        )

    network = Network(
        nodes=nodes,
        sections=sections,
        routes=routes,
        exclusions=frozenset(exclusions),
        restrictions=tuple(restrictions),
        stations=stations,
    )

    # Validate route chains and signal endpoints.
    routed_nodes: set[str] = set()
    for route in routes.values():
        seq = network.route_nodes(route)
        if seq[-1] != route.exit_signal:
            raise MalformedDocument(
                f"route {route.id} sections end at {seq[-1]}, not {route.exit_signal}"
            )
        for end in (route.entry_signal, route.exit_signal):
            if nodes[end].kind not in HOLDABLE_KINDS:
                raise MalformedDocument(
                    f"route {route.id} endpoint {end} is not a main signal"
                )
        routed_nodes.update(seq)
    for node in nodes.values():
        if node.kind is NodeKind.MAIN_SIGNAL and routes and node.id not in routed_nodes:
            raise MalformedDocument(f"main signal {node.id} is not on any route")

    return network


def routes_between(network: Network, entry_signal: str, exit_signal: str) -> list[Route]:
    """All simple section paths connecting two signals, as synthetic routes.

    Enumeration is depth-first over the section graph, bounded to
    MAX_ROUTE_SECTIONS sections per path; result is sorted by id.
    """
    for node_id in (entry_signal, exit_signal):
        if network.node(node_id).kind not in HOLDABLE_KINDS:
            raise UnknownNode(f"{node_id} is not a main signal")

    found: list[tuple[str, ...]] = []

    def walk(at: str, used: list[str], visited: set[str]) -> None:
        if at == exit_signal and used:
            found.append(tuple(used))
            return
        if len(used) >= MAX_ROUTE_SECTIONS:
            return
        for sec in sorted(network.sections_from(at), key=lambda s: s.id):
            nxt = sec.other_end(at)
            if nxt in visited:
                continue
            used.append(sec.id)
            visited.add(nxt)
            walk(nxt, used, visited)
            visited.discard(nxt)
            used.pop()

    walk(entry_signal, [], {entry_signal})
    found.sort()
    return [
        Route(
            id=f"{entry_signal}~{exit_signal}~{i}",
            section_ids=path,
            entry_signal=entry_signal,
            exit_signal=exit_signal,
        )
        for i, path in enumerate(found)
    ]


def overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Half-open interval overlap: [a0,a1) vs [b0,b1)."""
    return a[0] < b[1] and b[0] < a[1]


def is_restricted(network: Network, section_id: str, interval: tuple[int, int]) -> bool:
    """True iff any availability restriction overlaps the half-open interval."""
    if interval[0] >= interval[1]:
        return False
    return any(overlaps(w, interval) for w in network.restrictions_for(section_id))


def split_chains(
    network: Network,
    section_ids: Sequence[str],
    entry_node: str,
    extra_split_nodes: Iterable[str] = (),
) -> list[Chain]:
    """Split an oriented section path into signal-to-signal chains.

    Splits at main signals, boundary nodes and any extra nodes (scheduled
    stops).  Interior junctions stay inside a chain: trains cannot be held
    there.
    """
    node_seq = _orient_sections(network, section_ids, entry_node)
    extra = set(extra_split_nodes)
    chains: list[Chain] = []
    start = 0
    for i in range(1, len(node_seq)):
        node = network.node(node_seq[i])
        is_last = i == len(node_seq) - 1
        if is_last or node.kind in HOLDABLE_KINDS or node.id in extra:
            secs = tuple(section_ids[start:i])
            chains.append(
                Chain(
                    nodes=node_seq[start : i + 1],
                    sections=secs,
                    lengths=tuple(network.section(s).length for s in secs),
                    limits=tuple(network.section(s).speed_limit for s in secs),
                )
            )
            start = i
    return chains
