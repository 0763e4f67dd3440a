"""Per-train run decomposition into chains and discrete speed plans.

A *path* is the oriented remaining section sequence of one train over one
route, split into chains at nodes where the train can be held (signals,
boundaries, scheduled stops).  A *plan* assigns one velocity profile per
chain with matching speeds at chain boundaries; a train can only be held at
a boundary whose planned speed is zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from . import vprofile
from .errors import InfeasibleChain, MalformedDocument
from .infra import Chain, Network

if TYPE_CHECKING:  # pragma: no cover
    from .traffic import ScheduledStop, Train, TrainRun


@dataclass(frozen=True)
class TrainPath:
    """Remaining run of one train along one route alternative."""

    train_id: str
    route_id: str
    sections: tuple[str, ...]
    node_seq: tuple[str, ...]
    chains: tuple[Chain, ...]
    boundary_stops: tuple["ScheduledStop | None", ...]  # one per boundary node
    terminal: bool  # run ends at the last node (train comes to rest there)

    @property
    def boundary_nodes(self) -> tuple[str, ...]:
        return tuple(c.entry_node for c in self.chains) + (self.chains[-1].exit_node,)

    def section_index(self) -> dict[str, tuple[int, int]]:
        """section id -> (chain index, index within chain)."""
        out: dict[str, tuple[int, int]] = {}
        for ci, chain in enumerate(self.chains):
            for si, sid in enumerate(chain.sections):
                out[sid] = (ci, si)
        return out


@dataclass(frozen=True)
class Plan:
    """One velocity profile per chain with continuous boundary speeds."""

    boundary_speeds: tuple[float, ...]
    profiles: tuple[tuple[float, float, float], ...]
    chain_times: tuple[int, ...]
    offsets: tuple[tuple[tuple[int, int], ...], ...]  # [chain][section] = (in, out)
    total_time: int

    def signature(self) -> tuple[tuple[float, float, float], ...]:
        return self.profiles


def stop_node_on_path(
    network: Network, node_seq: Sequence[str], sections: Sequence[str], station_id: str
) -> str | None:
    """Node where a train on this path halts for the given station.

    Trains pull through the platform section and stop at its far end, so the
    stop node is the exit node (in travel direction) of the station's
    platform section on the path.
    """
    station = network.stations.get(station_id)
    if station is None:
        return None
    for i, sid in enumerate(sections):
        if sid in station.platform_sections:
            return node_seq[i + 1]
    return None


def build_path(
    network: Network,
    train: "Train",
    run: "TrainRun",
    route_id: str,
    anchor_node: str,
    allowed_sections: frozenset[str] | None = None,
) -> TrainPath | None:
    """Remaining path from anchor_node along the given declared route.

    With allowed_sections given, the path is clipped at the first section
    outside the set (the spatial scope of one observation area).  Returns
    None when the route does not pass the anchor or skips a stop that is
    still ahead of the train.
    """
    route = network.routes.get(route_id)
    if route is None:
        raise MalformedDocument(f"unknown route {route_id}")
    node_seq = network.route_nodes(route)
    if anchor_node not in node_seq:
        return None
    at = node_seq.index(anchor_node)
    sections = list(route.section_ids[at:])
    if allowed_sections is not None:
        kept = 0
        for sid in sections:
            if sid not in allowed_sections:
                break
            kept += 1
        sections = sections[:kept]
    if not sections:
        return None
    suffix_nodes = node_seq[at : at + len(sections) + 1]

    stop_nodes: dict[str, "ScheduledStop"] = {}
    for stop in run.stops:
        node = stop_node_on_path(network, suffix_nodes, sections, stop.station_id)
        if node is None:
            full_node = stop_node_on_path(
                network, node_seq, route.section_ids, stop.station_id
            )
            if full_node is None:
                return None  # route misses a scheduled stop entirely
            continue  # stop behind the anchor or beyond the area clip
        stop_nodes[node] = stop

    chains = split_run_chains(network, sections, anchor_node, stop_nodes)
    boundary_nodes = tuple(c.entry_node for c in chains) + (chains[-1].exit_node,)
    boundary_stops = tuple(stop_nodes.get(n) for n in boundary_nodes)
    terminal = boundary_nodes[-1] == run.exit_signal
    return TrainPath(
        train_id=run.train_id,
        route_id=route_id,
        sections=tuple(sections),
        node_seq=tuple(suffix_nodes),
        chains=tuple(chains),
        boundary_stops=boundary_stops,
        terminal=terminal,
    )


def remaining_sections(network: Network, route_id: str, anchor_node: str) -> tuple[str, ...]:
    """Section suffix of a declared route from the anchor node onward."""
    route = network.routes[route_id]
    node_seq = network.route_nodes(route)
    if anchor_node not in node_seq:
        return ()
    return route.section_ids[node_seq.index(anchor_node):]


def split_run_chains(
    network: Network,
    sections: Sequence[str],
    entry_node: str,
    stop_nodes: dict,
) -> list[Chain]:
    from .infra import split_chains

    return split_chains(network, sections, entry_node, extra_split_nodes=stop_nodes)


def chain_level_sets(
    path: TrainPath,
    train: "Train",
    factors: Sequence[float] = vprofile.DEFAULT_LEVEL_FACTORS,
) -> list[vprofile.SpeedLevelSet]:
    """Level set per chain, enriched with the neighbours' levels.

    Without the enrichment, two adjacent chains with different caps may
    share no positive speed at all and the continuity rule would force a
    stop at every limit change.
    """
    base = [vprofile.level_set(chain, train, factors) for chain in path.chains]
    sets = []
    for i, chain in enumerate(path.chains):
        extra: list[float] = []
        if i > 0:
            extra.extend(base[i - 1].levels)
        if i + 1 < len(base):
            extra.extend(base[i + 1].levels)
        sets.append(vprofile.level_set(chain, train, factors, extra_levels=extra))
    return sets


def enumerate_plans(
    path: TrainPath,
    train: "Train",
    entry_speed: float,
    factors: Sequence[float] = vprofile.DEFAULT_LEVEL_FACTORS,
) -> list[Plan]:
    """All feasible plans, fastest first (ties: higher speeds, then profiles).

    Boundary speed rules: the first boundary is the entry speed clipped to a
    level; scheduled-stop boundaries and terminal ends are 0; interior
    boundaries range over the adjacent chains' common levels.
    """
    sets = chain_level_sets(path, train, factors)
    m = len(path.chains)

    profile_table: list[dict[tuple[float, float], list[tuple]]] = []
    for ci, chain in enumerate(path.chains):
        table: dict[tuple[float, float], list[tuple]] = {}
        for prof in vprofile.enumerate_vprofiles(chain, train, sets[ci]):
            rt = vprofile.running_time(prof, chain, train)
            offs = vprofile.section_offsets(prof, chain, train)
            table.setdefault((prof.entry_speed, prof.exit_speed), []).append(
                (prof.as_triple(), rt, offs)
            )
        profile_table.append(table)

    def boundary_choices(k: int) -> list[float]:
        if k == 0:
            return [sets[0].clip(entry_speed)]
        stop = path.boundary_stops[k]
        if stop is not None:
            return [0.0]
        if k == m:
            return [0.0] if path.terminal else list(sets[m - 1].levels)
        shared = sorted(set(sets[k - 1].levels) & set(sets[k].levels))
        return shared or [0.0]

    plans: list[Plan] = []

    def extend(k: int, speeds: list[float], chosen: list[tuple]) -> None:
        if k == m:
            profiles = tuple(c[0] for c in chosen)
            times = tuple(c[1] for c in chosen)
            offsets = tuple(c[2] for c in chosen)
            plans.append(
                Plan(
                    boundary_speeds=tuple(speeds),
                    profiles=profiles,
                    chain_times=times,
                    offsets=offsets,
                    total_time=sum(times),
                )
            )
            return
        for nxt in boundary_choices(k + 1):
            options = profile_table[k].get((speeds[-1], nxt))
            if not options:
                continue
            for opt in options:
                extend(k + 1, speeds + [nxt], chosen + [opt])

    for start in boundary_choices(0):
        extend(0, [start], [])
    if not plans:
        raise InfeasibleChain(
            f"no speed plan for train {path.train_id} on route {path.route_id}"
        )
    plans.sort(
        key=lambda p: (p.total_time, tuple(-v for v in p.boundary_speeds), p.profiles)
    )
    return plans


def min_travel_vector(path: TrainPath, plans: Sequence[Plan]) -> dict:
    """Per-section minimum traversal seconds and per-boundary minimum process
    time over the given plans; admissible lags for relaxation."""
    sec_min: dict[str, int] = {}
    for ci, chain in enumerate(path.chains):
        for si, sid in enumerate(chain.sections):
            best = min(p.offsets[ci][si][1] - p.offsets[ci][si][0] for p in plans)
            sec_min[sid] = best
    return sec_min
