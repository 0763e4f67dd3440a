"""Event-graph model built from a snapshot.

Decision space per train: route alternative, one speed plan per route
(velocity profile per chain), and an order for every pair of trains sharing
a section (or running on mutually exclusive routes).  Event times follow
from decisions by forward propagation, so the solver searches combinatorial
decisions only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .. import planning
from ..conflicts import DEFAULT_RELEASE_MARGIN
from ..errors import InfeasibleChain, InfeasibleInput
from ..infra import Network
from ..traffic import EventKind, Snapshot, Train, TrainState

DEFAULT_HEADWAY = 60

# Disjunction key: (train_a, train_b, resource) with a < b; the resource is a
# section id, or "x:<route_a>|<route_b>" for a route-exclusion span.
DisjKey = tuple[str, str, str]


class SolveStatus(str, Enum):
    OPTIMAL_WITHIN_GAP = "OptimalWithinGap"
    GAP_NOT_REACHED = "GapNotReached"
    INFEASIBLE = "Infeasible"
    TIMED_OUT_NO_INCUMBENT = "TimedOutNoIncumbent"


@dataclass(frozen=True)
class SolveParams:
    time_limit: float = 60.0
    gap_target: float = 0.10
    node_limit: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.gap_target < 1.0):
            raise ValueError("gap_target must be in (0, 1)")


@dataclass(frozen=True)
class Event:
    train_id: str
    node_id: str
    kind: EventKind
    scheduled: int | None
    decided: int


@dataclass(frozen=True)
class Decisions:
    routes: Mapping[str, str]
    plans: Mapping[str, tuple]  # train -> plan signature (profiles tuple)
    orders: Mapping[DisjKey, str]  # disjunction -> first train


@dataclass(frozen=True)
class Disjunction:
    key: DisjKey
    kind: str  # "section" or "span"
    section: str | None = None
    span_routes: tuple[str, str] | None = None  # (route of a, route of b)


@dataclass
class TrainEntry:
    """Model-side view of one train: its alternatives and anchored state."""

    train: Train
    state: TrainState
    route_ids: list[str]
    paths: dict[str, planning.TrainPath]
    plans: dict[str, list[planning.Plan]]
    sec_index: dict[str, dict[str, tuple[int, int]]]

    def plan_by_signature(self, route_id: str, signature: tuple) -> int | None:
        for i, plan in enumerate(self.plans[route_id]):
            if plan.profiles == signature:
                return i
        return None


@dataclass
class Model:
    snapshot: Snapshot
    network: Network
    entries: dict[str, TrainEntry]
    headway: int = DEFAULT_HEADWAY
    release: int = DEFAULT_RELEASE_MARGIN
    level_factors: tuple = planning.vprofile.DEFAULT_LEVEL_FACTORS
    entry_groups: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    _disj_cache: dict = field(default_factory=dict, repr=False)

    @property
    def separation(self) -> int:
        """Lag between the leader's section exit and the follower's entry."""
        return self.headway + self.release

    def train_ids(self) -> list[str]:
        return sorted(self.entries)

    def disjunctions(self, routes: Mapping[str, str]) -> dict[DisjKey, Disjunction]:
        """All pair decisions required by the given route assignment."""
        cache_key = tuple(sorted(routes.items()))
        hit = self._disj_cache.get(cache_key)
        if hit is not None:
            return hit
        out: dict[DisjKey, Disjunction] = {}
        ids = self.train_ids()
        for i, a in enumerate(ids):
            path_a = self.entries[a].paths[routes[a]]
            secs_a = set(path_a.sections)
            for b in ids[i + 1 :]:
                path_b = self.entries[b].paths[routes[b]]
                for sid in path_b.sections:
                    if sid in secs_a:
                        key = (a, b, sid)
                        out[key] = Disjunction(key=key, kind="section", section=sid)
                ra, rb = routes[a], routes[b]
                if ra != rb and self.network.excluded(ra, rb):
                    key = (a, b, f"x:{ra}|{rb}")
                    out[key] = Disjunction(key=key, kind="span", span_routes=(ra, rb))
        self._disj_cache[cache_key] = out
        return out

    def order_classes(self, routes: Mapping[str, str]) -> dict[DisjKey, DisjKey]:
        """Equivalence classes of section orders implied by path adjacency.

        When two trains traverse sections s and s' consecutively (in either
        direction) there is nowhere to swap between them: whoever is first
        on s is first on s'.  Each disjunction key maps to its class
        representative.
        """
        cache_key = ("classes", tuple(sorted(routes.items())))
        hit = self._disj_cache.get(cache_key)
        if hit is not None:
            return hit
        disj = self.disjunctions(routes)
        parent: dict[DisjKey, DisjKey] = {k: k for k in disj}

        def find(k: DisjKey) -> DisjKey:
            while parent[k] != k:
                parent[k] = parent[parent[k]]
                k = parent[k]
            return k

        def union(k1: DisjKey, k2: DisjKey) -> None:
            r1, r2 = find(k1), find(k2)
            if r1 != r2:
                if r2 < r1:
                    r1, r2 = r2, r1
                parent[r2] = r1

        ids = self.train_ids()
        for i, a in enumerate(ids):
            sa = self.entries[a].paths[routes[a]].sections
            adj_a = list(zip(sa, sa[1:]))
            for b in ids[i + 1 :]:
                sb = self.entries[b].paths[routes[b]].sections
                adj_b = {frozenset(p) for p in zip(sb, sb[1:])}
                for x, y in adj_a:
                    if frozenset((x, y)) in adj_b:
                        k1, k2 = (a, b, x), (a, b, y)
                        if k1 in disj and k2 in disj:
                            union(k1, k2)
        out = {k: find(k) for k in disj}
        self._disj_cache[cache_key] = out
        return out

    def propagate_orders(
        self, routes: Mapping[str, str], orders: Mapping[DisjKey, str]
    ) -> dict[DisjKey, str] | None:
        """Close orders over their implication classes; None on contradiction."""
        classes = self.order_classes(routes)
        decided: dict[DisjKey, str] = {}
        for key, first in orders.items():
            root = classes.get(key)
            if root is None:
                decided[key] = first
                continue
            existing = decided.get(root)
            if existing is not None and existing != first:
                return None
            decided[root] = first
        out = dict(orders)
        for key, root in classes.items():
            if root in decided:
                if key in out and out[key] != decided[root]:
                    return None
                out[key] = decided[root]
        return out

    def forced_orders(self, routes: Mapping[str, str]) -> dict[DisjKey, str]:
        """Pre-resolved orders for trains entering via the same node.

        Trains approaching an area on the same line cannot be reordered
        before the boundary, so their entry order is fixed: by handoff order
        when one was received, by predicted entry order otherwise.  The
        result is closed over the adjacency implication classes.
        """
        disj = self.disjunctions(routes)
        out: dict[DisjKey, str] = {}
        for _node, seq in self.entry_groups:
            for i, u in enumerate(seq):
                for v in seq[i + 1 :]:
                    if u not in routes or v not in routes:
                        continue
                    path_u = self.entries[u].paths[routes[u]]
                    secs_v = set(self.entries[v].paths[routes[v]].sections)
                    first_shared = next(
                        (s for s in path_u.sections if s in secs_v), None
                    )
                    if first_shared is None:
                        continue
                    key = (min(u, v), max(u, v), first_shared)
                    if key in disj:
                        out[key] = u
        closed = self.propagate_orders(routes, out)
        return closed if closed is not None else out


def route_alternatives(
    network: Network, state: TrainState, clip: frozenset[str] | None = None
) -> list[tuple[str, planning.TrainPath]]:
    """Usable route alternatives for a train, scheduled/set route first.

    A set route pins the choice; otherwise every declared route with the
    run's endpoints that passes the anchor and serves the remaining stops is
    an alternative.
    """
    run = state.run
    if state.set_route_id is not None:
        candidates = [state.set_route_id]
    else:
        others = sorted(
            r.id
            for r in network.routes.values()
            if r.entry_signal == run.entry_signal
            and r.exit_signal == run.exit_signal
            and r.id != run.scheduled_route_id
        )
        candidates = [run.scheduled_route_id, *others]
    out = []
    for rid in candidates:
        path = planning.build_path(
            network, state.train, run, rid, state.anchor_node, clip
        )
        if path is not None:
            out.append((rid, path))
    return out


def build_model(
    snapshot: Snapshot,
    network: Network,
    level_factors: Sequence[float] = planning.vprofile.DEFAULT_LEVEL_FACTORS,
    headway: int = DEFAULT_HEADWAY,
    release: int = DEFAULT_RELEASE_MARGIN,
) -> Model:
    """Assemble the decision model for one snapshot.

    Raises InfeasibleInput when a train has no route or plan alternative.
    """
    entries: dict[str, TrainEntry] = {}
    for state in snapshot.train_states:
        alts = route_alternatives(network, state, snapshot.clip)
        paths: dict[str, planning.TrainPath] = {}
        plans: dict[str, list[planning.Plan]] = {}
        sec_index: dict[str, dict[str, tuple[int, int]]] = {}
        for rid, path in alts:
            try:
                route_plans = planning.enumerate_plans(
                    path, state.train, state.entry_speed, level_factors
                )
            except InfeasibleChain:
                continue
            paths[rid] = path
            plans[rid] = route_plans
            sec_index[rid] = path.section_index()
        if not paths:
            raise InfeasibleInput(
                f"train {state.train_id} has no usable route/plan alternative"
            )
        entries[state.train_id] = TrainEntry(
            train=state.train,
            state=state,
            route_ids=list(paths),
            paths=paths,
            plans=plans,
            sec_index=sec_index,
        )

    # Entry order groups: handoff sequences take precedence over predicted
    # entry order; both pin the order of trains feeding in via one node.
    seq_by_node: dict[str, list[str]] = {}
    handoff_seq: dict[str, tuple[str, ...]] = {}
    for handoff in snapshot.boundary_constraints:
        if handoff.boundary_order_seq:
            handoff_seq[handoff.entry_node] = handoff.boundary_order_seq
    groups: dict[str, list[TrainState]] = {}
    for state in snapshot.train_states:
        if state.train_id in entries:
            groups.setdefault(state.anchor_node, []).append(state)
    entry_groups: list[tuple[str, tuple[str, ...]]] = []
    for node in sorted(groups):
        members = groups[node]
        if len(members) < 2:
            continue
        by_prediction = sorted(members, key=lambda s: (s.earliest_entry, s.train_id))
        ordered = [s.train_id for s in by_prediction]
        if node in handoff_seq:
            ranked = {t: i for i, t in enumerate(handoff_seq[node])}
            base = {t: i for i, t in enumerate(ordered)}
            ordered.sort(key=lambda t: (ranked.get(t, len(ranked)), base[t]))
        entry_groups.append((node, tuple(ordered)))

    return Model(
        snapshot=snapshot,
        network=network,
        entries=entries,
        headway=headway,
        release=release,
        level_factors=tuple(level_factors),
        entry_groups=entry_groups,
    )


def objective_value(trajectories: Mapping[str, "object"], snapshot: Snapshot) -> int:
    """Priority-weighted delay over customer-stop events.

    A through stop contributes its departure delay; the final stop of a
    terminating run has no departure and contributes its arrival delay.
    """
    weights = {st.train_id: st.train.priority_weight for st in snapshot.train_states}
    total = 0.0
    for train_id, traj in sorted(trajectories.items()):
        w = weights.get(train_id, 1.0)
        for st in traj.stop_times:
            if not st.is_customer_stop:
                continue
            delay = st.arrival_delay if st.departure is None else st.departure_delay
            total += w * delay
    return int(round(total))
