"""Warm-start machinery: solution carryover and recorded-history suggestions.

Hints are advisory: they seed the incumbent and steer branching order but
never remove feasible solutions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .. import planning
from ..conflicts import ConflictKind, detect_conflicts
from ..infra import Network
from ..traffic import EventKind, Snapshot, prognosis
from .model import Decisions
from .solver import EMPTY_HINTS, HintSet, Solution

# A train is "close to its previous plan" when its predicted entry moved by
# less than this many seconds.
DEFAULT_DEVIATION_THRESHOLD = 120
DEFAULT_NEIGHBORS = 5


@dataclass(frozen=True)
class HistoryRecord:
    """One recorded situation: feature vector and the profile plan chosen."""

    category: str
    features: tuple[int, ...]
    plan_signature: tuple


def _section_still_ahead(network: Network, snapshot: Snapshot, train_id: str, section_id: str) -> bool:
    try:
        state = snapshot.state_of(train_id)
    except KeyError:
        return False
    route_id = state.set_route_id or state.run.scheduled_route_id
    path = planning.build_path(network, state.train, state.run, route_id, state.anchor_node)
    return path is not None and section_id in path.sections


def make_hints(
    previous: Solution | None,
    snapshot: Snapshot,
    network: Network,
    deviation_threshold: int = DEFAULT_DEVIATION_THRESHOLD,
) -> HintSet:
    """Carry over still-valid parts of the previous solution.

    Orders survive while both trains are present and the held train has not
    passed the decision section; profiles survive for trains whose predicted
    entry barely moved; stale entries are dropped.
    """
    if previous is None or previous.decisions is None:
        return EMPTY_HINTS
    current = {st.train_id for st in snapshot.train_states}

    fixed_orders = {}
    for key, first in previous.decisions.orders.items():
        a, b, resource = key
        if a not in current or b not in current:
            continue
        second = b if first == a else a
        if resource.startswith("x:"):
            fixed_orders[key] = first
        elif _section_still_ahead(network, snapshot, second, resource):
            fixed_orders[key] = first

    prev_entry: dict[str, int] = dict(previous.snapshot_entries or {})
    for ev in previous.events:
        if ev.kind is EventKind.AREA_ENTRY and ev.train_id not in prev_entry:
            prev_entry[ev.train_id] = ev.decided

    suggested = {}
    for t, signature in previous.decisions.plans.items():
        if t not in current or t not in prev_entry:
            continue
        state = snapshot.state_of(t)
        if abs(state.earliest_entry - prev_entry[t]) < deviation_threshold:
            suggested[t] = signature

    warm = None
    prev_trains = set(previous.decisions.routes)
    if prev_trains == current:
        warm = previous.decisions
    elif prev_trains & current:
        warm = Decisions(
            routes={t: r for t, r in previous.decisions.routes.items() if t in current},
            plans={t: p for t, p in previous.decisions.plans.items() if t in current},
            orders=fixed_orders,
        )
    return HintSet(
        fixed_orders=fixed_orders, suggested_profiles=suggested, warm_incumbent=warm
    )


def situation_features(
    snapshot: Snapshot, network: Network
) -> dict[str, HistoryRecord]:
    """Feature vector per train: entry delay, conflicts on path, headway.

    The plan_signature field is left empty; callers fill it in when
    recording a solved situation.
    """
    trajs = prognosis(snapshot, network)
    found = detect_conflicts(trajs, network, schedule=False)
    conflict_count: dict[str, int] = {}
    for c in found:
        if c.kind in (ConflictKind.TRACK_OCCUPANCY, ConflictKind.CLOSED_TRACK):
            for t in c.train_ids:
                conflict_count[t] = conflict_count.get(t, 0) + 1

    by_node: dict[str, list] = {}
    for st in snapshot.train_states:
        by_node.setdefault(st.anchor_node, []).append(st)

    out: dict[str, HistoryRecord] = {}
    for st in snapshot.train_states:
        traj = trajs[st.train_id]
        delay = traj.stop_times[0].arrival_delay if traj.stop_times else 0
        peers = sorted(by_node[st.anchor_node], key=lambda s: (s.earliest_entry, s.train_id))
        headway = 9999
        for i, peer in enumerate(peers):
            if peer.train_id == st.train_id and i > 0:
                headway = st.earliest_entry - peers[i - 1].earliest_entry
        out[st.train_id] = HistoryRecord(
            category=st.train.category.value,
            features=(
                min(delay // 60, 10),
                conflict_count.get(st.train_id, 0),
                min(headway // 60, 30),
            ),
            plan_signature=(),
        )
    return out


def predict_profiles(
    snapshot: Snapshot,
    history: Sequence[HistoryRecord],
    network: Network,
    k: int = DEFAULT_NEIGHBORS,
) -> dict[str, tuple]:
    """Majority profile plan of the k most similar recorded situations."""
    if not history:
        return {}
    features = situation_features(snapshot, network)
    out: dict[str, tuple] = {}
    for train_id in sorted(features):
        probe = features[train_id]

        def dist(rec: HistoryRecord) -> int:
            d = 0 if rec.category == probe.category else 8
            d += sum(abs(x - y) for x, y in zip(rec.features, probe.features))
            return d

        ranked = sorted(
            range(len(history)), key=lambda i: (dist(history[i]), i)
        )[: max(1, k)]
        votes: dict[tuple, int] = {}
        for i in ranked:
            votes[history[i].plan_signature] = votes.get(history[i].plan_signature, 0) + 1
        best = sorted(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
        if best:
            out[train_id] = best
    return out
