"""Postprocessing: trace solutions onto the live world, derive dispatcher
recommendations, and run their accept/reject lifecycle.

The registry is event-sourced: every lifecycle change appends one JSONL
record, and replaying a log reproduces the registry exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from . import optimizer, traffic
from .errors import FeedbackAlreadySet, InvalidTransition
from .infra import Network
from .optimizer import Decisions, Solution
from .optimizer.evaluate import rigid_evaluate
from .traffic import Snapshot, Trajectory

DEFAULT_REACTION_MARGIN = 60


class RecommendationKind(str, Enum):
    ORDER_CHANGE = "OrderChange"
    TRACK_CHANGE = "TrackChange"
    LINE_CHANGE = "LineChange"


class RecommendationStatus(str, Enum):
    PENDING = "Pending"
    ACCEPTED_BY_DISPATCHER = "AcceptedByDispatcher"
    FORWARDED_TO_SETTER = "ForwardedToSetter"
    REALIZED_BY_SETTER = "RealizedBySetter"
    REJECTED_BY_DISPATCHER = "RejectedByDispatcher"
    REJECTED_BY_SETTER = "RejectedBySetter"
    EXPIRED = "Expired"


TERMINAL_STATUSES = frozenset(
    {
        RecommendationStatus.REALIZED_BY_SETTER,
        RecommendationStatus.REJECTED_BY_DISPATCHER,
        RecommendationStatus.REJECTED_BY_SETTER,
        RecommendationStatus.EXPIRED,
    }
)


class Thumb(str, Enum):
    UP = "Up"
    DOWN = "Down"


@dataclass(frozen=True)
class Recommendation:
    id: str
    kind: RecommendationKind
    train_ids: tuple[str, ...]
    location: str
    detail: str
    deadline: int
    created_at: int
    area_id: str
    status: RecommendationStatus = RecommendationStatus.PENDING
    feedback: Thumb | None = None
    # payload needed to realize the measure in the world
    decision: dict = field(default_factory=dict)

    def dedup_key(self) -> tuple:
        return (self.kind, frozenset(self.train_ids), self.location)

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "train_ids": list(self.train_ids),
            "location": self.location,
            "detail": self.detail,
            "deadline": self.deadline,
            "created_at": self.created_at,
            "area_id": self.area_id,
            "status": self.status.value,
            "feedback": self.feedback.value if self.feedback else None,
            "decision": self.decision,
        }


# --- tracing ---------------------------------------------------------------


@dataclass(frozen=True)
class TracedDecision:
    kind: RecommendationKind
    train_ids: tuple[str, ...]
    location: str
    detail: str
    decision_section: str
    first_train: str
    realizable: bool
    decision: dict


@dataclass
class TracedPlan:
    area_id: str
    anchored_at: int
    trajectories: dict[str, Trajectory]
    decisions: Decisions
    unrealizable: list[TracedDecision]
    snapshot: Snapshot


def trace(solution: Solution, world, area) -> TracedPlan:
    """Re-anchor a solution on the current world state.

    Keeps the solution's decisions (orders, routes, plans) and recomputes
    event times by forward propagation from current positions.  Decisions
    whose moment has passed are flagged unrealizable and dropped from the
    propagation, never fatal.
    """
    snap = traffic.build_snapshot(world, area.id, area.horizon)
    if solution.decisions is None:
        return TracedPlan(area.id, world.clock, {}, Decisions({}, {}, {}), [], snap)
    model = optimizer.build_model(snap, world.network)

    routes: dict[str, str] = {}
    plan_idx: dict[str, int] = {}
    unrealizable: list[TracedDecision] = []
    for t in model.train_ids():
        entry = model.entries[t]
        wanted = solution.decisions.routes.get(t)
        if wanted is not None and wanted in entry.route_ids:
            routes[t] = wanted
        else:
            routes[t] = entry.route_ids[0]
            if wanted is not None:
                unrealizable.append(
                    TracedDecision(
                        kind=RecommendationKind.LINE_CHANGE,
                        train_ids=(t,),
                        location=wanted,
                        detail=f"{t} can no longer take route {wanted}",
                        decision_section="",
                        first_train=t,
                        realizable=False,
                        decision={},
                    )
                )
        signature = solution.decisions.plans.get(t)
        pi = (
            entry.plan_by_signature(routes[t], tuple(signature))
            if signature is not None
            else None
        )
        plan_idx[t] = pi if pi is not None else 0

    disj = model.disjunctions(routes)
    orders = dict(model.forced_orders(routes))
    for key, first in solution.decisions.orders.items():
        if key not in disj:
            a, b, resource = key
            if not resource.startswith("x:") and a in routes and b in routes:
                second = b if first == a else a
                unrealizable.append(
                    TracedDecision(
                        kind=RecommendationKind.ORDER_CHANGE,
                        train_ids=(a, b),
                        location=resource,
                        detail=f"{second} already passed {resource}",
                        decision_section=resource,
                        first_train=first,
                        realizable=False,
                        decision={},
                    )
                )
            continue
        orders[key] = first
    for key in disj:
        if key not in orders:
            orders[key] = _prognosis_first(model, key)

    rigid = rigid_evaluate(model, routes, plan_idx, orders)
    decisions = Decisions(
        routes=routes,
        plans={
            t: model.entries[t].plans[routes[t]][plan_idx[t]].profiles
            for t in model.train_ids()
        },
        orders=orders,
    )
    return TracedPlan(
        area_id=area.id,
        anchored_at=world.clock,
        trajectories=rigid.trajectories,
        decisions=decisions,
        unrealizable=unrealizable,
        snapshot=snap,
    )


def _prognosis_first(model: optimizer.Model, key) -> str:
    a, b, _res = key
    sa = model.entries[a].state.earliest_entry
    sb = model.entries[b].state.earliest_entry
    return a if (sa, a) <= (sb, b) else b


# --- deriving recommendations ------------------------------------------------


@dataclass(frozen=True)
class Baseline:
    """Prognosis-implied decisions: scheduled orders and set/scheduled routes."""

    routes: Mapping[str, str]
    section_entry: Mapping[str, Mapping[str, int]]  # train -> section -> entry time


def baseline_from_prognosis(snapshot: Snapshot, network: Network) -> Baseline:
    trajs = traffic.prognosis(snapshot, network)
    routes = {}
    entries: dict[str, dict[str, int]] = {}
    for t, traj in trajs.items():
        routes[t] = traj.route_id
        entries[t] = {sid: t_in for sid, t_in, _ in traj.occupations}
    return Baseline(routes=routes, section_entry=entries)


def _station_of(network: Network, section_id: str) -> str | None:
    for st in network.stations.values():
        if section_id in st.platform_sections:
            return st.id
    return None


def _node_station(network: Network, node_id: str) -> str | None:
    node = network.nodes.get(node_id)
    return node.station if node else None


def derive_recommendations(
    traced: TracedPlan,
    baseline: Baseline,
    network: Network,
    now: int,
    reaction_margin: int = DEFAULT_REACTION_MARGIN,
    pending: Iterable[Recommendation] = (),
) -> list[Recommendation]:
    """One recommendation per traced decision that differs from the baseline.

    The deadline is the planned occupation start of the decision section by
    the first involved train, minus a reaction margin; candidates already
    past their deadline or duplicating a pending recommendation are dropped.
    """
    out: list[Recommendation] = []
    seen = {rec.dedup_key() for rec in pending}

    # Route differences: platform swap inside one station is a track change,
    # anything else a line change.
    for t in sorted(traced.decisions.routes):
        chosen = traced.decisions.routes[t]
        base = baseline.routes.get(t)
        if base is None or chosen == base:
            continue
        chosen_secs = list(network.routes[chosen].section_ids)
        base_secs = list(network.routes[base].section_ids)
        diff_chosen = [s for s in chosen_secs if s not in base_secs]
        diff_base = [s for s in base_secs if s not in chosen_secs]
        stations = {_station_of(network, s) for s in diff_chosen + diff_base}
        traj = traced.trajectories.get(t)
        first_diff = diff_chosen[0] if diff_chosen else chosen_secs[0]
        occ_start = None
        if traj is not None:
            occ_start = next(
                (t_in for sid, t_in, _ in traj.occupations if sid == first_diff), None
            )
        if occ_start is None:
            continue
        if None not in stations and len(stations) == 1:
            station = stations.pop()
            kind = RecommendationKind.TRACK_CHANGE
            location = station
            detail = (
                f"{t} via track {diff_chosen[0]} instead of {diff_base[0]} "
                f"at {station}"
            )
        else:
            kind = RecommendationKind.LINE_CHANGE
            location = first_diff
            detail = f"{t} via {chosen} instead of {base}"
        rec = _candidate(
            kind, (t,), location, detail, occ_start - reaction_margin, now,
            traced.area_id,
            decision={"type": "route", "train_id": t, "route_id": chosen},
        )
        if rec and rec.dedup_key() not in seen:
            seen.add(rec.dedup_key())
            out.append(rec)

    # Order differences against the prognosis entry order.  Consecutive
    # shared sections carry one implied decision, so keep only the earliest
    # swap per train pair.
    swaps: dict[tuple[str, str], tuple[int, str, str]] = {}
    for key in sorted(traced.decisions.orders):
        a, b, resource = key
        if resource.startswith("x:"):
            continue
        first = traced.decisions.orders[key]
        base_a = baseline.section_entry.get(a, {}).get(resource)
        base_b = baseline.section_entry.get(b, {}).get(resource)
        if base_a is None or base_b is None:
            continue
        baseline_first = a if (base_a, a) <= (base_b, b) else b
        if first == baseline_first:
            continue
        traj = traced.trajectories.get(first)
        occ_start = None
        if traj is not None:
            occ_start = next(
                (t_in for sid, t_in, _ in traj.occupations if sid == resource), None
            )
        if occ_start is None:
            continue
        pair = (a, b)
        if pair not in swaps or occ_start < swaps[pair][0]:
            swaps[pair] = (occ_start, resource, first)

    for (a, b), (occ_start, resource, first) in sorted(swaps.items()):
        second = b if first == a else a
        station = (
            _node_station(network, network.section(resource).from_node)
            or _station_of(network, resource)
            or _node_station(network, network.section(resource).to_node)
        )
        location = station or resource
        detail = f"{second} overtaken by {first} at {location}"
        rec = _candidate(
            RecommendationKind.ORDER_CHANGE,
            tuple(sorted((a, b))),
            location,
            detail,
            occ_start - reaction_margin,
            now,
            traced.area_id,
            decision={
                "type": "hold",
                "held_train": second,
                "until_train": first,
                "section_id": resource,
            },
        )
        if rec and rec.dedup_key() not in seen:
            seen.add(rec.dedup_key())
            out.append(rec)
    return out


def _candidate(kind, train_ids, location, detail, deadline, now, area_id, decision):
    if deadline <= now:
        return None  # never create a recommendation already past its deadline
    return Recommendation(
        id="",
        kind=kind,
        train_ids=tuple(train_ids),
        location=location,
        detail=detail,
        deadline=deadline,
        created_at=now,
        area_id=area_id,
        decision=decision,
    )


# --- lifecycle ----------------------------------------------------------------

_TRANSITIONS: dict[tuple[RecommendationStatus, str], RecommendationStatus] = {
    (RecommendationStatus.PENDING, "dispatcher_accept"):
        RecommendationStatus.ACCEPTED_BY_DISPATCHER,
    (RecommendationStatus.PENDING, "dispatcher_reject"):
        RecommendationStatus.REJECTED_BY_DISPATCHER,
    (RecommendationStatus.FORWARDED_TO_SETTER, "setter_accept"):
        RecommendationStatus.REALIZED_BY_SETTER,
    (RecommendationStatus.FORWARDED_TO_SETTER, "setter_reject"):
        RecommendationStatus.REJECTED_BY_SETTER,
}

ACTIONS = ("dispatcher_accept", "dispatcher_reject", "setter_accept", "setter_reject")


def transition(rec: Recommendation, action: str, now: int | None = None) -> Recommendation:
    """Apply one lifecycle action; dispatcher acceptance auto-forwards.

    Raises InvalidTransition for anything the state machine does not allow,
    including actions on expired recommendations.
    """
    if now is not None and rec.status not in TERMINAL_STATUSES and now > rec.deadline:
        raise InvalidTransition(f"{rec.id} expired at {rec.deadline}")
    nxt = _TRANSITIONS.get((rec.status, action))
    if nxt is None:
        raise InvalidTransition(f"{action} not allowed from {rec.status.value}")
    rec = replace(rec, status=nxt)
    if nxt is RecommendationStatus.ACCEPTED_BY_DISPATCHER:
        rec = replace(rec, status=RecommendationStatus.FORWARDED_TO_SETTER)
    return rec


def record_feedback(rec: Recommendation, thumb: Thumb) -> Recommendation:
    """Store anonymous feedback, once."""
    if rec.feedback is not None:
        raise FeedbackAlreadySet(rec.id)
    return replace(rec, feedback=thumb)


class RecommendationRegistry:
    """Single-writer store with an append-only JSONL event log."""

    def __init__(self, log_path=None) -> None:
        self._recs: dict[str, Recommendation] = {}
        self._counter = 0
        self._log: list[dict] = []
        self._log_path = log_path
        if log_path is not None:
            try:
                with open(log_path, "r", encoding="utf-8") as fh:
                    lines = [json.loads(line) for line in fh if line.strip()]
                self.replay(lines)
            except FileNotFoundError:
                pass

    # -- event plumbing --

    def _append(self, ts: int, rec_id: str, event: str, payload: dict) -> None:
        record = {"ts": ts, "rec_id": rec_id, "event": event, "payload": payload}
        self._log.append(record)
        if self._log_path is not None:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    @property
    def log(self) -> list[dict]:
        return list(self._log)

    # -- queries --

    def get(self, rec_id: str) -> Recommendation | None:
        return self._recs.get(rec_id)

    def all(self) -> list[Recommendation]:
        return [self._recs[k] for k in sorted(self._recs)]

    def by_status(self, status: RecommendationStatus | None = None, area_id=None):
        out = self.all()
        if status is not None:
            out = [r for r in out if r.status is status]
        if area_id is not None:
            out = [r for r in out if r.area_id == area_id]
        return out

    def pending(self, area_id=None) -> list[Recommendation]:
        return self.by_status(RecommendationStatus.PENDING, area_id)

    def fingerprint(self) -> str:
        return json.dumps([r.to_wire() for r in self.all()], sort_keys=True)

    # -- mutations --

    def add(self, rec: Recommendation, now: int) -> Recommendation | None:
        """Register a new recommendation unless an identical one is pending."""
        for existing in self._recs.values():
            if (
                existing.status is RecommendationStatus.PENDING
                and existing.dedup_key() == rec.dedup_key()
            ):
                return None
        self._counter += 1
        rec = replace(rec, id=f"rec-{self._counter:04d}")
        self._recs[rec.id] = rec
        self._append(now, rec.id, "created", rec.to_wire())
        return rec

    def apply(self, rec_id: str, action: str, now: int) -> Recommendation:
        rec = self._recs.get(rec_id)
        if rec is None:
            raise KeyError(rec_id)
        self.expire_due(now)
        rec = self._recs[rec_id]
        updated = transition(rec, action, now)
        self._recs[rec_id] = updated
        event = {
            RecommendationStatus.FORWARDED_TO_SETTER: "forwarded",
            RecommendationStatus.REALIZED_BY_SETTER: "realized",
            RecommendationStatus.REJECTED_BY_DISPATCHER: "rejected",
            RecommendationStatus.REJECTED_BY_SETTER: "rejected",
        }[updated.status]
        if event == "forwarded":
            self._append(now, rec_id, "accepted", {"by": "dispatcher"})
        self._append(now, rec_id, event, {"action": action})
        return updated

    def feedback(self, rec_id: str, thumb: Thumb, now: int) -> Recommendation:
        rec = self._recs.get(rec_id)
        if rec is None:
            raise KeyError(rec_id)
        updated = record_feedback(rec, thumb)
        self._recs[rec_id] = updated
        self._append(now, rec_id, "feedback", {"thumb": thumb.value})
        return updated

    def expire_due(self, now: int) -> list[Recommendation]:
        """Expire every non-terminal recommendation past its deadline."""
        out = []
        for rec_id in sorted(self._recs):
            rec = self._recs[rec_id]
            if rec.status not in TERMINAL_STATUSES and now > rec.deadline:
                updated = replace(rec, status=RecommendationStatus.EXPIRED)
                self._recs[rec_id] = updated
                self._append(now, rec_id, "expired", {})
                out.append(updated)
        return out

    # -- replay --

    def replay(self, records: Sequence[Mapping]) -> None:
        """Rebuild registry state from an event log (idempotent, ordered)."""
        for record in records:
            rec_id = record["rec_id"]
            event = record["event"]
            payload = record.get("payload", {})
            if event == "created":
                wire = dict(payload)
                rec = Recommendation(
                    id=wire["id"],
                    kind=RecommendationKind(wire["kind"]),
                    train_ids=tuple(wire["train_ids"]),
                    location=wire["location"],
                    detail=wire["detail"],
                    deadline=int(wire["deadline"]),
                    created_at=int(wire["created_at"]),
                    area_id=wire.get("area_id", ""),
                    status=RecommendationStatus(wire.get("status", "Pending")),
                    decision=wire.get("decision", {}),
                )
                self._recs[rec.id] = rec
                self._counter = max(self._counter, int(rec.id.split("-")[-1]))
            elif event == "accepted":
                pass  # paired with the forwarded record that carries the state
            elif event == "forwarded":
                self._recs[rec_id] = replace(
                    self._recs[rec_id], status=RecommendationStatus.FORWARDED_TO_SETTER
                )
            elif event == "realized":
                self._recs[rec_id] = replace(
                    self._recs[rec_id], status=RecommendationStatus.REALIZED_BY_SETTER
                )
            elif event == "rejected":
                action = payload.get("action", "dispatcher_reject")
                status = (
                    RecommendationStatus.REJECTED_BY_SETTER
                    if action == "setter_reject"
                    else RecommendationStatus.REJECTED_BY_DISPATCHER
                )
                self._recs[rec_id] = replace(self._recs[rec_id], status=status)
            elif event == "expired":
                self._recs[rec_id] = replace(
                    self._recs[rec_id], status=RecommendationStatus.EXPIRED
                )
            elif event == "feedback":
                self._recs[rec_id] = replace(
                    self._recs[rec_id], feedback=Thumb(payload["thumb"])
                )
            self._log.append(dict(record))
