"""Best-first branch-and-bound over (path, profile, order) decisions.

Branching order: routes first (one train per level), then the most-violated
unresolved disjunction (pair with the smallest temporal slack, ties by train
ids), then plan fixing (best remaining versus the rest).  Every node carries
an admissible relaxed bound; greedy dives produce incumbents early.  Hints
steer branching and seed the incumbent but never restrict the search space.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Mapping

from ..errors import CycleDetected
from ..traffic import Trajectory
from . import evaluate
from .model import (
    Decisions,
    DisjKey,
    Event,
    Model,
    SolveParams,
    SolveStatus,
)

_BIG = 10**12


@dataclass(frozen=True)
class Solution:
    area_id: str
    taken_at: int
    status: SolveStatus
    objective: int | None
    lower_bound: int
    gap: float
    decisions: Decisions | None
    events: tuple[Event, ...]
    trajectories: dict[str, Trajectory]
    node_count: int
    first_incumbent_node: int | None
    wall_ms: int
    # predicted entry bound per train as seen by the solved snapshot; used
    # to judge how far the situation has drifted since
    snapshot_entries: dict[str, int] = None

    def summary(self) -> str:
        obj = "-" if self.objective is None else str(self.objective)
        return (
            f"objective={obj} gap={self.gap:.3f} status={self.status.value} "
            f"bound={self.lower_bound} nodes={self.node_count}"
        )


@dataclass(frozen=True)
class HintSet:
    """Advisory warm-start data; never constrains the feasible set."""

    fixed_orders: Mapping[DisjKey, str] = field(default_factory=dict)
    suggested_profiles: Mapping[str, tuple] = field(default_factory=dict)
    warm_incumbent: Decisions | None = None


EMPTY_HINTS = HintSet()


@dataclass
class _Node:
    routes: dict[str, str]
    plan_fixed: dict[str, int]
    plan_excluded: dict[str, frozenset[int]]
    orders: dict[DisjKey, str]
    bound: int = 0
    relax: evaluate.RelaxResult | None = None
    depth: int = 0


class _Search:
    def __init__(self, model: Model, hints: HintSet, params: SolveParams) -> None:
        self.model = model
        self.hints = hints
        self.params = params
        self.ids = model.train_ids()
        self.counter = itertools.count()
        self.node_count = 0
        self.best: evaluate.RigidResult | None = None
        self.best_decisions: Decisions | None = None
        self.first_incumbent_node: int | None = None

    # -- plan bookkeeping -------------------------------------------------

    def table(self, node: _Node, t: str, route_id: str) -> evaluate.PlanTable:
        return evaluate.plan_table(
            self.model,
            t,
            route_id,
            node.plan_fixed.get(t),
            node.plan_excluded.get(t, frozenset()),
        )

    def remaining_indices(self, node: _Node, t: str, route_id: str) -> tuple[int, ...]:
        return self.table(node, t, route_id).plan_indices

    def preferred_plan_order(self, node: _Node, t: str, route_id: str) -> list[int]:
        """Remaining plan indices, suggested signature first, fastest next."""
        idx = list(self.remaining_indices(node, t, route_id))
        suggestion = self.hints.suggested_profiles.get(t)
        if suggestion is not None:
            entry = self.model.entries[t]
            si = entry.plan_by_signature(route_id, tuple(suggestion))
            if si is not None and si in idx:
                return [si] + [i for i in idx if i != si]
        return idx

    # -- bounding ----------------------------------------------------------

    def evaluate_node(self, node: _Node) -> bool:
        """Compute the node bound; False when the node is infeasible."""
        try:
            if len(node.routes) < len(self.ids):
                total = 0
                for t in self.ids:
                    entry = self.model.entries[t]
                    candidates = (
                        [node.routes[t]] if t in node.routes else entry.route_ids
                    )
                    total += min(
                        evaluate.solo_bound(
                            self.model, t, rid, self.table(node, t, rid)
                        )
                        for rid in candidates
                    )
                node.bound = total
                node.relax = None
            else:
                tables = {t: self.table(node, t, node.routes[t]) for t in self.ids}
                relax = evaluate.relax_evaluate(
                    self.model, node.routes, tables, node.orders
                )
                node.bound = relax.bound
                node.relax = relax
        except CycleDetected:
            return False
        return True

    # -- incumbents ---------------------------------------------------------

    def try_incumbent(self, decisions: Decisions) -> evaluate.RigidResult | None:
        try:
            plan_idx = {}
            for t in self.ids:
                entry = self.model.entries[t]
                rid = decisions.routes[t]
                pi = entry.plan_by_signature(rid, tuple(decisions.plans[t]))
                if pi is None:
                    return None
                plan_idx[t] = pi
            disj = self.model.disjunctions(decisions.routes)
            if set(disj) - set(decisions.orders):
                return None
            rigid = evaluate.rigid_evaluate(
                self.model, decisions.routes, plan_idx, decisions.orders
            )
        except (KeyError, CycleDetected):
            return None
        if not rigid.consistent:
            return None
        self.record_incumbent(rigid, decisions)
        return rigid

    def record_incumbent(self, rigid: evaluate.RigidResult, decisions: Decisions) -> None:
        if self.best is None or rigid.objective < self.best.objective:
            self.best = rigid
            self.best_decisions = decisions
            if self.first_incumbent_node is None:
                self.first_incumbent_node = self.node_count

    def best_objective(self) -> int:
        return self.best.objective if self.best is not None else _BIG

    # -- dive ----------------------------------------------------------------

    def dive(self, node: _Node) -> int | None:
        """Greedy completion of a node; returns the incumbent objective.

        Three escalation stages: relaxed per-section ordering, a global
        priority ordering (always acyclic), and finally all-stop plans under
        the priority ordering.  Later stages may leave the node's subtree;
        their incumbents are still globally feasible, and the subtree
        short-circuit only compares objective against the node bound.
        """
        model = self.model
        routes = dict(node.routes)
        for t in self.ids:
            if t not in routes:
                entry = model.entries[t]
                routes[t] = min(
                    entry.route_ids,
                    key=lambda rid: (
                        evaluate.solo_bound(model, t, rid, self.table(node, t, rid)),
                        entry.route_ids.index(rid),
                    ),
                )

        disj = model.disjunctions(routes)
        base_orders = dict(model.forced_orders(routes))
        base_orders.update(node.orders)
        open_keys = [k for k in disj if k not in base_orders]

        if node.relax is not None:
            sec_in = node.relax.sec_in
        else:
            tables = {t: self.table(node, t, routes[t]) for t in self.ids}
            try:
                sec_in = evaluate.relax_evaluate(
                    model, routes, tables, base_orders
                ).sec_in
            except CycleDetected:
                sec_in = {
                    t: {s: model.entries[t].state.earliest_entry for s in
                        model.entries[t].paths[routes[t]].sections}
                    for t in self.ids
                }

        classes = model.order_classes(routes)

        def per_section_orders() -> dict[DisjKey, str]:
            orders = dict(base_orders)
            # Decide per implication class via its representative section.
            for key in sorted(open_keys):
                root = classes.get(key, key)
                if root in orders:
                    orders[key] = orders[root]
                    continue
                a, b, _res = root
                info = disj[root]
                if info.kind == "section":
                    ta = sec_in[a].get(info.section, 0)
                    tb = sec_in[b].get(info.section, 0)
                else:
                    ta = min(sec_in[a].values())
                    tb = min(sec_in[b].values())
                first = a if (ta, a) <= (tb, b) else b
                orders[root] = first
                orders[key] = first
            return orders

        def priority_orders() -> dict[DisjKey, str]:
            rank = {
                t: (min(sec_in[t].values()) if sec_in.get(t) else 0, t)
                for t in self.ids
            }
            orders = dict(base_orders)
            for key in sorted(open_keys):
                a, b, _res = key
                orders[key] = a if rank[a] <= rank[b] else b
            return orders

        result = self._repair_plans(routes, per_section_orders(), node, strict=True)
        if result is not None:
            return result
        result = self._repair_plans(routes, priority_orders(), node, strict=False)
        return result

    def _repair_plans(
        self,
        routes: Mapping[str, str],
        orders: Mapping[DisjKey, str],
        node: _Node,
        strict: bool,
    ) -> int | None:
        """Iteratively add stops where a plan was held at speed.

        strict respects the node's plan restrictions; the fallback pass may
        use any plan (still a valid global incumbent).
        """
        model = self.model
        required: dict[str, set[int]] = {t: set() for t in self.ids}
        plan_pick: dict[str, int] = {}

        def pick_plan(t: str) -> bool:
            plans = model.entries[t].plans[routes[t]]
            order = (
                self.preferred_plan_order(node, t, routes[t])
                if strict
                else range(len(plans))
            )
            for i in order:
                speeds = plans[i].boundary_speeds
                if all(speeds[k] == 0.0 for k in required[t]):
                    plan_pick[t] = i
                    return True
            return False

        for t in self.ids:
            if not pick_plan(t):
                return None

        for _ in range(32):
            try:
                rigid = evaluate.rigid_evaluate(model, routes, plan_pick, orders)
            except CycleDetected:
                return None
            if rigid.consistent:
                decisions = Decisions(
                    routes=dict(routes),
                    plans={
                        t: model.entries[t].plans[routes[t]][plan_pick[t]].profiles
                        for t in self.ids
                    },
                    orders=dict(orders),
                )
                self.record_incumbent(rigid, decisions)
                return rigid.objective
            progressed = False
            for t, k in rigid.violations:
                if k not in required[t]:
                    required[t].add(k)
                    progressed = True
            if not progressed:
                return None
            for t in self.ids:
                if not pick_plan(t):
                    return None
        return None

    # -- branching -------------------------------------------------------------

    def children(self, node: _Node) -> list[_Node]:
        model = self.model
        unrouted = [t for t in self.ids if t not in node.routes]
        if unrouted:
            t = unrouted[0]
            out = []
            for rid in model.entries[t].route_ids:
                routes = dict(node.routes)
                routes[t] = rid
                child = _Node(
                    routes=routes,
                    plan_fixed=dict(node.plan_fixed),
                    plan_excluded=dict(node.plan_excluded),
                    orders=dict(node.orders),
                    depth=node.depth + 1,
                )
                if len(routes) == len(self.ids):
                    child.orders = dict(model.forced_orders(routes))
                    child.orders.update(node.orders)
                out.append(child)
            return out

        disj = model.disjunctions(node.routes)
        open_keys = [k for k in disj if k not in node.orders]
        if open_keys:
            key = self._most_violated(node, disj, open_keys)
            a, b, _res = key
            hinted = self.hints.fixed_orders.get(key)
            natural = self._natural_first(node, disj[key], a, b)
            first_order = hinted if hinted in (a, b) else natural
            out = []
            for first in (first_order, b if first_order == a else a):
                orders = model.propagate_orders(
                    node.routes, {**node.orders, key: first}
                )
                if orders is None:
                    continue  # contradicts an implied order
                out.append(
                    _Node(
                        routes=dict(node.routes),
                        plan_fixed=dict(node.plan_fixed),
                        plan_excluded=dict(node.plan_excluded),
                        orders=orders,
                        depth=node.depth + 1,
                    )
                )
            return out

        for t in self.ids:
            idx = self.remaining_indices(node, t, node.routes[t])
            if len(idx) > 1:
                best = self.preferred_plan_order(node, t, node.routes[t])[0]
                fix = _Node(
                    routes=dict(node.routes),
                    plan_fixed={**node.plan_fixed, t: best},
                    plan_excluded=dict(node.plan_excluded),
                    orders=dict(node.orders),
                    depth=node.depth + 1,
                )
                excl = _Node(
                    routes=dict(node.routes),
                    plan_fixed=dict(node.plan_fixed),
                    plan_excluded={
                        **node.plan_excluded,
                        t: node.plan_excluded.get(t, frozenset()) | {best},
                    },
                    orders=dict(node.orders),
                    depth=node.depth + 1,
                )
                return [fix, excl]
        return []  # fully decided

    def _most_violated(self, node: _Node, disj, open_keys: list[DisjKey]) -> DisjKey:
        sep = self.model.separation
        relax = node.relax

        def slack(key: DisjKey) -> int:
            if relax is None:
                return 0
            a, b, _res = key
            info = disj[key]
            if info.kind == "section":
                s = info.section
                in_a, out_a = relax.sec_in[a][s], relax.sec_out[a][s]
                in_b, out_b = relax.sec_in[b][s], relax.sec_out[b][s]
            else:
                in_a = min(relax.sec_in[a].values())
                out_a = max(relax.sec_out[a].values())
                in_b = min(relax.sec_in[b].values())
                out_b = max(relax.sec_out[b].values())
            return max(in_b - (out_a + sep), in_a - (out_b + sep))

        return min(open_keys, key=lambda k: (slack(k), k))

    def _natural_first(self, node: _Node, info, a: str, b: str) -> str:
        relax = node.relax
        if relax is None:
            return a
        if info.kind == "section":
            ta = relax.sec_in[a][info.section]
            tb = relax.sec_in[b][info.section]
        else:
            ta = min(relax.sec_in[a].values())
            tb = min(relax.sec_in[b].values())
        return a if (ta, a) <= (tb, b) else b

    def is_leaf(self, node: _Node) -> bool:
        if len(node.routes) < len(self.ids):
            return False
        if set(self.model.disjunctions(node.routes)) - set(node.orders):
            return False
        for t in self.ids:
            if len(self.remaining_indices(node, t, node.routes[t])) != 1:
                return False
        return True

    def leaf_incumbent(self, node: _Node) -> None:
        plan_idx = {
            t: self.remaining_indices(node, t, node.routes[t])[0] for t in self.ids
        }
        try:
            rigid = evaluate.rigid_evaluate(
                self.model, node.routes, plan_idx, node.orders
            )
        except CycleDetected:
            return
        if rigid.consistent:
            decisions = Decisions(
                routes=dict(node.routes),
                plans={
                    t: self.model.entries[t].plans[node.routes[t]][plan_idx[t]].profiles
                    for t in self.ids
                },
                orders=dict(node.orders),
            )
            self.record_incumbent(rigid, decisions)


def lower_bound(model: Model, partial: Decisions | None = None) -> int:
    """Admissible bound for a (partial) decision set.

    Fully decided inputs are evaluated exactly, so the bound then equals the
    objective.  Raises CycleDetected for inconsistent fixed orders.
    """
    search = _Search(model, EMPTY_HINTS, SolveParams(time_limit=1.0))
    node = _Node(routes={}, plan_fixed={}, plan_excluded={}, orders={})
    if partial is not None:
        node.routes = dict(partial.routes)
        node.orders = dict(partial.orders)
        for t, sig in partial.plans.items():
            pi = model.entries[t].plan_by_signature(node.routes[t], tuple(sig))
            if pi is not None:
                node.plan_fixed[t] = pi
        if len(node.routes) == len(model.entries):
            forced = model.forced_orders(node.routes)
            node.orders = {**forced, **node.orders}
    if search.is_leaf(node):
        plan_idx = {
            t: search.remaining_indices(node, t, node.routes[t])[0]
            for t in search.ids
        }
        rigid = evaluate.rigid_evaluate(model, node.routes, plan_idx, node.orders)
        return rigid.objective
    if not search.evaluate_node(node):
        raise CycleDetected("fixed orders are inconsistent")
    return node.bound


def solve(
    model: Model,
    hints: HintSet | None = None,
    params: SolveParams | None = None,
    trace: list | None = None,
) -> Solution:
    """Branch-and-bound search; deterministic given the model and params.

    trace, when given, receives one JSON-serializable record per expanded
    node: {node, bound, incumbent, time_ms}.
    """
    hints = hints or EMPTY_HINTS
    params = params or SolveParams()
    t0 = time.monotonic()
    deadline = t0 + params.time_limit
    search = _Search(model, hints, params)

    if not model.entries:
        return _empty_solution(model, t0)

    root = _Node(routes={}, plan_fixed={}, plan_excluded={}, orders={})
    for t in search.ids:
        entry = model.entries[t]
        if len(entry.route_ids) == 1:
            root.routes[t] = entry.route_ids[0]
    if len(root.routes) == len(search.ids):
        root.orders = dict(model.forced_orders(root.routes))

    if hints.warm_incumbent is not None:
        search.try_incumbent(hints.warm_incumbent)

    feasible_root = search.evaluate_node(root)
    open_heap: list[tuple[int, int, _Node]] = []
    if feasible_root:
        heapq.heappush(open_heap, (root.bound, next(search.counter), root))

    final_lb: int | None = None
    timed_out = False
    while open_heap:
        bound, _, node = heapq.heappop(open_heap)
        if bound >= search.best_objective():
            continue
        gap = _gap(search.best_objective(), bound)
        if search.best is not None and gap <= params.gap_target:
            final_lb = bound
            break
        if time.monotonic() > deadline or (
            params.node_limit is not None and search.node_count >= params.node_limit
        ):
            final_lb = bound
            timed_out = True
            break
        search.node_count += 1
        if trace is not None:
            trace.append(
                {
                    "node": search.node_count,
                    "bound": bound,
                    "incumbent": search.best.objective if search.best else None,
                    "time_ms": int((time.monotonic() - t0) * 1000),
                }
            )
        if search.is_leaf(node):
            search.leaf_incumbent(node)
            continue
        dive_obj = search.dive(node)
        if dive_obj is not None and dive_obj <= node.bound:
            continue  # subtree solved exactly by the dive
        for child in search.children(node):
            if not search.evaluate_node(child):
                continue  # cyclic orders: prune
            if child.bound >= search.best_objective():
                continue
            heapq.heappush(open_heap, (child.bound, next(search.counter), child))

    if final_lb is None:
        final_lb = search.best_objective() if search.best is not None else 0
    if open_heap:
        final_lb = min(final_lb, open_heap[0][0])

    snapshot_entries = {
        t: model.entries[t].state.earliest_entry for t in search.ids
    }
    wall_ms = int((time.monotonic() - t0) * 1000)
    if search.best is None:
        status = (
            SolveStatus.TIMED_OUT_NO_INCUMBENT if timed_out else SolveStatus.INFEASIBLE
        )
        return Solution(
            area_id=model.snapshot.area_id,
            taken_at=model.snapshot.taken_at,
            status=status,
            objective=None,
            lower_bound=max(0, final_lb) if final_lb != _BIG else 0,
            gap=1.0,
            decisions=None,
            events=(),
            trajectories={},
            node_count=search.node_count,
            first_incumbent_node=None,
            wall_ms=wall_ms,
            snapshot_entries=snapshot_entries,
        )

    objective = search.best.objective
    lb = min(final_lb, objective)
    gap = _gap(objective, lb)
    status = (
        SolveStatus.OPTIMAL_WITHIN_GAP
        if gap <= params.gap_target
        else SolveStatus.GAP_NOT_REACHED
    )
    return Solution(
        area_id=model.snapshot.area_id,
        taken_at=model.snapshot.taken_at,
        status=status,
        objective=objective,
        lower_bound=lb,
        gap=gap,
        decisions=search.best_decisions,
        events=search.best.events,
        trajectories=search.best.trajectories,
        node_count=search.node_count,
        first_incumbent_node=search.first_incumbent_node,
        wall_ms=wall_ms,
        snapshot_entries=snapshot_entries,
    )


def _gap(objective: int, lb: int) -> float:
    if objective >= _BIG:
        return 1.0
    return max(0.0, (objective - lb) / max(objective, 1))


def _empty_solution(model: Model, t0: float) -> Solution:
    return Solution(
        area_id=model.snapshot.area_id,
        taken_at=model.snapshot.taken_at,
        status=SolveStatus.OPTIMAL_WITHIN_GAP,
        objective=0,
        lower_bound=0,
        gap=0.0,
        decisions=Decisions(routes={}, plans={}, orders={}),
        events=(),
        trajectories={},
        node_count=0,
        first_incumbent_node=0,
        wall_ms=int((time.monotonic() - t0) * 1000),
        snapshot_entries={},
    )
