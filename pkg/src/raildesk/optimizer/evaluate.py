"""Forward time propagation for decided and partially decided models.

Two evaluators share the constraint semantics:

* rigid: full decisions.  Chain interiors are rigid (section times follow
  the chosen profile's offsets); trains wait only at chain boundaries, and
  only where the plan's boundary speed is zero.
* relaxed: admissible lower bound for partial decisions.  Unresolved
  disjunctions are dropped and per-section lags are minima over the
  remaining plans, so every completion dominates the relaxed times.  A
  per-train refinement then re-prices chain rigidity: the best any single
  plan can do against the relaxed section-entry floors.

Plan-set aggregates are cached per (train, route, subset) on the model;
they are the hot path of node evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .. import planning
from ..errors import CycleDetected
from ..infra import overlaps
from ..traffic import EventKind, StopTime, TrajEvent, Trajectory
from .model import DisjKey, Event, Model


@dataclass
class RigidResult:
    chain_entry: dict[str, list[int]]  # train -> entry time per chain
    objective: int
    violations: list[tuple[str, int]]  # (train, boundary idx) waited at speed
    trajectories: dict[str, Trajectory]
    events: tuple[Event, ...]

    @property
    def consistent(self) -> bool:
        return not self.violations


@dataclass
class RelaxResult:
    bound: int
    sec_in: dict[str, dict[str, int]]  # train -> section -> entry
    sec_out: dict[str, dict[str, int]]


@dataclass
class PlanTable:
    """Aggregates of one plan subset used by the relaxation and the walk."""

    plan_indices: tuple[int, ...]
    min_dur: tuple[int, ...]        # per flat section
    fwd_lag: tuple[int, ...]        # entry-to-entry, chain transitions included
    back_lag: tuple[int, ...]       # max entry-to-entry delta inside a chain
    last_in_chain: tuple[bool, ...]
    # walk arrays, ordered by unconstrained contribution (ascending)
    walk_order: tuple[int, ...]     # positions into the arrays below
    solo: tuple[float, ...]
    chain_times: tuple[tuple[int, ...], ...]
    flat_off_in: tuple[tuple[int, ...], ...]


def _stop_dwell(stop) -> int:
    return stop.min_dwell if stop is not None else 0


def _flat_positions(path: planning.TrainPath) -> list[tuple[int, int, bool]]:
    pos = []
    for ci, chain in enumerate(path.chains):
        for si in range(len(chain.sections)):
            pos.append((ci, si, si == len(chain.sections) - 1))
    return pos


def _walk_contribution(
    path: planning.TrainPath,
    chain_times: Sequence[int],
    flat_off_in: Sequence[int],
    w: float,
    entry_time: int,
    floors: Sequence[int] | None,
) -> float:
    """Rigid chain walk of one plan against per-section entry floors."""
    E = entry_time
    contribution = 0.0
    flat = 0
    m = len(path.chains)
    for ci in range(m):
        chain = path.chains[ci]
        stop = path.boundary_stops[ci] if ci > 0 else None
        if ci > 0:
            E += chain_times[ci - 1]
            if stop is not None:
                E = max(E + stop.min_dwell, stop.departure)
        if floors is not None:
            for _ in chain.sections:
                need = floors[flat] - flat_off_in[flat]
                if need > E:
                    E = need
                flat += 1
        if stop is not None and stop.is_customer_stop:
            contribution += w * max(0, E - stop.departure)
    final_stop = path.boundary_stops[m]
    if final_stop is not None and final_stop.is_customer_stop:
        contribution += w * max(0, E + chain_times[m - 1] - final_stop.arrival)
    return contribution


def plan_table(
    model: Model, train_id: str, route_id: str, fixed: int | None, excluded: frozenset
) -> PlanTable:
    """Cached aggregates for the remaining plan subset of one train/route."""
    cache = model.__dict__.setdefault("_table_cache", {})
    marker = ("fix", fixed) if fixed is not None else ("x", excluded)
    key = (train_id, route_id, marker)
    hit = cache.get(key)
    if hit is not None:
        return hit

    entry = model.entries[train_id]
    path = entry.paths[route_id]
    all_plans = entry.plans[route_id]
    if fixed is not None:
        indices = [fixed]
    else:
        indices = [i for i in range(len(all_plans)) if i not in excluded]
    plans = [all_plans[i] for i in indices]
    pos = _flat_positions(path)
    n = len(pos)

    min_dur, fwd, back, last_flags = [], [], [], []
    for flat, (ci, si, last) in enumerate(pos):
        min_dur.append(min(p.offsets[ci][si][1] - p.offsets[ci][si][0] for p in plans))
        last_flags.append(last)
        if flat + 1 >= n:
            fwd.append(0)
            back.append(0)
        elif not last:
            deltas = [p.offsets[ci][si + 1][0] - p.offsets[ci][si][0] for p in plans]
            fwd.append(min(deltas))
            back.append(max(deltas))
        else:
            stop = path.boundary_stops[ci + 1]
            lag = min(p.chain_times[ci] - p.offsets[ci][si][0] for p in plans)
            fwd.append(lag + _stop_dwell(stop))
            back.append(0)  # unused across chain boundaries

    w = entry.train.priority_weight
    t0 = entry.state.earliest_entry
    chain_times = [p.chain_times for p in plans]
    flat_off_in = [
        tuple(p.offsets[ci][si][0] for (ci, si, _) in pos) for p in plans
    ]
    solo = [
        _walk_contribution(path, chain_times[j], flat_off_in[j], w, t0, None)
        for j in range(len(plans))
    ]
    order = sorted(range(len(plans)), key=lambda j: (solo[j], j))

    table = PlanTable(
        plan_indices=tuple(indices),
        min_dur=tuple(min_dur),
        fwd_lag=tuple(fwd),
        back_lag=tuple(back),
        last_in_chain=tuple(last_flags),
        walk_order=tuple(order),
        solo=tuple(solo[j] for j in order),
        chain_times=tuple(chain_times[j] for j in order),
        flat_off_in=tuple(flat_off_in[j] for j in order),
    )
    cache[key] = table
    return table


WALK_BUDGET = 24


def floor_bound(
    model: Model, train_id: str, route_id: str, table: PlanTable, floors: Sequence[int]
) -> float:
    """Min over remaining plans of the floor walk, pruned by solo values.

    At most WALK_BUDGET plans are walked; the result then falls back to the
    smallest unexamined solo value, which lower-bounds every skipped walk,
    so the bound stays admissible.
    """
    entry = model.entries[train_id]
    path = entry.paths[route_id]
    w = entry.train.priority_weight
    t0 = entry.state.earliest_entry
    best: float | None = None
    n = len(table.walk_order)
    for j in range(n):
        if best is not None and table.solo[j] >= best:
            break  # solo ascending; no later plan can beat the incumbent walk
        if j >= WALK_BUDGET:
            best = min(best, table.solo[j]) if best is not None else table.solo[j]
            break
        value = _walk_contribution(
            path, table.chain_times[j], table.flat_off_in[j], w, t0, floors
        )
        if best is None or value < best:
            best = value
        if best <= table.solo[0]:
            break  # cannot go below the unconstrained minimum
    return best or 0.0


def _propagate(
    n_vars: int,
    initial: list[int],
    edges: list[tuple[int, int, int]],
    pushes: Mapping[int, list[tuple[int, int, int, int]]],
    release: int,
) -> list[int]:
    """Longest-path fixpoint with restriction pushes.

    pushes[v] holds (off_in, off_out, w_start, w_end): when the occupation
    [t+off_in, t+off_out+release) overlaps [w_start, w_end) the event is
    pushed to w_end - off_in.  Divergence (contradictory fixed orders) is
    reported as CycleDetected.
    """
    times = list(initial)

    def apply_pushes(v: int) -> bool:
        moved = False
        for _ in range(len(pushes.get(v, ())) + 1):
            t = times[v]
            hit = False
            for off_in, off_out, w_start, w_end in pushes.get(v, ()):
                occ = (t + off_in, t + off_out + release)
                if overlaps(occ, (w_start, w_end)):
                    times[v] = max(times[v], w_end - off_in)
                    hit = moved = True
            if not hit:
                break
        return moved

    for v in pushes:
        apply_pushes(v)

    total_windows = sum(len(p) for p in pushes.values())
    max_rounds = n_vars + total_windows + 8
    for _ in range(max_rounds):
        changed = False
        for u, v, lag in edges:
            t = times[u] + lag
            if t > times[v]:
                times[v] = t
                changed = True
                if pushes and apply_pushes(v):
                    changed = True
        if not changed:
            return times
    raise CycleDetected("time propagation did not converge; orders are cyclic")


def rigid_evaluate(
    model: Model,
    routes: Mapping[str, str],
    plan_idx: Mapping[str, int],
    orders: Mapping[DisjKey, str],
) -> RigidResult:
    """Exact evaluation of a full decision assignment."""
    ids = model.train_ids()
    taken_at = model.snapshot.taken_at
    sep = model.separation

    var_of: dict[tuple[str, int], int] = {}
    initial: list[int] = []
    plan_of: dict[str, planning.Plan] = {}
    path_of: dict[str, planning.TrainPath] = {}
    for t in ids:
        entry = model.entries[t]
        path = entry.paths[routes[t]]
        plan = entry.plans[routes[t]][plan_idx[t]]
        path_of[t], plan_of[t] = path, plan
        for ci in range(len(path.chains)):
            var_of[(t, ci)] = len(initial)
            initial.append(taken_at)

    edges: list[tuple[int, int, int]] = []
    pushes: dict[int, list[tuple[int, int, int, int]]] = {}
    for t in ids:
        entry = model.entries[t]
        path, plan = path_of[t], plan_of[t]
        v0 = var_of[(t, 0)]
        initial[v0] = max(initial[v0], entry.state.earliest_entry)
        for ci in range(1, len(path.chains)):
            stop = path.boundary_stops[ci]
            lag = plan.chain_times[ci - 1] + _stop_dwell(stop)
            edges.append((var_of[(t, ci - 1)], var_of[(t, ci)], lag))
            if stop is not None:
                v = var_of[(t, ci)]
                initial[v] = max(initial[v], stop.departure)
        for ci, chain in enumerate(path.chains):
            v = var_of[(t, ci)]
            for si, sid in enumerate(chain.sections):
                for window in model.network.restrictions_for(sid):
                    off_in, off_out = plan.offsets[ci][si]
                    pushes.setdefault(v, []).append(
                        (off_in, off_out, window[0], window[1])
                    )

    def exit_term(train: str, sid: str) -> tuple[int, int]:
        """(source var, lag) for the release time of a section.

        A train standing at a chain boundary still occupies the section it
        stands on, so release of the last section of a non-final chain is
        the entry into the next chain.
        """
        ci, si = model.entries[train].sec_index[routes[train]][sid]
        path = path_of[train]
        if si == len(path.chains[ci].sections) - 1 and ci + 1 < len(path.chains):
            return var_of[(train, ci + 1)], 0
        return var_of[(train, ci)], plan_of[train].offsets[ci][si][1]

    disj = model.disjunctions(routes)
    for key, first in sorted(orders.items()):
        info = disj.get(key)
        if info is None:
            continue
        a, b, _ = key
        second = b if first == a else a
        if info.kind == "section":
            sid_f = sid_g = info.section
        else:
            if not path_of[first].sections or not path_of[second].sections:
                continue
            sid_f = path_of[first].sections[-1]
            sid_g = path_of[second].sections[0]
        src, off_f = exit_term(first, sid_f)
        ci_g, si_g = model.entries[second].sec_index[routes[second]][sid_g]
        off_g = plan_of[second].offsets[ci_g][si_g][0]
        edges.append((src, var_of[(second, ci_g)], off_f + sep - off_g))

    times = _propagate(len(initial), initial, edges, pushes, model.release)

    chain_entry: dict[str, list[int]] = {}
    violations: list[tuple[str, int]] = []
    trajectories: dict[str, Trajectory] = {}
    events: list[Event] = []
    for t in ids:
        entry = model.entries[t]
        path, plan = path_of[t], plan_of[t]
        m = len(path.chains)
        E = [times[var_of[(t, ci)]] for ci in range(m)]
        chain_entry[t] = E
        bnodes = path.boundary_nodes

        t_events: list[TrajEvent] = []
        occupations: list[tuple[str, int, int]] = []
        stop_times: list[StopTime] = []
        events.append(Event(t, bnodes[0], EventKind.AREA_ENTRY, None, E[0]))
        t_events.append(
            TrajEvent(bnodes[0], EventKind.AREA_ENTRY, E[0], plan.boundary_speeds[0])
        )
        for ci in range(m):
            n_secs = len(path.chains[ci].sections)
            for si, sid in enumerate(path.chains[ci].sections):
                off_in, off_out = plan.offsets[ci][si]
                if si == n_secs - 1 and ci + 1 < m:
                    # held at the boundary: the section stays occupied until
                    # the train enters the next chain
                    occupations.append((sid, E[ci] + off_in, E[ci + 1]))
                else:
                    occupations.append((sid, E[ci] + off_in, E[ci] + off_out))
            arrive = E[ci] + plan.chain_times[ci]
            k = ci + 1
            node = bnodes[k]
            stop = path.boundary_stops[k]
            last = k == m
            if stop is not None:
                events.append(Event(t, node, EventKind.ARRIVE, stop.arrival, arrive))
                t_events.append(TrajEvent(node, EventKind.ARRIVE, arrive, 0.0))
                if last:
                    stop_times.append(
                        StopTime(stop.station_id, arrive, None, stop.arrival,
                                 stop.departure, stop.is_customer_stop)
                    )
                else:
                    depart = E[k]
                    stop_times.append(
                        StopTime(stop.station_id, arrive, depart, stop.arrival,
                                 stop.departure, stop.is_customer_stop)
                    )
                    events.append(
                        Event(t, node, EventKind.DEPART, stop.departure, depart)
                    )
                    t_events.append(TrajEvent(node, EventKind.DEPART, depart, 0.0))
            elif last:
                kind = EventKind.ARRIVE if path.terminal else EventKind.AREA_EXIT
                events.append(Event(t, node, kind, None, arrive))
                t_events.append(TrajEvent(node, kind, arrive, plan.boundary_speeds[k]))
            else:
                passage = E[k]
                if passage > arrive and plan.boundary_speeds[k] > 0.0:
                    violations.append((t, k))
                events.append(Event(t, node, EventKind.ARRIVE, None, passage))
                t_events.append(
                    TrajEvent(node, EventKind.ARRIVE, passage, plan.boundary_speeds[k])
                )
        trajectories[t] = Trajectory(
            train_id=t,
            route_id=routes[t],
            events=tuple(t_events),
            occupations=tuple(occupations),
            stop_times=tuple(stop_times),
        )

    from .model import objective_value

    objective = objective_value(trajectories, model.snapshot)
    return RigidResult(
        chain_entry=chain_entry,
        objective=objective,
        violations=violations,
        trajectories=trajectories,
        events=tuple(events),
    )


def _train_relax_vars(
    model: Model,
    t: str,
    route_id: str,
    table: PlanTable,
    base_var: int,
) -> tuple[dict[str, tuple[int, int]], list[int], list[tuple[int, int, int]], dict, list]:
    """Section-level vars, edges, pushes and objective probes for one train.

    Entry-to-entry lags are minima over the remaining plans of the rigid
    floor-offset deltas (summing rounded per-section durations would
    overshoot the rigid chain times).  Chain interiors also carry reverse
    edges: rigidity works both ways, which surfaces impossible mid-chain
    overtakes as cycles.  Release of a section whose exit boundary a train
    can be held at is the entry into the next one.
    """
    entry = model.entries[t]
    path = entry.paths[route_id]
    n = len(path.sections)
    var_in = {i: base_var + 2 * i for i in range(n)}
    var_out = {i: base_var + 2 * i + 1 for i in range(n)}
    pos = _flat_positions(path)

    initial = [model.snapshot.taken_at] * (2 * n)
    initial[0] = max(initial[0], entry.state.earliest_entry)
    edges: list[tuple[int, int, int]] = []
    pushes: dict[int, list[tuple[int, int, int, int]]] = {}

    probes = []  # (kind, var, schedule source) for objective assembly
    for i, sid in enumerate(path.sections):
        ci, si, last_in_chain = pos[i]
        edges.append((var_in[i], var_out[i], table.min_dur[i]))
        for window in model.network.restrictions_for(sid):
            pushes.setdefault(var_in[i], []).append(
                (0, table.min_dur[i], window[0], window[1])
            )
        if i + 1 >= n:
            continue
        if not last_in_chain:
            edges.append((var_in[i], var_in[i + 1], table.fwd_lag[i]))
            edges.append((var_in[i + 1], var_in[i], -table.back_lag[i]))
        else:
            stop = path.boundary_stops[ci + 1]
            edges.append((var_in[i], var_in[i + 1], table.fwd_lag[i]))
            if stop is not None:
                initial[var_in[i + 1] - base_var] = max(
                    initial[var_in[i + 1] - base_var], stop.departure
                )
                if stop.is_customer_stop:
                    probes.append(("depart", var_in[i + 1], stop))
            # release of this section is the entry into the next chain
            edges.append((var_in[i + 1], var_out[i], 0))
    final_stop = path.boundary_stops[-1]
    if final_stop is not None and final_stop.is_customer_stop:
        probes.append(("arrive", var_out[n - 1], final_stop))

    sec_vars = {sid: (var_in[i], var_out[i]) for i, sid in enumerate(path.sections)}
    return sec_vars, initial, edges, pushes, probes


def relax_evaluate(
    model: Model,
    routes: Mapping[str, str],
    tables: Mapping[str, PlanTable],
    orders: Mapping[DisjKey, str],
) -> RelaxResult:
    """Admissible bound with unresolved disjunctions dropped."""
    ids = model.train_ids()
    all_initial: list[int] = []
    all_edges: list[tuple[int, int, int]] = []
    all_pushes: dict[int, list] = {}
    sec_vars: dict[str, dict[str, tuple[int, int]]] = {}
    probes: dict[str, list] = {}
    flat_index: dict[str, dict[str, int]] = {}
    for t in ids:
        sv, initial, edges, pushes, pr = _train_relax_vars(
            model, t, routes[t], tables[t], len(all_initial)
        )
        all_initial.extend(initial)
        all_edges.extend(edges)
        all_pushes.update(pushes)
        sec_vars[t] = sv
        probes[t] = pr
        flat_index[t] = {
            sid: i for i, sid in enumerate(model.entries[t].paths[routes[t]].sections)
        }

    disj = model.disjunctions(routes)
    sep = model.separation
    for key, first in sorted(orders.items()):
        info = disj.get(key)
        if info is None:
            continue
        a, b, _ = key
        second = b if first == a else a
        if info.kind == "section":
            out_f = sec_vars[first][info.section][1]
            in_g = sec_vars[second][info.section][0]
            all_edges.append((out_f, in_g, sep))
        else:
            f_path = model.entries[first].paths[routes[first]]
            g_path = model.entries[second].paths[routes[second]]
            out_f = sec_vars[first][f_path.sections[-1]][1]
            in_g = sec_vars[second][g_path.sections[0]][0]
            all_edges.append((out_f, in_g, sep))

    times = _propagate(
        len(all_initial), all_initial, all_edges, all_pushes, model.release
    )

    weights = {t: model.entries[t].train.priority_weight for t in ids}
    bound = 0.0
    for t in ids:
        for kind, var, stop in probes[t]:
            sched = stop.departure if kind == "depart" else stop.arrival
            bound += weights[t] * max(0, times[var] - sched)

    sec_in = {t: {s: times[v[0]] for s, v in sec_vars[t].items()} for t in ids}
    sec_out = {t: {s: times[v[1]] for s, v in sec_vars[t].items()} for t in ids}

    refined = 0.0
    for t in ids:
        path = model.entries[t].paths[routes[t]]
        floors = [sec_in[t][sid] for sid in path.sections]
        refined += floor_bound(model, t, routes[t], tables[t], floors)
    return RelaxResult(
        bound=max(int(round(bound)), int(round(refined))),
        sec_in=sec_in,
        sec_out=sec_out,
    )


def solo_bound(model: Model, train_id: str, route_id: str, table: PlanTable) -> int:
    """Single-train contribution bound, ignoring all other trains."""
    return int(round(table.solo[0])) if table.solo else 0
