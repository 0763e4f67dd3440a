"""Exhaustive-enumeration oracle for small instances.

Enumerates every (route, plan, order) combination of a model's decision
space and evaluates each with its own fixpoint propagation, written
independently of the solver's search, bounding and dive machinery.
"""
from __future__ import annotations

import itertools

from raildesk.optimizer.model import Model

BIG_ROUNDS = 400


def combo_count(model: Model) -> int:
    """Size of the full decision space (used to keep instances desk-size)."""
    ids = sorted(model.entries)
    total = 0
    for combo in itertools.product(*[model.entries[t].route_ids for t in ids]):
        routes = dict(zip(ids, combo))
        free = [k for k in model.disjunctions(routes) if k not in model.forced_orders(routes)]
        plans = 1
        for t in ids:
            plans *= len(model.entries[t].plans[routes[t]])
        total += plans * (2 ** len(free))
    return total


def evaluate_combo(model: Model, routes, plan_idx, orders) -> int | None:
    """Objective of one full assignment, or None when infeasible.

    Semantics: earliest times subject to entry bounds, chain running times,
    dwells, scheduled departures, ordered-section separation, exclusion
    spans, and restriction pushes; a train may only be held at a boundary
    whose planned speed is zero (first boundary excepted).
    """
    ids = sorted(model.entries)
    sep = model.headway + model.release
    release = model.release
    paths = {t: model.entries[t].paths[routes[t]] for t in ids}
    plans = {t: model.entries[t].plans[routes[t]][plan_idx[t]] for t in ids}

    # Per-train static tables.
    n_chains = {t: len(paths[t].chains) for t in ids}
    move = {}  # t -> [(lag, floor_abs) per chain 1..m-1]
    pushes = {}  # t -> [(ci, off_in, off_out, w0, w1)]
    for t in ids:
        path, plan = paths[t], plans[t]
        rows = []
        for ci in range(1, n_chains[t]):
            stop = path.boundary_stops[ci]
            lag = plan.chain_times[ci - 1] + (stop.min_dwell if stop else 0)
            floor_abs = stop.departure if stop else 0
            rows.append((lag, floor_abs))
        move[t] = rows
        rules = []
        for ci, chain in enumerate(path.chains):
            for si, sid in enumerate(chain.sections):
                windows = model.network.restrictions_for(sid)
                if windows:
                    off_in, off_out = plan.offsets[ci][si]
                    for w in windows:
                        rules.append((ci, off_in, off_out, w[0], w[1]))
        pushes[t] = rules

    disj = model.disjunctions(routes)
    order_edges = []  # (t_first, src_chain, off_exit, t_second, ci_g, off_in)
    for key, first in orders.items():
        a, b, _res = key
        second = b if first == a else a
        info = disj[key]
        if info.kind == "section":
            sid_f = sid_g = info.section
        else:
            sid_f = paths[first].sections[-1]
            sid_g = paths[second].sections[0]
        ci_f, si_f = model.entries[first].sec_index[routes[first]][sid_f]
        ci_g, si_g = model.entries[second].sec_index[routes[second]][sid_g]
        # a train waiting at a boundary still occupies the section behind it:
        # release of a chain's last section is the next chain's entry
        if (
            si_f == len(paths[first].chains[ci_f].sections) - 1
            and ci_f + 1 < n_chains[first]
        ):
            src_chain, off_exit = ci_f + 1, 0
        else:
            src_chain, off_exit = ci_f, plans[first].offsets[ci_f][si_f][1]
        order_edges.append(
            (
                first,
                src_chain,
                off_exit,
                second,
                ci_g,
                plans[second].offsets[ci_g][si_g][0],
            )
        )

    E = {t: [model.snapshot.taken_at] * n_chains[t] for t in ids}
    for t in ids:
        E[t][0] = max(E[t][0], model.entries[t].state.earliest_entry)
        for ci in range(1, n_chains[t]):
            lag, floor_abs = move[t][ci - 1]
            E[t][ci] = max(E[t][ci - 1] + lag, floor_abs)

    for _ in range(BIG_ROUNDS):
        changed = False
        for t in ids:
            row = E[t]
            for ci in range(1, n_chains[t]):
                lag, floor_abs = move[t][ci - 1]
                lo = row[ci - 1] + lag
                if floor_abs > lo:
                    lo = floor_abs
                if lo > row[ci]:
                    row[ci] = lo
                    changed = True
            for ci, off_in, off_out, w0, w1 in pushes[t]:
                occ0 = row[ci] + off_in
                if occ0 < w1 and w0 < row[ci] + off_out + release:
                    row[ci] = w1 - off_in
                    changed = True
        for tf, ci_f, off_exit, tg, ci_g, off_in in order_edges:
            need = E[tf][ci_f] + off_exit + sep - off_in
            if need > E[tg][ci_g]:
                E[tg][ci_g] = need
                changed = True
        if not changed:
            break
    else:
        return None  # diverged: cyclic orders

    # Consistency: held only where the plan stops.
    for t in ids:
        path, plan = paths[t], plans[t]
        for ci in range(1, n_chains[t]):
            stop = path.boundary_stops[ci]
            arrive = E[t][ci - 1] + plan.chain_times[ci - 1]
            floor = max(arrive + stop.min_dwell, stop.departure) if stop else arrive
            if E[t][ci] > floor and plan.boundary_speeds[ci] > 0.0:
                return None

    total = 0.0
    for t in ids:
        path, plan = paths[t], plans[t]
        w = model.entries[t].train.priority_weight
        for ci in range(n_chains[t]):
            k = ci + 1
            stop = path.boundary_stops[k]
            if stop is None or not stop.is_customer_stop:
                continue
            arrive = E[t][ci] + plan.chain_times[ci]
            if k == n_chains[t]:
                total += w * max(0, arrive - stop.arrival)
            else:
                total += w * max(0, E[t][k] - stop.departure)
    return int(round(total))


def exhaustive_optimum(model: Model) -> int | None:
    """Minimum objective over every route, plan, and order combination."""
    ids = sorted(model.entries)
    best: int | None = None
    for combo in itertools.product(*[model.entries[t].route_ids for t in ids]):
        routes = dict(zip(ids, combo))
        forced = model.forced_orders(routes)
        free = sorted(k for k in model.disjunctions(routes) if k not in forced)
        plan_ranges = [range(len(model.entries[t].plans[routes[t]])) for t in ids]
        for plan_combo in itertools.product(*plan_ranges):
            plan_idx = dict(zip(ids, plan_combo))
            for bits in itertools.product((0, 1), repeat=len(free)):
                orders = dict(forced)
                for key, bit in zip(free, bits):
                    orders[key] = key[bit]
                obj = evaluate_combo(model, routes, plan_idx, orders)
                if obj is not None and (best is None or obj < best):
                    best = obj
    return best
