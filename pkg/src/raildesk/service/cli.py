"""Command-line entry points: serve, solve-once, mesh-run, replay."""
from __future__ import annotations

import json
import sys

import click

from .. import dispatch, mesh, optimizer, sim, traffic
from .app import Orchestrator, RunConfig, create_app


@click.group()
def main() -> None:
    """Desk-scale automated rail dispatching assistant."""


def read_config_file(path: str) -> dict:
    """Config as JSON or key=value lines; keys match the serve flags."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return dict(json.loads(text))
    except json.JSONDecodeError:
        out = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
        return out


@main.command()
@click.option("--config", "config_path", default=None,
              help="Config file (JSON or key=value); flags override it.")
@click.option("--scenario", default=None,
              help="Preset name or path to a scenario JSON file.")
@click.option("--seed", default=None, type=int)
@click.option("--bind", default=None)
@click.option("--cadence", default=None, type=int,
              help="Sim seconds between solve rounds.")
@click.option("--time-limit", default=None, type=float)
@click.option("--gap-target", default=None, type=float)
@click.option("--log", "log_path", default=None, help="Recommendation event log (JSONL).")
@click.option("--accel", default=None, type=float,
              help="Sim seconds per wall second.")
@click.option("--auto-dispatch", is_flag=True, default=False,
              help="Accept and realize every recommendation automatically.")
def serve(config_path, scenario, seed, bind, cadence, time_limit, gap_target,
          log_path, accel, auto_dispatch) -> None:
    """Run the sim loop, solver cadence and HTTP API."""
    import uvicorn

    base = {
        "scenario": "fig6", "seed": 0, "bind": "127.0.0.1:8000", "cadence": 30,
        "time_limit": 5.0, "gap_target": 0.10, "log_path": None, "accel": 10.0,
    }
    if config_path:
        base.update(read_config_file(config_path))
    overrides = {
        "scenario": scenario, "seed": seed, "bind": bind, "cadence": cadence,
        "time_limit": time_limit, "gap_target": gap_target, "log_path": log_path,
        "accel": accel,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    config = RunConfig(
        scenario=base["scenario"],
        seed=int(base["seed"]),
        bind=str(base["bind"]),
        cadence=int(base["cadence"]),
        time_limit=float(base["time_limit"]),
        gap_target=float(base["gap_target"]),
        log_path=base["log_path"],
        accel=float(base["accel"]),
        auto_dispatch=auto_dispatch,
    )
    orch = Orchestrator(config)
    orch.start()
    app = create_app(orch)
    host, _, port = config.bind.partition(":")
    click.echo(f"raildesk serving scenario={config.scenario} on http://{config.bind}")
    uvicorn.run(app, host=host, port=int(port or 8000), log_level="warning")


@main.command("solve-once")
@click.argument("scenario")
@click.argument("area")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--at", "at_time", default=0, show_default=True,
              help="Advance the sim this many seconds before the snapshot.")
@click.option("--time-limit", default=5.0, show_default=True)
@click.option("--gap-target", default=0.10, show_default=True)
@click.option("--trace", "trace_path", default=None,
              help="Write a JSONL solver trace (node, bound, incumbent, time_ms).")
def solve_once(scenario, area, seed, at_time, time_limit, gap_target, trace_path) -> None:
    """Solve one snapshot of one area and print the solution summary."""
    loaded = sim.load_scenario(scenario, seed=seed)
    if at_time > 0:
        sim.step(loaded.world, at_time)
    target = next((a for a in loaded.areas if a.id == area), None)
    if target is None:
        raise click.ClickException(f"unknown area {area}")
    snap = traffic.build_snapshot(loaded.world, area, target.horizon)
    model = optimizer.build_model(snap, loaded.network)
    trace = [] if trace_path else None
    solution = optimizer.solve(
        model,
        params=optimizer.SolveParams(time_limit=time_limit, gap_target=gap_target),
        trace=trace,
    )
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as fh:
            for record in trace or []:
                fh.write(json.dumps(record) + "\n")
    click.echo(solution.summary())
    if solution.status is optimizer.SolveStatus.INFEASIBLE:
        sys.exit(1)


@main.command("mesh-run")
@click.argument("scenario")
@click.option("--rounds", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--time-limit", default=5.0, show_default=True)
def mesh_run(scenario, rounds, seed, time_limit) -> None:
    """Iterate handoff-exchange rounds on a frozen world."""
    loaded = sim.load_scenario(scenario, seed=seed)
    params = optimizer.SolveParams(time_limit=time_limit)
    state = mesh.MeshState()
    for _ in range(rounds):
        state = mesh.run_round(loaded.areas, loaded.world, state, params)
        click.echo(f"round {state.round_no}:")
        for area_id in sorted(state.solutions):
            click.echo(f"  {area_id}: {state.solutions[area_id].summary()}")
        for area_id, handoffs in sorted(state.published.items()):
            for h in handoffs:
                click.echo(f"  {area_id} publishes {json.dumps(h.to_wire())}")
        for area_id, err in sorted(state.errors.items()):
            click.echo(f"  {area_id} failed: {err}")
        if state.fixed_point_round is not None:
            click.echo(f"fixed point at round {state.fixed_point_round}")
            break
    else:
        click.echo(f"no fixed point within {rounds} rounds")


@main.command()
@click.argument("log", type=click.Path(exists=True))
def replay(log) -> None:
    """Re-derive the recommendation registry from an event log."""
    registry = dispatch.RecommendationRegistry()
    with open(log, "r", encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    registry.replay(records)
    for rec in registry.all():
        click.echo(json.dumps(rec.to_wire(), sort_keys=True))


if __name__ == "__main__":  # pragma: no cover
    main()
