"""Long-running service: sim loop, per-area solver cadence, dispatcher API.

Sim time is decoupled from wall time; deadlines and metrics all use sim
time, so tests can drive the whole pipeline deterministically through
POST /sim/control.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from typing import Any

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from .. import dispatch, mesh, optimizer, sim, traffic
from ..errors import FeedbackAlreadySet, InvalidTransition


@dataclass
class RunConfig:
    scenario: Any = "fig6"
    seed: int = 0
    bind: str = "127.0.0.1:8000"
    cadence: int = 30
    time_limit: float = 5.0
    gap_target: float = 0.10
    log_path: str | None = None
    accel: float = 10.0  # sim seconds advanced per wall second while running
    auto_dispatch: bool = False  # accept+realize everything (headless demos)


@dataclass
class AreaStatus:
    area_id: str
    last_gap: float | None = None
    last_status: str | None = None
    last_objective: int | None = None
    conflict_count: int = 0
    solved_at: int | None = None


@dataclass
class Metrics:
    runs: int = 0
    runs_within_gap: int = 0
    objective_sum: float = 0.0
    objective_count: int = 0
    mesh_rounds_to_fixed_point: int | None = None

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "runs_within_gap": self.runs_within_gap,
            "pct_within_gap": (self.runs_within_gap / self.runs) if self.runs else 0.0,
            "mean_objective": (
                self.objective_sum / self.objective_count
                if self.objective_count
                else 0.0
            ),
            "mesh_rounds_to_fixed_point": self.mesh_rounds_to_fixed_point,
        }


class Orchestrator:
    """Owns the world, the per-area solve cadence, and the registry."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        loaded = sim.load_scenario(config.scenario, seed=config.seed)
        self.world = loaded.world
        self.network = loaded.network
        self.areas = loaded.areas
        self.registry = dispatch.RecommendationRegistry(log_path=config.log_path)
        self._replay_realized_measures()
        self.mesh_state = mesh.MeshState()
        self.area_status = {a.id: AreaStatus(area_id=a.id) for a in self.areas}
        self.metrics = Metrics()
        self.history: list[optimizer.HistoryRecord] = []
        self.prognoses: dict[str, dict[str, traffic.Trajectory]] = {}
        self.lock = threading.RLock()
        self.running = False
        self._thread: threading.Thread | None = None
        self._since_cadence = 0
        self._rounds_since_change = 0

    def _replay_realized_measures(self) -> None:
        for rec in self.registry.all():
            if rec.status is dispatch.RecommendationStatus.REALIZED_BY_SETTER:
                self.world.apply_decision(rec.decision)

    # -- time control --

    def tick(self, dt: int) -> None:
        with self.lock:
            for _ in range(int(dt)):
                sim.step(self.world, 1)
                self._since_cadence += 1
                if self._since_cadence >= self.config.cadence:
                    self._since_cadence = 0
                    self.run_cadence()
            self.registry.expire_due(self.world.clock)

    def run_cadence(self) -> None:
        params = optimizer.SolveParams(
            time_limit=self.config.time_limit, gap_target=self.config.gap_target
        )
        previous = self.mesh_state.published
        self.mesh_state = mesh.run_round(self.areas, self.world, self.mesh_state, params)
        if self.mesh_state.fixed_point_round is not None:
            self._rounds_since_change = 0
            if self.metrics.mesh_rounds_to_fixed_point is None:
                self.metrics.mesh_rounds_to_fixed_point = self.mesh_state.round_no
        for area in sorted(self.areas, key=lambda a: a.id):
            status = self.area_status[area.id]
            solution = self.mesh_state.solutions.get(area.id)
            snapshot = self.mesh_state.snapshots.get(area.id)
            if solution is None or snapshot is None:
                continue
            self.metrics.runs += 1
            if solution.status is optimizer.SolveStatus.OPTIMAL_WITHIN_GAP:
                self.metrics.runs_within_gap += 1
            if solution.objective is not None:
                self.metrics.objective_sum += solution.objective
                self.metrics.objective_count += 1
            progs = traffic.prognosis(snapshot, self.network)
            self.prognoses[area.id] = progs
            from ..conflicts import detect_conflicts

            found = detect_conflicts(progs, self.network)
            status.last_gap = solution.gap
            status.last_status = solution.status.value
            status.last_objective = solution.objective
            status.conflict_count = len(found)
            status.solved_at = self.world.clock
            self._record_history(snapshot, solution)
            self._derive(area, solution)
        self.registry.expire_due(self.world.clock)

    def _record_history(self, snapshot, solution) -> None:
        if solution.decisions is None:
            return
        features = optimizer.situation_features(snapshot, self.network)
        for train_id, signature in solution.decisions.plans.items():
            rec = features.get(train_id)
            if rec is not None:
                self.history.append(
                    optimizer.HistoryRecord(
                        category=rec.category,
                        features=rec.features,
                        plan_signature=tuple(signature),
                    )
                )
        del self.history[:-2000]  # keep the recent situations only

    def _derive(self, area, solution) -> None:
        traced = dispatch.trace(solution, self.world, area)
        baseline = dispatch.baseline_from_prognosis(traced.snapshot, self.network)
        recs = dispatch.derive_recommendations(
            traced,
            baseline,
            self.network,
            now=self.world.clock,
            pending=self.registry.pending(),
        )
        for rec in recs:
            stored = self.registry.add(rec, self.world.clock)
            if stored is not None and self.config.auto_dispatch:
                self.registry.apply(stored.id, "dispatcher_accept", self.world.clock)
                self.registry.apply(stored.id, "setter_accept", self.world.clock)
                self.world.apply_decision(stored.decision)

    # -- lifecycle from the API --

    def act(self, rec_id: str, action: str) -> dispatch.Recommendation:
        with self.lock:
            updated = self.registry.apply(rec_id, action, self.world.clock)
            if updated.status is dispatch.RecommendationStatus.REALIZED_BY_SETTER:
                self.world.apply_decision(updated.decision)
            return updated

    def feedback(self, rec_id: str, thumb: dispatch.Thumb) -> dispatch.Recommendation:
        with self.lock:
            return self.registry.feedback(rec_id, thumb, self.world.clock)

    # -- background runner --

    def start(self) -> None:
        if self.running:
            return
        self.running = True
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def pause(self) -> None:
        self.running = False

    def _run(self) -> None:
        step = max(1, int(self.config.accel))
        while self.running:
            self.tick(step)
            time.sleep(1.0)

    # -- views --

    def etag(self) -> str:
        digest = hashlib.sha256(self.registry.fingerprint().encode()).hexdigest()[:16]
        return f'"{digest}"'

    def timedistance(self, area_id: str, t_from: int | None, t_to: int | None) -> dict:
        area = next((a for a in self.areas if a.id == area_id), None)
        if area is None:
            raise KeyError(area_id)
        dist = self._linear_reference(area)
        solution = self.mesh_state.solutions.get(area_id)
        progs = self.prognoses.get(area_id, {})

        def polyline(traj) -> list[list[float]]:
            pts = [
                [ev.time, dist[ev.node_id]]
                for ev in traj.events
                if ev.node_id in dist
            ]
            if t_from is not None:
                pts = [p for p in pts if p[0] >= t_from]
            if t_to is not None:
                pts = [p for p in pts if p[0] <= t_to]
            return pts

        trains = {}
        for train_id, traj in sorted(progs.items()):
            trains.setdefault(
                train_id,
                {"train_id": train_id, "prognosis": [], "planned": [], "delay": 0},
            )
            trains[train_id]["prognosis"] = polyline(traj)
            trains[train_id]["delay"] = self._display_delay(train_id, traj)
        if solution is not None:
            for train_id, traj in sorted(solution.trajectories.items()):
                trains.setdefault(
                    train_id,
                    {"train_id": train_id, "prognosis": [], "planned": [], "delay": 0},
                )
                trains[train_id]["planned"] = polyline(traj)
        return {
            "area_id": area_id,
            "now": self.world.clock,
            "trains": list(trains.values()),
            "boundaries": [
                {"node": n, "distance": dist[n]}
                for n in sorted(area.boundary_nodes)
                if n in dist
            ],
        }

    def _display_delay(self, train_id: str, traj) -> int:
        """Headline lateness for the console: entry delay or next stop delay."""
        run = self.world.runs.get(train_id)
        entry_delay = 0
        if run is not None:
            anchor = self.world.anchor(train_id)
            if anchor is not None and anchor[0] == run.entry_signal:
                entry_delay = max(0, anchor[1] - run.scheduled_entry)
        stop_delay = traj.stop_times[0].arrival_delay if traj.stop_times else 0
        return max(entry_delay, stop_delay)

    def _linear_reference(self, area) -> dict[str, float]:
        """Cumulative meters along the area, anchored at its smallest node."""
        nodes = area.nodes(self.network)
        start = min(area.boundary_nodes) if area.boundary_nodes else min(nodes)
        dist = {start: 0.0}
        frontier = [start]
        while frontier:
            at = frontier.pop(0)
            for sec in self.network.sections.values():
                if sec.id not in area.section_ids or at not in sec.ends():
                    continue
                other = sec.other_end(at)
                if other not in dist:
                    dist[other] = dist[at] + sec.length
                    frontier.append(other)
        return dist


def create_app(orch: Orchestrator) -> FastAPI:
    app = FastAPI(title="raildesk", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.orchestrator = orch

    @app.get("/areas")
    def list_areas() -> list[dict]:
        with orch.lock:
            return [
                {
                    "id": st.area_id,
                    "gap": st.last_gap,
                    "status": st.last_status,
                    "objective": st.last_objective,
                    "conflict_count": st.conflict_count,
                    "solved_at": st.solved_at,
                    "now": orch.world.clock,
                }
                for st in sorted(orch.area_status.values(), key=lambda s: s.area_id)
            ]

    @app.get("/areas/{area_id}/recommendations")
    def list_recommendations(area_id: str, status: str | None = None,
                             request: Request = None, response: Response = None):
        if area_id not in orch.area_status:
            raise HTTPException(404, f"unknown area {area_id}")
        wanted = None
        if status:
            try:
                wanted = dispatch.RecommendationStatus(status)
            except ValueError:
                raise HTTPException(422, f"unknown status {status}") from None
        with orch.lock:
            etag = orch.etag()
            if request is not None and request.headers.get("if-none-match") == etag:
                return Response(status_code=304)
            recs = orch.registry.by_status(wanted, area_id=area_id)
            payload = [rec.to_wire() for rec in recs]
        resp = Response(
            content=json.dumps({"now": orch.world.clock, "recommendations": payload}),
            media_type="application/json",
        )
        resp.headers["ETag"] = etag
        return resp

    def _apply(rec_id: str, action: str):
        try:
            return orch.act(rec_id, action).to_wire()
        except KeyError:
            raise HTTPException(404, f"unknown recommendation {rec_id}") from None
        except InvalidTransition as exc:
            raise HTTPException(409, f"InvalidTransition: {exc}") from None

    @app.post("/recommendations/{rec_id}/dispatcher")
    def dispatcher_action(rec_id: str, body: dict):
        action = body.get("action")
        if action not in ("accept", "reject"):
            raise HTTPException(422, "action must be accept or reject")
        return _apply(rec_id, f"dispatcher_{action}")

    @app.post("/recommendations/{rec_id}/setter")
    def setter_action(rec_id: str, body: dict):
        action = body.get("action")
        if action not in ("accept", "reject"):
            raise HTTPException(422, "action must be accept or reject")
        return _apply(rec_id, f"setter_{action}")

    @app.post("/recommendations/{rec_id}/feedback", status_code=204)
    def feedback(rec_id: str, body: dict):
        thumb = body.get("thumb")
        if thumb not in ("up", "down"):
            raise HTTPException(422, "thumb must be up or down")
        try:
            orch.feedback(rec_id, dispatch.Thumb.UP if thumb == "up" else dispatch.Thumb.DOWN)
        except KeyError:
            raise HTTPException(404, f"unknown recommendation {rec_id}") from None
        except FeedbackAlreadySet:
            raise HTTPException(409, "FeedbackAlreadySet") from None
        return Response(status_code=204)

    @app.get("/areas/{area_id}/timedistance")
    def timedistance(
        area_id: str,
        t_from: int | None = Query(None, alias="from"),
        t_to: int | None = Query(None, alias="to"),
    ):
        try:
            with orch.lock:
                return orch.timedistance(area_id, t_from, t_to)
        except KeyError:
            raise HTTPException(404, f"unknown area {area_id}") from None

    @app.get("/metrics")
    def metrics():
        with orch.lock:
            return orch.metrics.as_dict()

    @app.post("/sim/control", status_code=204)
    def sim_control(body: dict):
        action = body.get("action")
        if action == "pause":
            orch.pause()
        elif action == "resume":
            orch.start()
        elif action == "step":
            dt = int(body.get("dt", 1))
            if dt <= 0:
                raise HTTPException(422, "dt must be > 0")
            orch.tick(dt)
        else:
            raise HTTPException(422, "action must be pause, resume or step")
        return Response(status_code=204)

    return app
