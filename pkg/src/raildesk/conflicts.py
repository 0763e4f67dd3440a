"""Conflict detection over predicted or planned trajectories.

Three kinds are in scope: two trains occupying the same section (or sections
of mutually exclusive routes), a train running late at a customer stop, and
occupation of a section during an availability restriction.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .infra import Network, overlaps
from .traffic import Trajectory

# Occupations extend past the exit by a release margin, standing in for
# block-release behaviour.
DEFAULT_RELEASE_MARGIN = 30
DEFAULT_SCHEDULE_THRESHOLD = 90


class ConflictKind(str, Enum):
    TRACK_OCCUPANCY = "TrackOccupancy"
    SCHEDULE = "Schedule"
    CLOSED_TRACK = "ClosedTrack"


@dataclass(frozen=True)
class Conflict:
    kind: ConflictKind
    train_ids: tuple[str, ...]
    location: str
    window: tuple[int, int]
    severity: int

    def __post_init__(self) -> None:
        expected = 2 if self.kind is ConflictKind.TRACK_OCCUPANCY else 1
        if len(self.train_ids) != expected:
            raise ValueError(f"{self.kind.value} needs {expected} train(s)")


def _occupation_windows(
    traj: Trajectory, release: int
) -> list[tuple[str, int, int]]:
    return [(sid, t_in, t_out + release) for sid, t_in, t_out in traj.occupations]


def _route_span(traj: Trajectory, release: int) -> tuple[int, int] | None:
    if not traj.occupations:
        return None
    start = min(t for _, t, _ in traj.occupations)
    end = max(t for _, _, t in traj.occupations) + release
    return (start, end)


def detect_conflicts(
    trajectories: Mapping[str, Trajectory] | Iterable[Trajectory],
    network: Network,
    schedule: bool = True,
    threshold: int = DEFAULT_SCHEDULE_THRESHOLD,
    release: int = DEFAULT_RELEASE_MARGIN,
) -> list[Conflict]:
    """All conflicts on the given trajectories, ordered by window start.

    Track occupancy covers same-section overlap and overlap between the full
    spans of trains on mutually exclusive routes.  Schedule conflicts
    (lateness above threshold at a customer stop) are only reported when
    ``schedule`` is true; optimizer solutions are checked without them, a
    residual delay is not a track conflict.
    """
    trajs = (
        list(trajectories.values())
        if isinstance(trajectories, Mapping)
        else list(trajectories)
    )
    trajs.sort(key=lambda t: t.train_id)
    out: list[Conflict] = []

    by_section: dict[str, list[tuple[str, int, int]]] = {}
    for traj in trajs:
        for sid, t_in, t_out in _occupation_windows(traj, release):
            by_section.setdefault(sid, []).append((traj.train_id, t_in, t_out))

    for sid in sorted(by_section):
        entries = sorted(by_section[sid], key=lambda e: (e[1], e[0]))
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                a, b = entries[i], entries[j]
                if a[0] == b[0]:
                    continue
                if overlaps((a[1], a[2]), (b[1], b[2])):
                    lo = max(a[1], b[1])
                    hi = min(a[2], b[2])
                    out.append(
                        Conflict(
                            kind=ConflictKind.TRACK_OCCUPANCY,
                            train_ids=tuple(sorted((a[0], b[0]))),
                            location=sid,
                            window=(lo, hi),
                            severity=hi - lo,
                        )
                    )

    for i in range(len(trajs)):
        for j in range(i + 1, len(trajs)):
            a, b = trajs[i], trajs[j]
            if not a.route_id or not b.route_id or a.route_id == b.route_id:
                continue
            if not network.excluded(a.route_id, b.route_id):
                continue
            span_a, span_b = _route_span(a, release), _route_span(b, release)
            if span_a and span_b and overlaps(span_a, span_b):
                lo = max(span_a[0], span_b[0])
                hi = min(span_a[1], span_b[1])
                out.append(
                    Conflict(
                        kind=ConflictKind.TRACK_OCCUPANCY,
                        train_ids=tuple(sorted((a.train_id, b.train_id))),
                        location=f"{min(a.route_id, b.route_id)}|{max(a.route_id, b.route_id)}",
                        window=(lo, hi),
                        severity=hi - lo,
                    )
                )

    if schedule:
        for traj in trajs:
            for st in traj.stop_times:
                if not st.is_customer_stop:
                    continue
                lateness = max(st.arrival_delay, st.departure_delay)
                if lateness > threshold:
                    out.append(
                        Conflict(
                            kind=ConflictKind.SCHEDULE,
                            train_ids=(traj.train_id,),
                            location=st.station_id,
                            window=(st.scheduled_arrival, st.arrival),
                            severity=lateness,
                        )
                    )

    for traj in trajs:
        for sid, t_in, t_out in _occupation_windows(traj, release):
            for window in network.restrictions_for(sid):
                if overlaps(window, (t_in, t_out)):
                    lo, hi = max(window[0], t_in), min(window[1], t_out)
                    out.append(
                        Conflict(
                            kind=ConflictKind.CLOSED_TRACK,
                            train_ids=(traj.train_id,),
                            location=sid,
                            window=(lo, hi),
                            severity=hi - lo,
                        )
                    )

    out.sort(key=lambda c: (c.window[0], c.kind.value, c.train_ids, c.location))
    return out
