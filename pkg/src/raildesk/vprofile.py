"""Discrete velocity profiles over signal-to-signal section chains.

A profile is an (entry, peak, exit) speed triple drawn from a discrete level
set: accelerate from entry to peak, cruise, brake to exit.  Running times use
uniform-acceleration kinematics and are rounded up to whole seconds, so a
conservative plan never becomes optimistically feasible.

All functions here are pure; they are safe to evaluate in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .errors import EmptyChain, InfeasibleChain, InfeasibleProfile
from .infra import Chain

if TYPE_CHECKING:  # pragma: no cover
    from .traffic import Train

# Default level-set shape: stop, a reduced "green wave" speed, and the cap.
DEFAULT_LEVEL_FACTORS = (0.6, 1.0)

_SPEED_QUANTUM = 0.001  # speeds are compared after rounding to 1 mm/s


def _q(speed: float) -> float:
    return round(speed, 3)


def chain_cap(chain: Chain, train: "Train") -> float:
    """Effective speed cap: min of train v_max and chain speed limits."""
    return _q(min([train.v_max, *chain.limits]))


@dataclass(frozen=True)
class SpeedLevelSet:
    """Strictly increasing speeds; always contains 0 and the effective cap."""

    levels: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.levels or self.levels[0] != 0.0:
            raise ValueError("level set must start at 0")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")

    @property
    def cap(self) -> float:
        return self.levels[-1]

    def clip(self, speed: float) -> float:
        """Largest level not above the given speed (conservative rounding)."""
        eligible = [v for v in self.levels if v <= _q(speed) + _SPEED_QUANTUM]
        return eligible[-1]


def stop_fit_speed(chain: Chain, train: "Train") -> float:
    """Largest peak for which (0, peak, 0) exactly fits the chain length."""
    blend = train.accel * train.decel / (train.accel + train.decel)
    return math.floor(math.sqrt(2.0 * chain.length * blend) * 1000.0) / 1000.0


def level_set(
    chain: Chain,
    train: "Train",
    factors: Sequence[float] = DEFAULT_LEVEL_FACTORS,
    extra_levels: Sequence[float] = (),
) -> SpeedLevelSet:
    """Build the discrete level set for one chain and train.

    Always includes the largest stop-to-stop peak that fits the chain, so a
    short chain keeps its stop-capable profile.  extra_levels lets callers
    add neighbouring chains' caps so that speed continuity across a limit
    change does not force a stop.
    """
    cap = chain_cap(chain, train)
    levels = {0.0}
    levels.update(_q(f * cap) for f in factors)
    levels.update(_q(v) for v in extra_levels if 0.0 < v <= cap + _SPEED_QUANTUM)
    fit = min(stop_fit_speed(chain, train), cap)
    if fit > 0:
        levels.add(fit)
    levels.discard(0.0)
    return SpeedLevelSet(levels=(0.0, *sorted(v for v in levels if v > 0)))


@dataclass(frozen=True)
class VProfile:
    entry_speed: float
    peak_speed: float
    exit_speed: float

    def as_triple(self) -> tuple[float, float, float]:
        return (self.entry_speed, self.peak_speed, self.exit_speed)


def _phase_distances(profile: VProfile, train: "Train") -> tuple[float, float]:
    """(acceleration distance, braking distance) for the profile."""
    e, p, x = profile.as_triple()
    d_acc = (p * p - e * e) / (2.0 * train.accel)
    d_brk = (p * p - x * x) / (2.0 * train.decel)
    return d_acc, d_brk


def profile_fits(profile: VProfile, chain: Chain, train: "Train") -> bool:
    d_acc, d_brk = _phase_distances(profile, train)
    return d_acc + d_brk <= chain.length + 1e-9


def enumerate_vprofiles(
    chain: Chain, train: "Train", levels: SpeedLevelSet
) -> list[VProfile]:
    """All kinematically feasible (entry, peak, exit) triples, ordered.

    entry <= peak, exit <= peak, peak > 0; triples whose acceleration plus
    braking distance exceeds the chain length are pruned.  The stop-at-both-
    signals profile (0, *, 0) is guaranteed present, otherwise the chain is
    InfeasibleChain.
    """
    if not chain.sections:
        raise EmptyChain(str(chain.nodes))
    out: list[VProfile] = []
    for peak in levels.levels:
        if peak <= 0:
            continue
        for entry in levels.levels:
            if entry > peak:
                continue
            for exit_ in levels.levels:
                if exit_ > peak:
                    continue
                candidate = VProfile(entry, peak, exit_)
                if profile_fits(candidate, chain, train):
                    out.append(candidate)
    if not any(p.entry_speed == 0 and p.exit_speed == 0 for p in out):
        raise InfeasibleChain(
            f"no stop-capable profile fits chain {chain.sections} "
            f"(length {chain.length} m)"
        )
    out.sort(key=VProfile.as_triple)
    return out


def _exact_running_time(profile: VProfile, chain: Chain, train: "Train") -> float:
    e, p, x = profile.as_triple()
    d_acc, d_brk = _phase_distances(profile, train)
    d_cruise = chain.length - d_acc - d_brk
    if d_cruise < -1e-9:
        raise InfeasibleProfile(
            f"profile {profile.as_triple()} needs {d_acc + d_brk:.1f} m, "
            f"chain has {chain.length} m"
        )
    t_acc = (p - e) / train.accel
    t_brk = (p - x) / train.decel
    t_cruise = max(0.0, d_cruise) / p
    return t_acc + t_brk + t_cruise


def running_time(profile: VProfile, chain: Chain, train: "Train") -> int:
    """Chain traversal time in whole seconds, rounded up."""
    return math.ceil(_exact_running_time(profile, chain, train) - 1e-9)


def min_running_time(chain: Chain, train: "Train", levels: SpeedLevelSet | None = None) -> int:
    """Fastest traversal over all enumerable profiles."""
    lv = levels if levels is not None else level_set(chain, train)
    profiles = enumerate_vprofiles(chain, train, lv)
    return min(running_time(p, chain, train) for p in profiles)


def time_at_distance(profile: VProfile, chain: Chain, train: "Train", dist: float) -> float:
    """Seconds from chain entry until the train has covered dist meters."""
    e, p, x = profile.as_triple()
    d_acc, d_brk = _phase_distances(profile, train)
    d_cruise = chain.length - d_acc - d_brk
    if d_cruise < -1e-9:
        raise InfeasibleProfile(str(profile.as_triple()))
    dist = min(max(dist, 0.0), chain.length)
    if dist <= d_acc:
        # v^2 = e^2 + 2 a s
        v = math.sqrt(e * e + 2.0 * train.accel * dist)
        return (v - e) / train.accel
    t = (p - e) / train.accel
    dist -= d_acc
    if dist <= d_cruise + 1e-9:
        return t + dist / p
    t += max(0.0, d_cruise) / p
    dist -= max(0.0, d_cruise)
    v = math.sqrt(max(0.0, p * p - 2.0 * train.decel * dist))
    return t + (p - v) / train.decel


def section_offsets(
    profile: VProfile, chain: Chain, train: "Train"
) -> tuple[tuple[int, int], ...]:
    """Integer (entry, exit) second offsets of each chain section.

    Entry offsets round down and exit offsets round up, so derived occupation
    windows over-cover the exact kinematics; the final exit equals the chain
    running time.
    """
    total = running_time(profile, chain, train)
    offsets: list[tuple[int, int]] = []
    covered = 0.0
    for length in chain.lengths:
        t_in = time_at_distance(profile, chain, train, covered)
        covered += length
        t_out = time_at_distance(profile, chain, train, covered)
        offsets.append((int(t_in), min(total, math.ceil(t_out - 1e-9))))
    if offsets:
        offsets[-1] = (offsets[-1][0], total)
    return tuple(offsets)


def accelerate_time(distance: float, v0: float, cap: float, accel: float) -> float:
    """Time to cover distance starting at v0, accelerating to cap, no stop."""
    v0 = min(v0, cap)
    d_acc = (cap * cap - v0 * v0) / (2.0 * accel)
    if d_acc >= distance:
        v = math.sqrt(v0 * v0 + 2.0 * accel * distance)
        return (v - v0) / accel
    return (cap - v0) / accel + (distance - d_acc) / cap
