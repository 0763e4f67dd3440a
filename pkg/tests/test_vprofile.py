import math
import random

import pytest

from raildesk import errors, vprofile
from raildesk.infra import Chain
from raildesk.traffic import Train, TrainCategory


def make_train(v_max=40.0, accel=0.5, decel=0.7):
    return Train(
        id="t",
        priority_weight=1.0,
        v_max=v_max,
        accel=accel,
        decel=decel,
        category=TrainCategory.LOCAL,
    )


def make_chain(length, limit=100.0, sections=1):
    per = length / sections
    return Chain(
        nodes=tuple(f"n{i}" for i in range(sections + 1)),
        sections=tuple(f"s{i}" for i in range(sections)),
        lengths=tuple(per for _ in range(sections)),
        limits=tuple(limit for _ in range(sections)),
    )


def closed_form_time(length, v_entry, v_peak, v_exit, a, b):
    """Independent uniform-acceleration oracle."""
    d_acc = (v_peak ** 2 - v_entry ** 2) / (2 * a)
    d_brk = (v_peak ** 2 - v_exit ** 2) / (2 * b)
    d_cruise = length - d_acc - d_brk
    assert d_cruise >= -1e-9
    return (
        (v_peak - v_entry) / a
        + (v_peak - v_exit) / b
        + max(0.0, d_cruise) / v_peak
    )


# -- enumeration --------------------------------------------------------------


def test_two_level_set_yields_four_profiles_on_long_chain():
    train = make_train(v_max=20.0)
    chain = make_chain(10000)
    levels = vprofile.SpeedLevelSet((0.0, 20.0))
    triples = {p.as_triple() for p in vprofile.enumerate_vprofiles(chain, train, levels)}
    assert triples == {(0, 20, 0), (0, 20, 20), (20, 20, 0), (20, 20, 20)}


def test_three_level_set_yields_thirteen_profiles():
    train = make_train(v_max=30.0)
    chain = make_chain(20000)
    levels = vprofile.SpeedLevelSet((0.0, 15.0, 30.0))
    assert len(vprofile.enumerate_vprofiles(chain, train, levels)) == 13


@pytest.mark.parametrize("n_levels", [2, 3, 4])
def test_enumeration_count_formula(n_levels):
    # all-feasible long chain: sum of k^2 over peak ranks 2..n
    train = make_train(v_max=40.0)
    chain = make_chain(50000)
    speeds = tuple(40.0 * i / (n_levels - 1) for i in range(n_levels))
    levels = vprofile.SpeedLevelSet(speeds)
    got = len(vprofile.enumerate_vprofiles(chain, train, levels))
    brute = 0
    for peak in speeds[1:]:
        opts = [v for v in speeds if v <= peak]
        brute += len(opts) ** 2
    assert got == brute == sum(k * k for k in range(2, n_levels + 1))


def test_short_chain_prunes_by_kinematic_feasibility():
    train = make_train(v_max=40.0)
    chain = make_chain(1.0)
    levels = vprofile.SpeedLevelSet((0.0, 40.0))
    # no stop-capable profile fits one meter, so the chain is infeasible
    with pytest.raises(errors.InfeasibleChain):
        vprofile.enumerate_vprofiles(chain, train, levels)
    # the closed-form distance check decides feasibility per triple
    for entry in (0.0, 40.0):
        for exit_ in (0.0, 40.0):
            p = vprofile.VProfile(entry, 40.0, exit_)
            d_acc = (40.0 ** 2 - entry ** 2) / (2 * train.accel)
            d_brk = (40.0 ** 2 - exit_ ** 2) / (2 * train.decel)
            assert vprofile.profile_fits(p, chain, train) == (d_acc + d_brk <= 1.0)


def test_stop_profile_always_present_with_default_level_set():
    rng = random.Random(5)
    for _ in range(100):
        train = make_train(
            v_max=rng.uniform(10, 50),
            accel=rng.uniform(0.2, 1.0),
            decel=rng.uniform(0.3, 1.2),
        )
        chain = make_chain(rng.uniform(50, 20000), limit=rng.uniform(10, 50))
        levels = vprofile.level_set(chain, train)
        profiles = vprofile.enumerate_vprofiles(chain, train, levels)
        assert any(p.entry_speed == 0 and p.exit_speed == 0 for p in profiles)


def test_empty_chain_rejected():
    train = make_train()
    chain = Chain(nodes=("a",), sections=(), lengths=(), limits=())
    with pytest.raises(errors.EmptyChain):
        vprofile.enumerate_vprofiles(chain, train, vprofile.SpeedLevelSet((0.0, 10.0)))


# -- running time --------------------------------------------------------------


def test_running_time_spec_example():
    # 1000 m, a = 0.5, profile (0, 20, 20): 40 s acceleration over 400 m,
    # then 600 m cruise at 20 -> 70 s
    train = make_train(accel=0.5)
    chain = make_chain(1000)
    assert vprofile.running_time(vprofile.VProfile(0, 20, 20), chain, train) == 70


def test_pure_cruise_is_ceil_distance_over_speed():
    train = make_train()
    chain = make_chain(1001)
    t = vprofile.running_time(vprofile.VProfile(25, 25, 25), chain, train)
    assert t == math.ceil(1001 / 25)


def test_infeasible_profile_raises():
    train = make_train(accel=0.3, decel=0.3)
    chain = make_chain(100)
    with pytest.raises(errors.InfeasibleProfile):
        vprofile.running_time(vprofile.VProfile(0, 40, 0), chain, train)


def test_running_time_matches_closed_form_oracle():
    rng = random.Random(99)
    for _ in range(300):
        length = rng.uniform(200, 20000)
        a = rng.uniform(0.2, 1.2)
        b = rng.uniform(0.3, 1.4)
        v = rng.uniform(5, 50)
        train = make_train(v_max=v, accel=a, decel=b)
        chain = make_chain(length)
        entry = rng.choice([0.0, v / 2, v])
        exit_ = rng.choice([0.0, v / 2, v])
        p = vprofile.VProfile(entry, v, exit_)
        if not vprofile.profile_fits(p, chain, train):
            continue
        oracle = closed_form_time(length, entry, v, exit_, a, b)
        assert vprofile.running_time(p, chain, train) == math.ceil(oracle - 1e-9)


def test_rounding_is_always_upward():
    train = make_train()
    chain = make_chain(1000)
    p = vprofile.VProfile(0, 20, 20)
    exact = closed_form_time(1000, 0, 20, 20, train.accel, train.decel)
    assert vprofile.running_time(p, chain, train) >= exact


def test_monotone_in_entry_and_exit_speed():
    train = make_train()
    chain = make_chain(5000)
    base = vprofile.running_time(vprofile.VProfile(0, 30, 0), chain, train)
    faster_entry = vprofile.running_time(vprofile.VProfile(15, 30, 0), chain, train)
    faster_exit = vprofile.running_time(vprofile.VProfile(0, 30, 15), chain, train)
    assert faster_entry <= base
    assert faster_exit <= base


# -- min running time ------------------------------------------------------------


def test_min_running_time_is_full_cruise_for_single_level():
    train = make_train(v_max=25.0)
    chain = make_chain(10000, limit=25.0)
    levels = vprofile.SpeedLevelSet((0.0, 25.0))
    expected = vprofile.running_time(vprofile.VProfile(25, 25, 25), chain, train)
    assert vprofile.min_running_time(chain, train, levels) == expected


def test_min_running_time_matches_exhaustive_enumeration():
    train = make_train()
    chain = make_chain(4200, limit=33.0)
    levels = vprofile.level_set(chain, train)
    profiles = vprofile.enumerate_vprofiles(chain, train, levels)
    brute = min(vprofile.running_time(p, chain, train) for p in profiles)
    assert vprofile.min_running_time(chain, train, levels) == brute


def test_extra_level_never_increases_minimum():
    train = make_train(v_max=30.0)
    chain = make_chain(8000, limit=30.0)
    small = vprofile.SpeedLevelSet((0.0, 30.0))
    bigger = vprofile.SpeedLevelSet((0.0, 18.0, 30.0))
    assert vprofile.min_running_time(chain, train, bigger) <= vprofile.min_running_time(
        chain, train, small
    )


# -- offsets ---------------------------------------------------------------------


def test_section_offsets_cover_chain_and_match_running_time():
    train = make_train()
    chain = make_chain(6000, sections=3)
    p = vprofile.VProfile(0, 30, 0)
    offs = vprofile.section_offsets(p, chain, train)
    assert len(offs) == 3
    assert offs[0][0] == 0
    assert offs[-1][1] == vprofile.running_time(p, chain, train)
    for (a_in, a_out), (b_in, b_out) in zip(offs, offs[1:]):
        assert a_in < a_out
        assert b_in <= a_out  # floor/ceil rounding may overlap by <= 1 s
        assert b_in >= a_out - 1
