import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from odbgrowth.errors import ConfigError, DomainError
from odbgrowth.growth import (NEG_INF, HeightProfile, geometric_checkpoints, noise_row,
                              run_flat_ring, run_stalk, stalk_table, step_db, step_odb)


def step_many(profile, rates, key, steps, stepper=step_odb):
    for t in range(steps):
        profile = stepper(profile, rates, noise_row(key, profile.heights.size, profile.t))
    return profile


def test_single_step_by_hand():
    prof = HeightProfile(
        "ring", [0, 2, 1, 1])
    out = step_odb(prof, np.ones(4), np.array([0.5, 0.0, 0.9, 0.0]))
    # eps = [1, 1, 1, 1]; left neighbour of site 0 is site 3
    assert out.heights.tolist() == [1, 3, 2, 2]
    out = step_db(prof, np.zeros(4), np.zeros(4))
    assert out.heights.tolist() == [2, 2, 2, 1]
    assert out.t == 1


def test_stalk_outside_lattice_is_neg_inf():
    prof = HeightProfile.stalk(3)
    out = step_odb(prof, np.ones(3), np.zeros(3))
    assert out.heights.tolist() == [1, 0, NEG_INF]
    assert out.finite()[2] == -np.inf


def test_extreme_rates():
    ts = np.arange(0, 21)
    ones = run_flat_ring(np.ones(5), [3], ts)[0, 0]
    zeros = run_flat_ring(np.zeros(5), [3], ts)[0, 0]
    assert ones.tolist() == ts.tolist()
    assert np.all(zeros == 0)


def test_in_place_kernels_agree_with_reference_stepper():
    rng = np.random.default_rng(1)
    p = rng.uniform(0, 0.6, 9)
    times = np.arange(0, 40)
    for variant, stepper in (("odb", step_odb), ("db", step_db)):
        fast = run_flat_ring(p, [77], times, range(9), variant)[0]
        prof = HeightProfile.flat(9)
        for t in times:
            assert fast[:, t].tolist() == prof.heights.tolist()
            prof = step_many(prof, p, 77, 1, stepper)
    table = stalk_table(p, np.uint64(5), 30)
    prof = HeightProfile.stalk(9)
    for t in range(31):
        assert table[t].tolist() == prof.heights.tolist()
        prof = step_many(prof, p, 5, 1)


def test_run_stalk_checkpoints_match_table():
    p = np.full(6, 0.3)
    table = stalk_table(p, np.uint64(9), 25)
    cps = [(25, 2), (3, 0), (10, 5), (4, 5), (25, 9)]
    vals = run_stalk(p, 25, 9, cps)
    assert vals.tolist() == [table[25, 2], table[3, 0], table[10, 5], NEG_INF, NEG_INF]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=8), st.integers(0, 5), st.integers(0, 2**32))
def test_monotone_coupling(base, bump, key):
    """A higher start stays higher under shared noise, by at most the initial gap."""
    lo = HeightProfile("ring", base)
    hi = HeightProfile("ring", [h + (bump if i % 2 else 0) for i, h in enumerate(base)])
    p = np.full(len(base), 0.4)
    for stepper in (step_odb, step_db):
        a, b = step_many(lo, p, key, 15, stepper), step_many(hi, p, key, 15, stepper)
        assert np.all(b.heights >= a.heights)
        assert np.all(b.heights - a.heights <= bump)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=3, max_size=6), st.integers(0, 2**32))
def test_shift_commutes(base, key):
    p = np.full(len(base), 0.3)
    a = step_many(HeightProfile("ring", base), p, key, 10)
    b = step_many(HeightProfile("ring", [h + 4 for h in base]), p, key, 10)
    assert (b.heights - a.heights).tolist() == [4] * len(base)


def test_db_dominates_odb():
    p = np.full(30, 0.2)
    ts = np.arange(1, 200)
    odb = run_flat_ring(p, [1, 2, 3], ts, range(30), "odb")
    db = run_flat_ring(p, [1, 2, 3], ts, range(30), "db")
    assert np.all(db >= odb)


def test_checkpoints():
    assert geometric_checkpoints(16).tolist() == [1, 2, 4, 8, 16]
    assert geometric_checkpoints(10).tolist() == [1, 2, 3, 5, 10]
    assert geometric_checkpoints(5, dense=True).tolist() == [1, 2, 3, 4, 5]
    assert len(geometric_checkpoints(1024, per_octave=2)) == 20


def test_guards():
    with pytest.raises(ConfigError):
        run_flat_ring([0.1], [1], [1])
    with pytest.raises(ConfigError):
        run_flat_ring([0.1, 0.2], [1], [3, 2])
    with pytest.raises(ConfigError):
        run_flat_ring([0.1, 0.2], [1], [1], variant="kpz")
    with pytest.raises(DomainError):
        run_flat_ring([0.1, 1.2], [1], [1])
    with pytest.raises(DomainError):
        run_stalk([0.1], 5, 1, [(6, 0)])
    with pytest.raises(ConfigError):
        HeightProfile("torus", [0, 0])
