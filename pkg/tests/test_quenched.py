
import numpy as np
import pytest

from odbgrowth.disorder import make_power_edge, sample_environment
from odbgrowth.errors import DomainError, PreconditionError
from odbgrowth.quenched import (eval_cn, existence_sum, saddle_diagnostics, sigma,
                                sigma_derivatives, solve_un)
from odbgrowth.rng import Stream


def test_single_column_hand_solution():
    q = solve_un(np.array([1.0]), 0.25)
    assert q.exists
    assert q.u == pytest.approx(-1 / 3, abs=1e-14)
    assert q.c == pytest.approx(7 / 8, abs=1e-14)
    assert eval_cn(np.array([1.0]), 0.25, -1 / 3) == pytest.approx(7 / 8, abs=1e-14)


def test_cn_at_zero_is_one():
    assert eval_cn(np.array([0.5, 0.2]), 0.3, 0.0) == 1.0


def test_homogeneous_environment_reduces_to_one_column():
    r = 0.6
    many = solve_un(np.full(50, r), 0.25)
    one = solve_un(np.array([r]), 0.25)
    assert many.u == pytest.approx(one.u, rel=1e-12)
    assert many.c == pytest.approx(one.c, rel=1e-12)


def test_existence_precondition():
    r = np.array([0.9, 0.9])
    assert existence_sum(r, 2.0) >= 1
    with pytest.raises(PreconditionError):
        solve_un(r, 2.0)
    assert not solve_un(r, 2.0, strict=False).exists
    with pytest.raises(PreconditionError):
        solve_un(np.zeros(3), 0.5)


def test_root_lies_inside_interval_and_is_monotone_in_alpha():
    env = sample_environment(make_power_edge(3), 2000, Stream.from_seed(4))
    us = []
    for alpha in (0.05, 0.1, 0.2, 0.3, 0.4):
        q = solve_un(env, alpha)
        assert -1 / env.r[0] < q.u < 0
        assert q.equation_residual <= 1e-10
        us.append(q.u)
    # a larger alpha raises the left side, pushing the root away from the pole
    assert np.all(np.diff(us) > 0)


def test_saddle_residuals_vanish():
    m = make_power_edge(3)
    s = Stream.from_seed(8)
    for e, n in enumerate((1000, 5000, 20000)):
        env = sample_environment(m, n, s.child(e))
        q = solve_un(env, 0.25)
        assert q.sigma1 <= 1e-9 and q.sigma2 <= 1e-9
        s1, s2 = sigma_derivatives(env, 0.25, q.c, q.u)
        assert abs(s1) <= 1e-9 and abs(s2) <= 1e-6


def test_sigma_prime_matches_finite_difference():
    env = sample_environment(make_power_edge(3), 500, Stream.from_seed(2))
    c = solve_un(env, 0.25).c
    for z in (-0.9, -0.3, 0.4, 3.0):
        d = 1e-6
        fd = (sigma(env, 0.25, c, z + d) - sigma(env, 0.25, c, z - d)) / (2 * d)
        s1, s2 = sigma_derivatives(env, 0.25, c, z)
        assert fd == pytest.approx(s1, abs=1e-7)
        fd2 = (sigma_derivatives(env, 0.25, c, z + d)[0] - sigma_derivatives(env, 0.25, c, z - d)[0]) / (2 * d)
        assert fd2 == pytest.approx(s2, rel=1e-5, abs=1e-6)


def test_sigma_prime_diverges_at_origin():
    r = np.array([0.5])
    small = sigma_derivatives(r, 0.25, 0.8, -1e-8)[0]
    assert small > 1e6
    with pytest.raises(DomainError):
        sigma_derivatives(r, 0.25, 0.8, 0.0)
    with pytest.raises(DomainError):
        sigma_derivatives(r, 0.25, 0.8, -2.0)


def test_diagnostics_trend_towards_one():
    m = make_power_edge(3)
    s = Stream.from_seed(21)
    med = {}
    for n in (1000, 30000):
        ratios = [saddle_diagnostics(m, sample_environment(m, n, s.child(n, e)), 0.25) for e in range(25)]
        med[n] = (np.median([r["u_ratio"] for r in ratios]), np.median([r["c_ratio"] for r in ratios]))
    assert abs(med[30000][0] - 1) < abs(med[1000][0] - 1)
    assert abs(med[30000][1] - 1) < abs(med[1000][1] - 1)
