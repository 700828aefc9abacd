import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from odbgrowth.disorder import (Environment, Integrand, g_inverse, g_tail, make_atoms,
                                make_point_mass, make_power_edge, moment, sample_environment,
                                sample_rates)
from odbgrowth.errors import DomainError
from odbgrowth.rng import Stream


def test_power_edge_tail_and_inverse():
    m = make_power_edge(3, 0.5)
    assert g_tail(m, 0.25) == pytest.approx(0.125, abs=1e-15)
    assert g_inverse(m, 1 / 8) == pytest.approx(0.25, abs=1e-15)
    assert g_tail(m, 0.0) == 0.0 and g_tail(m, 0.5) == 1.0
    assert g_inverse(m, 0.0) == 0.0 and g_inverse(m, 1.0) == 0.5


def test_condition_flags_follow_eta():
    assert make_power_edge(3).weak_conditions and make_power_edge(3).strong_conditions
    assert not make_power_edge(1).weak_conditions
    assert not make_power_edge(2).strong_conditions


@pytest.mark.parametrize("eta,b", [(0, 0.5), (-1, 0.5), (2, 0), (2, 1), (2, 1.5)])
def test_power_edge_domain_errors(eta, b):
    with pytest.raises(DomainError):
        make_power_edge(eta, b)


def test_tail_domain_errors():
    m = make_power_edge(2)
    with pytest.raises(DomainError):
        g_tail(m, 0.6)
    with pytest.raises(DomainError):
        g_inverse(m, 1.2)


@pytest.mark.parametrize("eta,b", [(0.2, 0.5), (1, 0.5), (3, 0.5), (5, 0.3), (2.5, 0.8)])
def test_cdf_edge_and_normalisation(eta, b):
    m = make_power_edge(eta, b)
    assert m.cdf(0.0) == 0.0
    assert m.cdf(b) == 1.0
    assert m.cdf(b * (1 - 1e-3)) < 1.0
    s = np.linspace(0, b, 50)
    assert np.all(np.diff(m.cdf(s)) >= 0)
    assert moment(m, "custom", func=lambda p: 1.0) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(eta=st.floats(0.1, 8), b=st.floats(0.05, 0.95), x=st.floats(0, 1))
def test_inverse_undoes_tail(eta, b, x):
    m = make_power_edge(eta, b)
    assert g_inverse(m, g_tail(m, x * b)) == pytest.approx(x * b, abs=1e-12)


def test_closed_forms_match_quadrature():
    for eta in (2.5, 3, 4, 7):
        m = make_power_edge(eta)
        for tag in (Integrand.EDGE_VARIANCE, Integrand.EDGE_ODDS):
            assert moment(m, tag) == pytest.approx(moment(m, tag, closed_form=False), rel=1e-9)


def test_eta3_edge_variance_is_two():
    m = make_power_edge(3, 0.5)
    assert moment(m, Integrand.EDGE_VARIANCE) == pytest.approx(2.0, abs=1e-12)
    # hand integral: int_0^{1/2} (1/4 - q^2) 24 q^2 / q^2 dq
    assert integrate.quad(lambda q: (0.25 - q * q) * 24, 0, 0.5)[0] == pytest.approx(2.0)


def test_divergent_moments_are_infinite():
    assert math.isinf(moment(make_power_edge(1), Integrand.EDGE_VARIANCE))
    assert math.isinf(moment(make_power_edge(2), Integrand.EDGE_VARIANCE))
    assert math.isinf(moment(make_power_edge(0.5), Integrand.EDGE_ODDS))
    assert math.isinf(moment(make_power_edge(1), "custom", func=lambda p: 1 / (0.5 - p) ** 2))


def test_odds_moment_by_quadrature():
    m = make_power_edge(1, 0.5)
    want = integrate.quad(lambda p: 2 * p / (1 - p), 0, 0.5)[0]
    assert moment(m, Integrand.ODDS) == pytest.approx(want, abs=1e-10)


def test_a_moments_continuous_in_a():
    m = make_power_edge(3)
    edge = moment(m, Integrand.EDGE_VARIANCE)
    near = moment(m, Integrand.A_VARIANCE, a=0.5 + 1e-9)
    assert near == pytest.approx(edge, rel=1e-6)
    # at a = 1 the variance bracket reduces to the odds bracket
    assert moment(m, Integrand.A_VARIANCE, a=1.0) == pytest.approx(moment(m, Integrand.ODDS), rel=1e-9)


def test_a_moment_parameter_checks():
    m = make_power_edge(3)
    with pytest.raises(DomainError):
        moment(m, Integrand.A_ODDS, a=0.4)
    with pytest.raises(DomainError):
        moment(m, Integrand.CUSTOM)


def test_point_mass_moments():
    m = make_point_mass(0.3)
    assert m.family == "point-mass" and m.b == 0.3
    assert moment(m, Integrand.ODDS) == pytest.approx(0.3 / 0.7)
    assert math.isinf(moment(m, Integrand.EDGE_VARIANCE))


def test_tabulated_family():
    m = make_atoms([(0.1, 0.25), (0.3, 0.5), (0.1, 0.25)])
    assert m.atoms == ((0.1, 0.5), (0.3, 0.5))
    assert m.b == 0.3
    assert g_tail(m, 0.0) == pytest.approx(0.5)
    assert g_tail(m, 0.2) == pytest.approx(1.0)
    assert g_inverse(m, 0.5) == pytest.approx(0.0)
    assert g_inverse(m, 0.75) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        make_atoms([(0.1, 0.4)])
    with pytest.raises(DomainError):
        make_atoms([(1.0, 1.0)])


def test_environment_sequences_consistent():
    env = Environment(np.array([0.1, 0.4, 0.25]), 0.5)
    assert list(env.p) == [0.4, 0.25, 0.1]
    assert np.all(env.q == 0.5 - env.p)
    assert np.all(env.r == env.p / (1 - env.p))
    assert np.all(np.diff(env.q) >= 0) and np.all(np.diff(env.r) <= 0)
    with pytest.raises(ValueError):
        env.p[0] = 0.3
    with pytest.raises(DomainError):
        Environment(np.array([0.6]), 0.5)


def test_sample_environment_deterministic_and_in_range():
    m = make_power_edge(3)
    s = Stream.from_seed(2)
    e1, e2 = sample_environment(m, 1000, s), sample_environment(m, 1000, s)
    assert np.array_equal(e1.p, e2.p)
    assert e1.p.min() >= 0 and e1.p.max() <= 0.5
    one = sample_environment(m, 1, s)
    assert one.n == 1 and 0 <= one.p[0] <= 0.5
    assert np.all(sample_environment(make_point_mass(0.2), 7, s).p == 0.2)


def test_inversion_sampling_within_dkw_band():
    m = make_power_edge(3)
    p = np.sort(sample_rates(m, 100_000, Stream.from_seed(11)))
    n = p.size
    f = m.cdf(p)
    d = max(np.max(np.arange(1, n + 1) / n - f), np.max(f - np.arange(n) / n))
    band = math.sqrt(math.log(2 / 1e-3) / (2 * n))
    assert d <= band
