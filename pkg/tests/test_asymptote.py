import math

import numpy as np
import pytest

from spherint.asymptote import (
    BOUNDARY_MAX,
    INTERIOR,
    SATURATED_MAX,
    SATURATED_MIN,
    ZERO,
    DiracDegenerate,
    classify,
    clt_prefactor,
    complex_rank_one_limit,
    finite_n_leading_term,
    finite_rank_limit,
    rank_one_limit,
    small_theta_integral,
    taylor_coefficients,
    theta_guard,
)
from spherint.measure import bernoulli, dirac, quantile_discretize, semicircle_grid, trimmed_bernoulli, uniform_grid
from spherint.transform import DomainError


def edge_energy(mu, theta, z):
    """θz − ½ − ½ log 2θ − ½ Σ w log(z − λ), evaluated at a point z above the atoms."""
    return theta * z - 0.5 - 0.5 * math.log(2 * theta) - 0.5 * float(np.dot(mu.weights, np.log(z - mu.positions)))


def test_interior_matches_closed_form_energy():
    mu = bernoulli()
    for theta in (0.1, 0.4, 1.5):
        g = 2 * theta
        k = (1 + math.sqrt(1 + 4 * g * g)) / (2 * g)
        assert rank_one_limit(mu, theta).value == pytest.approx(edge_energy(mu, theta, k), abs=1e-12)


def test_saturated_matches_closed_form_energy():
    mu = trimmed_bernoulli()
    res = rank_one_limit(mu, 1.0)
    assert res.regime == SATURATED_MAX
    assert res.value == pytest.approx(edge_energy(mu, 1.0, 1.5), abs=1e-13)
    assert res.v_theta == pytest.approx(1.0)
    low = rank_one_limit(mu, -1.0)
    assert low.regime == SATURATED_MIN
    assert low.value == pytest.approx(res.value, abs=1e-13)


def test_regimes_and_continuity():
    mu = trimmed_bernoulli()
    assert classify(mu, 0.0) == ZERO
    assert classify(mu, 0.3) == INTERIOR
    assert classify(mu, 0.6) == BOUNDARY_MAX
    assert classify(mu, 0.61) == SATURATED_MAX
    assert classify(mu, 0.61, beta=2) == INTERIOR
    left, mid, right = (rank_one_limit(mu, t).value for t in (0.6 - 1e-9, 0.6, 0.6 + 1e-9))
    assert abs(mid - left) < 1e-8 and abs(right - mid) < 1e-8


def test_zero_theta():
    res = rank_one_limit(bernoulli(p=0.3), 0.0)
    assert res.value == 0.0 and res.regime == ZERO
    assert res.v_theta == pytest.approx(-0.4)


def test_beta_scaling():
    mu = uniform_grid(80, -1, 1)
    for theta in (0.2, -0.7):
        assert rank_one_limit(mu, theta, 2).value == pytest.approx(2 * rank_one_limit(mu, theta / 2, 1).value,
                                                                   abs=1e-13)


def test_dirac_limit():
    res = rank_one_limit(dirac(-0.75), 2.0)
    assert res.value == -1.5 and res.v_theta == -0.75
    assert small_theta_integral(dirac(-0.75), 2.0) == -1.5


def test_small_theta_integral_rejects_saturated():
    with pytest.raises(DomainError):
        small_theta_integral(trimmed_bernoulli(), 1.0)


def test_finite_n_term_bernoulli_is_exact():
    # the Bernoulli empirical measure equals the limit for even N
    spec = quantile_discretize(bernoulli(), 40)
    assert finite_n_leading_term(spec, 0.3) == pytest.approx(rank_one_limit(bernoulli(), 0.3).value, abs=1e-13)


def test_clt_prefactor():
    mu = bernoulli()
    p = clt_prefactor(mu, 0.25)
    k = (1 + math.sqrt(2)) / 1.0
    z = 0.5 / (k - 1) ** 2 + 0.5 / (k + 1) ** 2
    assert p.z_value == pytest.approx(z)
    assert p.prefactor == pytest.approx(0.5 / math.sqrt(z))
    assert p.sqrt_gap_form == pytest.approx(math.sqrt(z - 0.25) / (0.25 * math.sqrt(z)))
    assert clt_prefactor(mu, 1e-5).prefactor == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(DiracDegenerate):
        clt_prefactor(dirac(1.0), 0.2)
    with pytest.raises(DomainError):
        clt_prefactor(trimmed_bernoulli(), 1.0)


def test_complex_limit_on_real_axis():
    mu = semicircle_grid(500)
    t = 0.5 * theta_guard(mu)
    assert complex_rank_one_limit(mu, t).real == pytest.approx(rank_one_limit(mu, t).value, abs=1e-12)
    with pytest.raises(DomainError):
        complex_rank_one_limit(mu, 2 * theta_guard(mu))


def test_taylor_coefficients_bernoulli():
    a = taylor_coefficients(bernoulli(), 6)
    expected = [0, 0, 1, 0, -2, 0, 32 * 2 / 6]
    assert np.allclose(a, expected, atol=1e-8)


def test_taylor_dirac():
    assert taylor_coefficients(dirac(2.0), 3) == [0j, 2 + 0j, 0j, 0j]


def test_finite_rank_limit():
    mu = bernoulli()
    assert finite_rank_limit(mu, [0.1, 0.3]) == pytest.approx(
        (rank_one_limit(mu, 0.1).value + rank_one_limit(mu, 0.3).value) / 2)
    with pytest.raises(DomainError):
        finite_rank_limit(trimmed_bernoulli(), [0.1, 1.0])
