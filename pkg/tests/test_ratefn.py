import math

import numpy as np
import pytest

from spherint.asymptote import rank_one_limit
from spherint.measure import bernoulli, dirac, from_atoms, trimmed_bernoulli, uniform_grid
from spherint.ratefn import (
    INFINITE,
    INTERIOR,
    LOWER_TAIL,
    UPPER_TAIL,
    g_pieces,
    h_alpha,
    j_rate,
    legendre_sup,
    rate_table,
    shift_identity_check,
    shift_identity_values,
    t_rate,
)
from spherint.transform import DomainError


def bernoulli_t(alpha):
    # Q(α) = α/(1 − α²) for ±1 Bernoulli, which gives T = −¼ log(1 − α²)
    return -0.25 * math.log(1 - alpha * alpha)


@pytest.mark.parametrize("alpha", [-0.95, -0.5, 0.1, 0.5, 0.99])
def test_bernoulli_rate_closed_form(alpha):
    p = t_rate(bernoulli(), alpha)
    assert p.piece == INTERIOR
    assert p.t_value == pytest.approx(bernoulli_t(alpha), rel=1e-10)


def test_rate_pieces_on_trimmed_measure():
    mu = trimmed_bernoulli()
    assert t_rate(mu, 0.0).t_value == 0.0
    assert t_rate(mu, 0.5).piece == INTERIOR
    assert t_rate(mu, 1.2).piece == UPPER_TAIL
    assert t_rate(mu, -1.2).piece == LOWER_TAIL
    assert t_rate(mu, 1.5).piece == INFINITE and math.isinf(t_rate(mu, 1.5).t_value)


def test_rate_is_nonnegative_and_continuous():
    mu = trimmed_bernoulli()
    alphas = np.linspace(-1.45, 1.45, 291)
    values = np.array([p.t_value for p in rate_table(mu, alphas)])
    assert np.all(values >= 0)
    assert values[np.argmin(np.abs(alphas))] == pytest.approx(0.0, abs=1e-12)
    # both adjacent formulas agree at α_max = 2/3
    a = 2 / 3
    assert abs(t_rate(mu, a + 1e-9).t_value - t_rate(mu, a - 1e-9).t_value) < 1e-8


def test_tail_equals_half_h_alpha_at_edge():
    mu = trimmed_bernoulli()
    assert t_rate(mu, 1.0).t_value == pytest.approx(0.5 * h_alpha(mu, 1.0, 1.5))
    with pytest.raises(DomainError):
        h_alpha(mu, 0.0, 0.0)


def test_dirac_rate():
    assert t_rate(dirac(1.0), 1.0).t_value == 0.0
    assert math.isinf(t_rate(dirac(1.0), 1.1).t_value)


def test_j_rate_dirac_chi_square():
    # single atom at 1: rate of a normalized chi-square
    for x in (0.5, 2.0):
        assert j_rate(dirac(1.0), 1.0, 1.0, x) == pytest.approx(0.5 * (x - 1 - math.log(x)), abs=1e-12)
    assert j_rate(dirac(1.0), 1.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_shift_identity_on_all_pieces():
    mu = trimmed_bernoulli()
    for alpha in (-1.3, -0.8, -0.2, 0.4, 0.9, 1.4):
        j, t = shift_identity_values(mu, alpha)
        assert j == pytest.approx(t, abs=1e-9)
    mu = from_atoms([-1.0, 0.2, 3.0], [0.2, 0.5, 0.3])
    assert all(shift_identity_check(mu, a) for a in np.linspace(-0.9, 2.9, 12))


def test_legendre_dual_of_rate():
    for mu in (bernoulli(), trimmed_bernoulli(), uniform_grid(30)):
        for theta in (-1.0, -0.3, 0.45, 0.9):
            sup, argmax = legendre_sup(mu, theta)
            res = rank_one_limit(mu, theta)
            assert sup == pytest.approx(res.value, abs=1e-9)
            assert max(g_pieces(mu, theta)) == pytest.approx(sup, abs=1e-9)
            assert argmax == pytest.approx(res.v_theta, abs=1e-6)


def test_g_pieces_unbounded_measure():
    g, g1, g2 = g_pieces(bernoulli(), 0.3)
    assert g == pytest.approx(rank_one_limit(bernoulli(), 0.3).value, abs=1e-10)
    assert g1 == -math.inf and g2 == -math.inf
