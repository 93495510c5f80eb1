"""Acceptance suite: each test checks one numbered criterion at its stated
tolerance and runtime budget, and prints one PASS/FAIL line."""

import math

import numpy as np

from spherint.asymptote import (
    INTERIOR,
    SATURATED_MAX,
    SATURATED_MIN,
    clt_prefactor,
    complex_rank_one_limit,
    finite_n_leading_term,
    finite_rank_limit,
    rank_one_limit,
    small_theta_integral,
    taylor_coefficients,
    theta_guard,
)
from spherint.measure import (
    bernoulli,
    dirac,
    from_atoms,
    quantile_discretize,
    semicircle_grid,
    trimmed_bernoulli,
    uniform_grid,
)
from spherint.montecarlo import (
    McConfig,
    additivity_experiment,
    concentration_experiment,
    finite_rank_mc,
    mc_log_integral,
    mc_prefactor_ratio,
)
from spherint.ratefn import g_pieces, legendre_sup, shift_identity_check
from spherint.transform import domain, r_series, r_transform


def semicircle_hilbert_r(gamma):
    # H(z) = (z − √(z² − 4))/2 inverts to K(γ) = γ + 1/γ, hence R(γ) = γ
    return gamma


def test_01_dirac_exactness(acceptance):
    worst, worst_se = 0.0, 0.0
    for e in (-2.5, 0.0, 1.0, 3.75):
        mu = dirac(e)
        spectrum = quantile_discretize(mu, 50)
        for theta in np.linspace(-2.0, 2.0, 9):
            expected = theta * e
            worst = max(worst, abs(rank_one_limit(mu, theta).value - expected))
            for method in ("direct", "tilted"):
                est = mc_log_integral(spectrum, theta, McConfig(200, seed=3, method=method))
                worst = max(worst, abs(est.value - expected))
                worst_se = max(worst_se, est.std_error)
    acceptance.check(1, "Dirac exactness", worst <= 1e-14 and worst_se == 0.0,
                     f"max |err| = {worst:.3g}, max std error = {worst_se:.3g}", budget=1.0)


def _interior_pairs(count, rng):
    measures = [
        quantile_discretize(bernoulli(p=0.5), 64).empirical(),
        quantile_discretize(bernoulli(-0.5, 2.0, p=0.3), 100).empirical(),
        trimmed_bernoulli(),
        uniform_grid(200),
        uniform_grid(150, -1.0, 2.0),
        semicircle_grid(200),
        semicircle_grid(300, radius=1.5),
    ]
    pairs = []
    while len(pairs) < count:
        mu = measures[rng.integers(len(measures))]
        beta = int(rng.integers(1, 3))
        theta = float(rng.uniform(-1.2, 1.2))
        if theta != 0 and domain(mu).contains_gamma(2.0 * theta / beta):
            pairs.append((mu, theta, beta))
    return pairs


def test_02_interior_identity(acceptance):
    rng = np.random.default_rng(20)
    worst = 0.0
    for mu, theta, beta in _interior_pairs(100, rng):
        assert rank_one_limit(mu, theta, beta).regime == INTERIOR
        worst = max(worst, abs(small_theta_integral(mu, theta, beta) - rank_one_limit(mu, theta, beta).value))
    acceptance.check(2, "interior identity", worst <= 1e-8, f"max |err| over 100 pairs = {worst:.3g}",
                     budget=10.0)


def test_03_semicircle_oracle(acceptance):
    mu = semicircle_grid(2000)
    gammas = np.linspace(-0.9, 0.9, 37)
    r_err = max(abs(r_transform(mu, g) - semicircle_hilbert_r(g)) for g in gammas)
    thetas = np.linspace(-0.45, 0.45, 19)
    i_err = max(abs(rank_one_limit(mu, t).value - t * t) for t in thetas)
    acceptance.check(3, "semicircle oracle", r_err <= 5e-3 and i_err <= 2e-3,
                     f"max |R − γ| = {r_err:.3g}, max |I − θ²| = {i_err:.3g}", budget=5.0)


def test_04_varadhan_duality(acceptance):
    mu = trimmed_bernoulli()
    assert math.isfinite(domain(mu).h_max)
    thetas = np.linspace(-1.5, 1.5, 31)
    regimes = set()
    dual_err = pieces_err = 0.0
    for t in thetas:
        res = rank_one_limit(mu, t, 1)
        regimes.add(res.regime)
        sup, _ = legendre_sup(mu, t)
        dual_err = max(dual_err, abs(sup - res.value))
        pieces_err = max(pieces_err, abs(max(g_pieces(mu, t)) - sup))
    covered = {INTERIOR, SATURATED_MAX, SATURATED_MIN} <= regimes
    acceptance.check(4, "Varadhan duality", covered and dual_err <= 1e-6 and pieces_err <= 1e-6,
                     f"max |sup − I| = {dual_err:.3g}, max |max(G,G1,G2) − sup| = {pieces_err:.3g}, "
                     f"regimes = {sorted(regimes)}", budget=30.0)


def _random_measure(rng):
    k = int(rng.integers(2, 7))
    xs = np.sort(rng.uniform(-2.0, 2.0, k))
    ws = rng.uniform(0.2, 1.0, k)
    if rng.random() < 0.5:
        return from_atoms(xs, ws, (xs[0] - rng.uniform(0.1, 1.0), xs[-1] + rng.uniform(0.1, 1.0)))
    return from_atoms(xs, ws)


def test_05_shift_identity(acceptance):
    rng = np.random.default_rng(5)
    failures = 0
    for _ in range(50):
        mu = _random_measure(rng)
        lo, hi = mu.lower, mu.upper
        alpha = float(rng.uniform(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo)))
        if not shift_identity_check(mu, alpha, atol=1e-7):
            failures += 1
    acceptance.check(5, "rate-function identification", failures == 0,
                     f"{50 - failures}/50 pairs within 1e-7", budget=10.0)


def test_06_clt_prefactor(acceptance):
    theta = 0.25
    oracle = clt_prefactor(bernoulli(), theta).prefactor
    rows = []
    for i, n in enumerate((250, 500, 1000, 2000)):
        est = mc_prefactor_ratio(quantile_discretize(bernoulli(), n), theta, McConfig(1_000_000, seed=60 + i))
        rows.append((n, est.value, est.std_error))
    final_rel = abs(rows[-1][1] / oracle - 1.0)
    monotone = all(
        abs(b[1] - oracle) <= abs(a[1] - oracle) + 2.0 * math.hypot(a[2], b[2])
        for a, b in zip(rows, rows[1:])
    )
    detail = ", ".join(f"N={n}: {v:.5f}±{s:.5f}" for n, v, s in rows)
    acceptance.check(6, "CLT prefactor convergence", final_rel <= 0.05 and monotone,
                     f"oracle {oracle:.5f}; {detail}; rel err at N=2000 = {final_rel:.3%}", budget=300.0)


def test_07_finite_n_rate(acceptance):
    mu = uniform_grid(102_400, -1.0, 1.0)
    ratios = []
    for theta in (0.2, 0.6):
        limit = rank_one_limit(mu, theta).value
        errs = [abs(finite_n_leading_term(quantile_discretize(mu, n), theta) - limit) for n in (100, 200, 400, 800)]
        ratios += [errs[k] / errs[k + 1] for k in range(3)]
    ok = all(1.5 <= r <= 2.5 for r in ratios)
    acceptance.check(7, "finite-N rate", ok, "error ratios on doubling N = "
                     + ", ".join(f"{r:.3f}" for r in ratios), budget=5.0)


def test_08_free_convolution_additivity(acceptance):
    mu = bernoulli()
    thetas = np.linspace(0.05, 0.2, 4)
    rep = additivity_experiment(mu, mu, 400, thetas, reps=20, seed=8, gammas=np.linspace(0.1, 0.5, 5),
                                eigensolver="jacobi")
    gap = max(rep.gap)
    r_gap = max(rep.r_gap)
    ok = gap <= 5e-2 and r_gap <= 5e-2 and not any(rep.excluded)
    acceptance.check(8, "free-convolution additivity", ok,
                     f"max limit gap = {gap:.3g}, max R gap = {r_gap:.3g}, excluded = {sum(rep.excluded)}",
                     budget=180.0)


def test_09_concentration_trend(acceptance):
    mu = bernoulli()
    small = concentration_experiment(mu, mu, 200, 0.15, reps=20, seed=9, eigensolver="lapack")
    large = concentration_experiment(mu, mu, 800, 0.15, reps=20, seed=9, eigensolver="lapack")
    acceptance.check(9, "concentration trend", large.variance < small.variance,
                     f"variance n=200: {small.variance:.3g}, n=800: {large.variance:.3g}", budget=300.0)


def test_10_complex_taylor(acceptance):
    coef_err = reflect_err = 0.0
    for mu in (bernoulli(), semicircle_grid(2000)):
        a = taylor_coefficients(mu, 4)
        c = r_series(mu, 4)
        for n in range(1, 5):
            coef_err = max(coef_err, abs(a[n] - 2 ** (n - 1) * c[n - 1] / n))
        g = theta_guard(mu)
        for theta in (complex(0.3 * g, 0.4 * g), complex(-0.5 * g, 0.2 * g), complex(0.1 * g, -0.8 * g)):
            lhs = complex_rank_one_limit(mu, theta.conjugate())
            rhs = complex_rank_one_limit(mu, theta).conjugate()
            reflect_err = max(reflect_err, abs(lhs - rhs))
    acceptance.check(10, "complex Taylor identity", coef_err <= 1e-6 and reflect_err <= 1e-10,
                     f"max coefficient err = {coef_err:.3g}, reflection err = {reflect_err:.3g}", budget=10.0)


def test_11_finite_rank(acceptance):
    mu = bernoulli()
    thetas = (0.1, 0.15, 0.2)
    est = finite_rank_mc(quantile_discretize(mu, 300), thetas, McConfig(100_000, seed=11, method="direct"))
    limit = finite_rank_limit(mu, thetas)
    err = abs(est.value - limit)
    acceptance.check(11, "finite rank", err <= 0.03,
                     f"MC {est.value:.5f}±{est.std_error:.2g} vs limit {limit:.5f}", budget=120.0)


def test_12_phase_transition_order(acceptance):
    mu = trimmed_bernoulli()
    c = domain(mu).h_max / 2.0
    h = 1e-5

    def value(t):
        return rank_one_limit(mu, t).value

    i0, l1, l2, r1, r2 = value(c), value(c - h), value(c - 2 * h), value(c + h), value(c + 2 * h)
    d1_left = (3 * i0 - 4 * l1 + l2) / (2 * h)
    d1_right = (-3 * i0 + 4 * r1 - r2) / (2 * h)
    d2_left = (i0 - 2 * l1 + l2) / h ** 2
    d2_right = (i0 - 2 * r1 + r2) / h ** 2
    jump1, jump2 = abs(d1_right - d1_left), abs(d2_right - d2_left)
    acceptance.check(12, "phase transition order", jump1 <= 1e-4 and jump2 >= 0.01,
                     f"θ_c = {c:.6g}, I' jump = {jump1:.3g}, I'' {d2_left:.4f} -> {d2_right:.4f}", budget=5.0)
