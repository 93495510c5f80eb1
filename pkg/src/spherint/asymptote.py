"""Limits of ``(1/N) log I_N(θ)`` for rank-one spherical integrals: the
piecewise limit with its saturated regimes, the finite-N leading term, the
second-order prefactor, the finite-rank average and the complex-θ limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import AtomicMeasure, Spectrum
from .numerics import DEFAULT_TOL, ToleranceConfig, adaptive_quadrature
from .transform import (
    DomainError,
    domain,
    k_transform,
    r_guard,
    r_transform,
    r_transform_complex,
    v_n_solve,
)

INTERIOR = "Interior"
SATURATED_MAX = "SaturatedMax"
SATURATED_MIN = "SaturatedMin"
BOUNDARY_MAX = "BoundaryMax"
BOUNDARY_MIN = "BoundaryMin"
ZERO = "Zero"
REGIMES = (INTERIOR, SATURATED_MAX, SATURATED_MIN, BOUNDARY_MAX, BOUNDARY_MIN, ZERO)


class DiracDegenerate(ValueError):
    """The prefactor formula degenerates for a single-atom measure (its limit is 1)."""


class PrecisionError(ArithmeticError):
    """A quantity that is positive analytically came out non-positive."""


class RegimeError(RuntimeError):
    """A log argument was not positive: the regime classification is wrong."""


@dataclass(frozen=True)
class AsymptoteResult:
    value: float
    v_theta: float
    regime: str
    k_point: float
    beta: int
    theta: float


@dataclass(frozen=True)
class PrefactorResult:
    """Second-order term of ``I_N(θ) ≈ prefactor · exp(N · leading)``.

    ``sqrt_gap_form`` is the alternative expression ``√(Z − 4θ²)/(|θ|√Z)``
    kept for comparison; see the README for why ``prefactor`` is
    ``2|θ|/√Z``.
    """

    z_value: float
    prefactor: float
    leading_exponent_per_n: float
    sqrt_gap_form: float
    theta: float


def _check_beta(beta: int) -> None:
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")


def _free_energy(mu: AtomicMeasure, theta: float, v: float, beta: int) -> float:
    gamma = 2.0 * theta / beta
    arg = gamma * (v - mu.positions)
    if np.any(arg <= -1.0):
        raise RegimeError(f"non-positive log argument at theta={theta!r}, v={v!r}")
    return theta * v - 0.5 * beta * float(np.dot(mu.weights, np.log1p(arg)))


def _saturated_energy(mu: AtomicMeasure, theta: float, edge: float, beta: int) -> float:
    # with v = edge - β/(2θ) the log argument is (2θ/β)(edge - λ)
    gamma = 2.0 * theta / beta
    arg = gamma * (edge - mu.positions)
    if np.any(arg <= 0):
        raise RegimeError(f"non-positive log argument at theta={theta!r} in a saturated regime")
    v = edge - 1.0 / gamma
    return theta * v - 0.5 * beta * float(np.dot(mu.weights, np.log(arg)))


def classify(mu: AtomicMeasure, theta: float, beta: int = 1) -> str:
    _check_beta(beta)
    if theta == 0:
        return ZERO
    dom = domain(mu)
    gamma = 2.0 * theta / beta
    if gamma > dom.h_max:
        return SATURATED_MAX
    if gamma < dom.h_min:
        return SATURATED_MIN
    if gamma == dom.h_max:
        return BOUNDARY_MAX
    if gamma == dom.h_min:
        return BOUNDARY_MIN
    return INTERIOR


def rank_one_limit(mu: AtomicMeasure, theta: float, beta: int = 1,
                   tol: ToleranceConfig = DEFAULT_TOL) -> AsymptoteResult:
    """Limit of ``(1/N) log I_N(θ)`` for spectra converging to ``mu``.

    ``value = θv − (β/2) Σ w_i log(1 + (2θ/β)(v − λ_i))`` where ``v = R(2θ/β)``
    inside ``[H_min, H_max]``, ``v = λ_max − β/(2θ)`` above it and
    ``v = λ_min − β/(2θ)`` below it.

    Examples
    --------
    >>> from spherint.measure import dirac
    >>> rank_one_limit(dirac(1.5), 0.3).value
    0.44999999999999996
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError("theta must be finite")
    regime = classify(mu, theta, beta)
    dom = domain(mu)
    if regime == ZERO:
        return AsymptoteResult(0.0, dom.mean, ZERO, math.inf, beta, theta)
    gamma = 2.0 * theta / beta
    if mu.is_dirac:
        e = mu.upper
        return AsymptoteResult(theta * e, e, INTERIOR, e + 1.0 / gamma, beta, theta)
    if regime == SATURATED_MAX:
        value = _saturated_energy(mu, theta, dom.lambda_max, beta)
        return AsymptoteResult(value, dom.lambda_max - 1.0 / gamma, regime, dom.lambda_max, beta, theta)
    if regime == SATURATED_MIN:
        value = _saturated_energy(mu, theta, dom.lambda_min, beta)
        return AsymptoteResult(value, dom.lambda_min - 1.0 / gamma, regime, dom.lambda_min, beta, theta)
    if regime == BOUNDARY_MAX:
        return AsymptoteResult(_saturated_energy(mu, theta, dom.lambda_max, beta), dom.alpha_max,
                               regime, dom.lambda_max, beta, theta)
    if regime == BOUNDARY_MIN:
        return AsymptoteResult(_saturated_energy(mu, theta, dom.lambda_min, beta), dom.alpha_min,
                               regime, dom.lambda_min, beta, theta)
    v = r_transform(mu, gamma, tol)
    return AsymptoteResult(_free_energy(mu, theta, v, beta), v, INTERIOR, v + 1.0 / gamma, beta, theta)


def small_theta_integral(mu: AtomicMeasure, theta: float, beta: int = 1,
                         tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``(β/2) ∫_0^{2θ/β} R(u) du`` by adaptive quadrature.

    Agrees with :func:`rank_one_limit` in the interior regime; computed
    through an independent path (no closed-form energy).
    """
    _check_beta(beta)
    theta = float(theta)
    if theta == 0:
        return 0.0
    gamma = 2.0 * theta / beta
    if not domain(mu).contains_gamma(gamma):
        raise DomainError(f"2θ/β={gamma!r} is not in the interior regime")
    if mu.is_dirac:
        return theta * mu.upper
    integral = adaptive_quadrature(lambda u: r_transform(mu, u, tol), 0.0, gamma, tol.quad_abs_tol)
    return 0.5 * beta * integral


def finite_n_leading_term(spectrum: Spectrum, theta: float, beta: int = 1,
                          tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``θ v_N − (β/2N) Σ_i log(1 + (2θ/β)(v_N − λ_i))`` with ``v_N`` from
    :func:`~spherint.transform.v_n_solve`."""
    _check_beta(beta)
    v = v_n_solve(spectrum, theta, beta, tol)
    gamma = 2.0 * theta / beta
    arg = gamma * (v - spectrum.eigenvalues)
    if np.any(arg <= -1.0):
        raise RegimeError("non-positive log argument in the finite-N term")
    return theta * v - 0.5 * beta * float(np.mean(np.log1p(arg)))


def clt_prefactor(mu: AtomicMeasure, theta: float, tol: ToleranceConfig = DEFAULT_TOL) -> PrefactorResult:
    """Limit of ``exp(−N · leading term) · I_N(θ)`` for real spheres (β = 1).

    With ``K = K(2θ)`` and ``Z = Σ w_i (K − λ_i)^{−2}``, a Gaussian saddle
    computation of the fluctuation of ``(Σ λ_i g_i²)/(Σ g_i²)`` under the
    tilted measure gives ``2|θ|/√Z``. It equals 1 for a Dirac measure and
    tends to 1 as ``θ → 0``.
    """
    theta = float(theta)
    if mu.is_dirac:
        raise DiracDegenerate("single-atom measure: the prefactor limit is exactly 1")
    if theta == 0:
        raise DomainError("theta must be non-zero")
    gamma = 2.0 * theta
    if not domain(mu).contains_gamma(gamma):
        raise DomainError(f"2θ={gamma!r} is not in the interior regime")
    k = k_transform(mu, gamma, tol)
    z = float(np.dot(mu.weights, 1.0 / (k - mu.positions) ** 2))
    gap = z - 4.0 * theta * theta
    if not gap > 0:
        raise PrecisionError(f"Z={z!r} is not above 4θ²={4 * theta * theta!r}")
    root_z = math.sqrt(z)
    leading = rank_one_limit(mu, theta, 1, tol).value
    return PrefactorResult(z, 2.0 * abs(theta) / root_z, leading,
                           math.sqrt(gap) / (abs(theta) * root_z), theta)


# ---------------------------------------------------------------------------
# complex θ
# ---------------------------------------------------------------------------

def theta_guard(mu: AtomicMeasure) -> float:
    """Largest ``|θ|`` accepted by :func:`complex_rank_one_limit`."""
    return 0.5 * r_guard(mu)


def complex_rank_one_limit(mu: AtomicMeasure, theta: complex, tol: ToleranceConfig = DEFAULT_TOL,
                           radius: float | None = None) -> complex:
    """``θv − ½ Σ w_i Log(1 + 2θ(v − λ_i))`` with ``v = R(2θ)`` continued to complex θ.

    ``radius`` overrides the θ-guard (it is passed to the R continuation as
    ``2·radius``).
    """
    theta = complex(theta)
    if mu.is_dirac:
        return theta * mu.upper
    guard = theta_guard(mu) if radius is None else float(radius)
    if abs(theta) > guard:
        raise DomainError(f"|θ|={abs(theta):.6g} exceeds the guard {guard:.6g}")
    if theta == 0:
        return 0j
    v = r_transform_complex(mu, 2.0 * theta, tol, radius=2.0 * guard)
    args = 1.0 + 2.0 * theta * (v - mu.positions)
    if np.any(args.real <= 0):
        raise RegimeError(f"log argument left the right half-plane at θ={theta}")
    return complex(theta * v - 0.5 * np.dot(mu.weights, np.log(args)))


MAX_TAYLOR_ORDER = 8
CONTOUR_NODES = 64


def taylor_coefficients(mu: AtomicMeasure, n_max: int, tol: ToleranceConfig = DEFAULT_TOL,
                        radius: float | None = None) -> list[complex]:
    """Coefficients ``a_0..a_{n_max}`` of the complex limit around 0.

    Cauchy integrals on the circle ``|θ| = ρ`` with 64 nodes, ``ρ`` half the
    θ-guard (or half of ``radius``). They satisfy ``a_n = 2^{n−1} c_{n−1} / n``
    with ``c_k`` the Taylor coefficients of R.
    """
    if n_max < 0 or n_max > MAX_TAYLOR_ORDER:
        raise ValueError(f"n_max must lie in [0, {MAX_TAYLOR_ORDER}]")
    if mu.is_dirac:
        return [0j, complex(mu.upper)] + [0j] * (n_max - 1) if n_max >= 1 else [0j]
    guard = theta_guard(mu) if radius is None else float(radius)
    rho = 0.5 * guard
    phases = np.exp(2j * np.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES)
    values = np.array([complex_rank_one_limit(mu, rho * p, tol, radius=guard) for p in phases])
    return [complex(np.mean(values * phases ** (-n)) / rho ** n) for n in range(n_max + 1)]


# ---------------------------------------------------------------------------
# finite rank
# ---------------------------------------------------------------------------

def finite_rank_limit(mu: AtomicMeasure, thetas: Sequence[float], beta: int = 1,
                      tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Average of the rank-one limits over ``thetas``; every θ must be non-saturated."""
    thetas = [float(t) for t in thetas]
    if not thetas:
        raise ValueError("need at least one theta")
    results = [rank_one_limit(mu, t, beta, tol) for t in thetas]
    for r in results:
        if r.regime in (SATURATED_MAX, SATURATED_MIN):
            raise DomainError(f"theta={r.theta!r} is saturated ({r.regime}); finite rank needs interior values")
    return float(np.mean([r.value for r in results]))
