"""Hilbert transform off the support, its inverse K, the R-transform, its
inverse Q, domain endpoints and the complex continuation of R near 0.

R is never formed as ``K(γ) - 1/γ`` (that cancels catastrophically for
small ``γ``). Writing ``z = r + 1/γ``, the equation ``H(z) = γ`` becomes

    g(r; γ) = Σ w_i (r − λ_i) / (1 + γ (r − λ_i)) = 0,

which is increasing in ``r``, reduces to ``r = mean`` at ``γ = 0`` and stays
well conditioned for complex ``γ`` too.
"""

from __future__ import annotations

import math
from cmath import isfinite as cmath_isfinite
import weakref
from dataclasses import dataclass

import numpy as np

from .measure import AtomicMeasure, Spectrum, mean, variance
from .numerics import DEFAULT_TOL, ConvergenceError, ToleranceConfig, bracketed_root, complex_newton


class DomainError(ValueError):
    """Argument outside the set where a transform is defined."""


_DIVERGENCE_CAP = 1e12


@dataclass(frozen=True)
class TransformDomain:
    """Endpoints that delimit where K, R and Q are defined.

    ``h_min``/``h_max`` are the one-sided limits of H at the support edges
    (infinite when an atom sits on the edge); ``alpha_min``/``alpha_max`` are
    the matching limits of R, with ``1/±inf = 0``.
    """

    lambda_min: float
    lambda_max: float
    h_min: float
    h_max: float
    alpha_min: float
    alpha_max: float
    mean: float

    def contains_gamma(self, gamma: float) -> bool:
        return self.h_min < gamma < self.h_max

    def contains_alpha(self, alpha: float) -> bool:
        return self.alpha_min < alpha < self.alpha_max


_DOMAIN_CACHE: "weakref.WeakKeyDictionary[AtomicMeasure, TransformDomain]" = weakref.WeakKeyDictionary()


def _edge_limit(mu: AtomicMeasure, edge: float) -> float:
    d = edge - mu.positions
    if np.any(d == 0):
        return math.copysign(math.inf, 1.0 if edge == mu.upper else -1.0)
    value = float(np.dot(mu.weights, 1.0 / d))
    if abs(value) > _DIVERGENCE_CAP:
        return math.copysign(math.inf, value)
    return value


def domain(mu: AtomicMeasure) -> TransformDomain:
    """Domain endpoints of the transforms of ``mu`` (cached per measure)."""
    try:
        return _DOMAIN_CACHE[mu]
    except KeyError:
        pass
    m = mean(mu)
    if mu.is_dirac:
        dom = TransformDomain(mu.lower, mu.upper, -math.inf, math.inf, m, m, m)
    else:
        h_max = _edge_limit(mu, mu.upper)
        h_min = _edge_limit(mu, mu.lower)
        a_max = mu.upper - (0.0 if math.isinf(h_max) else 1.0 / h_max)
        a_min = mu.lower - (0.0 if math.isinf(h_min) else 1.0 / h_min)
        dom = TransformDomain(mu.lower, mu.upper, h_min, h_max, a_min, a_max, m)
    _DOMAIN_CACHE[mu] = dom
    return dom


# ---------------------------------------------------------------------------
# Hilbert transform
# ---------------------------------------------------------------------------

def _check_outside(mu: AtomicMeasure, z: float) -> None:
    if not (z > mu.upper or z < mu.lower):
        raise DomainError(f"z={z!r} lies in the support [{mu.lower}, {mu.upper}]")


def hilbert(mu: AtomicMeasure, z: float) -> float:
    """``H(z) = Σ w_i / (z − λ_i)`` for real ``z`` outside the support."""
    z = float(z)
    _check_outside(mu, z)
    return float(np.dot(mu.weights, 1.0 / (z - mu.positions)))


def hilbert_prime(mu: AtomicMeasure, z: float) -> float:
    z = float(z)
    _check_outside(mu, z)
    return -float(np.dot(mu.weights, 1.0 / (z - mu.positions) ** 2))


def hilbert_complex(mu: AtomicMeasure, z: complex) -> complex:
    return complex(np.dot(mu.weights, 1.0 / (z - mu.positions)))


# ---------------------------------------------------------------------------
# K, R, Q
# ---------------------------------------------------------------------------

def _check_gamma(dom: TransformDomain, gamma: float, allow_edges: bool) -> None:
    if math.isnan(gamma):
        raise DomainError("gamma is NaN")
    inside = dom.h_min <= gamma <= dom.h_max if allow_edges else dom.h_min < gamma < dom.h_max
    if not inside:
        raise DomainError(f"gamma={gamma!r} outside ({dom.h_min}, {dom.h_max})")


def k_transform(mu: AtomicMeasure, gamma: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Point ``z`` off the support with ``H(z) = γ``.

    The branch is ``z > λ_max`` for ``γ > 0`` and ``z < λ_min`` for ``γ < 0``.

    Examples
    --------
    >>> from spherint.measure import bernoulli
    >>> round(k_transform(bernoulli(), 0.5), 10)
    2.4142135624
    """
    gamma = float(gamma)
    if gamma == 0:
        raise DomainError("K has a pole at gamma=0")
    dom = domain(mu)
    _check_gamma(dom, gamma, allow_edges=False)
    if mu.is_dirac:
        return mu.upper + 1.0 / gamma
    x_lo, x_hi = mu.positions[0], mu.positions[-1]
    inv = 1.0 / gamma
    if gamma > 0:
        # 1/(z - x_lo) <= H(z) <= 1/(z - x_hi)
        lo, hi = max(mu.upper, x_lo + inv), x_hi + inv
        f_lo = math.inf if lo == mu.upper and math.isinf(dom.h_max) else None
        f_hi = None
    else:
        lo, hi = x_lo + inv, min(mu.lower, x_hi + inv)
        f_lo = None
        f_hi = -math.inf if hi == mu.lower and math.isinf(dom.h_min) else None
    if lo == hi:
        return lo
    w, x = mu.weights, mu.positions

    def f(z):
        with np.errstate(divide="ignore"):
            return float(np.dot(w, 1.0 / (z - x))) - gamma

    def fp(z):
        return -float(np.dot(w, 1.0 / (z - x) ** 2))

    # H - γ is decreasing on each branch; flip to an increasing residual for clarity
    return bracketed_root(lambda z: -f(z), lo, hi, tol.root_abs_tol * max(1.0, abs(gamma)),
                          fprime=lambda z: -fp(z),
                          f_lo=None if f_lo is None else -f_lo,
                          f_hi=None if f_hi is None else -f_hi)


def _reduced(mu: AtomicMeasure, gamma):
    """Residual ``g(r; γ)`` and its derivative in ``r``."""
    w, x = mu.weights, mu.positions

    def g(r):
        d = r - x
        return np.dot(w, d / (1.0 + gamma * d))

    def gp(r):
        return np.dot(w, 1.0 / (1.0 + gamma * (r - x)) ** 2)

    return g, gp


def r_transform(mu: AtomicMeasure, gamma: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """R-transform ``K(γ) − 1/γ`` on the closed domain ``[H_min, H_max]``.

    ``R(0)`` is the mean; at a finite edge ``R(H_max) = α_max``.

    Examples
    --------
    >>> from spherint.measure import bernoulli
    >>> round(r_transform(bernoulli(), 1.0), 12)
    0.618033988750
    """
    gamma = float(gamma)
    dom = domain(mu)
    _check_gamma(dom, gamma, allow_edges=True)
    if mu.is_dirac:
        return mu.upper
    if gamma == 0:
        return dom.mean
    if gamma == dom.h_max:
        return dom.alpha_max
    if gamma == dom.h_min:
        return dom.alpha_min
    x_lo, x_hi = float(mu.positions[0]), float(mu.positions[-1])
    g, gp = _reduced(mu, gamma)
    # g(x_lo) <= 0 <= g(x_hi) wherever every denominator stays positive
    if gamma > 0:
        lo, hi = max(x_lo, mu.upper - 1.0 / gamma), x_hi
        f_lo = -math.inf if lo == mu.upper - 1.0 / gamma and mu.upper == x_hi else None
        f_hi = None
    else:
        lo, hi = x_lo, min(x_hi, mu.lower - 1.0 / gamma)
        f_lo = None
        f_hi = math.inf if hi == mu.lower - 1.0 / gamma and mu.lower == x_lo else None
    if lo >= hi:
        return lo
    # |g| is bounded by the support width whatever γ is
    scale = max(1.0, mu.upper - mu.lower)

    def gf(r):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = float(g(r))
        return v

    return bracketed_root(gf, lo, hi, tol.root_abs_tol * scale, fprime=lambda r: float(gp(r)),
                          f_lo=f_lo, f_hi=f_hi)


def q_transform(mu: AtomicMeasure, alpha: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Inverse of R: the ``γ`` with ``R(γ) = α`` for ``α`` in ``(α_min, α_max)``.

    Solves ``φ(γ) = Σ w_i (α − λ_i) / (1 + γ (α − λ_i)) = 0``, which is
    decreasing in ``γ`` with ``φ(0) = α − mean``.
    """
    alpha = float(alpha)
    dom = domain(mu)
    if mu.is_dirac:
        if alpha == dom.mean:
            return 0.0
        raise DomainError(f"alpha={alpha!r} outside the range of R for a Dirac measure")
    if not dom.contains_alpha(alpha):
        raise DomainError(f"alpha={alpha!r} outside ({dom.alpha_min}, {dom.alpha_max})")
    if alpha == dom.mean:
        return 0.0
    w, x = mu.weights, mu.positions
    d = alpha - x

    def phi(gamma):
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.dot(w, d / (1.0 + gamma * d)))

    def phi_prime(gamma):
        return -float(np.dot(w, (d / (1.0 + gamma * d)) ** 2))

    if alpha > dom.mean:
        pole = 1.0 / (mu.upper - alpha)
        lo, hi = 0.0, min(dom.h_max, pole)
        f_hi = -math.inf if hi == pole and mu.upper == x[-1] else None
        f_lo = None
    else:
        pole = 1.0 / (mu.lower - alpha)
        lo, hi = max(dom.h_min, pole), 0.0
        f_lo = math.inf if lo == pole and mu.lower == x[0] else None
        f_hi = None
    scale = max(1.0, mu.upper - mu.lower)
    # φ is decreasing: hand the root finder the increasing -φ
    return bracketed_root(lambda t: -phi(t), lo, hi, tol.root_abs_tol * scale,
                          fprime=lambda t: -phi_prime(t),
                          f_lo=None if f_lo is None else -f_lo,
                          f_hi=None if f_hi is None else -f_hi)


# ---------------------------------------------------------------------------
# complex continuation
# ---------------------------------------------------------------------------

def r_guard(mu: AtomicMeasure) -> float:
    """Radius of the disc around 0 where :func:`r_transform_complex` is trusted.

    The heuristic ``0.5·min(|H(λ_min − Δ)|, H(λ_max + Δ))`` with
    ``Δ = 0.1·(λ_max − λ_min + 1)`` is capped by ``1/(6L)``, ``L`` the largest
    distance from the mean to a support edge; inside that disc R is known to
    be analytic for every measure supported in ``[m − L, m + L]``.
    """
    if mu.is_dirac:
        return math.inf
    delta = 0.1 * (mu.upper - mu.lower + 1.0)
    heuristic = 0.5 * min(abs(hilbert(mu, mu.lower - delta)), hilbert(mu, mu.upper + delta))
    m = mean(mu)
    spread = max(mu.upper - m, m - mu.lower)
    return min(heuristic, 1.0 / (6.0 * spread))


def r_transform_complex(mu: AtomicMeasure, w: complex, tol: ToleranceConfig = DEFAULT_TOL,
                        radius: float | None = None) -> complex:
    """Analytic continuation of R to complex ``w`` with ``|w| <= r_guard``.

    The root of ``g(r; w) = 0`` is tracked from ``w = 0`` (where ``r`` is the
    mean) along ``tol.path_segments`` straight segments; each Newton solve is
    warm-started from the previous one. ``radius`` overrides the guard.
    """
    w = complex(w)
    if mu.is_dirac:
        return complex(mu.upper)
    guard = r_guard(mu) if radius is None else float(radius)
    if abs(w) > guard:
        raise DomainError(f"|w|={abs(w):.6g} exceeds the continuation radius {guard:.6g}")
    if w == 0:
        return complex(mean(mu))
    if w.imag == 0:
        return complex(r_transform(mu, w.real, tol))
    wt, x = mu.weights, mu.positions

    def g(r, p):
        d = r - x
        return complex(np.dot(wt, d / (1.0 + p * d)))

    def gp(r, p):
        return complex(np.dot(wt, 1.0 / (1.0 + p * (r - x)) ** 2))

    path = [w * k / tol.path_segments for k in range(1, tol.path_segments + 1)]
    scale = max(1.0, mu.upper - mu.lower)
    try:
        r = complex_newton(g, gp, complex(mean(mu)), path, tol=1e-13 * scale,
                           max_iter=tol.newton_max_iter)
    except ConvergenceError as exc:
        raise ConvergenceError(f"R continuation to w={w} failed: {exc}") from None
    if not cmath_isfinite(r):
        raise ConvergenceError(f"R continuation to w={w} produced a non-finite value")
    return r


# ---------------------------------------------------------------------------
# spectra and series
# ---------------------------------------------------------------------------

def v_n_solve(spectrum: Spectrum, theta: float, beta: int = 1,
              tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Root ``v_N`` of ``H_{E_N}(β/(2θ) + v_N) = 2θ/β`` for the empirical measure.

    The empirical measure has atoms on both edges, so every ``θ ≠ 0`` is
    admissible and ``v_N`` lies in ``[λ_min(E_N), λ_max(E_N)]``.
    """
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    theta = float(theta)
    if theta == 0 or not math.isfinite(theta):
        raise DomainError("v_N needs a finite theta != 0")
    return r_transform(spectrum.empirical(), 2.0 * theta / beta, tol)


MAX_SERIES_ORDER = 12


def free_cumulants(mu: AtomicMeasure, count: int) -> list[float]:
    """First ``count`` free cumulants ``κ_1..κ_count``.

    Uses the moment–cumulant relation ``M(z) = 1 + Σ_s κ_s z^s M(z)^s`` on
    the centred measure, then restores ``κ_1 = mean``.
    """
    m0 = mean(mu)
    x = mu.positions - m0
    moments = [float(np.dot(mu.weights, x ** k)) for k in range(count + 1)]
    moments[0] = 1.0
    kappas = [0.0] * (count + 1)
    # powers[s] holds the truncated series of M(z)^s
    powers = [np.zeros(count + 1) for _ in range(count + 1)]
    powers[0][0] = 1.0
    m_series = np.array(moments)
    for s in range(1, count + 1):
        powers[s] = np.convolve(powers[s - 1], m_series)[: count + 1]
    for n in range(1, count + 1):
        acc = sum(kappas[s] * powers[s][n - s] for s in range(1, n))
        kappas[n] = moments[n] - acc
    kappas[1] += m0
    return kappas[1:]


def r_series(mu: AtomicMeasure, order: int) -> list[float]:
    """Taylor coefficients ``c_0..c_order`` of R at 0 (``c_k`` is the free
    cumulant of order ``k + 1``; ``c_0`` is the mean, ``c_1`` the variance).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if order > MAX_SERIES_ORDER:
        raise DomainError(f"order {order} exceeds the series cap {MAX_SERIES_ORDER}")
    if mu.is_dirac:
        return [mu.upper] + [0.0] * order
    coeffs = [float(c) for c in free_cumulants(mu, order + 1)]
    if order >= 1:
        coeffs[1] = variance(mu)
    return coeffs
