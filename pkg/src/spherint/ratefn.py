"""Large-deviation rate functions for the overlap ``(UEU*)_11`` and for
weighted chi-square averages, the Legendre pieces G/G1/G2 and the
Legendre (Varadhan) cross-check against :mod:`spherint.asymptote`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import AtomicMeasure
from .numerics import DEFAULT_TOL, ToleranceConfig, adaptive_quadrature, bracketed_root, concave_maximize
from .transform import DomainError, domain, q_transform, r_transform

INTERIOR = "Interior"
UPPER_TAIL = "UpperTail"
LOWER_TAIL = "LowerTail"
INFINITE = "Infinite"


@dataclass(frozen=True)
class RatePoint:
    alpha: float
    t_value: float
    piece: str


def h_alpha(mu: AtomicMeasure, alpha: float, kappa: float) -> float:
    """``h_α(κ) = Σ w_i log((κ − λ_i)/(κ − α))`` for ``κ`` off the support."""
    kappa = float(kappa)
    # a declared edge carrying no atom is allowed
    if mu.lower < kappa < mu.upper or np.any(mu.positions == kappa):
        raise DomainError(f"kappa={kappa!r} lies in the support")
    if kappa == alpha:
        raise DomainError("kappa must differ from alpha")
    return float(np.dot(mu.weights, np.log1p((alpha - mu.positions) / (kappa - alpha))))


def _edge_tail(mu: AtomicMeasure, alpha: float, edge: float) -> float:
    # ½ Σ w log((edge − λ)/(edge − α)); the caller guarantees no atom on the edge
    return 0.5 * float(np.dot(mu.weights, np.log((edge - mu.positions) / (edge - alpha))))


def t_rate(mu: AtomicMeasure, alpha: float, tol: ToleranceConfig = DEFAULT_TOL) -> RatePoint:
    """Rate function ``T(α)`` of the overlap.

    Interior piece ``½ h_α(K(Q(α)))`` on ``[α_min, α_max]``; since
    ``K(Q(α)) − α = 1/Q(α)`` it is evaluated as
    ``½ Σ w_i log(1 + Q(α)(α − λ_i))``. Tail pieces ``½ h_α`` at the support
    edge on ``(α_max, λ_max)`` and ``(λ_min, α_min)``; ``+inf`` off
    ``(λ_min, λ_max)``.
    """
    alpha = float(alpha)
    dom = domain(mu)
    if mu.is_dirac:
        return RatePoint(alpha, 0.0 if alpha == mu.upper else math.inf, INTERIOR if alpha == mu.upper else INFINITE)
    if not (dom.lambda_min < alpha < dom.lambda_max):
        return RatePoint(alpha, math.inf, INFINITE)
    if alpha == dom.mean:
        return RatePoint(alpha, 0.0, INTERIOR)
    if alpha > dom.alpha_max:
        return RatePoint(alpha, _edge_tail(mu, alpha, dom.lambda_max), UPPER_TAIL)
    if alpha < dom.alpha_min:
        return RatePoint(alpha, _edge_tail(mu, alpha, dom.lambda_min), LOWER_TAIL)
    if alpha == dom.alpha_max:
        gamma = dom.h_max
    elif alpha == dom.alpha_min:
        gamma = dom.h_min
    else:
        gamma = q_transform(mu, alpha, tol)
    value = 0.5 * float(np.dot(mu.weights, np.log1p(gamma * (alpha - mu.positions))))
    return RatePoint(alpha, max(value, 0.0), INTERIOR)


# ---------------------------------------------------------------------------
# chi-square rate function
# ---------------------------------------------------------------------------

def _hilbert_at_bound(mu: AtomicMeasure, bound: float) -> float:
    d = bound - mu.positions
    if np.any(d == 0):
        return math.inf if bound >= mu.positions[-1] else -math.inf
    return float(np.dot(mu.weights, 1.0 / d))


def _chi_square_breaks(mu: AtomicMeasure, g_min: float, g_max: float) -> tuple[float, float]:
    if g_max > 0:
        h = _hilbert_at_bound(mu, g_max)
        x2 = math.inf if math.isinf(h) else g_max * (g_max * h - 1.0)
    else:
        x2 = math.inf
    if g_min < 0:
        h = _hilbert_at_bound(mu, g_min)
        x1 = -math.inf if math.isinf(h) else g_min * (g_min * h - 1.0)
    else:
        x1 = -math.inf
    return x1, x2


def _dual(mu: AtomicMeasure, u: float, x: float) -> float:
    return u * x + 0.5 * float(np.dot(mu.weights, np.log1p(-2.0 * u * mu.positions)))


def _dual_sup(mu: AtomicMeasure, g_min: float, g_max: float, x: float, tol: ToleranceConfig) -> float:
    """``sup_u {u x + ½ Σ w log(1 − 2λu)}`` over ``1 − 2λu > 0`` on ``[g_min, g_max]``."""
    shrink = 1.0 - 1e-12
    u_hi = 0.5 / g_max * shrink if g_max > 0 else math.inf
    u_lo = 0.5 / g_min * shrink if g_min < 0 else -math.inf
    lam, w = mu.positions, mu.weights

    def slope(u):
        # decreasing in u: x − Σ w λ/(1 − 2λu)
        return x - float(np.dot(w, lam / (1.0 - 2.0 * u * lam)))

    def slope_prime(u):
        return -2.0 * float(np.dot(w, (lam / (1.0 - 2.0 * u * lam)) ** 2))

    lo, hi = u_lo, u_hi
    step = 1.0
    while math.isinf(hi):
        cand = step
        if slope(cand) < 0:
            hi = cand
        elif step > 1e300:
            return math.inf
        step *= 4.0
    step = 1.0
    while math.isinf(lo):
        cand = -step
        if slope(cand) > 0:
            lo = cand
        elif step > 1e300:
            return math.inf
        step *= 4.0
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo <= 0:
        return _dual(mu, lo, x)
    if s_hi >= 0:
        return _dual(mu, hi, x)
    u = bracketed_root(lambda t: -slope(t), lo, hi, tol.root_abs_tol * max(1.0, abs(x)),
                       fprime=lambda t: -slope_prime(t), f_lo=-s_lo, f_hi=-s_hi)
    return _dual(mu, u, x)


def j_rate(mu: AtomicMeasure, g_min: float, g_max: float, x: float,
           tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Rate function of ``Σ λ_i g_i² / N`` for ``λ`` distributed as ``mu``
    with every ``λ_i`` in ``[g_min, g_max]``.

    Equal to the dual supremum on ``[x_1, x_2]`` and linear beyond, with
    slopes ``1/(2 g_min)`` below ``x_1`` and ``1/(2 g_max)`` above ``x_2``,
    where ``x_2 = g_max (g_max H(g_max) − 1)`` (``+inf`` if ``g_max <= 0``
    or ``H(g_max)`` diverges) and symmetrically for ``x_1``.

    Examples
    --------
    >>> from spherint.measure import dirac
    >>> round(j_rate(dirac(1.0), 1.0, 1.0, 2.0), 12) == round(0.5 * (2 - 1 - math.log(2)), 12)
    True
    """
    x = float(x)
    if not (g_min <= mu.positions[0] and mu.positions[-1] <= g_max):
        raise DomainError(f"bounds [{g_min}, {g_max}] do not enclose the atoms")
    x1, x2 = _chi_square_breaks(mu, g_min, g_max)
    if x > x2:
        return _dual_sup(mu, g_min, g_max, x2, tol) + (x - x2) / (2.0 * g_max)
    if x < x1:
        return _dual_sup(mu, g_min, g_max, x1, tol) + (x - x1) / (2.0 * g_min)
    return max(_dual_sup(mu, g_min, g_max, x, tol), 0.0)


def shift_identity_check(mu: AtomicMeasure, alpha: float, tol: ToleranceConfig = DEFAULT_TOL,
                         atol: float = 1e-7) -> bool:
    """Check ``J(0)`` for ``mu`` shifted by ``−α`` against ``T(α)``."""
    j, t = shift_identity_values(mu, alpha, tol)
    if math.isinf(j) or math.isinf(t):
        return j == t
    return abs(j - t) <= atol


def shift_identity_values(mu: AtomicMeasure, alpha: float, tol: ToleranceConfig = DEFAULT_TOL):
    shifted = mu.shifted(-alpha)
    j = j_rate(shifted, mu.lower - alpha, mu.upper - alpha, 0.0, tol)
    return j, t_rate(mu, alpha, tol).t_value


# ---------------------------------------------------------------------------
# Legendre transform and its pieces
# ---------------------------------------------------------------------------

_GRID_POINTS = 201
_GOLDEN_ITERS = 60


def legendre_sup(mu: AtomicMeasure, theta: float, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, float]:
    """``sup_α {θα − T(α)}`` and its maximizer.

    A 201-point grid over the open support is refined by golden section
    around the best cell; the closed-form candidates ``R(2θ)``,
    ``λ_max − 1/(2θ)`` and ``λ_min − 1/(2θ)`` are added when they lie in the
    matching piece. Ties go to the interior candidate.
    """
    theta = float(theta)
    if mu.is_dirac:
        return theta * mu.upper, mu.upper
    dom = domain(mu)
    if theta == 0:
        return 0.0, dom.mean

    def objective(a):
        t = t_rate(mu, a, tol).t_value
        return -math.inf if math.isinf(t) else theta * a - t

    width = dom.lambda_max - dom.lambda_min
    eps = 1e-9 * width
    grid = np.linspace(dom.lambda_min + eps, dom.lambda_max - eps, _GRID_POINTS)
    vals = np.array([objective(a) for a in grid])
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, _GRID_POINTS - 1)]
    refined = concave_maximize(objective, lo, hi, _GOLDEN_ITERS)
    analytic = []
    gamma = 2.0 * theta
    if dom.h_min <= gamma <= dom.h_max:
        a = r_transform(mu, gamma, tol)
        analytic.append((a, objective(a)))
    for edge, active in ((dom.lambda_max, gamma > dom.h_max), (dom.lambda_min, gamma < dom.h_min)):
        if active:
            a = edge - 1.0 / gamma
            if dom.lambda_min < a < dom.lambda_max:
                analytic.append((a, objective(a)))
    best = max([refined] + analytic, key=lambda c: c[1])
    slack = 1e-14 * max(1.0, abs(best[1]))
    # closed-form stationary points win ties against the numerical search
    for cand in analytic:
        if cand[1] >= best[1] - slack:
            best = cand
            break
    return float(best[1]), float(best[0])


def _edge_log_integral(mu: AtomicMeasure, scale: float, edge: float) -> float:
    return float(np.dot(mu.weights, np.log(scale * (edge - mu.positions))))


def g_pieces(mu: AtomicMeasure, theta: float, tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, float, float]:
    """Suprema of ``θα − T(α)`` over the interior piece (G), the upper tail
    (G1) and the lower tail (G2), in closed form.

    A piece whose edge limit of H diverges is ``-inf``.
    """
    theta = float(theta)
    if mu.is_dirac:
        return theta * mu.upper, -math.inf, -math.inf
    dom = domain(mu)
    gamma = 2.0 * theta
    finite_max, finite_min = math.isfinite(dom.h_max), math.isfinite(dom.h_min)

    if dom.h_min < gamma < dom.h_max:
        g = 0.0 if theta == 0 else 0.5 * adaptive_quadrature(lambda u: r_transform(mu, u, tol), 0.0, gamma,
                                                             tol.quad_abs_tol)
    elif gamma >= dom.h_max:
        g = theta * dom.alpha_max - 0.5 * _edge_log_integral(mu, dom.h_max, dom.lambda_max)
    else:
        g = theta * dom.alpha_min - 0.5 * _edge_log_integral(mu, dom.h_min, dom.lambda_min)

    if not finite_max:
        g1 = -math.inf
    elif gamma > dom.h_max:
        g1 = theta * (dom.lambda_max - 1.0 / gamma) - 0.5 * _edge_log_integral(mu, gamma, dom.lambda_max)
    else:
        g1 = theta * dom.alpha_max - 0.5 * _edge_log_integral(mu, dom.h_max, dom.lambda_max)

    if not finite_min:
        g2 = -math.inf
    elif gamma < dom.h_min:
        g2 = theta * (dom.lambda_min - 1.0 / gamma) - 0.5 * _edge_log_integral(mu, gamma, dom.lambda_min)
    else:
        g2 = theta * dom.alpha_min - 0.5 * _edge_log_integral(mu, dom.h_min, dom.lambda_min)
    return g, g1, g2


def rate_table(mu: AtomicMeasure, alphas, tol: ToleranceConfig = DEFAULT_TOL) -> list[RatePoint]:
    return [t_rate(mu, a, tol) for a in alphas]
