"""Numeric kernel: seeded normal streams, quadrature, root finding,
1-D maximization, complex Newton continuation and a Jacobi eigensolver.

Every routine is deterministic given its inputs and a :class:`ToleranceConfig`.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate


class NumericsError(RuntimeError):
    """A kernel failed to converge or was called outside its contract."""


class ConvergenceError(NumericsError):
    pass


@dataclass(frozen=True)
class ToleranceConfig:
    """Fixed numeric tolerances shared by the whole library.

    Parameters
    ----------
    root_abs_tol : float
        Residual target for real root finding (scaled by ``max(1, |target|)``
        where the caller has a natural scale).
    quad_abs_tol : float
        Absolute tolerance for adaptive quadrature.
    newton_max_iter : int
        Iteration cap for every Newton-type loop.
    jacobi_off_tol : float
        Jacobi stops when the off-diagonal Frobenius norm drops below
        ``jacobi_off_tol * ||A||_F``.
    path_segments : int
        Number of linear segments used by complex path continuation.
    """

    root_abs_tol: float = 1e-12
    quad_abs_tol: float = 1e-10
    newton_max_iter: int = 200
    jacobi_off_tol: float = 1e-11
    path_segments: int = 32

    def __post_init__(self):
        for name in ("root_abs_tol", "quad_abs_tol", "jacobi_off_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite float, got {value!r}")
        for name in ("newton_max_iter", "path_segments"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def replace(self, **overrides) -> "ToleranceConfig":
        return dataclasses.replace(self, **overrides)

    @classmethod
    def from_pairs(cls, pairs: Iterable[str], base: "ToleranceConfig | None" = None) -> "ToleranceConfig":
        """Build a config from ``KEY=VAL`` strings, e.g. ``["root_abs_tol=1e-10"]``."""
        base = base or cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        overrides = {}
        for pair in pairs:
            key, sep, raw = pair.partition("=")
            key = key.strip()
            if not sep or key not in types:
                raise ValueError(f"unknown tolerance override {pair!r}")
            overrides[key] = int(raw) if types[key] in ("int", int) else float(raw)
        return base.replace(**overrides)


DEFAULT_TOL = ToleranceConfig()


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

class NormalStream:
    """Standard normal stream on a counter-based (Philox) generator.

    The stream is a pure function of ``key``: two streams built from the same
    key produce identical draws, distinct keys give independent substreams.
    A stream is a cursor; do not share one instance between threads.
    """

    def __init__(self, *key: int):
        if not key:
            raise ValueError("a stream key needs at least one integer")
        if any(int(k) < 0 for k in key):
            raise ValueError("stream key entries must be non-negative")
        self.key = tuple(int(k) for k in key)
        self.generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.key)))

    def normals(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def __iter__(self):
        while True:
            yield from self.normals(1024)


def normal_sampler(*stream_key: int) -> NormalStream:
    return NormalStream(*stream_key)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def adaptive_quadrature(f: Callable[[float], float], a: float, b: float,
                        tol: float | None = None, *, limit: int = 200,
                        full_output: bool = False):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    Endpoints are never evaluated, so integrable endpoint singularities
    (``log x`` at 0, removable ``0/0`` forms) are handled without special
    casing. Raises :class:`ConvergenceError` when the subdivision cap is hit.
    """
    tol = DEFAULT_TOL.quad_abs_tol if tol is None else tol
    if a == b:
        return (0.0, 0.0) if full_output else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not converge on [{a}, {b}]: {exc}") from None
    return (value, err) if full_output else value


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

def bracketed_root(f: Callable[[float], float], lo: float, hi: float, tol: float | None = None,
                   fprime: Callable[[float], float] | None = None, *,
                   max_iter: int = 400, f_lo: float | None = None, f_hi: float | None = None) -> float:
    """Root of ``f`` in ``[lo, hi]`` with ``|f(root)| <= tol``.

    Newton steps (when ``fprime`` is given) or regula-falsi steps (Illinois
    variant) are accepted only while they stay inside the shrinking bracket;
    otherwise the step falls back to bisection, so convergence is guaranteed.
    The loop also stops once the bracket can no longer be split in floating
    point. ``f_lo``/``f_hi`` may be supplied when an endpoint is a pole.
    """
    tol = DEFAULT_TOL.root_abs_tol if tol is None else tol
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
        f_lo, f_hi = f_hi, f_lo
    flo = f(lo) if f_lo is None else f_lo
    fhi = f(hi) if f_hi is None else f_hi
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise NumericsError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    increasing = fhi > 0
    x = 0.5 * (lo + hi)
    side = 0
    for _ in range(max_iter):
        fx = f(x)
        if math.isnan(fx):
            raise NumericsError(f"f returned NaN at {x}")
        if abs(fx) <= tol:
            return x
        if (fx > 0) == increasing:
            hi, fhi = x, fx
            if side == 1 and math.isfinite(flo):
                flo *= 0.5
            side = 1
        else:
            lo, flo = x, fx
            if side == -1 and math.isfinite(fhi):
                fhi *= 0.5
            side = -1
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            return x if abs(fx) <= min(abs(flo), abs(fhi)) else (lo if abs(flo) < abs(fhi) else hi)
        step = None
        if fprime is not None:
            d = fprime(x)
            if d != 0 and math.isfinite(d):
                step = x - fx / d
        elif math.isfinite(flo) and math.isfinite(fhi):
            step = (lo * fhi - hi * flo) / (fhi - flo)
        if step is None or not (lo < step < hi) or not math.isfinite(step):
            step = mid
        x = step
    raise ConvergenceError(f"bracketed_root hit the iteration cap ({max_iter})")


# ---------------------------------------------------------------------------
# maximization
# ---------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def concave_maximize(f: Callable[[float], float], lo: float, hi: float, iters: int = 100):
    """Golden-section search for the maximum of a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x_star, f_star)``. Endpoint values are compared at the end, so
    a monotone ``f`` reports its maximizing endpoint.
    """
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = max(((c, fc), (d, fd), (lo, f(lo)), (hi, f(hi))), key=lambda t: t[1])
    return best


# ---------------------------------------------------------------------------
# complex Newton
# ---------------------------------------------------------------------------

def complex_newton(f: Callable, fprime: Callable, seed: complex,
                   path: Sequence | None = None, *, tol: float = 1e-11,
                   max_iter: int | None = None) -> complex:
    """Newton's method in the complex plane with optional path continuation.

    Without ``path``, solves ``f(z) = 0`` from ``seed``. With ``path``, ``f``
    and ``fprime`` take ``(z, p)`` and the root is tracked along the
    parameters ``p`` in order, each solve warm-started from the previous one;
    the root for the last parameter is returned.
    """
    max_iter = DEFAULT_TOL.newton_max_iter if max_iter is None else max_iter
    z = complex(seed)
    if path is None:
        return _newton(lambda w: f(w), lambda w: fprime(w), z, tol, max_iter)
    for p in path:
        z = _newton(lambda w, p=p: f(w, p), lambda w, p=p: fprime(w, p), z, tol, max_iter)
    return z


def _newton(f, fprime, z, tol, max_iter):
    fz = f(z)
    for _ in range(max_iter):
        if abs(fz) <= tol:
            return z
        d = fprime(z)
        if d == 0 or not np.isfinite(d):
            raise ConvergenceError(f"vanishing derivative at {z}")
        z_new = z - fz / d
        f_new = f(z_new)
        # damp steps that increase the residual
        damp = 1.0
        while not (np.isfinite(f_new) and abs(f_new) < abs(fz)) and damp > 1e-6:
            damp *= 0.5
            z_new = z - damp * fz / d
            f_new = f(z_new)
        if z_new == z:
            break
        z, fz = z_new, f_new
    if abs(fz) <= tol:
        return z
    raise ConvergenceError(f"complex Newton did not converge (|f|={abs(fz):.3e})")


# ---------------------------------------------------------------------------
# Jacobi eigensolver
# ---------------------------------------------------------------------------

def _round_robin_layouts(m: int) -> list[np.ndarray]:
    """Circle-method schedule for ``m`` (even) indices, as ``m - 1`` layouts.

    In each layout the pairs to rotate are ``(layout[i], layout[m/2 + i])``;
    over all layouts every unordered pair appears exactly once.
    """
    players = list(range(m))
    half = m // 2
    layouts = []
    for _ in range(m - 1):
        layouts.append(np.array(players[:half] + players[half:][::-1]))
        players = [players[0], players[-1]] + players[1:-1]
    return layouts


def _scalar_jacobi(a: np.ndarray, q: np.ndarray | None, target: np.ndarray, max_sweeps: int,
                   strict: bool = True):
    """Round-robin Jacobi on a batch of even-sized symmetric matrices.

    ``a`` has shape ``(..., m, m)`` and is held in the current layout's order
    so the rotations of a round act on the contiguous halves. Returns the
    rotated ``(a, q)`` restored to the original index order. Zero padding
    rows stay decoupled because a zero pivot gives the identity rotation.
    """
    m = a.shape[-1]
    half = m // 2
    idx = np.arange(half)
    labels = np.arange(m)

    def off_norm(x):
        off = x - np.eye(m) * x
        return np.sqrt(np.sum(off * off, axis=(-2, -1)))

    def relabel(x, y, new_labels):
        where = np.empty(m, dtype=int)
        where[labels] = np.arange(m)
        perm = where[new_labels]
        x = x[..., perm, :][..., :, perm]
        if y is not None:
            y = y[..., :, perm]
        return x, y

    layouts = _round_robin_layouts(m)
    for _ in range(max_sweeps):
        if np.all(off_norm(a) <= target):
            break
        for layout in layouts:
            a, q = relabel(a, q, layout)
            labels = layout
            apq = a[..., idx, idx + half]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            app, arr = a[..., idx, idx], a[..., idx + half, idx + half]
            t_arg = (arr - app) / (2.0 * np.where(active, apq, 1.0))
            big = np.abs(t_arg) > 1e150
            safe = np.where(big, 1.0, t_arg)
            t = np.where(big, 0.5 / np.where(big, t_arg, 1.0),
                         np.sign(safe) / (np.abs(safe) + np.sqrt(safe * safe + 1.0)))
            t = np.where(t_arg == 0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            cr, sr = c[..., :, None], s[..., :, None]
            cc, sc = c[..., None, :], s[..., None, :]
            top, bottom = a[..., :half, :], a[..., half:, :]
            a = np.concatenate((cr * top - sr * bottom, sr * top + cr * bottom), axis=-2)
            left, right = a[..., :, :half], a[..., :, half:]
            a = np.concatenate((left * cc - right * sc, left * sc + right * cc), axis=-1)
            # exact zeros on the annihilated pivots
            a[..., idx, idx + half] = np.where(active, 0.0, a[..., idx, idx + half])
            a[..., idx + half, idx] = np.where(active, 0.0, a[..., idx + half, idx])
            if q is not None:
                left, right = q[..., :, :half], q[..., :, half:]
                q = np.concatenate((left * cc - right * sc, left * sc + right * cc), axis=-1)
    else:
        if strict and not np.all(off_norm(a) <= target):
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    a, q = relabel(a, q, np.arange(m))
    return a, q


_BLOCK = 10
_INNER_SWEEPS = 1


def jacobi_eigen(a, tol: float | None = None, max_sweeps: int = 60, vectors: bool = True):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Every sweep visits each off-diagonal pair (of indices, or of index blocks
    for large matrices) once, in round-robin order, so disjoint rotations are
    applied together. Block pairs are diagonalized by the scalar sweep and the
    resulting orthogonal block rotations are applied with matrix products.
    Converged when the off-diagonal Frobenius norm is below ``tol * ||A||_F``.

    Returns
    -------
    eigenvalues : ndarray
        Sorted ascending.
    q : ndarray or None
        Orthogonal matrix with ``A = Q diag(eigenvalues) Q^T`` (columns match
        the sorted eigenvalues); ``None`` if ``vectors`` is false.
    """
    tol = DEFAULT_TOL.jacobi_off_tol if tol is None else tol
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigen needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("jacobi_eigen needs finite entries")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise ValueError("jacobi_eigen needs a symmetric matrix")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), (np.zeros((0, 0)) if vectors else None)
    a = 0.5 * (a + a.T)
    target = tol * np.linalg.norm(a)

    if n <= 2 * _BLOCK:
        m = n + (n % 2)
        work = np.zeros((m, m))
        work[:n, :n] = a
        work, q = _scalar_jacobi(work, np.eye(m) if vectors else None, np.asarray(target), max_sweeps)
        return _sorted(np.diag(work)[:n], None if q is None else q[:n, :n])

    b = _BLOCK
    nb = -(-n // b)
    nb += nb % 2
    m = nb * b
    work = np.zeros((m, m))
    work[:n, :n] = a
    q = np.eye(m) if vectors else None
    pairs = nb // 2
    labels = np.arange(nb)
    k = np.arange(pairs)

    def off_norm(x):
        return float(np.linalg.norm(x - np.diag(np.diag(x))))

    def relabel(x, y, new_block_order):
        where = np.empty(nb, dtype=int)
        where[labels] = np.arange(nb)
        block_perm = where[new_block_order]
        perm = (block_perm[:, None] * b + np.arange(b)).ravel()
        x = x[np.ix_(perm, perm)]
        if y is not None:
            y = y[:, perm]
        return x, y

    layouts = [np.stack((lay[:pairs], lay[pairs:]), axis=1).ravel() for lay in _round_robin_layouts(nb)]
    inner_target = np.full(pairs, 0.1 * target / math.sqrt(nb))
    for _ in range(max_sweeps):
        if off_norm(work) <= target:
            break
        for layout in layouts:
            work, q = relabel(work, q, layout)
            labels = layout
            blocks = work.reshape(pairs, 2 * b, pairs, 2 * b)[k, :, k, :]
            _, rot = _scalar_jacobi(blocks, np.broadcast_to(np.eye(2 * b), blocks.shape).copy(),
                                    inner_target, _INNER_SWEEPS, strict=False)
            rows = np.matmul(rot.transpose(0, 2, 1), work.reshape(pairs, 2 * b, m)).reshape(m, m)
            cols = np.matmul(rows.reshape(m, pairs, 2 * b).transpose(1, 0, 2), rot)
            work = cols.transpose(1, 0, 2).reshape(m, m)
            work = 0.5 * (work + work.T)
            if q is not None:
                q = np.matmul(q.reshape(m, pairs, 2 * b).transpose(1, 0, 2), rot).transpose(1, 0, 2).reshape(m, m)
    else:
        if off_norm(work) > target:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    work, q = relabel(work, q, np.arange(nb))
    return _sorted(np.diag(work)[:n], None if q is None else q[:n, :n])


def _sorted(evals: np.ndarray, q: np.ndarray | None):
    order = np.argsort(evals, kind="stable")
    return evals[order].copy(), (None if q is None else q[:, order])
