"""Finite atomic probability measures, spectra, discretization and distances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np


class MeasureError(ValueError):
    """Invalid measure or spectrum input."""


_MERGE_RTOL = 1e-12
_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Probability measure made of finitely many weighted atoms.

    ``lower``/``upper`` are the declared support edges. They default to the
    first and last atom, but may lie outside the atom hull when the measure
    discretizes a continuous law whose support edges carry no mass (this is
    what makes a finite ``H_max`` possible).
    """

    positions: np.ndarray
    weights: np.ndarray
    lower: float = field(default=math.nan)
    upper: float = field(default=math.nan)

    def __post_init__(self):
        x = np.ascontiguousarray(self.positions, dtype=float)
        w = np.ascontiguousarray(self.weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size == 0:
            raise MeasureError("positions and weights must be non-empty 1-D arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise MeasureError("atoms must be finite")
        if np.any(w <= 0):
            raise MeasureError("weights must be positive")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise MeasureError(f"weights sum to {w.sum()!r}, expected 1")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise MeasureError("positions must be strictly increasing")
        lo = x[0] if math.isnan(self.lower) else float(self.lower)
        hi = x[-1] if math.isnan(self.upper) else float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > x[0] or hi < x[-1]:
            raise MeasureError(f"support [{lo}, {hi}] must contain every atom")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lower", float(lo))
        object.__setattr__(self, "upper", float(hi))

    @property
    def size(self) -> int:
        return self.positions.size

    @property
    def lambda_min(self) -> float:
        return self.lower

    @property
    def lambda_max(self) -> float:
        return self.upper

    @property
    def is_dirac(self) -> bool:
        return self.size == 1 and self.lower == self.upper

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.positions.tolist(), self.weights.tolist()))

    def shifted(self, delta: float) -> "AtomicMeasure":
        """Translate by ``delta`` (support edges move too)."""
        return AtomicMeasure(self.positions + delta, self.weights, self.lower + delta, self.upper + delta)

    def with_support(self, lower: float, upper: float) -> "AtomicMeasure":
        return AtomicMeasure(self.positions, self.weights, lower, upper)

    def __repr__(self) -> str:
        return f"AtomicMeasure(atoms={self.size}, support=[{self.lower:.6g}, {self.upper:.6g}])"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted list of ``N`` eigenvalues; its empirical measure has weights ``1/N``."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())
        if ev.size == 0:
            raise MeasureError("a spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(ev)):
            raise MeasureError("eigenvalues must be finite")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def norm_inf(self) -> float:
        return float(max(abs(self.eigenvalues[0]), abs(self.eigenvalues[-1])))

    def empirical(self) -> AtomicMeasure:
        return from_atoms(self.eigenvalues, np.full(self.n, 1.0 / self.n))

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Spectrum(n={self.n}, range=[{self.eigenvalues[0]:.6g}, {self.eigenvalues[-1]:.6g}])"


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def from_atoms(positions: Iterable[float], weights: Iterable[float],
               support: tuple[float, float] | None = None) -> AtomicMeasure:
    """Normalize, sort and merge atoms into an :class:`AtomicMeasure`.

    Positions closer than ``1e-12`` (relative) are merged by summing weights.

    Examples
    --------
    >>> from_atoms([2, 2, 3], [0.25, 0.25, 0.5]).atoms()
    [(2.0, 0.5), (3.0, 0.5)]
    """
    x = np.asarray(list(positions) if not isinstance(positions, np.ndarray) else positions, dtype=float).ravel()
    w = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights, dtype=float).ravel()
    if x.size == 0:
        raise MeasureError("empty atom list")
    if x.shape != w.shape:
        raise MeasureError("positions and weights differ in length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
        raise MeasureError("atoms must be finite")
    if np.any(w < 0):
        raise MeasureError("weights must be non-negative")
    total = w.sum()
    if total <= 0:
        raise MeasureError("all weights are zero")
    keep = w > 0
    x, w = x[keep], w[keep] / total
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    if x.size > 1:
        gaps = np.diff(x)
        scale = np.maximum(np.abs(x[1:]), np.abs(x[:-1]))
        new_group = gaps > _MERGE_RTOL * np.maximum(scale, 1e-300)
        group = np.concatenate(([0], np.cumsum(new_group)))
        first = np.concatenate(([True], new_group))
        x = x[first]
        w = np.bincount(group, weights=w)
    w = w / w.sum()
    lo, hi = (math.nan, math.nan) if support is None else support
    return AtomicMeasure(x, w, lo, hi)


def dirac(e: float = 0.0) -> AtomicMeasure:
    return from_atoms([e], [1.0])


def bernoulli(a: float = -1.0, b: float = 1.0, p: float = 0.5) -> AtomicMeasure:
    """Two atoms: ``a`` with weight ``1 - p`` and ``b`` with weight ``p``."""
    if not 0 < p < 1:
        raise MeasureError("p must lie in (0, 1)")
    return from_atoms([a, b], [1.0 - p, p])


def trimmed_bernoulli(margin: float = 0.5, a: float = -1.0, b: float = 1.0, p: float = 0.5) -> AtomicMeasure:
    """Bernoulli atoms inside the wider support ``[a - margin, b + margin]``.

    The support edges carry no mass, so ``H_max`` and ``H_min`` are finite
    and both saturated regimes exist.
    """
    if margin <= 0:
        raise MeasureError("margin must be positive")
    return bernoulli(a, b, p).with_support(a - margin, b + margin)


def uniform_grid(n: int, lower: float = 0.0, upper: float = 1.0) -> AtomicMeasure:
    """Uniform law on ``[lower, upper]`` discretized at the ``n`` cell midpoints."""
    if n < 1 or not upper > lower:
        raise MeasureError("uniform_grid needs n >= 1 and upper > lower")
    mids = lower + (np.arange(n) + 0.5) * (upper - lower) / n
    return from_atoms(mids, np.full(n, 1.0 / n), (lower, upper))


def semicircle_grid(n: int, radius: float = 2.0) -> AtomicMeasure:
    """Semicircle law on ``[-radius, radius]`` by midpoint quadrature on ``n`` cells.

    With the default radius the law has unit variance.
    """
    if n < 1 or radius <= 0:
        raise MeasureError("semicircle_grid needs n >= 1 and radius > 0")
    mids = -radius + (np.arange(n) + 0.5) * 2.0 * radius / n
    dens = np.sqrt(np.clip(radius * radius - mids * mids, 0.0, None))
    return from_atoms(mids, dens, (-radius, radius))


BUILTINS = {
    "dirac": dirac,
    "bernoulli": bernoulli,
    "trimmed_bernoulli": trimmed_bernoulli,
    "uniform": uniform_grid,
    "semicircle": semicircle_grid,
}

_INT_PARAMS = {"n"}


def builtin(name: str, **params) -> AtomicMeasure:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise MeasureError(f"unknown builtin measure {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise MeasureError(f"bad parameters for builtin {name!r}: {exc}") from None


# ---------------------------------------------------------------------------
# discretization, distances, moments
# ---------------------------------------------------------------------------

def quantile_discretize(mu: AtomicMeasure, n: int) -> Spectrum:
    """N-point spectrum with ``λ_1`` at the lower support edge and
    ``λ_i = inf{x >= λ_{i-1} : μ([λ_1, x]) >= i/N}`` for ``i >= 2``.
    """
    if n < 1:
        raise MeasureError("N must be >= 1")
    cdf = np.cumsum(mu.weights)
    targets = np.arange(2, n + 1) / n
    # first atom whose cumulative mass reaches i/N (tolerant to summation rounding)
    idx = np.searchsorted(cdf, targets - 1e-12, side="left")
    idx = np.minimum(idx, mu.size - 1)
    return Spectrum(np.concatenate(([mu.lower], mu.positions[idx])))


def w1_distance(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Wasserstein-1 distance ``∫ |F_μ − F_ν| dx`` between two atomic measures."""
    xs = np.union1d(mu.positions, nu.positions)
    f_mu = np.cumsum(mu.weights)[np.searchsorted(mu.positions, xs, side="right") - 1]
    f_mu = np.where(xs < mu.positions[0], 0.0, f_mu)
    f_nu = np.cumsum(nu.weights)[np.searchsorted(nu.positions, xs, side="right") - 1]
    f_nu = np.where(xs < nu.positions[0], 0.0, f_nu)
    return float(np.sum(np.abs(f_mu - f_nu)[:-1] * np.diff(xs)))


def moment(mu: AtomicMeasure, k: int) -> float:
    if k < 0:
        raise MeasureError("moment order must be >= 0")
    return float(np.dot(mu.weights, mu.positions ** k))


def mean(mu: AtomicMeasure) -> float:
    return float(np.dot(mu.weights, mu.positions))


def variance(mu: AtomicMeasure) -> float:
    return float(np.dot(mu.weights, (mu.positions - mean(mu)) ** 2))


def support(mu: AtomicMeasure) -> tuple[float, float]:
    return mu.lower, mu.upper


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def measure_from_dict(data: dict[str, Any]) -> AtomicMeasure:
    """Build a measure from ``{"atoms": [{"x":..,"w":..}, ...], "support": [lo, hi]}``
    or ``{"builtin": "semicircle", "params": {"n": 200}}``.
    """
    if not isinstance(data, dict):
        raise MeasureError("measure JSON must be an object")
    if "builtin" in data:
        return builtin(data["builtin"], **dict(data.get("params", {})))
    if "atoms" not in data:
        raise MeasureError("measure JSON needs 'atoms' or 'builtin'")
    try:
        xs = [float(a["x"]) for a in data["atoms"]]
        ws = [float(a["w"]) for a in data["atoms"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MeasureError(f"malformed atom entry: {exc}") from None
    sup = data.get("support")
    if sup is not None:
        if len(sup) != 2:
            raise MeasureError("'support' must be [lower, upper]")
        sup = (float(sup[0]), float(sup[1]))
    return from_atoms(xs, ws, sup)


def measure_to_dict(mu: AtomicMeasure) -> dict[str, Any]:
    out: dict[str, Any] = {"atoms": [{"x": x, "w": w} for x, w in mu.atoms()]}
    if mu.lower != mu.positions[0] or mu.upper != mu.positions[-1]:
        out["support"] = [mu.lower, mu.upper]
    return out


def load_measure(path: str | Path) -> AtomicMeasure:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeasureError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return measure_from_dict(data)


def dump_measure(mu: AtomicMeasure, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_dict(mu), fh)


def parse_measure_source(text: str) -> AtomicMeasure:
    """Resolve ``builtin:NAME[:k=v,...]`` or a JSON file path."""
    if text.startswith("builtin:"):
        _, _, rest = text.partition(":")
        name, _, args = rest.partition(":")
        params: dict[str, Any] = {}
        for item in filter(None, args.split(",")):
            key, sep, raw = item.partition("=")
            if not sep:
                raise MeasureError(f"bad builtin parameter {item!r} (expected key=value)")
            key = key.strip()
            try:
                params[key] = int(raw) if key in _INT_PARAMS else float(raw)
            except ValueError:
                raise MeasureError(f"bad value for {key!r}: {raw!r}") from None
        return builtin(name, **params)
    return load_measure(text)
