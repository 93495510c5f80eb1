"""Asymptotics of rank-one and finite-rank spherical integrals.

Transforms of atomic spectral measures (Hilbert, K, R, Q), the piecewise
limit of ``(1/N) log I_N(θ)``, large-deviation rate functions, and
Monte-Carlo estimators that cross-check them.
"""

__version__ = "0.1.0"

from .measure import (  # noqa: E402
    AtomicMeasure,
    Spectrum,
    bernoulli,
    dirac,
    from_atoms,
    quantile_discretize,
    semicircle_grid,
    trimmed_bernoulli,
    uniform_grid,
)
from .numerics import ToleranceConfig  # noqa: E402

__all__ = [
    "AtomicMeasure",
    "Spectrum",
    "ToleranceConfig",
    "bernoulli",
    "dirac",
    "from_atoms",
    "quantile_discretize",
    "semicircle_grid",
    "trimmed_bernoulli",
    "uniform_grid",
]
