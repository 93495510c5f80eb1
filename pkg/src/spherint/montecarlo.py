"""Monte-Carlo estimators of spherical integrals built on the Gaussian
representation of a Haar-distributed unit vector, plus the random-matrix
experiments (free convolution, additivity, concentration, finite rank).

A uniform unit vector is ``g/|g|`` with ``g`` standard Gaussian (``β`` real
components per coordinate), so ``(UEU*)_11 = Σ λ_i |g_i|² / Σ |g_i|²``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .asymptote import INTERIOR, finite_n_leading_term, rank_one_limit
from .measure import AtomicMeasure, Spectrum, from_atoms, quantile_discretize
from .numerics import DEFAULT_TOL, NormalStream, NumericsError, ToleranceConfig, jacobi_eigen
from .transform import DomainError, r_transform, v_n_solve

log = logging.getLogger(__name__)

DIRECT = "direct"
TILTED = "tilted"
METHODS = (DIRECT, TILTED)

# cap on Nθ(λ_max − λ_min) for the untilted estimator
DIRECT_EXPONENT_CAP = 600.0
# doubles per generated batch
_BATCH_BUDGET = 2_000_000


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo run parameters.

    Results are a deterministic function of ``(seed, chunks)``: chunk ``c``
    draws from its own counter-based stream keyed by ``(seed, c)`` and the
    chunk results are reduced in index order.
    """

    samples: int
    seed: int = 0
    beta: int = 1
    method: str = TILTED
    chunks: int = 4
    n: int | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.chunks < 1:
            raise ValueError("chunks must be >= 1")
        if self.beta not in (1, 2):
            raise ValueError("beta must be 1 or 2")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit non-negative integer")
        if self.n is not None and self.n < 2:
            raise ValueError("n must be >= 2")


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples_used: int
    method: str
    seed: int = 0


# ---------------------------------------------------------------------------
# streaming log-mean-exp
# ---------------------------------------------------------------------------

@dataclass
class _LogMoments:
    """Running ``(count, shift, Σ e^{a−shift}, Σ e^{2(a−shift)})``."""

    count: int = 0
    shift: float = -math.inf
    s1: float = 0.0
    s2: float = 0.0

    def add(self, a: np.ndarray) -> None:
        if a.size == 0:
            return
        top = float(a.max())
        if top > self.shift:
            scale = math.exp(self.shift - top) if self.count else 0.0
            self.s1 *= scale
            self.s2 *= scale * scale
            self.shift = top
        e = np.exp(a - self.shift)
        self.s1 += float(e.sum())
        self.s2 += float(np.dot(e, e))
        self.count += a.size

    def merge(self, other: "_LogMoments") -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.shift, self.s1, self.s2 = other.count, other.shift, other.s1, other.s2
            return
        top = max(self.shift, other.shift)
        a, b = math.exp(self.shift - top), math.exp(other.shift - top)
        self.s1 = self.s1 * a + other.s1 * b
        self.s2 = self.s2 * a * a + other.s2 * b * b
        self.shift = top
        self.count += other.count

    def log_mean(self) -> float:
        return self.shift + math.log(self.s1 / self.count)

    def relative_se(self) -> float:
        """Standard error of the mean divided by the mean."""
        n = self.count
        if n < 2:
            return 0.0
        m1, m2 = self.s1 / n, self.s2 / n
        var = max(m2 - m1 * m1, 0.0) * n / (n - 1)
        return math.sqrt(var / n) / m1


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if c < extra else 0) for c in range(parts)]


def _run_chunks(cfg: McConfig, kernel) -> _LogMoments:
    """Evaluate ``kernel(stream, count) -> _LogMoments`` on every chunk and
    reduce in chunk order."""
    counts = _split(cfg.samples, cfg.chunks)
    jobs = [(NormalStream(cfg.seed, c), k) for c, k in enumerate(counts)]
    with ThreadPoolExecutor(max_workers=cfg.workers or min(cfg.chunks, 4)) as pool:
        parts = list(pool.map(lambda job: kernel(*job), jobs))
    total = _LogMoments()
    for part in parts:
        total.merge(part)
    return total


def _batches(count: int, width: int):
    size = max(1, _BATCH_BUDGET // max(width, 1))
    done = 0
    while done < count:
        step = min(size, count - done)
        yield step
        done += step


# ---------------------------------------------------------------------------
# rank-one estimators
# ---------------------------------------------------------------------------

def _check_spectrum(spectrum: Spectrum, cfg: McConfig) -> None:
    if spectrum.n < 2:
        raise ValueError("Monte Carlo needs N >= 2")
    if cfg.n is not None and cfg.n != spectrum.n:
        raise ValueError(f"config n={cfg.n} does not match the spectrum dimension {spectrum.n}")


def _direct_moments(spectrum: Spectrum, theta: float, cfg: McConfig) -> _LogMoments:
    lam = spectrum.eigenvalues
    n, beta = spectrum.n, cfg.beta
    span = lam[-1] - lam[0]
    if n * abs(theta) * span > DIRECT_EXPONENT_CAP:
        raise DomainError(f"direct estimator refused: Nθ(λ_max − λ_min) = {n * abs(theta) * span:.4g} "
                          f"exceeds {DIRECT_EXPONENT_CAP:g}; use the tilted method")
    # centre on the edge that keeps the exponent's fluctuating part non-negative
    c = float(lam[0] if theta >= 0 else lam[-1])
    shift = np.repeat(lam - c, beta)

    def kernel(stream: NormalStream, count: int) -> _LogMoments:
        acc = _LogMoments()
        for size in _batches(count, n * beta):
            z = stream.normals((size, n * beta))
            z *= z
            ratio = (z @ shift) / z.sum(axis=1)
            acc.add(n * theta * ratio)
        return acc

    moments = _run_chunks(cfg, kernel)
    moments.shift += n * theta * c
    return moments


def _tilted_moments(spectrum: Spectrum, theta: float, cfg: McConfig, tol: ToleranceConfig):
    lam = spectrum.eigenvalues
    n, beta = spectrum.n, cfg.beta
    v = v_n_solve(spectrum, theta, beta, tol)
    gamma = 2.0 * theta / beta
    d = 1.0 + gamma * (v - lam)
    if np.any(d <= 0):
        raise DomainError("tilted variances are not positive; theta is outside the empirical domain")
    inv_d = np.repeat(1.0 / d, beta)
    centred = np.repeat((lam - v) / d, beta)
    scale = 1.0 / (beta * n)

    def kernel(stream: NormalStream, count: int) -> _LogMoments:
        acc = _LogMoments()
        for size in _batches(count, n * beta):
            z = stream.normals((size, n * beta))
            z *= z
            # g = z/√d, so |g|² = z²/d
            gamma_n = (z @ inv_d) * scale - 1.0
            y = (z @ centred) * scale
            acc.add(-n * theta * gamma_n * y / (1.0 + gamma_n))
        return acc

    base = n * theta * v - 0.5 * beta * float(np.sum(np.log(d)))
    return _run_chunks(cfg, kernel), base


def mc_log_integral(spectrum: Spectrum, theta: float, cfg: McConfig,
                    tol: ToleranceConfig = DEFAULT_TOL) -> McEstimate:
    """Estimate ``(1/N) log E[exp(Nθ (UEU*)_11)]``.

    ``direct`` averages ``exp(NθS)`` over plain Gaussian vectors. ``tilted``
    samples ``g_i ~ N(0, 1/d_i)`` with ``d_i = 1 + (2θ/β)(v_N − λ_i)`` and
    reweights exactly: ``I_N = e^{Nθv_N} Π d_i^{−β/2} E[e^{a}]`` with
    ``a = −Nθ γ_N (γ̂_N − v_N γ_N)/(1 + γ_N)``, ``γ_N = Σ|g_i|²/(βN) − 1`` and
    ``γ̂_N − v_N γ_N = Σ (λ_i − v_N)|g_i|²/(βN)``. The standard error is the
    delta-method error of the log.
    """
    _check_spectrum(spectrum, cfg)
    theta = float(theta)
    n = spectrum.n
    if theta == 0:
        return McEstimate(0.0, 0.0, cfg.samples, cfg.method, cfg.seed)
    if cfg.method == DIRECT:
        moments = _direct_moments(spectrum, theta, cfg)
        log_i = moments.log_mean()
    else:
        moments, base = _tilted_moments(spectrum, theta, cfg, tol)
        log_i = base + moments.log_mean()
    return McEstimate(log_i / n, moments.relative_se() / n, moments.count, cfg.method, cfg.seed)


def mc_prefactor_ratio(spectrum: Spectrum, theta: float, cfg: McConfig,
                       tol: ToleranceConfig = DEFAULT_TOL) -> McEstimate:
    """Estimate ``exp(−N · finite_n_leading_term) · I_N(θ)`` by the tilted method (β = 1).

    This is exactly the mean of the tilted weights ``e^a``.
    """
    _check_spectrum(spectrum, cfg)
    if cfg.beta != 1:
        raise ValueError("the prefactor ratio is defined for beta=1")
    if theta == 0:
        raise DomainError("theta must be non-zero")
    moments, _ = _tilted_moments(spectrum, float(theta), cfg, tol)
    ratio = math.exp(moments.log_mean())
    return McEstimate(ratio, ratio * moments.relative_se(), moments.count, TILTED, cfg.seed)


# ---------------------------------------------------------------------------
# Haar columns and free convolution
# ---------------------------------------------------------------------------

def _normals(rng, shape) -> np.ndarray:
    if isinstance(rng, NormalStream):
        return rng.normals(shape)
    return rng.standard_normal(shape)


def sample_haar_columns(n: int, k: int, rng, beta: int = 1) -> np.ndarray:
    """``k`` orthonormal columns of a Haar-distributed orthogonal (β=1) or
    unitary (β=2) ``n×n`` matrix, as an ``n×k`` array.

    Gaussian columns are orthonormalized in order (QR with the diagonal of R
    made positive, which is Gram–Schmidt).
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    for _ in range(8):
        g = _normals(rng, (n, k))
        if beta == 2:
            g = (g + 1j * _normals(rng, (n, k))) / math.sqrt(2.0)
        q, r = np.linalg.qr(g)
        diag = np.diagonal(r)
        if np.all(np.abs(diag) > 1e-12 * math.sqrt(n)):
            phase = diag / np.abs(diag)
            return q * phase.conj()[None, :] if beta == 2 else q * np.sign(diag)[None, :]
        log.warning("degenerate Gaussian draw in sample_haar_columns; redrawing")
    raise NumericsError("repeated degenerate Gaussian draws")


def _eigvalsh(m: np.ndarray, eigensolver: str, tol: ToleranceConfig) -> np.ndarray:
    if eigensolver == "jacobi":
        return jacobi_eigen(m, tol.jacobi_off_tol, vectors=False)[0]
    if eigensolver == "lapack":
        return np.linalg.eigvalsh(m)
    raise ValueError("eigensolver must be 'jacobi' or 'lapack'")


def free_conv_spectrum(a: Spectrum, b: Spectrum, rng, eigensolver: str = "jacobi",
                       tol: ToleranceConfig = DEFAULT_TOL) -> Spectrum:
    """Eigenvalues of ``diag(A) + V diag(B) Vᵀ`` with ``V`` Haar orthogonal."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    n = a.n
    v = sample_haar_columns(n, n, rng)
    m = (v * b.eigenvalues[None, :]) @ v.T
    m = 0.5 * (m + m.T)
    m[np.diag_indices(n)] += a.eigenvalues
    ev = _eigvalsh(m, eigensolver, tol)
    trace = float(a.eigenvalues.sum() + b.eigenvalues.sum())
    if abs(ev.sum() - trace) > 1e-8 * n * max(1.0, np.abs(ev).max()):
        raise NumericsError("eigenvalue sum does not match the trace")
    return Spectrum(ev)


@dataclass
class AdditivityReport:
    n: int
    reps: int
    thetas: list[float]
    mean_limit: list[float]
    std_limit: list[float]
    target: list[float]
    gap: list[float]
    excluded: list[int]
    gammas: list[float] = field(default_factory=list)
    r_empirical: list[float] = field(default_factory=list)
    r_target: list[float] = field(default_factory=list)
    r_gap: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConcentrationReport:
    n: int
    reps: int
    theta: float
    values: list[float]
    variance: float
    variance_times_n: float

    def to_dict(self) -> dict:
        return asdict(self)


def _draw_spectra(mu_a: AtomicMeasure, mu_b: AtomicMeasure, n: int, reps: int, seed: int,
                  eigensolver: str, tol: ToleranceConfig) -> list[Spectrum]:
    a, b = quantile_discretize(mu_a, n), quantile_discretize(mu_b, n)
    return [free_conv_spectrum(a, b, NormalStream(seed, n, r), eigensolver, tol) for r in range(reps)]


def additivity_experiment(mu_a: AtomicMeasure, mu_b: AtomicMeasure, n: int, thetas: Sequence[float],
                          reps: int, seed: int, gammas: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5),
                          eigensolver: str = "jacobi", tol: ToleranceConfig = DEFAULT_TOL) -> AdditivityReport:
    """Compare limits on spectra of ``A + VBVᵀ`` with the sum of the separate limits.

    For each θ the per-draw limit is the rank-one limit of the draw's
    empirical measure; draws leaving the interior regime are excluded and
    counted. The R-level comparison uses the pooled empirical measure of all
    draws against ``R_A + R_B``.
    """
    thetas = [float(t) for t in thetas]
    for t in thetas:
        for mu in (mu_a, mu_b):
            if rank_one_limit(mu, t, 1, tol).regime != INTERIOR:
                raise DomainError(f"theta={t!r} is not interior for both input measures")
    spectra = _draw_spectra(mu_a, mu_b, n, reps, seed, eigensolver, tol)
    means, stds, targets, gaps, excluded = [], [], [], [], []
    for t in thetas:
        vals = []
        for s in spectra:
            res = rank_one_limit(s.empirical(), t, 1, tol)
            if res.regime == INTERIOR:
                vals.append(res.value)
        excluded.append(reps - len(vals))
        target = rank_one_limit(mu_a, t, 1, tol).value + rank_one_limit(mu_b, t, 1, tol).value
        mean_val = float(np.mean(vals)) if vals else math.nan
        means.append(mean_val)
        stds.append(float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0)
        targets.append(target)
        gaps.append(abs(mean_val - target))
    pooled = from_atoms(np.concatenate([s.eigenvalues for s in spectra]),
                        np.full(n * reps, 1.0 / (n * reps)))
    r_emp = [r_transform(pooled, g, tol) for g in gammas]
    r_tgt = [r_transform(mu_a, g, tol) + r_transform(mu_b, g, tol) for g in gammas]
    return AdditivityReport(n, reps, thetas, means, stds, targets, gaps, excluded,
                            [float(g) for g in gammas], r_emp, r_tgt,
                            [abs(x - y) for x, y in zip(r_emp, r_tgt)])


def concentration_experiment(mu_a: AtomicMeasure, mu_b: AtomicMeasure, n: int, theta: float,
                             reps: int, seed: int, eigensolver: str = "jacobi",
                             tol: ToleranceConfig = DEFAULT_TOL) -> ConcentrationReport:
    """Spread across Haar draws of the limit evaluated on each draw's spectrum."""
    spectra = _draw_spectra(mu_a, mu_b, n, reps, seed, eigensolver, tol)
    values = [rank_one_limit(s.empirical(), theta, 1, tol).value for s in spectra]
    var = float(np.var(values, ddof=1)) if reps > 1 else 0.0
    return ConcentrationReport(n, reps, float(theta), values, var, var * n)


# ---------------------------------------------------------------------------
# finite rank
# ---------------------------------------------------------------------------

MAX_RANK = 8


def _orthogonalize(g: np.ndarray) -> np.ndarray:
    """Gram–Schmidt (applied twice) on the last axis' columns of a batch ``(b, N, M)``."""
    q = g.copy()
    m = q.shape[-1]
    for _ in range(2):
        for j in range(m):
            for i in range(j):
                proj = np.einsum("bn,bn->b", q[:, :, i].conj(), q[:, :, j])
                q[:, :, j] -= proj[:, None] * q[:, :, i]
            norm = np.sqrt(np.einsum("bn,bn->b", q[:, :, j].conj(), q[:, :, j]).real)
            q[:, :, j] /= norm[:, None]
    return q


def finite_rank_mc(spectrum: Spectrum, thetas: Sequence[float], cfg: McConfig) -> McEstimate:
    """Estimate ``(1/(NM)) log E[exp(N Σ_m θ_m (U E U*)_mm)]`` for ``M`` columns.

    Uses the Direct method on Gram–Schmidt-orthonormalized Gaussian columns.
    """
    _check_spectrum(spectrum, cfg)
    thetas = np.asarray([float(t) for t in thetas])
    m = thetas.size
    if not 1 <= m <= MAX_RANK:
        raise ValueError(f"need 1 <= M <= {MAX_RANK} thetas")
    if cfg.method != DIRECT:
        raise ValueError("finite_rank_mc supports the direct method only")
    lam = spectrum.eigenvalues
    n, beta = spectrum.n, cfg.beta
    span = lam[-1] - lam[0]
    if n * float(np.abs(thetas).sum()) * span > DIRECT_EXPONENT_CAP:
        raise DomainError("direct estimator refused: exponent range exceeds the overflow cap")
    if m > n:
        raise ValueError("more columns than dimensions")
    # per column, centre on the edge that keeps the fluctuating part non-negative
    centre = np.where(thetas >= 0, lam[0], lam[-1])
    offsets = lam[:, None] - centre[None, :]

    def kernel(stream: NormalStream, count: int) -> _LogMoments:
        acc = _LogMoments()
        for size in _batches(count, n * m * beta):
            g = stream.normals((size, n, m))
            if beta == 2:
                g = g + 1j * stream.normals((size, n, m))
            u = _orthogonalize(g)
            weights = np.abs(u) ** 2
            # Σ_i (λ_i − c_m)|u_im|² per column
            quad = np.einsum("nm,bnm->bm", offsets, weights)
            acc.add(n * quad @ thetas)
        return acc

    moments = _run_chunks(cfg, kernel)
    moments.shift += n * float(np.dot(thetas, centre))
    value = moments.log_mean() / (n * m)
    return McEstimate(value, moments.relative_se() / (n * m), moments.count, DIRECT, cfg.seed)


def mc_oracle(spectrum: Spectrum, theta: float, beta: int = 1, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Reference value for ``mc_log_integral``: the finite-N leading term."""
    return finite_n_leading_term(spectrum, theta, beta, tol)
