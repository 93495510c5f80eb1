import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spherint.numerics import (
    ConvergenceError,
    NormalStream,
    NumericsError,
    ToleranceConfig,
    adaptive_quadrature,
    bracketed_root,
    complex_newton,
    concave_maximize,
    jacobi_eigen,
)


def test_tolerance_overrides():
    cfg = ToleranceConfig.from_pairs(["root_abs_tol=1e-9", "path_segments=8"])
    assert cfg.root_abs_tol == 1e-9 and cfg.path_segments == 8
    assert isinstance(cfg.path_segments, int)
    with pytest.raises(ValueError):
        ToleranceConfig.from_pairs(["bogus=1"])
    with pytest.raises(ValueError):
        ToleranceConfig(root_abs_tol=-1.0)


def test_normal_stream_is_keyed():
    a = NormalStream(1, 2).normals(1000)
    b = NormalStream(1, 2).normals(1000)
    c = NormalStream(1, 3).normals(1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert abs(a.mean()) < 0.15 and abs(a.std() - 1) < 0.1


def test_quadrature():
    assert adaptive_quadrature(math.sin, 0.0, math.pi, 1e-12) == pytest.approx(2.0, abs=1e-12)
    assert adaptive_quadrature(lambda x: x * x, 1.0, 1.0) == 0.0


def test_quadrature_failure_is_reported():
    with pytest.raises(ConvergenceError):
        adaptive_quadrature(lambda x: math.sin(1.0 / x) / x, 1e-9, 1.0, 1e-14, limit=5)


@pytest.mark.parametrize("with_derivative", [True, False])
def test_bracketed_root(with_derivative):
    f = lambda x: x ** 3 - 2.0
    fp = (lambda x: 3 * x * x) if with_derivative else None
    root = bracketed_root(f, 0.0, 3.0, 1e-14, fprime=fp)
    assert root == pytest.approx(2 ** (1 / 3), abs=1e-12)


def test_bracketed_root_needs_sign_change():
    with pytest.raises(NumericsError):
        bracketed_root(lambda x: x * x + 1, -1.0, 1.0)


def test_concave_maximize():
    x, fx = concave_maximize(lambda t: -(t - 0.3) ** 2 + 1.0, -2.0, 2.0)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(1.0, abs=1e-12)
    # monotone objective: endpoint wins
    x, _ = concave_maximize(lambda t: t, 0.0, 1.0)
    assert x == 1.0


def test_complex_newton():
    z = complex_newton(lambda z: z * z + 1, lambda z: 2 * z, 0.5 + 0.5j)
    assert abs(z - 1j) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20, 45])
def test_jacobi_matches_lapack(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n))
    a = a + a.T
    evals, q = jacobi_eigen(a)
    assert np.allclose(evals, np.linalg.eigvalsh(a), atol=1e-9 * max(1.0, np.abs(evals).max()))
    assert np.allclose(q.T @ q, np.eye(n), atol=1e-9)
    assert np.allclose(a @ q, q * evals[None, :], atol=1e-8)


def test_jacobi_diagonal_and_degenerate():
    evals, _ = jacobi_eigen(np.diag([3.0, 1.0, 2.0]))
    assert list(evals) == [1.0, 2.0, 3.0]
    evals, _ = jacobi_eigen(np.ones((4, 4)))
    assert np.allclose(evals, [0, 0, 0, 4], atol=1e-12)


def test_jacobi_rejects_bad_input():
    with pytest.raises(ValueError):
        jacobi_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        jacobi_eigen(np.ones((2, 3)))
    with pytest.raises(ValueError):
        jacobi_eigen(np.array([[np.nan, 0.0], [0.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=30), st.integers(min_value=0, max_value=2 ** 31))
def test_jacobi_trace_and_order(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-5, 5, (n, n))
    a = (a + a.T) / 2
    evals, _ = jacobi_eigen(a, vectors=False)
    assert np.all(np.diff(evals) >= 0)
    assert evals.sum() == pytest.approx(np.trace(a), abs=1e-9 * n)
