import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcs_universality import (DispersionParams, DomainError, NumericalError, assemble_KTV,
                              build_grid, gaussian, k_T, lowest_eigenpair)
from bcs_universality.spectral import SERIES_CUTOFF, lowest_eigenvalue, variational_bound


def cholesky_bisection_min(A, tol=1e-13):
    """Lowest eigenvalue as sup{x : A - x I positive definite}, bisection on Cholesky success."""
    n = A.shape[0]
    radius = np.max(np.sum(np.abs(A), axis=1))
    lo, hi = -radius - 1.0, radius + 1.0
    eye = np.eye(n)
    while hi - lo > tol * max(1.0, radius):
        mid = 0.5 * (lo + hi)
        try:
            np.linalg.cholesky(A - mid * eye)
            lo = mid
        except np.linalg.LinAlgError:
            hi = mid
    return 0.5 * (lo + hi)


def test_kT_at_fermi_surface():
    assert k_T(1.0, DispersionParams(1.0, 0.1)) == pytest.approx(0.2, rel=1e-15)


def test_kT_zero_temperature():
    p = np.linspace(0, 3, 31)
    assert np.array_equal(k_T(p, DispersionParams(1.3, 0.0)), np.abs(p**2 - 1.3))


def test_kT_closed_form():
    assert k_T(0.0, DispersionParams(1.0, 0.5)) == pytest.approx(1 / math.tanh(1.0), rel=1e-15)
    assert k_T(0.0, DispersionParams(1.0, 0.5)) == pytest.approx(1.313035, abs=1e-6)


def test_kT_large_argument_finite():
    val = k_T(10.0, DispersionParams(1.0, 1e-9))
    assert val == pytest.approx(99.0, rel=1e-15)


def test_kT_series_branch_is_continuous():
    T = 0.3
    x = SERIES_CUTOFF * T
    p = np.sqrt(1.0 + np.array([x * 0.999, x * 1.001]))
    a, b = k_T(p, DispersionParams(1.0, T))
    assert a == pytest.approx(b, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(p=st.floats(0, 10), mu=st.floats(0.1, 5), T=st.floats(1e-8, 5))
def test_kT_bounded_below_by_2T(p, mu, T):
    assert k_T(p, DispersionParams(mu, T)) >= 2 * T * (1 - 1e-15)


def test_dispersion_params_validation():
    with pytest.raises(DomainError):
        DispersionParams(0.0, 0.1)
    with pytest.raises(DomainError):
        DispersionParams(1.0, -0.1)


@pytest.fixture(scope="module")
def grid():
    return build_grid(1.0, 10.0, 8, 1e-4)


@pytest.mark.parametrize("d", [1, 2])
def test_no_interaction_is_diagonal(grid, d):
    params = DispersionParams(1.0, 0.01)
    M = assemble_KTV(gaussian(1, 1, d), grid, 0.0, params).matrix
    k = k_T(grid.nodes, params)
    assert np.array_equal(M, np.diag(k))
    assert lowest_eigenpair(M)[0] == pytest.approx(k.min(), rel=1e-14)
    assert k.min() >= 0.02


@pytest.mark.parametrize("d", [1, 2])
def test_interaction_lowers_bottom(grid, d):
    params = DispersionParams(1.0, 0.01)
    M = assemble_KTV(gaussian(1, 1, d), grid, 0.3, params)
    kmin = k_T(grid.nodes, params).min()
    # variational vector on the panel touching the Fermi radius
    v = np.where(np.abs(grid.nodes - 1.0) < 2e-4, 1.0, 0.0)
    assert variational_bound(M, v) < kmin
    assert lowest_eigenpair(M)[0] < kmin
    assert np.array_equal(M.matrix, M.matrix.T)


def test_mu_mismatch(grid):
    with pytest.raises(DomainError):
        assemble_KTV(gaussian(1, 1, 1), grid, 0.3, DispersionParams(2.0, 0.1))


def test_diagonal_example():
    val, vec = lowest_eigenpair(np.diag([3.0, 1.0, 2.0]))
    assert val == 1.0
    assert np.array_equal(vec, [0.0, 1.0, 0.0])


def test_offdiagonal_example_sign_convention():
    val, vec = lowest_eigenpair(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert val == pytest.approx(-1.0, abs=1e-15)
    assert np.allclose(vec, np.array([1.0, -1.0]) / math.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_matrix_against_cholesky_oracle(seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((50, 50))
    A = 0.5 * (B + B.T)
    val, vec = lowest_eigenpair(A)
    assert val == pytest.approx(cholesky_bisection_min(A), abs=1e-10)
    assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.norm(A @ vec - val * vec) <= 1e-10 * np.linalg.norm(A)


def test_non_finite_rejected():
    with pytest.raises(NumericalError):
        lowest_eigenpair(np.array([[1.0, np.nan], [np.nan, 1.0]]))


@pytest.mark.parametrize("d", [1, 2])
def test_monotone_in_temperature(grid, d):
    P = gaussian(1, 1, d)
    vals = [lowest_eigenvalue(assemble_KTV(P, grid, 0.4, DispersionParams(1.0, T)))
            for T in (1e-3, 3e-3, 1e-2, 3e-2, 1e-1)]
    assert np.all(np.diff(vals) >= 0)


@pytest.mark.parametrize("d", [1, 2])
def test_monotone_in_coupling(grid, d):
    P = gaussian(1, 1, d)
    vals = [lowest_eigenvalue(assemble_KTV(P, grid, lam, DispersionParams(1.0, 0.01)))
            for lam in (0.0, 0.1, 0.2, 0.4, 0.8)]
    assert np.all(np.diff(vals) <= 0)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("T", [1e-2, 1e-6])
def test_grid_doubling_stability(d, T):
    P = gaussian(1, 1, d)
    params = DispersionParams(1.0, T)
    g = build_grid(1.0, P.momentum_cutoff(1.0), 16, 0.05 * T)
    a = lowest_eigenvalue(assemble_KTV(P, g, 0.4, params))
    b = lowest_eigenvalue(assemble_KTV(P, g.refined(), 0.4, params))
    assert abs(a - b) < 1e-6
