import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from bcs_universality import (DispersionParams, DomainError, NoTransition, ResolutionError,
                              assemble_KTV, build_grid, critical_temperature, find_Tc, gaussian,
                              m_T_asymptotic, m_T_direct)
from bcs_universality.critical_temperature import m_T_radial
from bcs_universality.spectral import lowest_eigenvalue
from bcs_universality.sphere_asymptotics import tc_constant

import ladders


def test_zero_coupling_has_no_transition():
    P = gaussian(1, 1, 1)
    g = build_grid(1.0, P.momentum_cutoff(1.0), 8, 1e-6)
    with pytest.raises(NoTransition):
        find_Tc(P, g, 0.0)


def test_d1_lambda_04_near_weak_coupling_constant():
    res, _ = ladders.tc(1, 0.4)
    b = ladders.sphere(1).b_mu(0.4)
    value = math.log(1.0 / res.Tc) + math.pi / (2 * b)
    assert res.Tc > 0
    assert abs(value - tc_constant(1)) < 0.5
    assert tc_constant(1) == pytest.approx(float(-mpmath.euler - mpmath.log(8 / ((1 + mpmath.sqrt(2)) * mpmath.pi))), rel=1e-14)


@pytest.mark.parametrize("d", [1, 2])
def test_bracket_invariants(d):
    lam = ladders.LADDERS[d][1]
    res, grid = ladders.tc(d, lam)
    lo, hi = res.bracket
    assert lo < res.Tc <= hi
    assert (hi - lo) / res.Tc <= 1e-10
    P = ladders.potential(d)
    assert lowest_eigenvalue(assemble_KTV(P, grid, lam, DispersionParams(1.0, lo))) < 0
    assert lowest_eigenvalue(assemble_KTV(P, grid, lam, DispersionParams(1.0, hi))) >= 0
    assert res.eigenvalue_at_Tc >= 0


@pytest.mark.parametrize("d", [1, 2])
def test_Tc_increasing_in_coupling(d):
    tcs = [ladders.tc(d, lam)[0].Tc for lam in ladders.LADDERS[d]]
    assert np.all(np.diff(tcs) < 0)


def test_unresolvable_grid_raises():
    P = gaussian(1, 1, 1)
    g = build_grid(1.0, P.momentum_cutoff(1.0), 8, 0.25)
    with pytest.raises(ResolutionError):
        find_Tc(P, g, 0.25)


def test_auto_grid_resolves_Tc():
    res, grid = ladders.tc(1, 0.25)
    assert grid.s_min <= 0.1 * res.Tc


def test_m_T_direct_d2_is_log_integral():
    tau = 1e-3
    f = lambda s: math.tanh(s / (2 * tau)) / s
    ref = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=200)[0]
              for a, b in ((0, 10 * tau), (10 * tau, 1)))
    assert m_T_direct(1.0, tau, 2) == pytest.approx(ref, rel=1e-11)


def test_m_T_direct_d2_small_T_residual():
    assert abs(m_T_direct(1.0, 1e-5, 2) - m_T_asymptotic(1.0, 1e-5, 2)) < 1e-3


def test_m_T_asymptotic_values():
    assert m_T_asymptotic(1.0, 1e-4, 2) == pytest.approx(9.335973, abs=1e-6)
    exact_d1 = mpmath.log(1e4) + mpmath.euler + mpmath.log(2 / mpmath.pi) + mpmath.log(4 / (1 + mpmath.sqrt(2)))
    assert m_T_asymptotic(1.0, 1e-4, 1) == pytest.approx(float(exact_d1), rel=1e-14)


def test_m_T_asymptotic_mu_scaling():
    assert m_T_asymptotic(4.0, 4e-4, 1) == pytest.approx(m_T_asymptotic(1.0, 1e-4, 1) / 2, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("mu,T", [(1.0, 1e-2), (1.0, 1e-4), (2.0, 3e-5), (0.5, 1e-3)])
def test_m_T_direct_against_radial_quadrature(d, mu, T):
    g = build_grid(mu, 3 * math.sqrt(mu), 16, 0.05 * T / mu)
    assert m_T_direct(mu, T, d) == pytest.approx(m_T_radial(g, T, d), rel=1e-8)


@pytest.mark.parametrize("d", [1, 2])
def test_m_T_difference_decreases(d):
    diffs = [abs(m_T_direct(1.0, t, d) - m_T_asymptotic(1.0, t, d)) for t in (1e-2, 1e-3, 1e-4, 1e-5)]
    # for d = 2 the difference is exponentially small and sits at rounding level throughout
    noise = 8 * np.finfo(float).eps * m_T_asymptotic(1.0, 1e-5, d)
    assert all(b < a or b <= noise for a, b in zip(diffs, diffs[1:]))
    assert diffs[-1] < 1e-3


def test_m_T_domain():
    with pytest.raises(DomainError):
        m_T_direct(1.0, 0.0, 1)
    with pytest.raises(DomainError):
        m_T_asymptotic(1.0, -1.0, 2)
