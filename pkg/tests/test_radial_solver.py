#!/usr/bin/env python3
"""
Tests for the radial eigenvalue solver on centered balls
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import optimize
from scipy.integrate import solve_ivp

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, InfeasibleTargetError, UsageError
from measure_geom import ball_volume, bessel_first_zero
from radial_solver import (RadialOperatorSpec, RadialProfile, Spectrum, SpectrumEntry,
                           ball_lower_bound, ball_spectrum, find_radius_for_lambda,
                           first_eigenvalue, harmonic_multiplicity, lambda1_ball, lambda1_sweep,
                           lowest_eigenpairs, measure_plateau, whole_space_levels)


def _shooting_lambda1(radius: float, lo: float, hi: float) -> float:
    """u'' + (1/r + r) u' + lambda u = 0 in the plane, u(0) = 1, u(R) = 0."""
    r0 = 1e-6

    def end_value(lam):
        def rhs(r, y):
            return [y[1], -(1.0 / r + r) * y[1] - lam * y[0]]
        sol = solve_ivp(rhs, (r0, radius), [1.0 - lam * r0 * r0 / 4, -lam * r0 / 2],
                        method='DOP853', rtol=1e-12, atol=1e-14)
        return sol.y[0, -1]

    return optimize.brentq(end_value, lo, hi, xtol=1e-13)


def test_lambda1_plane_unit_ball_sandwich():
    lam = lambda1_ball(2, 1.0)
    j0 = bessel_first_zero(0.0)
    assert 1 + j0 * j0 <= lam <= 1 + j0 * j0 + 0.25
    assert 6.78319 <= lam <= 7.03319


def test_lambda1_matches_shooting():
    exact = _shooting_lambda1(1.0, 6.78, 7.04)
    assert abs(lambda1_ball(2, 1.0) - exact) < 1e-7


def test_oscillator_form_agrees_with_weighted_form():
    u_form = first_eigenvalue(RadialOperatorSpec(2, 0, 1.0, 1024))
    v_form = first_eigenvalue(RadialOperatorSpec(2, 0, 1.0, 1024, form='v'))
    assert abs(u_form - v_form) < 1e-8


def test_second_order_convergence():
    values = [lowest_eigenpairs(RadialOperatorSpec(3, 0, 1.0, n), 1)[0][0].value
              for n in (128, 256, 512)]
    ratio = (values[0] - values[1]) / (values[1] - values[2])
    assert 3.5 <= ratio <= 4.5, f"Richardson ratio {ratio}"


def test_sandwich_in_three_dimensions():
    for radius in (0.5, 1.0, 2.0):
        lam = lambda1_ball(3, radius)
        lower = ball_lower_bound(3, radius)
        assert lower <= lam <= lower + radius * radius / 4


def test_ball_spectrum_orders_degrees():
    spectrum = ball_spectrum(2, 1.0, 3)
    assert spectrum[0].ell == 0 and spectrum[0].multiplicity == 1
    assert spectrum[1].ell == 1 and spectrum[1].multiplicity == 2
    values = spectrum.eigenvalues
    assert len(values) >= 3
    assert values == sorted(values)
    assert math.isclose(values[0], lowest_eigenpairs(RadialOperatorSpec(2, 0, 1.0), 1)[0][0].value)
    assert spectrum.to_dict()['entries'][1]['ell'] == 1


def test_first_eigenfunction_positive_and_normalized():
    spec = RadialOperatorSpec(2, 0, 1.5, 512)
    _, (profile,) = lowest_eigenpairs(spec, 1)
    assert np.all(profile.values[:-1] > 0)
    assert profile.values[-1] == 0.0
    # Unknowns are normalized against the mass without the N omega_N factor
    assert abs(profile.lp_norm(2.0) ** 2 - 2 * math.pi) < 1e-3 * 2 * math.pi


def test_lambda1_strictly_decreasing_above_floor():
    values = lambda1_sweep(2, [0.5, 1.0, 2.0, 4.0])
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] > 2.0


def test_plateau_report():
    report = measure_plateau(2, (4.0, 6.0, 8.0))
    assert report.plateau > 2.0 - 1e-3
    assert report.nearest_candidate == 'N'
    assert set(report.to_dict()) >= {'plateau', 'distance_to_N', 'distance_to_3N/2'}


def test_whole_space_levels_are_integers_above_n():
    levels = whole_space_levels(2)
    assert np.allclose(levels, [2.0, 3.0, 3.0, 4.0, 4.0, 4.0], atol=1e-3), levels


def test_find_radius_for_lambda_round_trip():
    target = lambda1_ball(2, 1.3)
    assert abs(find_radius_for_lambda(2, target) - 1.3) < 1e-6
    with pytest.raises(InfeasibleTargetError):
        find_radius_for_lambda(2, 1.5)


def test_radius_for_lambda_20_matches_secant():
    def miss(r):
        return lambda1_ball(2, r) - 20.0

    a, b = 0.5, 0.6
    for _ in range(50):
        fa, fb = miss(a), miss(b)
        if abs(fb) < 1e-12 or fb == fa:
            break
        a, b = b, b - fb * (b - a) / (fb - fa)
    radius = find_radius_for_lambda(2, 20.0)
    assert abs(radius - b) < 1e-8, (radius, b)
    assert abs(lambda1_ball(2, radius) - 20.0) <= 1e-7


def test_higher_eigenvalues_monotone_in_radius():
    radii = (0.5, 1.0, 2.0, 4.0)
    table = [ball_spectrum(2, radius, 4).eigenvalues[:4] for radius in radii]
    for values, radius in zip(table, radii):
        assert len(values) == 4
        assert all(v >= ball_lower_bound(2, radius) for v in values), values
        assert all(v > 2.0 for v in values), values
    for j in range(4):
        column = [values[j] for values in table]
        assert all(b <= a for a, b in zip(column, column[1:])), (j, column)


def test_harmonic_multiplicities():
    assert harmonic_multiplicity(2, 0) == 1
    assert harmonic_multiplicity(2, 3) == 2
    assert harmonic_multiplicity(3, 1) == 3
    assert harmonic_multiplicity(3, 2) == 5
    assert harmonic_multiplicity(4, 1) == 4


def test_spec_validation():
    with pytest.raises(DomainError):
        RadialOperatorSpec(2, 0, 1.0, 8)
    with pytest.raises(DomainError):
        RadialOperatorSpec(2, -1, 1.0)
    with pytest.raises(DomainError):
        RadialOperatorSpec(2, 0, 0.0)
    with pytest.raises(UsageError):
        RadialOperatorSpec(2, 0, 1.0, form='w')
    with pytest.raises(DomainError):
        ball_spectrum(2, 1.0, 0)


def test_spectrum_must_be_ordered():
    high = SpectrumEntry(8.0, 1, 0, 1, 0.0)
    low = SpectrumEntry(7.0, 1, 0, 2, 0.0)
    with pytest.raises(UsageError):
        Spectrum((high, low))


def test_stepwise_profile_norm_is_exact():
    profile = RadialProfile(np.array([0.0, 1.0]), np.array([2.0]), 2)
    assert profile.is_stepwise
    assert math.isclose(profile.lp_norm(2.0), 2.0 * math.sqrt(ball_volume(2, 1.0)), rel_tol=1e-14)
    assert profile(0.5) == 2.0 and profile(1.5) == 0.0
    with pytest.raises(UsageError):
        profile.slopes()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
