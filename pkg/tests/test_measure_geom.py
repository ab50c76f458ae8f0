#!/usr/bin/env python3
"""
Tests for the m_N geometry: H, its inverse, off-center disks and Bessel zeros
"""

import math
import os
import sys

import numpy as np
import pytest
from scipy import integrate, special

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError
from measure_geom import (ball_volume, ball_volume_array, bessel_first_zero, check_dimension,
                          isoperimetric_profile, offcenter_ball_volume, radius_of_volume,
                          radius_of_volume_array, shell_density, unit_ball_volume)


def test_unit_ball_volume():
    assert math.isclose(unit_ball_volume(2), math.pi, rel_tol=1e-14)
    assert math.isclose(unit_ball_volume(3), 4 * math.pi / 3, rel_tol=1e-14)
    assert math.isclose(unit_ball_volume(4), math.pi ** 2 / 2, rel_tol=1e-14)


def test_ball_volume_plane_closed_form():
    for r in (0.1, 1.0, 3.0):
        assert math.isclose(ball_volume(2, r), 2 * math.pi * (math.exp(r * r / 2) - 1), rel_tol=1e-13)
    assert ball_volume(2, 0.0) == 0.0


def test_ball_volume_three_dimensions_against_erfi():
    """4 pi (r e^{r^2/2} - sqrt(pi/2) erfi(r / sqrt 2))"""
    for r in (0.5, 1.5, 3.0):
        exact = 4 * math.pi * (r * math.exp(r * r / 2)
                               - math.sqrt(math.pi / 2) * special.erfi(r / math.sqrt(2)))
        assert math.isclose(ball_volume(3, r), exact, rel_tol=1e-10), f"H_3({r}) mismatch"


def test_ball_volume_array_matches_scalar():
    radii = np.array([0.0, 0.3, 1.0, 2.5, 5.0])
    for dim in (3, 4):
        vector = ball_volume_array(dim, radii)
        scalar = np.array([ball_volume(dim, r) for r in radii])
        assert np.allclose(vector, scalar, rtol=1e-10, atol=0.0)


def test_radius_of_volume_inverts_ball_volume():
    for dim in (2, 3, 5):
        for r in (0.05, 0.7, 2.0, 4.0):
            assert abs(radius_of_volume(dim, ball_volume(dim, r)) - r) < 1e-10
    assert radius_of_volume(3, 0.0) == 0.0


def test_radius_of_volume_array_matches_scalar():
    s = ball_volume_array(3, np.array([0.0, 0.5, 1.0, 3.0]))
    radii = radius_of_volume_array(3, s)
    assert np.allclose(radii, [0.0, 0.5, 1.0, 3.0], rtol=0.0, atol=1e-10)
    assert np.allclose(radius_of_volume_array(2, [ball_volume(2, 1.2)]), [1.2], atol=1e-13)


def test_shell_density_is_derivative_of_volume():
    r, step = 1.3, 1e-5
    slope = (ball_volume(3, r + step) - ball_volume(3, r - step)) / (2 * step)
    assert math.isclose(slope, shell_density(3, r), rel_tol=1e-8)


def test_isoperimetric_profile_is_shell_density_of_equal_ball():
    s = ball_volume(2, 1.2)
    assert math.isclose(isoperimetric_profile(2, s), 2 * math.pi * 1.2 * math.exp(0.72), rel_tol=1e-10)


def test_invalid_arguments_raise():
    with pytest.raises(DomainError):
        check_dimension(1)
    with pytest.raises(DomainError):
        check_dimension(2.5)
    with pytest.raises(DomainError):
        ball_volume(2, -1.0)
    with pytest.raises(DomainError):
        radius_of_volume(3, -0.5)
    with pytest.raises(DomainError):
        isoperimetric_profile(2, 0.0)
    with pytest.raises(DomainError):
        offcenter_ball_volume((0.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        bessel_first_zero(-1.0)


def test_offcenter_volume_centered_equals_ball():
    assert math.isclose(offcenter_ball_volume((0.0, 0.0), 1.0), ball_volume(2, 1.0), rel_tol=1e-10)


def test_offcenter_volume_against_bessel_i0():
    """2 pi e^{|c|^2/2} integral_0^rho t e^{t^2/2} I_0(|c| t) dt"""
    c, rho = 0.8, 0.6
    inner, _ = integrate.quad(lambda t: t * math.exp(t * t / 2) * special.i0(c * t), 0.0, rho,
                              epsabs=0.0, epsrel=1e-13)
    exact = 2 * math.pi * math.exp(c * c / 2) * inner
    assert math.isclose(offcenter_ball_volume((c, 0.0), rho), exact, rel_tol=1e-9)


def test_offcenter_volume_grows_away_from_origin():
    centered = ball_volume(2, 1.0)
    shifted = offcenter_ball_volume((0.5, 0.0), 1.0)
    assert shifted > centered
    assert math.isclose(shifted, offcenter_ball_volume((0.0, -0.5), 1.0), rel_tol=1e-10)


def test_bessel_first_zeros():
    assert abs(bessel_first_zero(0.0) - 2.404825557695773) < 1e-12
    assert abs(bessel_first_zero(0.5) - math.pi) < 1e-12
    assert abs(bessel_first_zero(1.0) - 3.8317059702075125) < 1e-12


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
