#!/usr/bin/env python3
"""
Tests for rearrangements, symmetrization and the Hardy-Littlewood / Polya-Szego checks
"""

import math
import os
import sys

import numpy as np
import pytest

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, UsageError
from field_solver_2d import eigenpairs
from measure_geom import radius_of_volume
from raster_domain import RasterDomain, aligned_disk_domain, rectangle_domain
from rearrange import (GridFunction, InequalityCheck, MonotoneProfile, decreasing_rearrangement,
                       distribution_function, hardy_littlewood_check, polya_szego_check,
                       symmetrize, weighted_dirichlet_energy)


def _square():
    return rectangle_domain(-0.5, -0.5, 0.5, 0.5, 0.25)


def _random_function(domain, seed=7):
    rng = np.random.default_rng(seed)
    return GridFunction(domain, rng.normal(size=domain.active_count))


def test_grid_function_validation():
    domain = _square()
    assert domain.active_count == 16
    with pytest.raises(UsageError):
        GridFunction(domain, np.ones(3))
    values = np.ones(16)
    values[0] = np.nan
    with pytest.raises(DomainError):
        GridFunction(domain, values)


def test_rearrangement_is_equimeasurable():
    u = _random_function(_square())
    profile = decreasing_rearrangement(u)
    assert np.all(np.diff(profile.values) <= 0)
    assert math.isclose(profile.total_measure, u.domain.weighted_measure(), rel_tol=1e-12)
    for p in (1.0, 2.0, 3.5):
        assert math.isclose(profile.norm(p), u.lp_norm(p), rel_tol=1e-12)
    assert profile.norm(math.inf) == u.lp_norm(math.inf)
    for t in (0.0, 0.3, 1.0, 10.0):
        assert math.isclose(profile.distribution(t), distribution_function(u, t),
                            rel_tol=1e-12, abs_tol=1e-15)


def test_distribution_function_rejects_negative_level():
    with pytest.raises(DomainError):
        distribution_function(_random_function(_square()), -1.0)


def test_symmetrization_preserves_norms():
    u = _random_function(aligned_disk_domain((0.4, 0.0), 0.5, 1 / 16))
    star = symmetrize(u)
    assert star.is_stepwise
    assert math.isclose(star.radius, radius_of_volume(2, u.domain.weighted_measure()), rel_tol=1e-12)
    for p in (1.0, 2.0):
        assert math.isclose(star.lp_norm(p), u.lp_norm(p), rel_tol=1e-9)


def test_monotone_profile_operations():
    profile = MonotoneProfile(np.array([0.0, 1.0, 3.0]), np.array([2.0, 1.0]), 3.0)
    assert profile(0.5) == 2.0
    assert profile(1.0) == 1.0
    assert profile(5.0) == 0.0
    assert profile.norm(math.inf) == 2.0
    assert profile.integral(1) == 4.0
    assert np.allclose(profile.partial_integrals(1), [0.0, 2.0, 4.0])
    assert math.isclose(float(profile.partial_integral(2.0, 1)), 3.0)
    assert profile.distribution(1.5) == 1.0
    assert np.allclose(profile.scaled(2.0).values, [4.0, 2.0])

    with pytest.raises(UsageError):
        MonotoneProfile(np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0]), 2.0)
    with pytest.raises(UsageError):
        MonotoneProfile(np.array([0.5, 1.0]), np.array([1.0]), 1.0)
    with pytest.raises(DomainError):
        profile.scaled(0.0)


def test_hardy_littlewood_holds_and_is_sharp_on_the_diagonal():
    domain = _square()
    u = _random_function(domain, seed=1)
    v = _random_function(domain, seed=2)
    check = hardy_littlewood_check(u, v)
    assert check.holds()
    assert check.slack == 0.0

    same = hardy_littlewood_check(u, u)
    assert math.isclose(same.lower, same.upper, rel_tol=1e-12)


def test_hardy_littlewood_needs_one_domain():
    u = _random_function(_square())
    other = _random_function(aligned_disk_domain((0.0, 0.0), 0.5, 0.25))
    with pytest.raises(UsageError):
        hardy_littlewood_check(u, other)


def test_weighted_energy_of_single_cell():
    domain = RasterDomain(-0.5, -0.5, 1.0, np.array([[True]]))
    u = GridFunction(domain, np.array([1.0]))
    assert math.isclose(weighted_dirichlet_energy(u), 4 * math.exp(0.125), rel_tol=1e-14)


def test_polya_szego_on_a_smooth_bump():
    domain = aligned_disk_domain((0.3, 0.0), 1.0, 1 / 32)
    x, y = domain.cell_centers()
    r2 = (x - 0.3) ** 2 + y * y
    u = GridFunction(domain, np.maximum(0.0, 1.0 - r2))
    check = polya_szego_check(u)
    assert check.holds(), check.to_dict()
    assert math.isclose(check.slack, 5.0 / 32)

    with pytest.raises(UsageError):
        polya_szego_check(u.scaled(-1.0))


def _bump(center, radius, h):
    domain = aligned_disk_domain(center, radius, h)
    x, y = domain.cell_centers()
    r2 = ((x - center[0]) ** 2 + (y - center[1]) ** 2) / (radius * radius)
    return GridFunction(domain, np.maximum(0.0, 1.0 - r2))


def test_polya_szego_slack_shrinks_with_the_mesh():
    for center, radius in (((0.3, 0.0), 1.0), ((-0.4, 0.2), 0.7), ((0.0, 0.5), 0.5)):
        coarse = polya_szego_check(_bump(center, radius, 1 / 16))
        fine = polya_szego_check(_bump(center, radius, 1 / 32))
        assert coarse.holds(), coarse.to_dict()
        assert fine.holds(), fine.to_dict()
        assert 1.5 <= coarse.slack / fine.slack <= 2.5


def test_polya_szego_strict_for_offcenter_eigenfunction():
    domain = aligned_disk_domain((0.8, 0.0), 0.6, 1 / 32)
    u = eigenpairs(domain, 1).eigenfunctions[0]
    check = polya_szego_check(u)
    assert check.lower < 0.99 * check.upper, check.to_dict()


def test_inequality_check_slack():
    assert InequalityCheck(1.0, 2.0).holds()
    assert not InequalityCheck(2.05, 2.0).holds()
    assert InequalityCheck(2.05, 2.0, slack=0.05).holds()
    assert math.isclose(InequalityCheck(1.0, 2.0).relative_gap, 0.5)
    assert InequalityCheck(1.0, 2.0).to_dict()['holds'] is True


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
