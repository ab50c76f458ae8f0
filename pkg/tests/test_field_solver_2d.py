#!/usr/bin/env python3
"""
Tests for the planar eigen solver, the torsion function and the maximum principle
"""

import math
import os
import sys

import numpy as np
import pytest

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, OverlapError, UsageError
from field_solver_2d import (DriftPoissonSolver, domination_check, eigenpairs,
                             eigenpairs_weighted, eigenvalue_bounds, faber_krahn_check,
                             isoperimetric_check, laplacian_first_eigenvalue,
                             maximum_principle_check, rasterize_balls, torsion)
from radial_solver import lambda1_ball
from raster_domain import BallFamilyConfig, aligned_disk_domain, rectangle_domain


def _disk(h):
    return aligned_disk_domain((0.0, 0.0), 1.0, h)


def test_disk_matches_radial_solver():
    planar = eigenpairs(_disk(1 / 32), 1).eigenvalues[0]
    exact = lambda1_ball(2, 1.0)
    assert abs(planar - exact) < 5e-2 * exact, f"{planar} vs {exact}"


def test_weighted_form_close_to_oscillator_form():
    domain = _disk(1 / 32)
    v_form = eigenpairs(domain, 2).eigenvalues
    u_form = eigenpairs_weighted(domain, 2).eigenvalues
    for a, b in zip(u_form, v_form):
        assert abs(a - b) < 3e-2 * b


def test_square_laplacian_closed_form():
    domain = rectangle_domain(-0.5, -0.5, 0.5, 0.5, 1 / 16)
    assert domain.active_count == 256
    exact = 8 * 256 * math.sin(math.pi / 34) ** 2
    assert math.isclose(laplacian_first_eigenvalue(domain), exact, rel_tol=1e-8)


def test_ground_state_positive_and_normalized():
    domain = _disk(1 / 8)
    spectrum = eigenpairs(domain, 2, tol=1e-12)
    u = spectrum.eigenfunctions[0]
    assert np.all(u.values > 0)
    assert math.isclose(float(u.values ** 2 @ domain.cell_measures()), 1.0, rel_tol=1e-12)
    assert spectrum.eigenvalues[0] < spectrum.eigenvalues[1]


def test_drift_operator_inverts_eigenpairs():
    domain = _disk(1 / 8)
    spectrum = eigenpairs(domain, 3, tol=1e-12)
    solver = DriftPoissonSolver(domain)
    for lam, u in zip(spectrum.eigenvalues, spectrum.eigenfunctions):
        psi = solver.solve(lam * u.values)
        assert np.linalg.norm(psi - u.values) <= 1e-8 * np.linalg.norm(u.values)


def test_solver_input_checks():
    domain = _disk(1 / 8)
    solver = DriftPoissonSolver(domain)
    with pytest.raises(UsageError):
        solver.solve(np.ones(3))
    assert np.all(solver.solve(np.zeros(domain.active_count)) == 0.0)
    with pytest.raises(DomainError):
        eigenpairs(domain, domain.active_count + 1)


def test_torsion_positive_and_peaked_at_center():
    domain = _disk(1 / 16)
    field_w = torsion(domain)
    assert np.all(field_w.w > 0)
    assert field_w.support_count == domain.active_count
    r2 = domain.squared_radii()
    assert r2[np.argmax(field_w.w)] <= 2 * domain.h ** 2
    summary = field_w.to_dict()
    assert summary['min'] > 0 and summary['active_cells'] == domain.active_count


def test_eigenfunctions_dominated_by_torsion():
    report = domination_check(_disk(1 / 16), 3)
    assert report.passed, report.to_dict()
    union = rasterize_balls(BallFamilyConfig((-1.0, 1.2), (0.6, 0.5)), 1 / 16)
    assert domination_check(union, 3).passed


def test_maximum_principle_on_random_data():
    report = maximum_principle_check(_disk(1 / 16), trials=6, seed=3)
    assert report.passed
    assert report.trials == 6
    with pytest.raises(DomainError):
        maximum_principle_check(_disk(1 / 8), trials=0)


def test_disjoint_union_spectrum_is_merged():
    union = rasterize_balls(BallFamilyConfig((-1.0, 1.2), (0.6, 0.5)), 1 / 16)
    assert union.component_count() == 2
    joint = eigenpairs(union, 4).eigenvalues
    merged = sorted(v for part in union.components() for v in eigenpairs(part, 4).eigenvalues)[:4]
    for a, b in zip(joint, merged):
        assert abs(a - b) <= 1e-8 * a


def test_rasterize_balls_rejects_overlap():
    overlapping = BallFamilyConfig((0.0, 0.5), (0.5, 0.5))
    with pytest.raises(OverlapError):
        rasterize_balls(overlapping, 1 / 16)
    domain = rasterize_balls(overlapping, 1 / 16, allow_overlap=True)
    assert domain.component_count() == 1


def test_faber_krahn_and_bounds_on_offcenter_disk():
    domain = aligned_disk_domain((0.5, 0.0), 0.8, 1 / 32)
    spectrum = eigenpairs(domain, 2)
    check = faber_krahn_check(domain, spectrum)
    assert check.holds(), check.to_dict()
    assert check.upper > check.lower
    assert eigenvalue_bounds(domain, 2, spectrum).holds()
    assert isoperimetric_check(domain).holds()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
