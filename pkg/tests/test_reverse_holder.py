#!/usr/bin/env python3
"""
Tests for the matched ball, the reverse Hoelder constant and the concentration comparison
"""

import dataclasses
import math
import os
import sys

import pytest

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, InfeasibleTargetError, UsageError
from field_solver_2d import eigenpairs
from measure_geom import ball_volume
from radial_solver import lambda1_ball
from raster_domain import aligned_disk_domain, rectangle_domain
from rearrange import decreasing_rearrangement
from reverse_holder import (build_chiti, chiti_constant, concentration_comparison,
                            reverse_holder_check, sigma_from_lambda, sl_sigma1)


@pytest.fixture(scope="module")
def chiti_12():
    return build_chiti(2, 12.0)


def test_matched_ball(chiti_12):
    assert math.isclose(lambda1_ball(2, chiti_12.r_tilde), 12.0, rel_tol=1e-6)
    assert math.isclose(chiti_12.L_tilde, ball_volume(2, chiti_12.r_tilde), rel_tol=1e-12)
    assert chiti_12.z_star.values[-1] == 0.0
    assert chiti_12.to_dict()['lambda'] == 12.0


def test_infeasible_lambda():
    with pytest.raises(InfeasibleTargetError):
        build_chiti(2, 1.5)


def test_constant_needs_ordered_exponents(chiti_12):
    with pytest.raises(UsageError):
        chiti_constant(chiti_12, 2.0, 2.0)
    with pytest.raises(UsageError):
        chiti_constant(chiti_12, 0.0, 1.0)


def test_constant_is_scale_invariant(chiti_12):
    scaled = dataclasses.replace(chiti_12, z_star=chiti_12.z_star.scaled(3.0))
    for r, q in ((1.0, 2.0), (2.0, math.inf)):
        assert math.isclose(chiti_constant(scaled, r, q), chiti_constant(chiti_12, r, q),
                            rel_tol=1e-12)


def test_constant_above_hoelder_floor(chiti_12):
    # ||z||_2 <= ||z||_inf sqrt(L) with equality only for constants
    assert chiti_constant(chiti_12, 2.0, math.inf) > 1.0 / math.sqrt(chiti_12.L_tilde)


def test_equality_on_the_ball(chiti_12):
    for r, q in ((1.0, 2.0), (2.0, math.inf)):
        constant = chiti_constant(chiti_12, r, q)
        direct = chiti_12.profile.lp_norm(q) / chiti_12.profile.lp_norm(r)
        assert abs(constant - direct) <= 1e-4 * constant


def test_sturm_liouville_reproduces_lambda():
    assert abs(sigma_from_lambda(2, 12.0) - 12.0) <= 1e-4 * 12.0
    with pytest.raises(DomainError):
        sl_sigma1(2, 0.0)


def test_concentration_of_the_ball_itself(chiti_12):
    report = concentration_comparison(chiti_12.z_star, chiti_12, 2.0)
    assert report.passed
    assert report.worst_margin == 0.0
    assert report.scale == 1.0
    with pytest.raises(UsageError):
        concentration_comparison(chiti_12.z_star, chiti_12, 2.0, domain_lambda=14.0)
    with pytest.raises(DomainError):
        concentration_comparison(chiti_12.z_star, chiti_12, 0.0)


def test_unnormalized_comparison_requires_equal_totals(chiti_12):
    with pytest.raises(UsageError):
        concentration_comparison(chiti_12.z_star.scaled(2.0), chiti_12, 2.0, normalize=False)


def test_reverse_holder_on_a_disk():
    domain = aligned_disk_domain((0.4, 0.0), 0.8, 1 / 32)
    spectrum = eigenpairs(domain, 1)
    lam = spectrum.eigenvalues[0]
    u = spectrum.eigenfunctions[0]
    matched = build_chiti(2, lam)
    for r, q in ((1.0, 2.0), (2.0, math.inf)):
        check = reverse_holder_check(u, matched, r, q)
        assert check.holds(), check.to_dict()
    report = concentration_comparison(decreasing_rearrangement(u), matched, 2.0,
                                      slack=5 * domain.h, domain_lambda=lam)
    assert report.passed, report.to_dict()


def test_rasterized_ball_reaches_equality(chiti_12):
    ball = aligned_disk_domain((0.0, 0.0), chiti_12.r_tilde, 1 / 32)
    u = eigenpairs(ball, 1).eigenfunctions[0]
    slack = 5 * ball.h
    report = concentration_comparison(decreasing_rearrangement(u), chiti_12, 2.0, slack=slack)
    assert abs(report.worst_margin) <= slack, report.to_dict()
    for r, q in ((1.0, 2.0), (2.0, math.inf)):
        check = reverse_holder_check(u, chiti_12, r, q)
        assert abs(check.lower - check.upper) <= slack * check.upper, check.to_dict()


def test_reverse_holder_on_a_square():
    domain = rectangle_domain(-0.5, -0.5, 0.5, 0.5, 1 / 32)
    spectrum = eigenpairs(domain, 1)
    lam = spectrum.eigenvalues[0]
    u = spectrum.eigenfunctions[0]
    matched = build_chiti(2, lam)
    for r, q in ((1.0, 2.0), (2.0, math.inf)):
        check = reverse_holder_check(u, matched, r, q)
        assert check.holds(), check.to_dict()
    report = concentration_comparison(decreasing_rearrangement(u), matched, 2.0,
                                      slack=5 * domain.h, domain_lambda=lam)
    assert report.passed, report.to_dict()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
