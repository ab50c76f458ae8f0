#!/usr/bin/env python3
"""
Tests for raster domains, ball families and the mask file format
"""

import math
import os
import sys
import tempfile

import numpy as np
import pytest

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, MaskParseError, UsageError
from measure_geom import ball_volume
from raster_domain import (BallFamilyConfig, RasterDomain, aligned_disk_domain, annulus_domain,
                           disk_domain, format_mask, from_predicate, load_mask, parse_mask,
                           rectangle_domain, save_mask)

SMALL_MASK = "3 2 0.0 0.0 0.5\n010\n111\n"


def test_parse_mask_layout():
    domain = parse_mask(SMALL_MASK)
    assert (domain.nx, domain.ny) == (3, 2)
    assert domain.active_count == 4
    x, y = domain.cell_centers()
    assert np.allclose(x, [0.75, 0.25, 0.75, 1.25])
    assert np.allclose(y, [0.25, 0.75, 0.75, 0.75])
    assert format_mask(domain) == SMALL_MASK


def test_parse_mask_errors():
    with pytest.raises(MaskParseError) as info:
        parse_mask("3 2 0 0\n010\n111\n")
    assert info.value.line_number == 1
    with pytest.raises(MaskParseError) as info:
        parse_mask("2 1 0 0 1\n011\n")
    assert info.value.line_number == 2
    with pytest.raises(MaskParseError):
        parse_mask("2 1 0 0 1\n0x\n")
    with pytest.raises(MaskParseError):
        parse_mask("2 1 0 0 1\n00\n")
    with pytest.raises(MaskParseError):
        parse_mask("2 2 0 0 1\n01\n")
    with pytest.raises(MaskParseError):
        parse_mask("2 1 0 0 -1\n01\n")
    with pytest.raises(MaskParseError):
        parse_mask("")


def test_mask_file_save_and_load():
    domain = aligned_disk_domain((0.25, 0.0), 0.5, 1 / 16)
    with tempfile.TemporaryDirectory() as temp_dir:
        path = os.path.join(temp_dir, "disk.msk")
        save_mask(domain, path)
        loaded = load_mask(path)
        assert loaded.active_count == domain.active_count
        assert np.array_equal(loaded.mask, domain.mask)
        assert (loaded.x0, loaded.y0, loaded.h) == (domain.x0, domain.y0, domain.h)

        with pytest.raises(MaskParseError):
            load_mask(os.path.join(temp_dir, "missing.msk"))
        with pytest.raises(MaskParseError):
            load_mask(temp_dir)


def test_single_cell_faces_and_perimeter():
    domain = RasterDomain(-0.5, -0.5, 1.0, np.array([[True]]))
    faces = domain.faces()
    assert faces.first.size == 0
    assert faces.boundary_cells.size == 4
    assert np.allclose(faces.boundary_sq_radius, 0.25)
    assert math.isclose(domain.weighted_perimeter(), 4 * math.exp(0.125), rel_tol=1e-14)
    assert math.isclose(domain.weighted_measure(), 1.0, rel_tol=1e-14)


def test_two_cell_faces():
    domain = RasterDomain(0.0, 0.0, 1.0, np.array([[True, True]]))
    faces = domain.faces()
    assert faces.first.size == 1
    assert (int(faces.first[0]), int(faces.second[0])) == (0, 1)
    assert math.isclose(float(faces.interior_sq_radius[0]), 1.0 + 0.25)
    assert faces.boundary_cells.size == 6


def test_disk_measure_approaches_ball_volume():
    domain = disk_domain((0.0, 0.0), 1.0, 1 / 64)
    assert abs(domain.weighted_measure() - ball_volume(2, 1.0)) < 3e-2 * ball_volume(2, 1.0)
    assert domain.bounding_radius() <= 1.0 + 2 / 64


def test_aligned_disk_is_mirror_symmetric():
    domain = aligned_disk_domain((0.7, 0.0), 0.4, 1 / 32)
    assert np.array_equal(domain.mask, domain.mask[::-1])
    assert np.array_equal(domain.mask, domain.mask[:, ::-1])
    x, _ = domain.cell_centers()
    assert math.isclose(float(x.mean()), 0.7, abs_tol=1e-12)


def test_components_of_two_disks():
    def inside(x, y):
        return ((x + 1) ** 2 + y * y < 0.25) | ((x - 1) ** 2 + y * y < 0.16)

    domain = from_predicate(inside, (-1.5, -0.5, 1.5, 0.5), 1 / 16, pad=1 / 8)
    assert domain.component_count() == 2
    parts = domain.components()
    assert sum(p.active_count for p in parts) == domain.active_count
    assert all(p.h == domain.h and p.x0 == domain.x0 for p in parts)


def test_shape_constructors_validate():
    with pytest.raises(DomainError):
        disk_domain((0, 0), 0.0, 0.1)
    with pytest.raises(DomainError):
        annulus_domain(1.0, 0.5, 0.1)
    with pytest.raises(DomainError):
        rectangle_domain(0, 0, 0, 1, 0.1)
    with pytest.raises(UsageError):
        RasterDomain(0.0, 0.0, 0.1, np.zeros((3, 3), dtype=bool))
    annulus = annulus_domain(0.5, 1.0, 1 / 32)
    assert annulus.component_count() == 1


def test_ball_family_disjointness():
    apart = BallFamilyConfig((-1.0, 1.0), (0.5, 0.5))
    assert apart.is_disjoint()
    assert apart.overlap_depth() == 0.0

    overlapping = BallFamilyConfig((0.0, 0.5), (0.5, 0.5))
    assert not overlapping.is_disjoint()
    assert math.isclose(overlapping.overlap_depth(), 0.5)

    tangent = BallFamilyConfig((-0.5, 0.5), (0.5, 0.5))
    assert not tangent.is_disjoint()


def test_ball_family_pruning_and_scaling():
    config = BallFamilyConfig((0.0, 2.0), (1.0, 0.2))
    assert config.pruned(0.3).count == 1
    assert config.pruned(5.0).radii == (1.0,)
    assert config.scaled(2.0).radii == (2.0, 0.4)
    assert config.to_dict() == {'centers': [0.0, 2.0], 'radii': [1.0, 0.2]}

    with pytest.raises(UsageError):
        BallFamilyConfig((0.0,), (1.0, 2.0))
    with pytest.raises(DomainError):
        BallFamilyConfig((0.0,), (-1.0,))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
