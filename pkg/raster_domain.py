#!/usr/bin/env python3
"""
Raster Domain Module

Cell-centered boolean masks over a bounding box in the plane, the stand-in
for open and quasi-open sets throughout the toolkit. Provides the measure and
perimeter bookkeeping of a mask, connected components, constructors for the
shapes used by the solvers (disks, rectangles, annuli, ball families) and the
mask text format:

    line 1:        nx ny x0 y0 h
    next ny lines: nx characters from {0, 1}; row j holds the cells centered
                   at y = y0 + (j + 1/2) h, column i those at x = x0 + (i + 1/2) h

Version: 1.0.0
"""

import os
import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import ndimage

from errors import DomainError, MaskParseError, UsageError

# Mask file settings
MASK_EXTENSIONS = {'.msk', '.txt'}
MASK_CHARACTERS = {'0', '1'}
MAX_MASK_CELLS = 4_000_000


class FaceSet(NamedTuple):
    """
    Cell faces of a raster domain.

    Interior faces join two active cells; boundary faces join an active cell
    to an inactive cell or the box edge, where the Dirichlet condition holds.
    """

    first: np.ndarray
    second: np.ndarray
    interior_sq_radius: np.ndarray
    boundary_cells: np.ndarray
    boundary_sq_radius: np.ndarray


@dataclass(frozen=True)
class BallFamilyConfig:
    """
    Disjoint union of planar balls with centers on the x-axis.

    Attributes:
        centers: Abscissae of the ball centers
        radii: Ball radii, all positive
    """

    centers: Tuple[float, ...]
    radii: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'centers', tuple(float(c) for c in self.centers))
        object.__setattr__(self, 'radii', tuple(float(r) for r in self.radii))
        if len(self.centers) != len(self.radii):
            raise UsageError(
                f"{len(self.centers)} centers but {len(self.radii)} radii"
            )
        if not self.centers:
            raise UsageError("a ball family needs at least one ball")
        if any(r <= 0 for r in self.radii):
            raise DomainError(f"ball radii must be positive, got {self.radii}")

    @property
    def count(self) -> int:
        """Number of balls in the family."""
        return len(self.radii)

    def overlap_depth(self) -> float:
        """Largest pairwise overlap rho_i + rho_j - |x_i - x_j|, or 0 if disjoint."""
        depth = 0.0
        for i in range(self.count):
            for j in range(i + 1, self.count):
                gap = abs(self.centers[i] - self.centers[j])
                depth = max(depth, self.radii[i] + self.radii[j] - gap)
        return depth

    def is_disjoint(self) -> bool:
        """True if center distances exceed radius sums for every pair."""
        return all(abs(self.centers[i] - self.centers[j]) > self.radii[i] + self.radii[j]
                   for i in range(self.count) for j in range(i + 1, self.count))

    def scaled(self, factor: float) -> 'BallFamilyConfig':
        """Copy with every radius multiplied by a common factor."""
        return BallFamilyConfig(self.centers, tuple(factor * r for r in self.radii))

    def pruned(self, min_radius: float) -> 'BallFamilyConfig':
        """Drop balls below `min_radius`, always keeping the largest one."""
        keep = [i for i, r in enumerate(self.radii) if r >= min_radius]
        if not keep:
            keep = [int(np.argmax(self.radii))]
        return BallFamilyConfig(tuple(self.centers[i] for i in keep),
                                tuple(self.radii[i] for i in keep))

    def to_dict(self) -> Dict[str, List[float]]:
        """Plain representation for reports."""
        return {'centers': list(self.centers), 'radii': list(self.radii)}


@dataclass(frozen=True, eq=False)
class RasterDomain:
    """
    Cell-centered mask over the box [x0, x0 + nx h] x [y0, y0 + ny h].

    Attributes:
        x0: Left edge of the bounding box
        y0: Bottom edge of the bounding box
        h: Cell side
        mask: Boolean array of shape (ny, nx); row j lies at height y0 + (j + 1/2) h
    """

    x0: float
    y0: float
    h: float
    mask: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise UsageError(f"mask must be two-dimensional, got shape {mask.shape}")
        if self.h <= 0:
            raise DomainError(f"cell side must be positive, got {self.h}")
        if not mask.any():
            raise UsageError("mask has no active cells")
        mask.setflags(write=False)
        object.__setattr__(self, 'mask', mask)

    @property
    def nx(self) -> int:
        return self.mask.shape[1]

    @property
    def ny(self) -> int:
        return self.mask.shape[0]

    @property
    def active_count(self) -> int:
        """Number of active cells."""
        return int(self.mask.sum())

    def index_map(self) -> np.ndarray:
        """Unknown number of every cell in row-major order, -1 where inactive."""
        index = np.full(self.mask.shape, -1, dtype=np.int64)
        index[self.mask] = np.arange(self.active_count)
        return index

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Coordinates (x, y) of the active cell centers, row-major order."""
        rows, cols = np.nonzero(self.mask)
        return (self.x0 + (cols + 0.5) * self.h, self.y0 + (rows + 0.5) * self.h)

    def squared_radii(self) -> np.ndarray:
        """|x|^2 at the active cell centers."""
        x, y = self.cell_centers()
        return x * x + y * y

    def cell_measures(self) -> np.ndarray:
        """m_2-measure of every active cell, center-point rule e^{|x_c|^2/2} h^2."""
        return np.exp(0.5 * self.squared_radii()) * self.h * self.h

    def weighted_measure(self) -> float:
        """m_2-measure of the domain."""
        return float(self.cell_measures().sum())

    def lebesgue_area(self) -> float:
        """Lebesgue area of the active cells."""
        return self.active_count * self.h * self.h

    def bounding_radius(self) -> float:
        """Radius of the smallest centered disk containing every active cell."""
        x, y = self.cell_centers()
        half = 0.5 * self.h
        far_x = np.abs(x) + half
        far_y = np.abs(y) + half
        return float(np.sqrt(far_x * far_x + far_y * far_y).max())

    def weighted_perimeter(self) -> float:
        """
        m_2-perimeter of the staircase boundary.

        Every face between an active and an inactive cell (or the box edge)
        contributes h e^{|x_f|^2/2} evaluated at the face midpoint.
        """
        padded = np.pad(self.mask, 1, constant_values=False)
        total = 0.0
        # Vertical faces between columns i-1 and i (padded indices)
        jumps = padded[1:-1, 1:] != padded[1:-1, :-1]
        rows, cols = np.nonzero(jumps)
        fx = self.x0 + cols * self.h
        fy = self.y0 + (rows + 0.5) * self.h
        total += np.exp(0.5 * (fx * fx + fy * fy)).sum()
        # Horizontal faces between rows j-1 and j
        jumps = padded[1:, 1:-1] != padded[:-1, 1:-1]
        rows, cols = np.nonzero(jumps)
        fx = self.x0 + (cols + 0.5) * self.h
        fy = self.y0 + rows * self.h
        total += np.exp(0.5 * (fx * fx + fy * fy)).sum()
        return float(total * self.h)

    def faces(self) -> FaceSet:
        """
        Enumerate interior and boundary faces with |x_f|^2 at face midpoints.

        Each interior face is listed once (right and upper neighbours).
        """
        index = np.pad(self.index_map(), 1, constant_values=-1)
        here = index[1:-1, 1:-1]
        rows, cols = np.nonzero(here >= 0)
        cells = here[rows, cols]

        first, second, inner_r2 = [], [], []
        boundary, boundary_r2 = [], []
        for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
            neighbour = index[1 + rows + dr, 1 + cols + dc]
            fx = self.x0 + (cols + 0.5 + 0.5 * dc) * self.h
            fy = self.y0 + (rows + 0.5 + 0.5 * dr) * self.h
            r2 = fx * fx + fy * fy
            outside = neighbour < 0
            boundary.append(cells[outside])
            boundary_r2.append(r2[outside])
            if dr >= 0 and dc >= 0:
                first.append(cells[~outside])
                second.append(neighbour[~outside])
                inner_r2.append(r2[~outside])

        return FaceSet(np.concatenate(first), np.concatenate(second),
                       np.concatenate(inner_r2), np.concatenate(boundary),
                       np.concatenate(boundary_r2))

    def component_labels(self) -> Tuple[np.ndarray, int]:
        """Four-connected component labels (0 = inactive) and their count."""
        labels, count = ndimage.label(self.mask)
        return labels, int(count)

    def component_count(self) -> int:
        """Number of four-connected components."""
        return self.component_labels()[1]

    def components(self) -> List['RasterDomain']:
        """Each connected component as its own domain on the same grid."""
        labels, count = self.component_labels()
        return [self.restricted(labels == k) for k in range(1, count + 1)]

    def restricted(self, sub_mask: np.ndarray) -> 'RasterDomain':
        """Domain formed by the active cells that are also set in `sub_mask`."""
        return RasterDomain(self.x0, self.y0, self.h, self.mask & np.asarray(sub_mask, dtype=bool))

    def grid_summary(self) -> Dict[str, float]:
        """Grid parameters for reports."""
        return {'nx': self.nx, 'ny': self.ny, 'x0': self.x0, 'y0': self.y0,
                'h': self.h, 'active_cells': self.active_count}


def from_predicate(predicate: Callable[[np.ndarray, np.ndarray], np.ndarray],
                   bounds: Tuple[float, float, float, float], h: float,
                   pad: float = 0.0) -> RasterDomain:
    """
    Rasterize {predicate(x, y)} on a grid covering `bounds` plus padding.

    Args:
        predicate: Vectorized indicator evaluated at cell centers
        bounds: (xmin, ymin, xmax, ymax) of the set
        h: Cell side
        pad: Extra margin added on every side

    Returns:
        RasterDomain: Mask of cells whose centers satisfy the predicate
    """
    if h <= 0:
        raise DomainError(f"cell side must be positive, got {h}")
    xmin, ymin, xmax, ymax = bounds
    x0 = xmin - pad
    y0 = ymin - pad
    nx = int(math.ceil((xmax + pad - x0) / h))
    ny = int(math.ceil((ymax + pad - y0) / h))
    if nx * ny > MAX_MASK_CELLS:
        raise UsageError(f"grid of {nx} x {ny} cells exceeds {MAX_MASK_CELLS}")
    xs = x0 + (np.arange(nx) + 0.5) * h
    ys = y0 + (np.arange(ny) + 0.5) * h
    gx, gy = np.meshgrid(xs, ys)
    return RasterDomain(x0, y0, h, predicate(gx, gy))


def disk_domain(center: Sequence[float], radius: float, h: float) -> RasterDomain:
    """Cells whose centers lie in the open disk B(center, radius), box padded by 2h."""
    if radius <= 0:
        raise DomainError(f"disk radius must be positive, got {radius}")
    cx, cy = float(center[0]), float(center[1])
    return from_predicate(
        lambda x, y: (x - cx) ** 2 + (y - cy) ** 2 < radius * radius,
        (cx - radius, cy - radius, cx + radius, cy + radius), h, pad=2 * h
    )


def aligned_disk_domain(center: Sequence[float], radius: float, h: float) -> RasterDomain:
    """
    Disk rasterized on a grid that has a cell corner at the disk center.

    The cell pattern is then the same for every center, so discrete
    quantities vary smoothly when the disk is translated.
    """
    if radius <= 0:
        raise DomainError(f"disk radius must be positive, got {radius}")
    cx, cy = float(center[0]), float(center[1])
    half_cells = int(math.ceil(radius / h)) + 2
    x0 = cx - half_cells * h
    y0 = cy - half_cells * h
    n = 2 * half_cells
    offsets = (np.arange(n) + 0.5 - half_cells) * h
    gx, gy = np.meshgrid(offsets, offsets)
    return RasterDomain(x0, y0, h, gx * gx + gy * gy < radius * radius)


def rectangle_domain(xmin: float, ymin: float, xmax: float, ymax: float,
                     h: float) -> RasterDomain:
    """Cells whose centers lie in the open rectangle, box padded by 2h."""
    if xmax <= xmin or ymax <= ymin:
        raise DomainError("rectangle must have positive width and height")
    return from_predicate(
        lambda x, y: (x > xmin) & (x < xmax) & (y > ymin) & (y < ymax),
        (xmin, ymin, xmax, ymax), h, pad=2 * h
    )


def annulus_domain(inner: float, outer: float, h: float) -> RasterDomain:
    """Centered annulus inner < |x| < outer, box padded by 2h."""
    if not 0 <= inner < outer:
        raise DomainError(f"annulus needs 0 <= inner < outer, got {inner}, {outer}")
    return from_predicate(
        lambda x, y: (x * x + y * y > inner * inner) & (x * x + y * y < outer * outer),
        (-outer, -outer, outer, outer), h, pad=2 * h
    )


def parse_mask(text: str, source: str = '<string>') -> RasterDomain:
    """
    Parse the mask text format.

    Args:
        text: Full file contents
        source: Name used in log messages

    Returns:
        RasterDomain: The parsed domain

    Raises:
        MaskParseError: On a malformed header, wrong row count or width, or
            any character outside {0, 1}
    """
    lines = text.splitlines()
    if not lines:
        raise MaskParseError("empty mask file", 1)

    header = lines[0].split()
    if len(header) != 5:
        raise MaskParseError(f"header needs 'nx ny x0 y0 h', got {lines[0]!r}", 1)
    try:
        nx, ny = int(header[0]), int(header[1])
        x0, y0, h = float(header[2]), float(header[3]), float(header[4])
    except ValueError as e:
        raise MaskParseError(f"bad header value: {e}", 1) from e
    if nx <= 0 or ny <= 0 or h <= 0:
        raise MaskParseError(f"nx, ny and h must be positive, got {nx}, {ny}, {h}", 1)

    rows = lines[1:]
    # Trailing blank lines are tolerated, nothing else is
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != ny:
        raise MaskParseError(f"expected {ny} mask rows, found {len(rows)}")

    mask = np.zeros((ny, nx), dtype=bool)
    for j, row in enumerate(rows):
        row = row.rstrip('\r\n')
        if len(row) != nx:
            raise MaskParseError(f"row has {len(row)} cells, expected {nx}", j + 2)
        unknown = set(row) - MASK_CHARACTERS
        if unknown:
            raise MaskParseError(f"unknown characters {sorted(unknown)!r}", j + 2)
        mask[j] = np.frombuffer(row.encode('ascii'), dtype=np.uint8) == ord('1')

    if not mask.any():
        raise MaskParseError("mask has no active cells")
    logging.info(f"Parsed mask {source}: {nx} x {ny} cells, {int(mask.sum())} active, h={h!r}")
    return RasterDomain(x0, y0, h, mask)


def load_mask(file_path: str) -> RasterDomain:
    """
    Load and validate a mask file.

    Args:
        file_path: Path to the mask file

    Returns:
        RasterDomain: The parsed domain

    Raises:
        MaskParseError: If the file is missing, unreadable or malformed
    """
    if not os.path.exists(file_path):
        logging.error(f"Mask file does not exist: {file_path}")
        raise MaskParseError(f"mask file not found: {file_path}")
    if not os.path.isfile(file_path):
        logging.error(f"Mask path is not a file: {file_path}")
        raise MaskParseError(f"not a file: {file_path}")

    _, extension = os.path.splitext(file_path.lower())
    if extension not in MASK_EXTENSIONS:
        logging.warning(f"Unusual mask file extension: {extension}")

    try:
        with open(file_path, 'r', encoding='ascii') as f:
            text = f.read()
    except UnicodeDecodeError as e:
        logging.error(f"Mask file is not ASCII text: {file_path}")
        raise MaskParseError(f"non-ASCII content in {file_path}") from e

    return parse_mask(text, os.path.basename(file_path))


def format_mask(domain: RasterDomain) -> str:
    """Serialize a domain to the mask text format (floats written with repr)."""
    lines = [f"{domain.nx} {domain.ny} {domain.x0!r} {domain.y0!r} {domain.h!r}"]
    for row in domain.mask:
        lines.append(''.join('1' if cell else '0' for cell in row))
    return '\n'.join(lines) + '\n'


def save_mask(domain: RasterDomain, file_path: str) -> None:
    """Write a domain to a mask file."""
    try:
        with open(file_path, 'w', encoding='ascii') as f:
            f.write(format_mask(domain))
        logging.info(f"Mask written: {os.path.basename(file_path)}")
    except OSError as e:
        logging.error(f"Error writing mask file {file_path}: {e}")
        raise

