"""
Radial Eigen Solver for Centered Balls

Finite-volume discretization of

    -(a u')' + l(l+N-2) r^{-2} a u = lambda a u,   a(r) = r^{N-1} e^{r^2/2}

on [0, R] with Dirichlet data at R, one spherical-harmonic degree l at a time.
The oscillator form (plain weight r^{N-1}, potential r^2/4, eigenvalue
nu = lambda - N/2) is available for cross-checks. Slices are merged into the
ball spectrum with harmonic multiplicities; the lambda_1(B_r) curve and its
inverse are built on top.

Version: 1.0.0
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize
from scipy.linalg import eigh_tridiagonal

from errors import ConvergenceError, DomainError, InfeasibleTargetError, UsageError
from measure_geom import (ball_volume_array, bessel_first_zero,
                          check_dimension, shell_density_array)

# Solver defaults
DEFAULT_CELLS = 2048
DEFAULT_TOLERANCE = 1e-9
MIN_CELLS = 16
R_MAX = 8.0
RADIUS_TOLERANCE = 1e-7
MAX_DEGREE = 64
SWEEP_WORKERS = 4
PLATEAU_RADII = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)

_GL_NODES, _GL_WEIGHTS = leggauss(4)


@dataclass(frozen=True)
class RadialOperatorSpec:
    """
    One spherical-harmonic slice of the Dirichlet problem on B_R.

    Attributes:
        dim: Space dimension N
        ell: Harmonic degree l >= 0
        radius: Ball radius R
        cells: Number of grid cells n
        grading: Mesh grading exponent; None picks 1 for l = 0 and 1.5 otherwise
        form: 'u' for the weighted operator, 'v' for the oscillator form
    """

    dim: int
    ell: int
    radius: float
    cells: int = DEFAULT_CELLS
    grading: Optional[float] = None
    form: str = 'u'

    def __post_init__(self) -> None:
        check_dimension(self.dim)
        if int(self.ell) != self.ell or self.ell < 0:
            raise DomainError(f"harmonic degree must be a nonnegative integer, got {self.ell}")
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius}")
        if self.cells < MIN_CELLS:
            raise DomainError(f"need at least {MIN_CELLS} cells, got {self.cells}")
        if self.grading is not None and self.grading < 1:
            raise DomainError(f"grading exponent must be >= 1, got {self.grading}")
        if self.form not in ('u', 'v'):
            raise UsageError(f"operator form must be 'u' or 'v', got {self.form!r}")

    @property
    def exponent(self) -> float:
        if self.grading is not None:
            return float(self.grading)
        return 1.0 if self.ell == 0 else 1.5

    def nodes(self) -> np.ndarray:
        """Graded nodes r_i = R (i/n)^gamma, i = 0..n."""
        t = np.arange(self.cells + 1) / self.cells
        return self.radius * t ** self.exponent

    def refined(self, factor: int = 2) -> 'RadialOperatorSpec':
        return RadialOperatorSpec(self.dim, self.ell, self.radius,
                                  self.cells * factor, self.grading, self.form)


@dataclass(frozen=True)
class SpectrumEntry:
    """A distinct eigenvalue with the harmonic degree it came from."""

    value: float
    multiplicity: int
    ell: Optional[int]
    radial_index: int
    residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': self.value,
            'multiplicity': self.multiplicity,
            'ell': self.ell,
            'radial_index': self.radial_index,
            'residual': self.residual,
        }


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues ordered by value."""

    entries: Tuple[SpectrumEntry, ...]

    def __post_init__(self) -> None:
        values = [e.value for e in self.entries]
        if any(b < a for a, b in zip(values, values[1:])):
            raise UsageError("spectrum entries must be ordered by eigenvalue")

    @property
    def eigenvalues(self) -> List[float]:
        """Eigenvalues repeated according to multiplicity."""
        out = []
        for entry in self.entries:
            out.extend([entry.value] * entry.multiplicity)
        return out

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> SpectrumEntry:
        return self.entries[index]

    def to_dict(self) -> Dict[str, Any]:
        return {'entries': [e.to_dict() for e in self.entries]}


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """
    Radial function on [0, nodes[-1]] in dimension N.

    Nodal when there is one value per node (piecewise linear in r), stepwise
    when there is one value per interval (constant on each shell). Zero
    beyond the last node in both cases.
    """

    nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    dim: int

    def __post_init__(self) -> None:
        check_dimension(self.dim)
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise UsageError("a radial profile needs at least two nodes")
        if nodes[0] < 0 or np.any(np.diff(nodes) <= 0):
            raise UsageError("profile nodes must be nonnegative and strictly increasing")
        if values.shape not in ((nodes.size,), (nodes.size - 1,)):
            raise UsageError(
                f"{values.size} values do not fit {nodes.size} nodes"
            )
        object.__setattr__(self, 'nodes', nodes)
        object.__setattr__(self, 'values', values)

    @property
    def is_stepwise(self) -> bool:
        return self.values.size == self.nodes.size - 1

    @property
    def radius(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_stepwise:
            i = np.searchsorted(self.nodes, r, side='right') - 1
            inside = (i >= 0) & (i < self.values.size)
            out = np.where(inside, self.values[np.clip(i, 0, self.values.size - 1)], 0.0)
        else:
            out = np.interp(r, self.nodes, self.values, right=0.0)
        return float(out) if out.ndim == 0 else out

    def shell_masses(self) -> np.ndarray:
        """m_N-measure of each shell nodes[i] <= |x| < nodes[i+1]."""
        return np.diff(ball_volume_array(self.dim, self.nodes))

    def slopes(self) -> np.ndarray:
        if self.is_stepwise:
            raise UsageError("a stepwise profile has no derivative")
        return np.diff(self.values) / np.diff(self.nodes)

    def lp_norm(self, p: float) -> float:
        """
        Norm in L^p(B; m_N) of the radial function x -> u(|x|).

        Stepwise profiles are integrated exactly shell by shell, nodal ones
        with the trapezoid rule on their own nodes.
        """
        if p <= 0:
            raise DomainError(f"exponent must be positive, got {p}")
        a = np.abs(self.values)
        if np.isinf(p):
            return float(a.max())
        if self.is_stepwise:
            return float((a ** p @ self.shell_masses()) ** (1.0 / p))
        density = shell_density_array(self.dim, self.nodes)
        return float(integrate.trapezoid(a ** p * density, self.nodes) ** (1.0 / p))

    def dirichlet_energy(self) -> float:
        """Integral of |grad u|^2 dm_N for the piecewise-linear profile."""
        s = self.slopes()
        return float((s * s) @ self.shell_masses())

    def to_dict(self) -> Dict[str, Any]:
        return {'dim': self.dim, 'nodes': self.nodes.tolist(), 'values': self.values.tolist()}


@dataclass(frozen=True, eq=False)
class RadialPencil:
    """
    Assembled finite-volume pencil (A, M) for one slice.

    `flux[i]` couples nodes i and i+1, `potential` and `mass` are control
    volume integrals for nodes 0..n-1; node n carries the Dirichlet value.
    Unknowns start at node `first` (1 when u(0) = 0 is imposed).
    """

    nodes: np.ndarray
    flux: np.ndarray
    potential: np.ndarray
    full_mass: np.ndarray
    first: int
    shift: float

    @property
    def size(self) -> int:
        return self.full_mass.size - self.first

    @property
    def stiffness_diagonal(self) -> np.ndarray:
        diag = self.flux.copy() + self.potential
        diag[1:] += self.flux[:-1]
        return diag[self.first:]

    @property
    def stiffness_offdiagonal(self) -> np.ndarray:
        return -self.flux[self.first:-1]

    @property
    def mass(self) -> np.ndarray:
        return self.full_mass[self.first:]

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Nodal vector on all n+1 nodes with the constrained values filled in."""
        full = np.zeros(self.nodes.size)
        full[self.first:self.first + u.size] = u
        return full

    def rayleigh_quotient(self, u: np.ndarray) -> float:
        """(A u, u) / (M u, u) in difference form, without the N/2 shift."""
        full = self.expand(u)
        jumps = np.diff(full)
        numerator = self.flux @ (jumps * jumps) + self.potential[self.first:] @ (u * u)
        return float(numerator / (self.mass @ (u * u)))

    def scaled_operator(self) -> Tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of M^{-1/2} A M^{-1/2}."""
        root = np.sqrt(self.mass)
        return self.stiffness_diagonal / self.mass, self.stiffness_offdiagonal / (root[:-1] * root[1:])


def _control_volume_integrals(nodes: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Integrals of f over [r_{i-1/2}, r_{i+1/2}] for nodes i = 0..n-1."""
    left, right = nodes[:-1], nodes[1:]
    mid = 0.5 * (left + right)

    def halves(a, b):
        half = 0.5 * (b - a)
        t = 0.5 * (a + b)[:, None] + half[:, None] * _GL_NODES[None, :]
        return half * (f(t) @ _GL_WEIGHTS)

    out = halves(left, mid)
    out[1:] += halves(mid, right)[:-1]
    return out


def assemble(spec: RadialOperatorSpec) -> RadialPencil:
    """
    Assemble stiffness A and diagonal mass M for one slice.

    Face coefficients use the weight at cell midpoints; mass, potential and
    the centrifugal term are integrated exactly enough over control volumes.
    The origin is closed by the regularity condition: no flux for l = 0,
    u(0) = 0 for l >= 1.
    """
    dim = spec.dim
    nodes = spec.nodes()
    centrifugal = spec.ell * (spec.ell + dim - 2)

    if spec.form == 'u':
        def weight(r):
            return r ** (dim - 1) * np.exp(0.5 * r * r)
        quarter = 0.0
        shift = 0.0
    else:
        def weight(r):
            return r ** (dim - 1)
        quarter = 0.25
        shift = 0.5 * dim

    def potential(r):
        return weight(r) * (quarter * r * r + centrifugal / (r * r))

    mid = 0.5 * (nodes[:-1] + nodes[1:])
    flux = weight(mid) / np.diff(nodes)
    mass = _control_volume_integrals(nodes, weight)
    if centrifugal or quarter:
        pot = _control_volume_integrals(nodes, potential)
    else:
        pot = np.zeros_like(mass)

    first = 0 if spec.ell == 0 else 1
    return RadialPencil(nodes, flux, pot, mass, first, shift)


def _relative_residuals(d: np.ndarray, e: np.ndarray, theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """||B y - theta y|| / ||B||_1 for each column of y."""
    by = d[:, None] * y
    by[:-1] += e[:, None] * y[1:]
    by[1:] += e[:, None] * y[:-1]
    column_sums = np.abs(d).copy()
    column_sums[:-1] += np.abs(e)
    column_sums[1:] += np.abs(e)
    return np.linalg.norm(by - theta[None, :] * y, axis=0) / column_sums.max()


def lowest_eigenpairs(spec: RadialOperatorSpec, k: int = 1,
                      tol: float = DEFAULT_TOLERANCE) -> Tuple[Spectrum, List[RadialProfile]]:
    """
    Smallest k eigenpairs of one slice.

    The symmetrically scaled tridiagonal matrix is handed to LAPACK's Sturm
    bisection with inverse iteration. Eigenvalues are reported as Rayleigh
    quotients of the computed vectors; eigenvectors are M-orthonormal and
    nonnegative at the first unknown.

    Args:
        spec: Slice to solve
        k: Number of eigenpairs
        tol: Bound on the relative backward error of each pair

    Returns:
        Tuple[Spectrum, List[RadialProfile]]: Slice spectrum and eigenfunctions

    Raises:
        DomainError: If k or tol is out of range
        ConvergenceError: If a pair misses the residual bound
    """
    if k < 1:
        raise DomainError(f"need k >= 1 eigenpairs, got {k}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")

    pencil = assemble(spec)
    if k > pencil.size:
        raise DomainError(f"k={k} exceeds the {pencil.size} unknowns of the slice")

    d, e = pencil.scaled_operator()
    theta, y = eigh_tridiagonal(d, e, select='i', select_range=(0, k - 1),
                                lapack_driver='stebz')
    residuals = _relative_residuals(d, e, theta, y)
    worst = float(residuals.max())
    if worst > tol:
        logging.error(f"Radial solve N={spec.dim} l={spec.ell} R={spec.radius}: residual {worst:.3e}")
        raise ConvergenceError(f"radial eigenpairs for l={spec.ell} missed tolerance {tol:g}", worst)

    root = np.sqrt(pencil.mass)
    entries = []
    profiles = []
    for j in range(k):
        u = y[:, j] / root
        lead = u[np.flatnonzero(np.abs(u) > 0)[0]]
        if lead < 0:
            u = -u
        value = pencil.rayleigh_quotient(u) + pencil.shift
        entries.append(SpectrumEntry(value, harmonic_multiplicity(spec.dim, spec.ell),
                                     spec.ell, j + 1, float(residuals[j])))
        profiles.append(RadialProfile(pencil.nodes, pencil.expand(u), spec.dim))

    logging.debug(f"Slice N={spec.dim} l={spec.ell} R={spec.radius} n={spec.cells}: "
                  f"{[round(x.value, 10) for x in entries]}")
    return Spectrum(tuple(entries)), profiles


def harmonic_multiplicity(dim: int, ell: int) -> int:
    """Dimension of the space of degree-l spherical harmonics in R^N."""
    if ell == 0:
        return 1
    return (2 * ell + dim - 2) * math.factorial(ell + dim - 3) // (
        math.factorial(ell) * math.factorial(dim - 2))


def ball_spectrum(dim: int, radius: float, k: int,
                  tol: float = DEFAULT_TOLERANCE, cells: int = DEFAULT_CELLS) -> Spectrum:
    """
    First k distinct eigenvalues of the ball B_R, merged across degrees.

    Degrees are added until the lowest eigenvalue of the next degree exceeds
    the current k-th candidate.
    """
    check_dimension(dim)
    if k < 1:
        raise DomainError(f"need k >= 1 eigenvalues, got {k}")

    candidates: List[SpectrumEntry] = []
    for ell in range(MAX_DEGREE + 1):
        spec = RadialOperatorSpec(dim, ell, radius, cells)
        slice_spectrum, _ = lowest_eigenpairs(spec, k, tol)
        if len(candidates) >= k and slice_spectrum[0].value > candidates[k - 1].value:
            break
        candidates = sorted(candidates + list(slice_spectrum.entries), key=lambda x: x.value)
    else:
        logging.warning(f"Ball spectrum N={dim} R={radius}: stopped at degree {MAX_DEGREE}")

    spectrum = Spectrum(tuple(candidates[:k]))
    logging.info(f"Ball spectrum N={dim} R={radius}: {[round(v, 8) for v in spectrum.eigenvalues]}")
    return spectrum


def first_eigenvalue(spec: RadialOperatorSpec) -> float:
    """Richardson-extrapolated lowest eigenvalue of a slice from n and 2n cells."""
    coarse, _ = lowest_eigenpairs(spec, 1)
    fine, _ = lowest_eigenpairs(spec.refined(), 1)
    return (4.0 * fine[0].value - coarse[0].value) / 3.0


@lru_cache(maxsize=4096)
def lambda1_ball(dim: int, radius: float, cells: int = DEFAULT_CELLS) -> float:
    """
    First eigenvalue lambda_1(B_R) of the centered ball.

    Raises:
        DomainError: If R <= 0
    """
    return first_eigenvalue(RadialOperatorSpec(dim, 0, float(radius), cells))


def lambda1_sweep(dim: int, radii: Sequence[float], workers: int = SWEEP_WORKERS) -> List[float]:
    """lambda_1(B_R) for several radii, in input order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: lambda1_ball(dim, float(r)), radii))


def find_radius_for_lambda(dim: int, lambda_target: float,
                           tol: float = RADIUS_TOLERANCE) -> float:
    """
    Radius r~ with lambda_1(B_r~) = lambda_target.

    The lower end of the bracket comes from the Bessel lower bound
    lambda_1(B_r) >= N/2 + j^2/r^2, the upper end is R_MAX.

    Raises:
        InfeasibleTargetError: If the target is not above lambda_1(B_{R_MAX})
        ConvergenceError: If the located radius misses the tolerance
    """
    check_dimension(dim)
    infimum = lambda1_ball(dim, R_MAX)
    if not lambda_target > infimum:
        raise InfeasibleTargetError(lambda_target, infimum)

    j = bessel_first_zero(0.5 * dim - 1.0)
    lo = min(0.999 * j / math.sqrt(lambda_target - 0.5 * dim), 0.5 * R_MAX)
    while lambda1_ball(dim, lo) <= lambda_target:
        lo *= 0.5

    r = optimize.brentq(lambda x: lambda1_ball(dim, x) - lambda_target, lo, R_MAX,
                        xtol=1e-13, rtol=1e-14)
    miss = abs(lambda1_ball(dim, r) - lambda_target)
    if miss > tol:
        raise ConvergenceError(f"radius for lambda={lambda_target} missed tolerance", miss)
    logging.debug(f"r~(N={dim}, lambda={lambda_target}) = {r!r}")
    return r


@dataclass(frozen=True)
class PlateauReport:
    """Large-radius behaviour of lambda_1(B_R) against both candidate limits."""

    dim: int
    radii: Tuple[float, ...]
    values: Tuple[float, ...]

    @property
    def plateau(self) -> float:
        return self.values[-1]

    @property
    def distance_to_n(self) -> float:
        return abs(self.plateau - self.dim)

    @property
    def distance_to_three_halves_n(self) -> float:
        return abs(self.plateau - 1.5 * self.dim)

    @property
    def nearest_candidate(self) -> str:
        return 'N' if self.distance_to_n <= self.distance_to_three_halves_n else '3N/2'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dim': self.dim,
            'radii': list(self.radii),
            'lambda1': list(self.values),
            'plateau': self.plateau,
            'distance_to_N': self.distance_to_n,
            'distance_to_3N/2': self.distance_to_three_halves_n,
            'nearest': self.nearest_candidate,
        }


def measure_plateau(dim: int, radii: Sequence[float] = PLATEAU_RADII) -> PlateauReport:
    """Measure lambda_1(B_R) on increasing radii; the last value is the plateau."""
    radii = tuple(sorted(float(r) for r in radii))
    values = tuple(lambda1_sweep(dim, radii))
    report = PlateauReport(dim, radii, values)
    logging.info(f"Plateau N={dim}: {report.plateau:.10f} (|.-N|={report.distance_to_n:.2e}, "
                 f"|.-3N/2|={report.distance_to_three_halves_n:.2e})")
    return report


def whole_space_levels(dim: int, count: int = 6) -> List[float]:
    """Lowest `count` eigenvalues (with multiplicity) of the ball of radius R_MAX."""
    levels = ball_spectrum(dim, R_MAX, count).eigenvalues
    return levels[:count]


def ball_lower_bound(dim: int, radius: float) -> float:
    """N/2 + j_{N/2-1,1}^2 / R^2, a lower bound for every lambda_j(B_R)."""
    return 0.5 * dim + bessel_first_zero(0.5 * dim - 1.0) ** 2 / radius ** 2
