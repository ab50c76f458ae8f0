"""
Planar Field Solver

Eigenpairs, torsion function and maximum-principle checks for the drift
Laplacian L = -Delta - x.grad on raster domains in the plane.

The primary discretization uses the oscillator transform v = u e^{|x|^2/4}:
the five-point matrix of -Delta + |x|^2/4 restricted to the active cells
(Dirichlet outside). Its eigenvalues nu_j give lambda_j = nu_j + 1, and the
shifted matrix (A + I) is the discrete form of L acting on v, which is used
for the torsion problem and any right-hand side f. A face-weighted u-form
discretization is kept as a cross-check.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, minres, splu

from errors import (ConsistencyError, ConvergenceError, DomainError,
                    OverlapError, UsageError)
from measure_geom import bessel_first_zero, isoperimetric_profile, radius_of_volume
from radial_solver import Spectrum, SpectrumEntry, lambda1_ball
from raster_domain import BallFamilyConfig, RasterDomain, from_predicate
from rearrange import GridFunction, InequalityCheck

DIMENSION = 2
SHIFT = 0.5 * DIMENSION

DEFAULT_TOLERANCE = 1e-8
DENSE_LIMIT = 400
START_VECTOR_SEED = 0
TORSION_RTOL = 1e-10
MINRES_MAXITER = 20000
DOMINATION_TOL = 1e-8
MAX_PRINCIPLE_TOL = 1e-10
FABER_KRAHN_SLACK = 5.0


def rasterize_balls(config: BallFamilyConfig, h: float,
                    allow_overlap: bool = False) -> RasterDomain:
    """
    Rasterize a union of disks.

    Args:
        config: Disk centers and radii
        h: Cell side
        allow_overlap: Accept intersecting disks (penalized shape search only)

    Returns:
        RasterDomain: Cells whose centers lie in the union, box padded by 2h

    Raises:
        OverlapError: If disks intersect and overlap is not allowed
    """
    if not allow_overlap and not config.is_disjoint():
        raise OverlapError(f"disks overlap by {config.overlap_depth():.6g}")
    centers = np.asarray(config.centers, dtype=float)
    radii = np.asarray(config.radii, dtype=float)

    def inside(x, y):
        hit = np.zeros(x.shape, dtype=bool)
        for cx, r in zip(centers, radii):
            hit |= (x - cx) ** 2 + y * y < r * r
        return hit

    top = float(radii.max())
    bounds = (float((centers - radii).min()), -top, float((centers + radii).max()), top)
    return from_predicate(inside, bounds, h, pad=2 * h)


def assemble_oscillator(domain: RasterDomain) -> sparse.csc_matrix:
    """Five-point -Delta + |x|^2/4 on the active cells, Dirichlet outside."""
    n = domain.active_count
    h2 = domain.h * domain.h
    faces = domain.faces()
    diagonal = 4.0 / h2 + 0.25 * domain.squared_radii()
    rows = np.concatenate((np.arange(n), faces.first, faces.second))
    cols = np.concatenate((np.arange(n), faces.second, faces.first))
    off = np.full(faces.first.size, -1.0 / h2)
    data = np.concatenate((diagonal, off, off))
    return sparse.csc_matrix((data, (rows, cols)), shape=(n, n))


def assemble_laplacian(domain: RasterDomain) -> sparse.csc_matrix:
    """Five-point Dirichlet Laplacian -Delta on the active cells."""
    return assemble_oscillator(domain) - sparse.diags(0.25 * domain.squared_radii(), format='csc')


def assemble_weighted(domain: RasterDomain) -> Tuple[sparse.csc_matrix, np.ndarray]:
    """
    u-form stiffness K and diagonal mass for -div(e^{|x|^2/2} grad u).

    Face weights e^{|x_f|^2/2} at face midpoints; boundary faces couple to
    the zero Dirichlet value. The mass is the m_2-measure of each cell.
    """
    n = domain.active_count
    faces = domain.faces()
    inner = np.exp(0.5 * faces.interior_sq_radius)
    diagonal = np.bincount(faces.first, inner, n) + np.bincount(faces.second, inner, n)
    diagonal += np.bincount(faces.boundary_cells, np.exp(0.5 * faces.boundary_sq_radius), n)
    rows = np.concatenate((np.arange(n), faces.first, faces.second))
    cols = np.concatenate((np.arange(n), faces.second, faces.first))
    data = np.concatenate((diagonal, -inner, -inner))
    stiffness = sparse.csc_matrix((data, (rows, cols)), shape=(n, n))
    return stiffness, domain.cell_measures()


def _smallest_eigenpairs(matrix: sparse.spmatrix, k: int,
                         tol: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    k smallest eigenpairs of a sparse symmetric positive definite matrix.

    Shift-invert Lanczos around 0 with an LU factorization supplied as the
    inverse operator; dense LAPACK for small matrices.

    Returns:
        Tuple of eigenvalues, unit eigenvectors (columns), relative residuals
    """
    n = matrix.shape[0]
    if k < 1 or k > n:
        raise DomainError(f"need 1 <= k <= {n} eigenpairs, got {k}")

    if n <= DENSE_LIMIT or k >= n - 1:
        theta, vectors = linalg.eigh(matrix.toarray(), subset_by_index=(0, k - 1))
    else:
        lu = splu(matrix.tocsc())
        op_inv = LinearOperator(matvec=lu.solve, shape=matrix.shape, dtype=float)
        try:
            # Fixed Lanczos start vector keeps repeated runs bit-identical
            v0 = np.random.default_rng(START_VECTOR_SEED).uniform(0.5, 1.5, n)
            theta, vectors = eigsh(matrix, k, sigma=0.0, which='LM', OPinv=op_inv, v0=v0)
        except ArpackNoConvergence as error:
            logging.error(f"Shift-invert Lanczos did not converge for k={k}, n={n}")
            raise ConvergenceError("sparse eigensolver did not converge") from error
        order = np.argsort(theta)
        theta, vectors = theta[order], vectors[:, order]

    norm = abs(matrix).sum(axis=0).max()
    residuals = np.linalg.norm(matrix @ vectors - vectors * theta[None, :], axis=0) / norm
    worst = float(residuals.max())
    if worst > tol:
        logging.error(f"Eigenpairs on {n} unknowns: residual {worst:.3e} above {tol:g}")
        raise ConvergenceError(f"eigenpairs missed tolerance {tol:g}", worst)
    return theta, vectors, residuals


@dataclass(frozen=True)
class DomainSpectrum:
    """Eigenvalues of a raster domain and the matching u-form eigenfunctions."""

    spectrum: Spectrum
    eigenfunctions: List[GridFunction] = field(repr=False)

    @property
    def eigenvalues(self) -> List[float]:
        return self.spectrum.eigenvalues

    def to_dict(self) -> Dict[str, Any]:
        return self.spectrum.to_dict()


def _normalized(domain: RasterDomain, u: np.ndarray) -> GridFunction:
    """Scale so that sum u^2 * cell measure = 1 and the largest entry is positive."""
    u = u / np.sqrt(u * u @ domain.cell_measures())
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    return GridFunction(domain, u)


def eigenpairs(domain: RasterDomain, k: int,
               tol: float = DEFAULT_TOLERANCE) -> DomainSpectrum:
    """
    k smallest eigenvalues lambda_j = nu_j + 1 of L on a raster domain.

    Args:
        domain: Raster domain
        k: Number of eigenpairs, 1 <= k <= active cells
        tol: Bound on the relative backward error of each pair

    Returns:
        DomainSpectrum: Ordered spectrum and eigenfunctions u_j = v_j e^{-|x|^2/4}

    Raises:
        DomainError: If k is out of range
        ConvergenceError: If the eigensolver fails or misses the tolerance
    """
    nu, vectors, residuals = _smallest_eigenpairs(assemble_oscillator(domain), k, tol)
    damping = np.exp(-0.25 * domain.squared_radii())
    entries = tuple(SpectrumEntry(float(nu[j] + SHIFT), 1, None, j + 1, float(residuals[j]))
                    for j in range(k))
    functions = [_normalized(domain, vectors[:, j] * damping) for j in range(k)]
    logging.info(f"Domain eigenvalues ({domain.active_count} cells, h={domain.h:g}): "
                 f"{[round(e.value, 8) for e in entries]}")
    return DomainSpectrum(Spectrum(entries), functions)


def eigenpairs_weighted(domain: RasterDomain, k: int,
                        tol: float = DEFAULT_TOLERANCE) -> DomainSpectrum:
    """
    Same eigenvalue problem in u-form, K u = lambda M u, for cross-checks.

    The pencil is scaled symmetrically to M^{-1/2} K M^{-1/2} before solving.
    """
    stiffness, mass = assemble_weighted(domain)
    scale = sparse.diags(1.0 / np.sqrt(mass), format='csc')
    theta, vectors, residuals = _smallest_eigenpairs(scale @ stiffness @ scale, k, tol)
    root = np.sqrt(mass)
    entries = tuple(SpectrumEntry(float(theta[j]), 1, None, j + 1, float(residuals[j]))
                    for j in range(k))
    functions = [_normalized(domain, vectors[:, j] / root) for j in range(k)]
    return DomainSpectrum(Spectrum(entries), functions)


class DriftPoissonSolver:
    """
    Solves L psi = f with psi = 0 outside a raster domain.

    The system (A + I) phi = e^{|x|^2/4} f, psi = phi e^{-|x|^2/4}, is
    strictly diagonally dominant with positive diagonal, hence symmetric
    positive definite and monotone. It is factorized once and reused.

    Attributes:
        domain: Raster domain
        matrix: The shifted oscillator matrix A + I
    """

    def __init__(self, domain: RasterDomain) -> None:
        self.domain = domain
        self.matrix = (assemble_oscillator(domain)
                       + SHIFT * sparse.identity(domain.active_count, format='csc')).tocsc()
        self._growth = np.exp(0.25 * domain.squared_radii())
        self._check_definite()
        try:
            self._lu = splu(self.matrix)
        except RuntimeError as error:
            logging.warning(f"LU factorization failed ({error}); using minimal residual iterations")
            self._lu = None

    def _check_definite(self) -> None:
        diagonal = self.matrix.diagonal()
        off = abs(self.matrix).sum(axis=1).A1 - np.abs(diagonal)
        margin = float((diagonal - off).min())
        if not (np.all(diagonal > 0) and margin > 0):
            logging.error(f"Drift operator lost diagonal dominance (margin {margin:.3e})")
            raise ConsistencyError("discrete drift operator is not positive definite")

    def solve(self, f: np.ndarray) -> np.ndarray:
        """
        psi on the active cells for a right-hand side f on the active cells.

        Raises:
            UsageError: If f has the wrong length
            ConvergenceError: If neither solver reaches the tolerance
        """
        f = np.asarray(f, dtype=float)
        if f.shape != (self.domain.active_count,):
            raise UsageError(f"right-hand side needs {self.domain.active_count} values")
        rhs = self._growth * f
        scale = np.linalg.norm(rhs)
        if scale == 0.0:
            return np.zeros_like(f)

        phi = self._lu.solve(rhs) if self._lu is not None else None
        if phi is None or np.linalg.norm(self.matrix @ phi - rhs) > TORSION_RTOL * scale:
            if phi is not None:
                logging.warning("Direct solve missed the residual bound; refining with MINRES")
            phi, info = minres(self.matrix, rhs, x0=phi, rtol=TORSION_RTOL * 1e-2,
                               maxiter=MINRES_MAXITER)
            residual = np.linalg.norm(self.matrix @ phi - rhs) / scale
            if info != 0 and residual > TORSION_RTOL:
                raise ConvergenceError("drift Poisson solve did not converge", residual)
        return phi / self._growth


@dataclass(frozen=True, eq=False)
class TorsionField:
    """
    Torsion function w with L w = 1 on a raster domain.

    Attributes:
        domain: Raster domain
        w: Value per active cell, positive
    """

    domain: RasterDomain
    w: np.ndarray = field(repr=False)

    @property
    def support_count(self) -> int:
        """Cells of {w > 0}, the raster analogue of the proof's quasi-open set."""
        return int(np.count_nonzero(self.w > 0))

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.domain, self.w)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'min': float(self.w.min()),
            'max': float(self.w.max()),
            'weighted_l1': float(self.w @ self.domain.cell_measures()),
            'support_cells': self.support_count,
            'active_cells': self.domain.active_count,
        }


def torsion(domain: RasterDomain, solver: Optional[DriftPoissonSolver] = None) -> TorsionField:
    """
    Torsion function of a raster domain.

    Raises:
        ConsistencyError: If w fails to be positive on every active cell
    """
    solver = solver or DriftPoissonSolver(domain)
    w = solver.solve(np.ones(domain.active_count))
    if not np.all(w > 0):
        logging.error(f"Torsion function has min {w.min():.3e} on a domain of {domain.active_count} cells")
        raise ConsistencyError("torsion function is not positive")
    logging.info(f"Torsion: max w = {w.max():.8f} on {domain.active_count} cells")
    return TorsionField(domain, w)


@dataclass(frozen=True)
class DominationReport:
    """Per-eigenfunction violation of |u_j| <= lambda_j ||u_j||_inf w, relative to ||u_j||_inf."""

    eigenvalues: Tuple[float, ...]
    violations: Tuple[float, ...]
    tolerance: float

    @property
    def max_violation(self) -> float:
        return max(self.violations)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {'eigenvalues': list(self.eigenvalues), 'violations': list(self.violations),
                'max_violation': self.max_violation, 'passed': self.passed}


def domination_violations(functions: List[GridFunction], eigenvalues: List[float],
                          field_w: TorsionField) -> Tuple[float, ...]:
    """max(|u_j| - lambda_j M_j w) / M_j for each eigenfunction, M_j = ||u_j||_inf."""
    out = []
    for u, lam in zip(functions, eigenvalues):
        top = float(np.abs(u.values).max())
        excess = np.abs(u.values) - lam * top * field_w.w
        out.append(max(0.0, float(excess.max()) / top))
    return tuple(out)


def domination_check(domain: RasterDomain, k: int,
                     tol: float = DOMINATION_TOL) -> DominationReport:
    """Check the pointwise bound of eigenfunctions by the torsion function."""
    spectrum = eigenpairs(domain, k)
    field_w = torsion(domain)
    values = [e.value for e in spectrum.spectrum.entries]
    report = DominationReport(tuple(values),
                              domination_violations(spectrum.eigenfunctions, values, field_w), tol)
    logging.info(f"Domination check k={k}: max violation {report.max_violation:.3e}")
    return report


@dataclass(frozen=True)
class MaximumPrincipleReport:
    """Worst relative negativity min(psi) / ||psi||_inf over random f >= 0."""

    trials: int
    worst_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {'trials': self.trials, 'worst_violation': self.worst_violation,
                'passed': self.passed}


def maximum_principle_check(domain: RasterDomain, trials: int = 50,
                            seed: int = 42) -> MaximumPrincipleReport:
    """
    Solve L psi = f for random bounded f >= 0 and record any negativity.

    Half of the trials use sparse right-hand sides (most cells zero).
    """
    if trials < 1:
        raise DomainError(f"need at least one trial, got {trials}")
    rng = np.random.default_rng(seed)
    solver = DriftPoissonSolver(domain)
    worst = 0.0
    for trial in range(trials):
        f = rng.uniform(0.0, 1.0, domain.active_count)
        if trial % 2:
            f *= rng.uniform(size=f.size) < 0.05
        psi = solver.solve(f)
        top = float(np.abs(psi).max())
        if top > 0:
            worst = max(worst, max(0.0, -float(psi.min())) / top)
    logging.info(f"Maximum principle: {trials} trials, worst violation {worst:.3e}")
    return MaximumPrincipleReport(trials, worst, MAX_PRINCIPLE_TOL)


def laplacian_first_eigenvalue(domain: RasterDomain) -> float:
    """First Dirichlet eigenvalue of the plain five-point Laplacian."""
    theta, _, _ = _smallest_eigenpairs(assemble_laplacian(domain), 1, DEFAULT_TOLERANCE)
    return float(theta[0])


@dataclass(frozen=True)
class EigenvalueBounds:
    """
    Bounds around lambda_j(Omega) for a raster domain.

    bessel_lower uses the Lebesgue-equivalent radius R = sqrt(|Omega|/pi);
    laplacian_lower is N/2 + lambda_1 of -Delta; upper is that plus R_Omega^2/4
    for the smallest centered disk of radius R_Omega containing Omega.
    """

    eigenvalues: Tuple[float, ...]
    bessel_lower: float
    laplacian_lower: float
    upper: float
    slack: float

    def holds(self) -> bool:
        first = self.eigenvalues[0]
        return (all(lam >= self.bessel_lower * (1 - self.slack) for lam in self.eigenvalues)
                and all(lam >= self.laplacian_lower * (1 - 1e-10) for lam in self.eigenvalues)
                and first <= self.upper * (1 + 1e-10))

    def to_dict(self) -> Dict[str, Any]:
        return {'eigenvalues': list(self.eigenvalues), 'bessel_lower': self.bessel_lower,
                'laplacian_lower': self.laplacian_lower, 'upper': self.upper,
                'holds': self.holds()}


def eigenvalue_bounds(domain: RasterDomain, k: int = 1,
                      spectrum: Optional[DomainSpectrum] = None) -> EigenvalueBounds:
    """Compare lambda_1..lambda_k with the Bessel and Laplacian bounds."""
    spectrum = spectrum or eigenpairs(domain, k)
    values = tuple(spectrum.eigenvalues[:k])
    radius = np.sqrt(domain.lebesgue_area() / np.pi)
    j0 = bessel_first_zero(0.5 * DIMENSION - 1.0)
    mu = laplacian_first_eigenvalue(domain)
    outer = domain.bounding_radius()
    return EigenvalueBounds(values, SHIFT + j0 * j0 / (radius * radius), SHIFT + mu,
                            SHIFT + mu + 0.25 * outer * outer, FABER_KRAHN_SLACK * domain.h)


def faber_krahn_check(domain: RasterDomain,
                      spectrum: Optional[DomainSpectrum] = None) -> InequalityCheck:
    """
    lambda_1 of the centered disk of equal m_2-measure against lambda_1(Omega).

    Returns:
        InequalityCheck: lower = lambda_1(Omega_star), upper = lambda_1(Omega), slack 5h
    """
    spectrum = spectrum or eigenpairs(domain, 1)
    radius = radius_of_volume(DIMENSION, domain.weighted_measure())
    star = lambda1_ball(DIMENSION, radius)
    check = InequalityCheck(star, spectrum.eigenvalues[0], FABER_KRAHN_SLACK * domain.h)
    logging.info(f"Faber-Krahn: lambda1={check.upper:.8f}, ball={check.lower:.8f} (R*={radius:.6f})")
    return check


def isoperimetric_check(domain: RasterDomain) -> InequalityCheck:
    """Staircase m_2-perimeter against the profile I(m_2(Omega))."""
    return InequalityCheck(isoperimetric_profile(DIMENSION, domain.weighted_measure()),
                           domain.weighted_perimeter())
