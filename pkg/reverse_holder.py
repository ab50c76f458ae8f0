"""
Reverse Hoelder Inequalities for Eigenfunctions

Chiti-type comparison for eigenfunctions of the drift Laplacian: the ball B_r~
whose first eigenvalue equals a given lambda, the rearranged first
eigenfunction z~* of that ball, the constant

    C(N, r, q, lambda) = ||z~*||_{L^q(0, L~)} / ||z~*||_{L^r(0, L~)},

the one-dimensional problem -phi'' = sigma I^{-2}(s) phi, phi(0) = phi'(L) = 0
used as an independent check, and the concentration inequality between
u* and z~*.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal

from errors import ConsistencyError, DomainError, UsageError
from measure_geom import (ball_volume_array, check_dimension, radius_of_volume_array,
                          unit_ball_volume)
from radial_solver import (DEFAULT_CELLS, RadialOperatorSpec, RadialProfile,
                           assemble, find_radius_for_lambda, lowest_eigenpairs)
from rearrange import GridFunction, InequalityCheck, MonotoneProfile

SL_CELLS = 1024
EQUIMEASURABILITY_RTOL = 1e-9
LAMBDA_MATCH_RTOL = 1e-3
NORMALIZATION_RTOL = 1e-8
SLACK_CONSTANT = 5.0

_GL_NODES, _GL_WEIGHTS = leggauss(8)


@dataclass(frozen=True, eq=False)
class ChitiData:
    """
    Matched ball and its rearranged first eigenfunction.

    Attributes:
        dim: Dimension N
        lam: Target eigenvalue
        r_tilde: Radius with lambda_1(B_r~) = lam
        L_tilde: m_N(B_r~)
        z_star: Decreasing rearrangement of the first eigenfunction of B_r~
        profile: The eigenfunction itself as a function of the radius
    """

    dim: int
    lam: float
    r_tilde: float
    L_tilde: float
    z_star: MonotoneProfile = field(repr=False)
    profile: RadialProfile = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {'dim': self.dim, 'lambda': self.lam, 'r_tilde': self.r_tilde,
                'L_tilde': self.L_tilde, 'z_star_0': float(self.z_star.values[0])}


def build_chiti(dim: int, lam: float, cells: int = DEFAULT_CELLS) -> ChitiData:
    """
    Match a ball to lam and rearrange its first eigenfunction.

    z~* is the step function taking the nodal value z_i on the measure
    interval of node i's control volume, so its integrals agree with the
    radial solver's mass-weighted sums.

    Raises:
        InfeasibleTargetError: If lam is not above the measured infimum
        ConsistencyError: If the eigenfunction is not positive and nonincreasing
    """
    check_dimension(dim)
    radius = find_radius_for_lambda(dim, lam)
    spec = RadialOperatorSpec(dim, 0, radius, cells)
    _, (profile,) = lowest_eigenpairs(spec, 1)
    z = profile.values

    interior = z[:-1]
    drops = np.diff(z)
    if np.any(interior <= 0) or np.any(drops > 1e-12 * interior.max()):
        logging.error(f"First eigenfunction of B_{radius:.6f} is not positive and nonincreasing")
        raise ConsistencyError("first ball eigenfunction is not positive and nonincreasing")

    nodes = profile.nodes
    faces = 0.5 * (nodes[1:] + nodes[:-1])
    breakpoints = ball_volume_array(dim, np.concatenate(([0.0], faces, [radius])))
    values = np.minimum.accumulate(np.maximum(z, 0.0))
    values[-1] = 0.0
    total = float(breakpoints[-1])
    z_star = MonotoneProfile(breakpoints, values, total)

    pencil = assemble(spec)
    radial = dim * unit_ball_volume(dim) * float(pencil.full_mass @ (z[:-1] ** 2))
    if abs(z_star.integral(2) - radial) > EQUIMEASURABILITY_RTOL * radial:
        raise ConsistencyError("rearranged eigenfunction lost its L^2 norm")

    logging.info(f"Chiti data N={dim} lambda={lam}: r~={radius:.10f}, L~={total:.10f}")
    return ChitiData(dim, float(lam), radius, total, z_star, profile)


def chiti_constant(data: ChitiData, r: float, q: float) -> float:
    """
    C(N, r, q, lambda); q = inf uses z~*(0).

    Raises:
        UsageError: Unless 0 < r < q
    """
    if not (0 < r < q):
        raise UsageError(f"need 0 < r < q, got r={r}, q={q}")
    return data.z_star.norm(q) / data.z_star.norm(r)


def _inverse_profile_weights(dim: int, rho: np.ndarray) -> np.ndarray:
    """Integrals of 1/h over [rho_k, rho_{k+1}], by Gauss-Legendre in log rho."""
    lo, hi = np.log(rho[:-1]), np.log(rho[1:])
    half = 0.5 * (hi - lo)
    t = np.exp(0.5 * (hi + lo)[:, None] + half[:, None] * _GL_NODES[None, :])
    # d rho / h(rho) = rho^{2-N} e^{-rho^2/2} / (N omega_N) d(log rho)
    integrand = t ** (2 - dim) * np.exp(-0.5 * t * t)
    return half * (integrand @ _GL_WEIGHTS) / (dim * unit_ball_volume(dim))


def _sl_first(dim: int, length: float, cells: int) -> float:
    s = length * (np.arange(cells + 1) / cells) ** 2
    faces = np.concatenate((0.5 * (s[1:] + s[:-1]), [length]))
    rho = radius_of_volume_array(dim, faces)
    # Node i >= 1 owns [faces[i-1], faces[i]]
    weights = _inverse_profile_weights(dim, rho)

    flux = 1.0 / np.diff(s)
    diag = flux.copy()
    diag[:-1] += flux[1:]
    off = -flux[1:]
    root = np.sqrt(weights)
    theta = eigh_tridiagonal(diag / weights, off / (root[:-1] * root[1:]),
                             eigvals_only=True, select='i', select_range=(0, 0),
                             lapack_driver='stebz')
    return float(theta[0])


def sl_sigma1(dim: int, length: float, cells: int = SL_CELLS) -> float:
    """
    First eigenvalue of -phi'' = sigma I^{-2}(s) phi on (0, L), phi(0) = phi'(L) = 0.

    Nodes s_i = L (i/n)^2 with phi_0 = 0 and a natural condition at L. The
    lumped weights are the integrals of I^{-2} over the control volumes,
    computed as integrals of 1/h in the radius after s = H(rho).
    Richardson extrapolation over n and 2n cells.

    Raises:
        DomainError: If L <= 0
    """
    check_dimension(dim)
    if not length > 0:
        raise DomainError(f"interval length must be positive, got {length}")
    coarse = _sl_first(dim, length, cells)
    fine = _sl_first(dim, length, 2 * cells)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class ConcentrationReport:
    """
    Worst margin of the partial-integral comparison on (0, L~).

    Margins are (Z_q(s) - U_q(s)) / Z_q(L~); the comparison holds when the
    worst margin is at least -slack.
    """

    q: float
    worst_margin: float
    worst_at: float
    slack: float
    scale: float

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.slack

    def to_dict(self) -> Dict[str, Any]:
        return {'q': self.q, 'worst_margin': self.worst_margin, 'worst_at': self.worst_at,
                'slack': self.slack, 'scale': self.scale, 'passed': self.passed}


def concentration_comparison(u_star: MonotoneProfile, data: ChitiData, q: float,
                             slack: float = 0.0, domain_lambda: Optional[float] = None,
                             normalize: bool = True) -> ConcentrationReport:
    """
    Check integral_0^s (u*)^q <= integral_0^s (z~*)^q for s in (0, L~).

    Args:
        u_star: Rearranged eigenfunction of a domain
        data: Matched ball data
        q: Exponent, q > 0
        slack: Allowed relative violation, typically 5h
        domain_lambda: Eigenvalue of the domain, checked against data.lam
        normalize: Rescale u* so both total q-integrals coincide

    Raises:
        UsageError: If the eigenvalues do not match or the normalization fails
    """
    if not q > 0:
        raise DomainError(f"exponent must be positive, got {q}")
    if domain_lambda is not None and abs(domain_lambda - data.lam) > LAMBDA_MATCH_RTOL * data.lam:
        raise UsageError(f"domain eigenvalue {domain_lambda} does not match {data.lam}")

    target = data.z_star.integral(q)
    current = u_star.integral(q)
    scale = 1.0
    if normalize:
        scale = (target / current) ** (1.0 / q)
        u_star = u_star.scaled(scale)
    elif abs(current - target) > NORMALIZATION_RTOL * target:
        raise UsageError("profiles do not share the same total q-integral")

    s = np.union1d(u_star.breakpoints, data.z_star.breakpoints)
    s = s[(s > 0) & (s < data.L_tilde)]
    margins = (data.z_star.partial_integral(s, q) - u_star.partial_integral(s, q)) / target
    worst = int(np.argmin(margins)) if margins.size else 0
    report = ConcentrationReport(q, float(margins[worst]) if margins.size else 0.0,
                                 float(s[worst]) if margins.size else 0.0, slack, scale)
    logging.debug(f"Concentration q={q}: worst margin {report.worst_margin:.3e} at s={report.worst_at:.6f}")
    return report


def reverse_holder_check(u: GridFunction, data: ChitiData, r: float, q: float,
                         slack_constant: float = SLACK_CONSTANT) -> InequalityCheck:
    """
    ||u||_q / ||u||_r on the domain against C(N, r, q, lambda).

    Returns:
        InequalityCheck: lower = measured ratio, upper = C, slack = C h (relative)
    """
    constant = chiti_constant(data, r, q)
    measured = u.lp_norm(q) / u.lp_norm(r)
    return InequalityCheck(measured, constant, slack_constant * u.domain.h)


def sigma_from_lambda(dim: int, lam: float) -> float:
    """sigma_1(0, L~) for the ball matched to lam, which should reproduce lam."""
    data = build_chiti(dim, lam)
    return sl_sigma1(dim, data.L_tilde)

