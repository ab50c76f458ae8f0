"""
Hardy Weight and Hardy Inequality for m_N

The weight

    rho_N(r) = r^{1-N} e^{-r^2/2} / T_N(r),   T_N(r) = integral_r^inf t^{1-N} e^{-t^2/2} dt,

its Riccati equation rho' + (N-1) rho / r + r rho = rho^2, its unique minimum
point T, the truncated weight rho_{N,T}, the radial Hardy quotient and the
sequence psi_k showing that 1/4 is the best constant.

Tail integrals are always handled in the scaled form

    S_N(r) = integral_r^inf (t/r)^{1-N} e^{-(t^2-r^2)/2} dt = 1 / rho_N(r)

so nothing overflows or underflows for r between 1e-200 and 20.

Version: 1.0.0
"""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from errors import ConsistencyError, DegenerateInputError, DomainError, UsageError
from measure_geom import check_dimension
from radial_solver import RadialProfile

# Tail quadrature
TAIL_WINDOW = 12.0
TAIL_RTOL = 1e-12
_TAIL_PANELS = np.concatenate(([0.0], np.geomspace(1e-6, 1e-2, 40),
                               np.linspace(1e-2, 1.0, 241)[1:]))
_GL_NODES, _GL_WEIGHTS = leggauss(8)
_CHUNK = 1024

# Minimum search
SEARCH_LOW = 1e-3
SEARCH_HIGH = 10.0
SEARCH_SAMPLES = 1000
SEARCH_XTOL = 1e-8

# Sharpness sequence
TRUNCATION_RADIUS = 10.0
SHARPNESS_POINTS = 100_000
INNER_POINTS = 20_000
INNER_FLOOR = 1e-200

DIFFERENCE_STEP = 1e-5
DIFFERENCE_RELATIVE_STEP = 1e-3
RICCATI_RANGE = (1e-3, 10.0)


def _check_radius(r: float) -> None:
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")


def _scaled_tail_integrand(dim: int, r: float, s: float) -> float:
    """Integrand of S_N(r) after t = r e^s."""
    if r > 1e-100:
        spread = r * r * math.expm1(2.0 * s)
    else:
        spread = math.exp(2.0 * (math.log(r) + s))
    return r * math.exp((2 - dim) * s - 0.5 * spread)


def scaled_tail(dim: int, r: float) -> float:
    """
    S_N(r) by adaptive quadrature over t in [r, r + TAIL_WINDOW].

    The window leaves out less than e^{-72} relative to the value.
    """
    check_dimension(dim)
    _check_radius(r)
    upper = math.log1p(TAIL_WINDOW / r)
    # Mass sits in s < 1/r^2 for large r
    knot = min(0.5 * upper, 1.0 / (r * r))
    value = 0.0
    for a, b in ((0.0, knot), (knot, upper)):
        part, _ = integrate.quad(lambda s: _scaled_tail_integrand(dim, r, s), a, b,
                                 epsabs=0.0, epsrel=TAIL_RTOL, limit=400)
        value += part
    return value


def rho(dim: int, r: float) -> float:
    """
    Hardy weight rho_N(r).

    Raises:
        DomainError: If r <= 0
    """
    return 1.0 / scaled_tail(dim, r)


def log_tail(dim: int, r: float) -> float:
    """log T_N(r)."""
    return (1 - dim) * math.log(r) - 0.5 * r * r + math.log(scaled_tail(dim, r))


def tail_integral_grid(dim: int, r: np.ndarray) -> np.ndarray:
    """
    Vectorized S_N on an array of positive radii.

    Composite Gauss-Legendre in s = log(t/r): geometric panels near s = 0
    for the e^{-r s} boundary layer at large r, uniform panels beyond for
    the cutoff near t = 1 at small r.
    """
    check_dimension(dim)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radii must be positive")

    flat = r.ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, _CHUNK):
        rc = flat[start:start + _CHUNK]
        upper = np.log1p(TAIL_WINDOW / rc)
        edges = upper[:, None] * _TAIL_PANELS[None, :]
        half = 0.5 * np.diff(edges, axis=1)
        centre = 0.5 * (edges[:, 1:] + edges[:, :-1])
        s = centre[:, :, None] + half[:, :, None] * _GL_NODES[None, None, :]
        # t^2 - r^2, without r^2 underflowing for tiny r
        with np.errstate(over='ignore', invalid='ignore'):
            spread = np.where((rc > 1e-100)[:, None, None],
                              (rc * rc)[:, None, None] * np.expm1(2.0 * s),
                              np.exp(2.0 * (np.log(rc)[:, None, None] + s)))
        exponent = (2 - dim) * s - 0.5 * spread
        panel = np.exp(exponent) @ _GL_WEIGHTS
        out[start:start + _CHUNK] = rc * np.sum(half * panel, axis=1)
    return out.reshape(r.shape)


def rho_grid(dim: int, r: np.ndarray) -> np.ndarray:
    """Vectorized rho_N."""
    return 1.0 / tail_integral_grid(dim, r)


def log_tail_grid(dim: int, r: np.ndarray) -> np.ndarray:
    """Vectorized log T_N."""
    r = np.asarray(r, dtype=float)
    return (1 - dim) * np.log(r) - 0.5 * r * r + np.log(tail_integral_grid(dim, r))


def ode_residual(dim: int, r: float) -> float:
    """
    |rho' + (N-1) rho / r + r rho - rho^2| with rho' by central differences.

    The step is DIFFERENCE_STEP capped at DIFFERENCE_RELATIVE_STEP * r, and
    the differences at step and step/2 are Richardson-combined, so the
    truncation error stays fourth order in step / r down to r = 1e-3.

    Raises:
        DomainError: If r <= 0
    """
    _check_radius(r)
    step = min(DIFFERENCE_STEP, DIFFERENCE_RELATIVE_STEP * r)

    def central(d: float) -> float:
        return (rho(dim, r + d) - rho(dim, r - d)) / (2.0 * d)

    slope = (4.0 * central(0.5 * step) - central(step)) / 3.0
    value = rho(dim, r)
    return abs(slope + (dim - 1) * value / r + r * value - value * value)


@dataclass(frozen=True)
class HardyWeight:
    """
    rho_N together with its minimum point T and minimum value rho_N(T).

    Attributes:
        dim: Dimension N
        T: Unique minimizer of rho_N on (0, inf)
        rhoT: rho_N(T)
    """

    dim: int
    T: float
    rhoT: float

    def truncated_grid(self, r: np.ndarray) -> np.ndarray:
        """Vectorized rho_{N,T}."""
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, self.rhoT)
        inner = r < self.T
        if np.any(inner):
            out[inner] = rho_grid(self.dim, r[inner])
        return out


@lru_cache(maxsize=16)
def find_T(dim: int) -> HardyWeight:
    """
    Locate the minimum point T of rho_N.

    rho_N is sampled on a log grid over [1e-3, 10] to confirm it decreases
    and then increases; golden-section search narrows the minimum and a
    root of rho - (N-1)/r - r (where rho' = 0) polishes it.

    Raises:
        ConsistencyError: If the samples are not unimodal
    """
    check_dimension(dim)
    grid = np.geomspace(SEARCH_LOW, SEARCH_HIGH, SEARCH_SAMPLES)
    values = rho_grid(dim, grid)
    lowest = int(np.argmin(values))
    steps = np.diff(values)
    if lowest in (0, grid.size - 1) or np.any(steps[:lowest] >= 0) or np.any(steps[lowest:] <= 0):
        logging.error(f"rho_{dim} is not unimodal on [{SEARCH_LOW}, {SEARCH_HIGH}]")
        raise ConsistencyError(f"rho_{dim} sampled values are not unimodal")

    bracket = (grid[lowest - 1], grid[lowest], grid[lowest + 1])
    coarse = optimize.minimize_scalar(lambda x: rho(dim, x), bracket=bracket,
                                      method='golden', tol=SEARCH_XTOL)
    t = float(coarse.x)

    def stationarity(x: float) -> float:
        return rho(dim, x) - (dim - 1) / x - x

    lo, hi = grid[lowest - 1], grid[lowest + 1]
    if stationarity(lo) * stationarity(hi) < 0:
        t = optimize.brentq(stationarity, lo, hi, xtol=1e-14)
    weight = HardyWeight(dim, t, rho(dim, t))
    logging.info(f"Hardy weight N={dim}: T={weight.T:.10f}, rho(T)={weight.rhoT:.10f}")
    return weight


def rho_truncated(w: HardyWeight, r: float) -> float:
    """rho_{N,T}(r): rho_N below T, rho_N(T) from T on."""
    _check_radius(r)
    return rho(w.dim, r) if r < w.T else w.rhoT


def hardy_ratio(w: HardyWeight, u: RadialProfile, truncated: bool = True) -> float:
    """
    Radial Hardy quotient

        integral (u')^2 r^{N-1} e^{r^2/2} dr / integral u^2 rho^2 r^{N-1} e^{r^2/2} dr

    with rho = rho_{N,T} (or rho_N when `truncated` is False). The numerator
    is exact for the piecewise-linear profile; the denominator uses the
    midpoint rule, which stays clear of the singularity of rho at 0.

    Raises:
        UsageError: If the profile is stepwise or of another dimension
        DegenerateInputError: If the denominator vanishes
    """
    if u.dim != w.dim:
        raise UsageError(f"profile dimension {u.dim} differs from weight dimension {w.dim}")
    if u.is_stepwise:
        raise UsageError("the Hardy quotient needs a nodal profile")

    surface = u.shell_masses()
    slopes = u.slopes()
    numerator = float((slopes * slopes) @ surface)

    mid = 0.5 * (u.nodes[1:] + u.nodes[:-1])
    values = 0.5 * (u.values[1:] + u.values[:-1])
    weight = w.truncated_grid(mid) if truncated else rho_grid(w.dim, mid)
    denominator = float((values * weight) ** 2 @ surface)
    if denominator == 0.0:
        raise DegenerateInputError("Hardy quotient of a function vanishing on its grid")
    return numerator / denominator


def random_cubic_profile(dim: int, rng: np.random.Generator, radius: float = 3.0,
                         knots: int = 8, points: int = 2001) -> RadialProfile:
    """
    Random C^2 bump on [0, radius] vanishing at radius with u'(0) = 0.

    Used to exercise the Hardy inequality over many admissible inputs.
    """
    x = np.linspace(0.0, radius, knots)
    y = rng.normal(size=knots)
    y[-1] = 0.0
    spline = CubicSpline(x, y, bc_type=((1, 0.0), (1, 0.0)))
    nodes = np.linspace(0.0, radius, points)
    values = spline(nodes)
    values[-1] = 0.0
    return RadialProfile(nodes, values, dim)


def sharpness_sequence(dim: int, k: int,
                       points: int = SHARPNESS_POINTS) -> Tuple[RadialProfile, float]:
    """
    The profile psi_k and its one-dimensional Hardy quotient with rho_N.

    psi_k equals T_N(1/k)^{1/2} on (0, 1/k) and T_N(r)^{1/2} beyond, shifted
    by its value at r = 10 so it vanishes there; it is scaled by
    T_N(1/k)^{-1/2}. The quotient is evaluated from closed-form integrands:
    rho/4 over the numerator, (1 - (T(10)/T)^{1/2})^2 rho and the constant
    part over the denominator.

    Returns:
        Tuple[RadialProfile, float]: Nodal psi_k on [0, 10] and its quotient
    """
    check_dimension(dim)
    if k < 1:
        raise DomainError(f"sequence index must be >= 1, got {k}")
    a = 1.0 / k
    if not a < TRUNCATION_RADIUS:
        raise DomainError(f"1/k must lie below {TRUNCATION_RADIUS}")

    outer = np.geomspace(a, TRUNCATION_RADIUS, points)
    inner = np.geomspace(INNER_FLOOR, a, INNER_POINTS)

    log_t_outer = log_tail_grid(dim, outer)
    log_t_inner = log_tail_grid(dim, inner)
    rho_outer = rho_grid(dim, outer)
    rho_inner = rho_grid(dim, inner)
    log_tk, log_t10 = log_t_outer[0], log_t_outer[-1]

    numerator = 0.25 * (log_tk - log_t10)
    ramp = -np.expm1(0.5 * (log_t10 - log_t_outer))
    outer_part = integrate.trapezoid(ramp ** 2 * rho_outer, outer)
    # T_k rho^2 a r = exp(log T_k - log T) rho r, integrated in log r
    inner_integrand = np.exp(log_tk - log_t_inner) * rho_inner * inner
    inner_part = ramp[0] ** 2 * integrate.trapezoid(inner_integrand, np.log(inner))
    ratio = numerator / (outer_part + inner_part)

    nodes = np.concatenate(([0.0], inner, outer[1:]))
    values = np.concatenate((np.full(1 + inner.size, ramp[0]),
                             np.exp(0.5 * (log_t_outer[1:] - log_tk)) * ramp[1:]))
    values[-1] = 0.0
    logging.debug(f"psi_k N={dim} k={k}: quotient {ratio:.10f}")
    return RadialProfile(nodes, values, dim), float(ratio)


def hardy_constant_report(dim: int, ks: Optional[Tuple[int, ...]] = None) -> Dict[str, Any]:
    """T, rho(T) and the sharpness quotients for several k."""
    ks = ks or (10, 100, 1000, 10000)
    weight = find_T(dim)
    ratios = [sharpness_sequence(dim, k)[1] for k in ks]
    return {
        'dim': dim,
        'T': weight.T,
        'rho_T': weight.rhoT,
        'sharpness': [{'k': k, 'ratio': r} for k, r in zip(ks, ratios)],
    }
