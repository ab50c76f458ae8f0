"""
Geometry of the Measure m_N

Closed-form and quadrature-based geometry of dm_N = e^{|x|^2/2} dx: the shell
density h, the volume H of centered balls, its inverse, the isoperimetric
profile I(s) = h(H^{-1}(s)), volumes of off-center disks, and the first
positive zero of J_nu used by the Euclidean Faber-Krahn bound.

All functions are pure and safe to call from several threads.

Version: 1.0.0
"""

import math
import logging
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize, special

from errors import ConvergenceError, DomainError

# Quadrature settings
VOLUME_RTOL = 1e-12
INVERSE_RTOL = 1e-10
OFFCENTER_RTOL = 1e-10
OFFCENTER_START_NODES = 64
OFFCENTER_MAX_NODES = 1024

# Composite Gauss-Legendre layout for vectorized H
_PANELS = 32
_PANEL_NODES, _PANEL_WEIGHTS = leggauss(10)

ArrayLike = Union[float, Sequence[float], np.ndarray]


def check_dimension(dim: int) -> int:
    """
    Validate a space dimension.

    Args:
        dim: Dimension N of the ambient space

    Returns:
        int: The dimension, unchanged

    Raises:
        DomainError: If N is not an integer >= 2
    """
    if int(dim) != dim or dim < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {dim}")
    return int(dim)


def unit_ball_volume(dim: int) -> float:
    """Lebesgue volume omega_N of the unit ball in R^N."""
    dim = check_dimension(dim)
    return math.pi ** (dim / 2.0) / special.gamma(dim / 2.0 + 1.0)


def shell_density(dim: int, r: float) -> float:
    """
    Shell density h(r) = N omega_N e^{r^2/2} r^{N-1}.

    This is the m_N-perimeter of the centered ball of radius r.

    Raises:
        DomainError: If r < 0
    """
    dim = check_dimension(dim)
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    return dim * unit_ball_volume(dim) * math.exp(0.5 * r * r) * r ** (dim - 1)


def shell_density_array(dim: int, r: ArrayLike) -> np.ndarray:
    """Vectorized shell_density for an array of nonnegative radii."""
    dim = check_dimension(dim)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    return dim * unit_ball_volume(dim) * np.exp(0.5 * r * r) * r ** (dim - 1)


def ball_volume(dim: int, r: float) -> float:
    """
    Weighted volume H(r) = m_N(B_r) of the centered ball.

    Uses the closed form 2 pi (e^{r^2/2} - 1) for N = 2 and adaptive
    Gauss-Kronrod quadrature of h otherwise.

    Args:
        dim: Dimension N
        r: Ball radius

    Returns:
        float: H(r)

    Raises:
        DomainError: If r < 0
    """
    dim = check_dimension(dim)
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    if r == 0:
        return 0.0
    if dim == 2:
        return 2.0 * math.pi * math.expm1(0.5 * r * r)

    value, error = integrate.quad(
        lambda t: shell_density(dim, t), 0.0, r,
        epsabs=0.0, epsrel=VOLUME_RTOL, limit=200
    )
    logging.debug(f"H_{dim}({r}) = {value!r} (quad error {error:.2e})")
    return value


def ball_volume_array(dim: int, r: ArrayLike) -> np.ndarray:
    """
    Vectorized H for an array of radii.

    N = 2 uses the closed form; other dimensions use a fixed composite
    Gauss-Legendre rule on [0, r] (32 panels of 10 nodes), which resolves the
    e^{r^2/2} growth to near machine precision for r up to the R_MAX used by
    the radial solver.
    """
    dim = check_dimension(dim)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radii must be nonnegative")
    if dim == 2:
        return 2.0 * math.pi * np.expm1(0.5 * r * r)

    # Nodes of every panel mapped to [0, 1]
    edges = np.linspace(0.0, 1.0, _PANELS + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    unit_nodes = (mid[:, None] + half[:, None] * _PANEL_NODES[None, :]).ravel()
    unit_weights = (half[:, None] * _PANEL_WEIGHTS[None, :]).ravel()

    flat = r.ravel()
    out = np.empty_like(flat)
    # Chunked to keep the node matrix small
    for start in range(0, flat.size, 4096):
        chunk = flat[start:start + 4096]
        t = chunk[:, None] * unit_nodes[None, :]
        values = np.exp(0.5 * t * t) * t ** (dim - 1)
        out[start:start + 4096] = chunk * (values @ unit_weights)
    return dim * unit_ball_volume(dim) * out.reshape(r.shape)


def radius_of_volume(dim: int, s: float) -> float:
    """
    Inverse H^{-1}(s): radius of the centered ball of m_N-measure s.

    A geometric bracket [0, hi] is grown until H(hi) >= s, the root is
    located by Brent's method and finished with a Newton step using h.

    Raises:
        DomainError: If s < 0
    """
    dim = check_dimension(dim)
    if s < 0:
        raise DomainError(f"weighted volume must be nonnegative, got {s}")
    if s == 0:
        return 0.0
    if dim == 2:
        return math.sqrt(2.0 * math.log1p(s / (2.0 * math.pi)))

    hi = 1.0
    while ball_volume(dim, hi) < s:
        hi *= 2.0
    r = optimize.brentq(lambda x: ball_volume(dim, x) - s, 0.0, hi,
                        xtol=1e-15, rtol=4 * np.finfo(float).eps)
    slope = shell_density(dim, r)
    if slope > 0:
        r -= (ball_volume(dim, r) - s) / slope
    return r


def radius_of_volume_array(dim: int, s: ArrayLike) -> np.ndarray:
    """
    Vectorized H^{-1}.

    Newton's method started to the right of every root; since H is convex the
    iterates decrease monotonically onto the root.
    """
    dim = check_dimension(dim)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("weighted volumes must be nonnegative")
    if dim == 2:
        return np.sqrt(2.0 * np.log1p(s / (2.0 * math.pi)))

    flat = s.ravel()
    # H(r) >= omega_N r^N gives an upper bound for every root
    r = (flat / unit_ball_volume(dim)) ** (1.0 / dim)
    positive = flat > 0
    for _ in range(200):
        step = np.zeros_like(r)
        rp = r[positive]
        step[positive] = (ball_volume_array(dim, rp) - flat[positive]) / shell_density_array(dim, rp)
        r = r - step
        if np.all(np.abs(step) <= 1e-13 * np.maximum(r, 1e-300)):
            break
    else:
        raise ConvergenceError("vectorized H^{-1} did not converge",
                               float(np.max(np.abs(step))))
    r[~positive] = 0.0
    return r.reshape(s.shape)


def isoperimetric_profile(dim: int, s: float) -> float:
    """
    Weighted isoperimetric profile I(s) = h(H^{-1}(s)).

    Raises:
        DomainError: If s <= 0
    """
    if s <= 0:
        raise DomainError(f"isoperimetric profile needs s > 0, got {s}")
    return shell_density(dim, radius_of_volume(dim, s))


def _polar_gauss_volume(center: Tuple[float, float], rho: float, nodes: int) -> float:
    """Tensor Gauss-Legendre rule in polar coordinates about the disk center."""
    x, w = leggauss(nodes)
    radii = 0.5 * rho * (x + 1.0)
    radial_w = 0.5 * rho * w
    theta = math.pi * (x + 1.0)
    theta_w = math.pi * w

    cx, cy = center
    px = cx + radii[:, None] * np.cos(theta)[None, :]
    py = cy + radii[:, None] * np.sin(theta)[None, :]
    integrand = np.exp(0.5 * (px * px + py * py)) * radii[:, None]
    return float(radial_w @ integrand @ theta_w)


def offcenter_ball_volume(center: Sequence[float], rho: float,
                          tol: float = OFFCENTER_RTOL) -> float:
    """
    m_2-measure of the disk B(center, rho) in the plane.

    The node count starts at 64 per direction and doubles until two
    successive rules agree to the relative tolerance.

    Args:
        center: Disk center (x, y)
        rho: Disk radius
        tol: Relative agreement required between successive refinements

    Returns:
        float: Weighted area of the disk

    Raises:
        DomainError: If rho <= 0
        ConvergenceError: If the rule does not settle by 1024 nodes
    """
    if rho <= 0:
        raise DomainError(f"disk radius must be positive, got {rho}")
    c = (float(center[0]), float(center[1]))

    nodes = OFFCENTER_START_NODES
    previous = _polar_gauss_volume(c, rho, nodes)
    while nodes < OFFCENTER_MAX_NODES:
        nodes *= 2
        current = _polar_gauss_volume(c, rho, nodes)
        if abs(current - previous) <= tol * abs(current):
            return current
        previous = current
    raise ConvergenceError(
        f"off-center volume at {c}, rho={rho} did not settle",
        abs(current - previous) / abs(current)
    )


def bessel_first_zero(order: float) -> float:
    """
    First positive zero j_{nu,1} of the Bessel function J_nu.

    J_nu is positive on (0, j_{nu,1}); a coarse scan finds the first sign
    change and Brent's method refines it.

    Raises:
        DomainError: If order < 0
    """
    if order < 0:
        raise DomainError(f"Bessel order must be nonnegative, got {order}")
    a = max(order, 0.1)
    fa = special.jv(order, a)
    while True:
        b = a + 0.25
        fb = special.jv(order, b)
        if fa > 0 >= fb:
            return optimize.brentq(lambda x: special.jv(order, x), a, b, xtol=1e-15)
        a, fa = b, fb
