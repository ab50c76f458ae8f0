"""
Rearrangements with Respect to m_N

Distribution function, decreasing rearrangement and star-symmetrization of
functions sampled on raster domains, together with numerical checks of the
Hardy-Littlewood and Polya-Szego inequalities.

Rearrangements are kept as exact step functions (sorted cell values with
cumulative cell measures), so equimeasurability and norm identities hold to
rounding error and all discretization error stays on the PDE side.

Version: 1.0.0
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from errors import DomainError, UsageError
from measure_geom import radius_of_volume_array
from radial_solver import RadialProfile
from raster_domain import RasterDomain

PLANE = 2


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Real function sampled at the active cells of a raster domain.

    Attributes:
        domain: The raster domain
        values: One value per active cell, row-major order
    """

    domain: RasterDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.domain.active_count,):
            raise UsageError(
                f"expected {self.domain.active_count} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("grid function values must be finite")
        object.__setattr__(self, 'values', values)

    def scaled(self, factor: float) -> 'GridFunction':
        return GridFunction(self.domain, factor * self.values)

    def lp_norm(self, p: float) -> float:
        """L^p(Omega; m_2) norm; p = inf gives the max of |u|."""
        a = np.abs(self.values)
        if np.isinf(p):
            return float(a.max())
        return float((a ** p @ self.domain.cell_measures()) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class MonotoneProfile:
    """
    Nonincreasing step function of the measure variable s in [0, m].

    The value on [breakpoints[i], breakpoints[i+1]) is values[i]; beyond the
    last breakpoint the profile is zero.

    Attributes:
        breakpoints: Strictly increasing, starting at 0
        values: Nonincreasing and nonnegative, one per interval
        total_measure: m, the measure of the underlying set
    """

    breakpoints: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    total_measure: float

    def __post_init__(self) -> None:
        s = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or v.shape != (s.size - 1,):
            raise UsageError("a profile needs one value per breakpoint interval")
        if s[0] != 0.0 or np.any(np.diff(s) <= 0):
            raise UsageError("breakpoints must start at 0 and increase strictly")
        if np.any(np.diff(v) > 0) or np.any(v < 0):
            raise UsageError("profile values must be nonnegative and nonincreasing")
        if s[-1] > self.total_measure * (1 + 1e-12):
            raise UsageError("last breakpoint exceeds the total measure")
        object.__setattr__(self, 'breakpoints', s)
        object.__setattr__(self, 'values', v)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, s: float) -> float:
        """Right-continuous evaluation phi*(s)."""
        if s < 0:
            raise DomainError(f"measure variable must be nonnegative, got {s}")
        i = int(np.searchsorted(self.breakpoints, s, side='right')) - 1
        return float(self.values[i]) if i < self.values.size else 0.0

    def distribution(self, t: float) -> float:
        """Measure of {phi* > t}."""
        return float(self.widths[self.values > t].sum())

    def integral(self, p: float) -> float:
        """Integral of (phi*)^p over (0, m)."""
        return float(self.values ** p @ self.widths)

    def norm(self, p: float) -> float:
        """L^p(0, m) norm; p = inf gives phi*(0)."""
        if np.isinf(p):
            return float(self.values[0])
        return self.integral(p) ** (1.0 / p)

    def partial_integrals(self, q: float) -> np.ndarray:
        """Integral of (phi*)^q over (0, s) at every breakpoint s."""
        return np.concatenate(([0.0], np.cumsum(self.values ** q * self.widths)))

    def partial_integral(self, s: np.ndarray, q: float) -> np.ndarray:
        """Integral of (phi*)^q over (0, s), piecewise linear in s."""
        return np.interp(s, self.breakpoints, self.partial_integrals(q))

    def scaled(self, factor: float) -> 'MonotoneProfile':
        if factor <= 0:
            raise DomainError(f"profile scale factor must be positive, got {factor}")
        return MonotoneProfile(self.breakpoints, factor * self.values, self.total_measure)


@dataclass(frozen=True)
class InequalityCheck:
    """
    Both sides of an inequality lower <= upper.

    Attributes:
        lower: Side that the inequality bounds from above
        upper: Side that bounds it
        slack: Relative allowance for discretization error, 0 when exact
    """

    lower: float
    upper: float
    slack: float = 0.0

    @property
    def relative_gap(self) -> float:
        """(upper - lower) / |upper|; negative when the inequality is violated."""
        return (self.upper - self.lower) / abs(self.upper) if self.upper else 0.0

    def holds(self) -> bool:
        return self.lower <= self.upper + self.slack * abs(self.upper)

    def to_dict(self) -> Dict[str, Any]:
        return {'lower': self.lower, 'upper': self.upper, 'slack': self.slack,
                'relative_gap': self.relative_gap, 'holds': self.holds()}


def distribution_function(u: GridFunction, t: float) -> float:
    """
    mu(t) = m_2({x : |u(x)| > t}).

    Raises:
        DomainError: If t < 0
    """
    if t < 0:
        raise DomainError(f"level must be nonnegative, got {t}")
    cm = u.domain.cell_measures()
    return float(cm[np.abs(u.values) > t].sum())


def decreasing_rearrangement(u: GridFunction) -> MonotoneProfile:
    """
    Decreasing rearrangement u* of |u| with respect to m_2.

    Cells are sorted by |u| in decreasing order; the breakpoints are the
    cumulative cell measures.
    """
    a = np.abs(u.values)
    order = np.argsort(-a, kind='stable')
    widths = u.domain.cell_measures()[order]
    breakpoints = np.concatenate(([0.0], np.cumsum(widths)))
    return MonotoneProfile(breakpoints, a[order], float(breakpoints[-1]))


def symmetrize(u: GridFunction) -> RadialProfile:
    """
    Star-symmetrization u_star(x) = u*(H(|x|)) on the centered disk of equal measure.

    The result is constant on the shells H^{-1}(s_i) <= r < H^{-1}(s_{i+1}),
    so every L^p(m_2) norm is preserved up to rounding.
    """
    profile = decreasing_rearrangement(u)
    nodes = radius_of_volume_array(PLANE, profile.breakpoints)
    return RadialProfile(nodes, profile.values.copy(), PLANE)


def symmetrize_nodal(u: GridFunction, samples: Optional[int] = None) -> RadialProfile:
    """
    Piecewise-linear star-symmetrization for energy evaluation.

    u* is sampled at equally spaced measures s_k = k m / M, k < M, and set
    to zero at s = m (the boundary of the symmetrized disk).

    Args:
        u: Grid function, vanishing outside its domain
        samples: Number M of measure samples; defaults to sqrt(cell count)
    """
    profile = decreasing_rearrangement(u)
    m = profile.total_measure
    if samples is None:
        samples = max(16, int(np.sqrt(u.domain.active_count)))
    s = np.linspace(0.0, m, samples + 1)
    values = np.array([profile(sk) for sk in s[:-1]] + [0.0])
    values[0] = profile.values[0]
    nodes = radius_of_volume_array(PLANE, s)
    return RadialProfile(nodes, values, PLANE)


def hardy_littlewood_check(u: GridFunction, v: GridFunction) -> InequalityCheck:
    """
    Hardy-Littlewood: sum |u v| dm_2 <= integral of u* v* over (0, m).

    Exact on the grid, so the check carries no slack.

    The right side is evaluated exactly on the merged breakpoints.

    Raises:
        UsageError: If u and v live on different domains
    """
    if not _same_domain(u.domain, v.domain):
        raise UsageError("Hardy-Littlewood check needs both functions on one domain")

    lhs = float(np.abs(u.values * v.values) @ u.domain.cell_measures())
    pu = decreasing_rearrangement(u)
    pv = decreasing_rearrangement(v)
    merged = np.union1d(pu.breakpoints, pv.breakpoints)
    mid = 0.5 * (merged[1:] + merged[:-1])
    iu = np.searchsorted(pu.breakpoints, mid, side='right') - 1
    iv = np.searchsorted(pv.breakpoints, mid, side='right') - 1
    fu = np.where(iu < pu.values.size, pu.values[np.minimum(iu, pu.values.size - 1)], 0.0)
    fv = np.where(iv < pv.values.size, pv.values[np.minimum(iv, pv.values.size - 1)], 0.0)
    rhs = float((fu * fv) @ np.diff(merged))
    logging.debug(f"Hardy-Littlewood: lhs={lhs!r} rhs={rhs!r}")
    return InequalityCheck(lhs, rhs)


def weighted_dirichlet_energy(u: GridFunction) -> float:
    """
    Discrete integral of |grad u|^2 dm_2 with u = 0 outside the mask.

    Each face contributes e^{|x_f|^2/2} times the squared jump across it,
    the same five-point stencil used by the u-form eigen solver.
    """
    faces = u.domain.faces()
    jumps = u.values[faces.first] - u.values[faces.second]
    inner = np.exp(0.5 * faces.interior_sq_radius) @ (jumps * jumps)
    edge = u.values[faces.boundary_cells]
    outer = np.exp(0.5 * faces.boundary_sq_radius) @ (edge * edge)
    return float(inner + outer)


def polya_szego_check(u: GridFunction, h: Optional[float] = None,
                      slack_constant: float = 5.0) -> InequalityCheck:
    """
    Polya-Szego: energy of the symmetrization <= energy of u.

    The inequality is continuum-level; on a grid it holds up to an O(h)
    allowance reported as `slack = slack_constant * h`.

    Args:
        u: Nonnegative grid function vanishing on the mask boundary layer
        h: Mesh size for the allowance, defaults to the domain's cell side
        slack_constant: C in the relative allowance C h

    Returns:
        InequalityCheck: lower = energy of u_star, upper = grid energy of u,
            slack = C h

    Raises:
        UsageError: If u takes negative values
    """
    if np.any(u.values < 0):
        raise UsageError("Polya-Szego check needs a nonnegative function")
    h = u.domain.h if h is None else h

    lhs = weighted_dirichlet_energy(u)
    star = symmetrize_nodal(u)
    rhs = star.dirichlet_energy()
    check = InequalityCheck(rhs, lhs, slack_constant * h)
    logging.debug(f"Polya-Szego: grid energy {lhs!r}, symmetrized {rhs!r}")
    return check


def _same_domain(a: RasterDomain, b: RasterDomain) -> bool:
    if a is b:
        return True
    return (a.x0 == b.x0 and a.y0 == b.y0 and a.h == b.h
            and a.mask.shape == b.mask.shape and bool(np.all(a.mask == b.mask)))
