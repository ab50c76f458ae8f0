"""
Shape Search over Ball Families

Desk-scale search for domains minimizing lambda_k under the constraint
m_2(Omega) = c, over unions of up to three disks centered on the x-axis
and centered annuli. Components are solved independently and their spectra
merged; a centered disk goes through the radial solver, every other
component is rasterized on a grid aligned with its center.

Version: 1.0.0
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from errors import ConvergenceError, DomainError, UsageError
from field_solver_2d import eigenpairs, rasterize_balls
from measure_geom import ball_volume, offcenter_ball_volume, radius_of_volume
from radial_solver import ball_spectrum, lambda1_ball
from raster_domain import BallFamilyConfig, aligned_disk_domain, annulus_domain

# Search settings
MAX_BALLS = 3
MAX_EVALUATIONS = 500
PENALTY_SCALE = 1e3
PROJECTION_RTOL = 1e-8
CENTER_TOLERANCE = 1e-12
SIMPLEX_STEP = 0.1
SEARCH_WORKERS = 4
IDENTITY_TOL = 1e-6

# Simplex coefficients: reflection, expansion, contraction, shrink
ALPHA, GAMMA, BETA, DELTA = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True)
class ObjectiveSpec:
    """
    Target eigenvalue index, measure budget and raster cell side.

    Attributes:
        k: Eigenvalue index, k >= 1
        c: Weighted measure budget, c > 0
        h: Cell side for rasterized components
    """

    k: int
    c: float
    h: float

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"eigenvalue index must be an integer >= 1, got {self.k}")
        if not self.c > 0:
            raise DomainError(f"measure budget must be positive, got {self.c}")
        if not self.h > 0:
            raise DomainError(f"cell side must be positive, got {self.h}")

    @property
    def min_radius(self) -> float:
        """Balls smaller than two cells are dropped."""
        return 2.0 * self.h

    def to_dict(self) -> Dict[str, Any]:
        return {'k': self.k, 'c': self.c, 'h': self.h}


def _ball_measure(center: float, radius: float) -> float:
    if abs(center) <= CENTER_TOLERANCE:
        return ball_volume(2, radius)
    return offcenter_ball_volume((center, 0.0), radius)


def family_measure(config: BallFamilyConfig) -> float:
    """Sum of the m_2-measures of the balls (the union's measure when disjoint)."""
    return sum(_ball_measure(x, r) for x, r in zip(config.centers, config.radii))


def project_to_constraint(config: BallFamilyConfig, c: float) -> BallFamilyConfig:
    """
    Scale every radius by one factor t so the ball measures add up to c.

    The disjointness of the result is not enforced; callers check
    `is_disjoint()` and penalize.

    Raises:
        DomainError: If c <= 0
        ConvergenceError: If the factor misses the measure tolerance
    """
    if not c > 0:
        raise DomainError(f"measure budget must be positive, got {c}")
    if config.count == 1 and abs(config.centers[0]) <= CENTER_TOLERANCE:
        return BallFamilyConfig(config.centers, (radius_of_volume(2, c),))

    def excess(t: float) -> float:
        return family_measure(config.scaled(t)) - c

    lo, hi = 1.0, 1.0
    while excess(hi) < 0:
        hi *= 2.0
    while excess(lo) > 0:
        lo *= 0.5
    t = optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-13)
    projected = config.scaled(t)
    miss = abs(family_measure(projected) - c)
    if miss > PROJECTION_RTOL * c:
        raise ConvergenceError("radius scaling missed the measure budget", miss / c)
    return projected


@lru_cache(maxsize=1024)
def _component_eigenvalues(center: float, radius: float, h: float, k: int) -> Tuple[float, ...]:
    """Lowest k eigenvalues (with multiplicity) of one disk."""
    if abs(center) <= CENTER_TOLERANCE:
        return tuple(ball_spectrum(2, radius, k).eigenvalues[:k])
    domain = aligned_disk_domain((center, 0.0), radius, h)
    k = min(k, domain.active_count)
    return tuple(eigenpairs(domain, k).eigenvalues)


def union_eigenvalues(config: BallFamilyConfig, k: int, h: float) -> List[float]:
    """Merged sorted spectra of the components of a disjoint family."""
    merged: List[float] = []
    for x, r in zip(config.centers, config.radii):
        merged.extend(_component_eigenvalues(x, r, h, k))
    return sorted(merged)


@dataclass(frozen=True)
class Evaluation:
    """Objective value of one configuration after pruning and projection."""

    config: BallFamilyConfig
    value: float
    penalty: float

    @property
    def feasible(self) -> bool:
        return self.penalty == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {'params': self.config.to_dict(), 'lambda_k': self.value,
                'penalty': self.penalty, 'feasible': self.feasible}


def evaluate(config: BallFamilyConfig, spec: ObjectiveSpec) -> Evaluation:
    """
    lambda_k of the projected union, penalized when the balls overlap.

    Overlapping families are rasterized as one set and charged
    PENALTY_SCALE times the overlap depth.
    """
    config = project_to_constraint(config, spec.c)
    if min(config.radii) < spec.min_radius:
        config = project_to_constraint(config.pruned(spec.min_radius), spec.c)
    if config.is_disjoint():
        values = union_eigenvalues(config, spec.k, spec.h)
        if len(values) < spec.k:
            raise UsageError(f"family has fewer than {spec.k} eigenvalues at h={spec.h}")
        return Evaluation(config, values[spec.k - 1], 0.0)

    penalty = PENALTY_SCALE * config.overlap_depth()
    domain = rasterize_balls(config, spec.h, allow_overlap=True)
    value = eigenpairs(domain, spec.k).eigenvalues[spec.k - 1]
    return Evaluation(config, value + penalty, penalty)


def objective(config: BallFamilyConfig, spec: ObjectiveSpec) -> float:
    """lambda_k of a ball family under the measure constraint."""
    return evaluate(config, spec).value


def _decode(x: np.ndarray, count: int) -> BallFamilyConfig:
    radii = np.maximum(np.abs(x[count:]), 1e-9)
    return BallFamilyConfig(tuple(x[:count]), tuple(radii))


def _encode(config: BallFamilyConfig) -> np.ndarray:
    return np.array(config.centers + config.radii, dtype=float)


@dataclass(frozen=True)
class SearchResult:
    """
    Outcome of a simplex search.

    Attributes:
        best: Best projected configuration
        value: Its objective value
        trace: Best value after every iteration, with the evaluation count
        evaluations: Objective evaluations used
        budget_exhausted: True if the search stopped on the evaluation budget
    """

    best: BallFamilyConfig
    value: float
    trace: List[Tuple[int, float]] = field(repr=False)
    evaluations: int
    budget_exhausted: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'best': self.best.to_dict(), 'value': self.value,
                'evaluations': self.evaluations, 'budget_exhausted': self.budget_exhausted,
                'trace': [list(t) for t in self.trace]}


def simplex_minimize(func: Callable[[np.ndarray], float], x_start: np.ndarray,
                     tol: float = 1e-4, step: float = SIMPLEX_STEP,
                     max_evaluations: int = MAX_EVALUATIONS,
                     workers: int = SEARCH_WORKERS) -> Tuple[np.ndarray, float, List[Tuple[int, float]], int, bool]:
    """
    Nelder-Mead reflect/expand/contract/shrink iterations.

    Stops when the spread of simplex values drops below tol or the
    evaluation budget is spent. Vertex batches (initial simplex and shrink
    steps) are evaluated concurrently; the result does not depend on the
    number of workers.

    Returns:
        Tuple of best point, best value, trace, evaluation count, budget flag
    """
    dim = len(x_start)
    used = 0

    def batch(points: List[np.ndarray]) -> List[float]:
        nonlocal used
        used += len(points)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, points))

    def single(point: np.ndarray) -> float:
        nonlocal used
        used += 1
        return func(point)

    points = [np.array(x_start, dtype=float)]
    for i in range(dim):
        x = points[0].copy()
        x[i] += step
        points.append(x)
    res = [[p, s] for p, s in zip(points, batch(points))]
    res.sort(key=lambda t: t[1])
    trace = [(used, res[0][1])]

    exhausted = False
    while True:
        res.sort(key=lambda t: t[1])
        if res[-1][1] - res[0][1] < tol:
            break
        if used >= max_evaluations:
            exhausted = True
            logging.warning(f"Simplex search stopped after {used} evaluations")
            break

        x0 = np.mean([t[0] for t in res[:-1]], axis=0)
        worst = res[-1][0]

        xr = x0 + ALPHA * (x0 - worst)
        rscore = single(xr)
        if res[0][1] <= rscore < res[-2][1]:
            res[-1] = [xr, rscore]
        elif rscore < res[0][1]:
            xe = x0 + GAMMA * (x0 - worst)
            escore = single(xe)
            res[-1] = [xe, escore] if escore < rscore else [xr, rscore]
        else:
            xc = x0 + BETA * (worst - x0)
            cscore = single(xc)
            if cscore < res[-1][1]:
                res[-1] = [xc, cscore]
            else:
                x1 = res[0][0]
                shrunk = [x1 + DELTA * (t[0] - x1) for t in res[1:]]
                res = [res[0]] + [[p, s] for p, s in zip(shrunk, batch(shrunk))]
        trace.append((used, min(t[1] for t in res)))

    res.sort(key=lambda t: t[1])
    return res[0][0], res[0][1], trace, used, exhausted


def nelder_mead(spec: ObjectiveSpec, init: BallFamilyConfig, tol: float = 1e-4,
                max_evaluations: int = MAX_EVALUATIONS) -> SearchResult:
    """
    Simplex search over centers and radii of a ball family.

    Every vertex is pruned and projected onto the measure constraint before
    evaluation, so only the shape of the radius vector matters.

    Raises:
        UsageError: If the family has more than MAX_BALLS balls
    """
    if init.count > MAX_BALLS:
        raise UsageError(f"ball families are limited to {MAX_BALLS} balls")
    count = init.count
    start = project_to_constraint(init, spec.c)

    def func(x: np.ndarray) -> float:
        return objective(_decode(x, count), spec)

    x_best, value, trace, used, exhausted = simplex_minimize(func, _encode(start), tol,
                                                             max_evaluations=max_evaluations)
    best = evaluate(_decode(x_best, count), spec).config
    logging.info(f"Shape search k={spec.k}: lambda={value:.8f} after {used} evaluations, "
                 f"best {best.to_dict()}")
    return SearchResult(best, value, trace, used, exhausted)


def _single_centered(spec: ObjectiveSpec) -> Tuple[Dict[str, Any], float]:
    radius = radius_of_volume(2, spec.c)
    return {'centers': [0.0], 'radii': [radius]}, ball_spectrum(2, radius, spec.k).eigenvalues[spec.k - 1]


def _twin_balls(spec: ObjectiveSpec) -> Tuple[Dict[str, Any], float]:
    """Two mirror-image balls, each of measure c/2, at the best separation found."""

    def placed(d: float) -> BallFamilyConfig:
        return project_to_constraint(BallFamilyConfig((-d, d), (1.0, 1.0)), spec.c)

    def gap(d: float) -> float:
        return d - placed(d).radii[0] - spec.h

    r_half = radius_of_volume(2, 0.5 * spec.c)
    lo = optimize.brentq(gap, 0.0, 4.0 * r_half + 1.0, xtol=1e-12)
    hi = lo + 1.0
    search = optimize.minimize_scalar(lambda d: objective(placed(d), spec),
                                      bounds=(lo, hi), method='bounded',
                                      options={'xatol': spec.h})
    config = placed(float(search.x))
    value = objective(config, spec)

    component = _component_eigenvalues(config.centers[1], config.radii[1], spec.h, 1)[0]
    identity = abs(value - component) if spec.k == 2 else 0.0
    if identity > IDENTITY_TOL:
        logging.warning(f"Twin balls: lambda_2={value!r} differs from component lambda_1={component!r}")
    params = config.to_dict()
    params.update({'component_lambda1': component, 'identity_error': identity,
                   'ball_bound': lambda1_ball(2, r_half)})
    return params, value


def _unequal_balls(spec: ObjectiveSpec) -> Tuple[Dict[str, Any], float]:
    radius = radius_of_volume(2, spec.c)
    init = BallFamilyConfig((-0.7 * radius, 1.0 * radius), (0.7, 0.4))
    result = nelder_mead(spec, init, tol=1e-3, max_evaluations=200)
    params = result.best.to_dict()
    params.update({'evaluations': result.evaluations, 'budget_exhausted': result.budget_exhausted})
    return params, result.value


def _annulus(spec: ObjectiveSpec) -> Tuple[Dict[str, Any], float]:
    """Centered annulus of measure c with the best inner radius found."""

    def outer(inner: float) -> float:
        return radius_of_volume(2, spec.c + ball_volume(2, inner))

    def value(inner: float) -> float:
        return eigenpairs(annulus_domain(inner, outer(inner), spec.h), spec.k).eigenvalues[spec.k - 1]

    top = 0.5 * radius_of_volume(2, spec.c)
    search = optimize.minimize_scalar(value, bounds=(2 * spec.h, top), method='bounded',
                                      options={'xatol': spec.h})
    inner = float(search.x)
    return {'inner': inner, 'outer': outer(inner)}, value(inner)


EXPERIMENT_FAMILIES = (
    ('single_centered_ball', _single_centered),
    ('two_identical_balls', _twin_balls),
    ('two_unequal_balls', _unequal_balls),
    ('centered_annulus', _annulus),
)


def experiment_k2(c: float, h: float, workers: int = SEARCH_WORKERS,
                  families: Optional[Tuple[str, ...]] = None) -> Dict[str, Any]:
    """
    Tabulate lambda_2 over the searched families and rank them.

    Args:
        c: Weighted measure budget
        h: Cell side for rasterized components
        workers: Concurrent family evaluations
        families: Subset of family names to run, all by default

    Returns:
        Dict: {"experiment": "k2", "c", "h", "configs": [...], "ranked": [...]}
    """
    spec = ObjectiveSpec(2, c, h)
    chosen = [(name, run) for name, run in EXPERIMENT_FAMILIES
              if families is None or name in families]
    if not chosen:
        raise UsageError(f"no known family among {families}")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(name, pool.submit(run, spec)) for name, run in chosen]
        configs = []
        for name, future in futures:
            params, value = future.result()
            configs.append({'name': name, 'params': params, 'lambda_k': value})
            logging.info(f"k=2 experiment: {name} -> {value:.8f}")

    ranked = [entry['name'] for entry in sorted(configs, key=lambda e: e['lambda_k'])]
    return {'experiment': 'k2', 'c': c, 'h': h, 'configs': configs, 'ranked': ranked}
