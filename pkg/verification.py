"""
Verification Suites

Runs the property suites behind `main.py verify`: ball sandwich bounds, the
monotone radius sweep, the Hardy weight, Faber-Krahn on random domains,
reverse Hoelder, the torsion and maximum-principle machinery, solver
cross-checks and the shape experiment. Each suite collects named checks
with their measured values; the run passes only if every check passes.

`quick=True` shrinks grids, sample counts and trial counts so the whole run
stays within a couple of minutes.

Version: 1.0.0
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from errors import DriftSpectrumError
from field_solver_2d import (DriftPoissonSolver, domination_check, eigenpairs,
                             eigenpairs_weighted, faber_krahn_check, isoperimetric_check,
                             maximum_principle_check, rasterize_balls, torsion)
from hardy import (RICCATI_RANGE, find_T, hardy_ratio, ode_residual, random_cubic_profile, rho,
                   sharpness_sequence)
from measure_geom import ball_volume, radius_of_volume
from radial_solver import (DEFAULT_CELLS, RadialOperatorSpec, ball_lower_bound,
                           ball_spectrum, lambda1_ball, lambda1_sweep, lowest_eigenpairs)
from raster_domain import (BallFamilyConfig, RasterDomain, aligned_disk_domain,
                           from_predicate, rectangle_domain)
from rearrange import decreasing_rearrangement
from reverse_holder import (build_chiti, chiti_constant, concentration_comparison,
                            reverse_holder_check, sigma_from_lambda)
from shapeopt import ObjectiveSpec, experiment_k2, nelder_mead

DEFAULT_SEED = 42


@dataclass(frozen=True)
class VerifySettings:
    """Sizes of one verification run."""

    sweep_steps: int
    hardy_profiles: int
    hardy_points: int
    sharpness_ks: Tuple[int, ...]
    fk_domains: int
    fk_h: float
    slack_h: Tuple[float, float]
    rh_domains: int
    rh_h: float
    sigma_lambdas: Tuple[float, ...]
    machinery_h: float
    mp_trials: int
    disk_h: float
    disk_rtol: float
    shape_h: float
    shape_evaluations: int


FULL = VerifySettings(
    sweep_steps=40, hardy_profiles=100, hardy_points=1000,
    sharpness_ks=(10, 100, 1000, 10000), fk_domains=20, fk_h=1 / 128,
    slack_h=(1 / 64, 1 / 128), rh_domains=10, rh_h=1 / 64,
    sigma_lambdas=(8.0, 12.0, 20.0), machinery_h=1 / 64, mp_trials=50,
    disk_h=1 / 256, disk_rtol=5e-3, shape_h=1 / 32, shape_evaluations=500,
)

QUICK = VerifySettings(
    sweep_steps=12, hardy_profiles=20, hardy_points=100,
    sharpness_ks=(10, 100, 1000), fk_domains=4, fk_h=1 / 32,
    slack_h=(1 / 16, 1 / 32), rh_domains=2, rh_h=1 / 32,
    sigma_lambdas=(12.0,), machinery_h=1 / 32, mp_trials=10,
    disk_h=1 / 64, disk_rtol=2e-2, shape_h=1 / 16, shape_evaluations=300,
)


@dataclass
class SuiteResult:
    """Named checks of one suite, each with the values it compared."""

    name: str
    checks: List[Dict[str, Any]] = field(default_factory=list)
    seconds: float = 0.0

    def check(self, label: str, ok: bool, **detail: Any) -> bool:
        """
        Record one check; `detail` may carry its own 'passed' field, `ok` wins.
        """
        ok = bool(ok)
        self.checks.append({'check': label, **detail, 'passed': ok})
        if not ok:
            logging.warning(f"   ❌ {self.name}: {label} {detail}")
        return ok

    @property
    def passed(self) -> bool:
        return all(c['passed'] for c in self.checks)

    def to_dict(self, timing: bool = False) -> Dict[str, Any]:
        out = {'suite': self.name, 'passed': self.passed, 'checks': self.checks}
        if timing:
            out['seconds'] = self.seconds
        return out


def random_domain(rng: np.random.Generator, h: float) -> RasterDomain:
    """A random union of up to three disks, or a random rectangle."""
    if rng.uniform() < 0.7:
        count = int(rng.integers(1, 4))
        centers = rng.uniform(-1.0, 1.0, size=(count, 2))
        radii = rng.uniform(0.3, 0.8, size=count)

        def inside(x, y):
            hit = np.zeros(x.shape, dtype=bool)
            for (cx, cy), r in zip(centers, radii):
                hit |= (x - cx) ** 2 + (y - cy) ** 2 < r * r
            return hit

        bounds = (float((centers[:, 0] - radii).min()), float((centers[:, 1] - radii).min()),
                  float((centers[:, 0] + radii).max()), float((centers[:, 1] + radii).max()))
        return from_predicate(inside, bounds, h, pad=2 * h)

    corner = rng.uniform(-1.2, 0.2, size=2)
    size = rng.uniform(0.6, 1.6, size=2)
    return rectangle_domain(corner[0], corner[1], corner[0] + size[0], corner[1] + size[1], h)


def suite_sandwich(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """lambda_1(B_R) between N/2 + j^2/R^2 and that plus R^2/4, Richardson-certified."""
    suite = SuiteResult('sandwich')
    for dim in (2, 3):
        for radius in (0.5, 1.0, 2.0):
            lam = lambda1_ball(dim, radius)
            finer = lambda1_ball(dim, radius, 2 * DEFAULT_CELLS)
            lower = ball_lower_bound(dim, radius)
            upper = lower + 0.25 * radius * radius
            suite.check(f"N={dim} R={radius} within bounds", lower <= lam <= upper,
                        lam=lam, lower=lower, upper=upper)
            suite.check(f"N={dim} R={radius} Richardson error", abs(finer - lam) < 1e-6,
                        error=abs(finer - lam))
    return suite


def suite_sweep(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """Strictly decreasing lambda_1(B_r) on [0.25, 8] and the Poincare floor."""
    suite = SuiteResult('sweep')
    radii = np.geomspace(0.25, 8.0, settings.sweep_steps)
    for dim in (2, 3):
        values = np.array(lambda1_sweep(dim, radii))
        suite.check(f"N={dim} strictly decreasing", bool(np.all(np.diff(values) < 0)),
                    largest_step=float(np.diff(values).max()))
        plateau = float(values[-1])
        suite.check(f"N={dim} plateau above N", plateau > dim - 1e-3, plateau=plateau,
                    distance_to_N=abs(plateau - dim), distance_to_3N_2=abs(plateau - 1.5 * dim))
    return suite


def suite_hardy(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """Riccati residual, random profiles against 1/4, and the sharpness sequence."""
    suite = SuiteResult('hardy')
    points = np.geomspace(*RICCATI_RANGE, settings.hardy_points)
    for dim in (2, 3, 4):
        worst = max(ode_residual(dim, r) / (1.0 + rho(dim, r) ** 2) for r in points)
        suite.check(f"N={dim} Riccati residual", worst <= 1e-5, worst=worst)

    lowest = math.inf
    for i in range(settings.hardy_profiles):
        dim = (2, 3, 4)[i % 3]
        u = random_cubic_profile(dim, rng)
        lowest = min(lowest, hardy_ratio(find_T(dim), u))
    suite.check("random profiles above 1/4", lowest >= 0.25 - 1e-6, lowest=lowest,
                profiles=settings.hardy_profiles)

    ratios = [sharpness_sequence(2, k)[1] for k in settings.sharpness_ks]
    suite.check("sharpness quotients decreasing", all(b < a for a, b in zip(ratios, ratios[1:])),
                ratios=ratios)
    suite.check("last sharpness quotient", ratios[-1] <= 0.27, last=ratios[-1])
    return suite


def suite_faber_krahn(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """lambda_1(Omega) >= lambda_1(Omega_star)(1 - 5h) on random domains."""
    suite = SuiteResult('faber_krahn')
    for i in range(settings.fk_domains):
        domain = random_domain(rng, settings.fk_h)
        check = faber_krahn_check(domain)
        suite.check(f"domain {i}", check.holds(), **check.to_dict())
        perimeter = isoperimetric_check(domain)
        suite.check(f"domain {i} isoperimetric", perimeter.holds(), **perimeter.to_dict())

    exact = lambda1_ball(2, 1.0)
    errors = [abs(eigenpairs(aligned_disk_domain((0.0, 0.0), 1.0, h), 1).eigenvalues[0] - exact)
              for h in settings.slack_h]
    ratio = errors[0] / errors[1] if errors[1] > 0 else math.inf
    suite.check("first-order slack ratio", 1.5 <= ratio <= 2.5, errors=errors, ratio=ratio)
    return suite


def suite_reverse_holder(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """Equality on the matched ball, inequality on a square and random domains, SL cross-check."""
    suite = SuiteResult('reverse_holder')
    pairs = ((1.0, 2.0), (2.0, math.inf))

    data = build_chiti(2, 12.0)
    for r, q in pairs:
        constant = chiti_constant(data, r, q)
        direct = data.profile.lp_norm(q) / data.profile.lp_norm(r)
        suite.check(f"radial ball equality r={r} q={q}", abs(constant - direct) <= 1e-4 * constant,
                    constant=constant, ball_ratio=direct)

    # The rasterized matched ball reaches the comparison from the planar solver
    ball = aligned_disk_domain((0.0, 0.0), data.r_tilde, settings.rh_h)
    u_ball = eigenpairs(ball, 1).eigenfunctions[0]
    slack = 5 * ball.h
    report = concentration_comparison(decreasing_rearrangement(u_ball), data, 2.0, slack=slack)
    suite.check("rasterized ball concentration", abs(report.worst_margin) <= slack,
                **report.to_dict())
    for r, q in pairs:
        check = reverse_holder_check(u_ball, data, r, q)
        suite.check(f"rasterized ball ratio r={r} q={q}",
                    abs(check.lower - check.upper) <= slack * check.upper, **check.to_dict())

    domains = [('unit square', rectangle_domain(-0.5, -0.5, 0.5, 0.5, settings.rh_h))]
    domains += [(f"domain {i}", random_domain(rng, settings.rh_h))
                for i in range(settings.rh_domains)]
    for label, domain in domains:
        spectrum = eigenpairs(domain, 1)
        lam = spectrum.eigenvalues[0]
        u = spectrum.eigenfunctions[0]
        matched = build_chiti(2, lam)
        for r, q in pairs:
            check = reverse_holder_check(u, matched, r, q)
            suite.check(f"{label} r={r} q={q}", check.holds(), **check.to_dict())
        report = concentration_comparison(decreasing_rearrangement(u), matched, 2.0,
                                          slack=5 * domain.h, domain_lambda=lam)
        suite.check(f"{label} concentration", report.passed, **report.to_dict())

    for lam in settings.sigma_lambdas:
        sigma = sigma_from_lambda(2, lam)
        suite.check(f"sigma_1 at lambda={lam}", abs(sigma - lam) <= 1e-4 * lam, sigma=sigma)
    return suite


def _two_disks(h: float) -> RasterDomain:
    return rasterize_balls(BallFamilyConfig((-1.0, 1.2), (0.6, 0.5)), h)


def suite_machinery(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """Torsion positivity, domination by the torsion function, maximum principle."""
    suite = SuiteResult('machinery')
    h = settings.machinery_h
    domains = {'disk': aligned_disk_domain((0.0, 0.0), 1.0, h), 'two_disks': _two_disks(h)}
    for name, domain in domains.items():
        try:
            w = torsion(domain)
            suite.check(f"{name} torsion positive", True, min_w=float(w.w.min()))
        except DriftSpectrumError as e:
            suite.check(f"{name} torsion positive", False, error=str(e))
        report = domination_check(domain, 3)
        suite.check(f"{name} domination", report.passed, **report.to_dict())

    seed = int(rng.integers(0, 2 ** 31))
    mp = maximum_principle_check(domains['disk'], settings.mp_trials, seed)
    suite.check("maximum principle", mp.passed, **mp.to_dict())
    return suite


def suite_cross_oracle(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """Planar vs radial solver, oscillator-transform identity, merged spectra of unions."""
    suite = SuiteResult('cross_oracle')
    exact = lambda1_ball(2, 1.0)
    planar = eigenpairs(aligned_disk_domain((0.0, 0.0), 1.0, settings.disk_h), 1).eigenvalues[0]
    # disk_rtol is relative to lambda_1(B_1)
    gap = abs(planar - exact)
    suite.check("disk vs radial", gap <= settings.disk_rtol * exact, planar=planar,
                radial=exact, absolute_gap=gap, relative_gap=gap / exact,
                rtol=settings.disk_rtol)

    small = aligned_disk_domain((0.0, 0.0), 1.0, 1 / 8)
    spectrum = eigenpairs(small, 3, tol=1e-12)
    solver = DriftPoissonSolver(small)
    worst = 0.0
    for lam, u in zip(spectrum.eigenvalues, spectrum.eigenfunctions):
        psi = solver.solve(lam * u.values)
        worst = max(worst, float(np.linalg.norm(psi - u.values) / np.linalg.norm(u.values)))
    suite.check("L u = lambda u through the transform", worst <= 1e-8, worst=worst)

    mid = aligned_disk_domain((0.0, 0.0), 1.0, settings.machinery_h)
    v_form = eigenpairs(mid, 1).eigenvalues[0]
    u_form = eigenpairs_weighted(mid, 1).eigenvalues[0]
    suite.check("u-form vs v-form", abs(u_form - v_form) <= 5 * mid.h * v_form,
                u_form=u_form, v_form=v_form)

    union = _two_disks(settings.machinery_h)
    k = 4
    joint = eigenpairs(union, k).eigenvalues
    merged = sorted(v for part in union.components() for v in eigenpairs(part, k).eigenvalues)[:k]
    gap = max(abs(a - b) / a for a, b in zip(joint, merged))
    suite.check("merged spectrum of a disjoint union", gap <= 1e-8, gap=gap)
    return suite


def suite_shape(settings: VerifySettings, rng: np.random.Generator) -> SuiteResult:
    """The k = 2 experiment and the k = 1 search back to a centered disk."""
    suite = SuiteResult('shape')
    h = settings.shape_h
    c = ball_volume(2, 1.0)

    report = experiment_k2(c, h)
    by_name = {entry['name']: entry for entry in report['configs']}
    twin = by_name['two_identical_balls']['params']
    suite.check("twin balls identity", twin['identity_error'] <= 1e-6,
                identity_error=twin['identity_error'])
    suite.check("twin component above half-measure ball",
                twin['component_lambda1'] >= twin['ball_bound'] * (1 - 5 * h),
                component=twin['component_lambda1'], ball=twin['ball_bound'])

    radius = radius_of_volume(2, c)
    ell_one, _ = lowest_eigenpairs(RadialOperatorSpec(2, 1, radius), 1)
    single = by_name['single_centered_ball']['lambda_k']
    suite.check("centered ball lambda_2 from degree 1", abs(single - ell_one[0].value) <= 1e-9,
                lambda_2=single, degree_one=ell_one[0].value)
    suite.check("ranked report", len(report['ranked']) == len(report['configs']),
                ranked=report['ranked'])

    spec = ObjectiveSpec(1, c, h)
    init = BallFamilyConfig((-0.3, 1.6), (0.8, 0.4))
    result = nelder_mead(spec, init, tol=1e-6, max_evaluations=settings.shape_evaluations)
    best = result.best
    centered = (best.count == 1 and abs(best.centers[0]) <= 1e-2
                and abs(best.radii[0] - radius) <= 1e-2)
    suite.check("k=1 search returns a centered disk", centered, best=best.to_dict(),
                value=result.value)
    floor = ball_spectrum(2, radius, 1).eigenvalues[0]
    suite.check("k=1 search respects Faber-Krahn", result.value >= floor * (1 - 5 * h),
                value=result.value, ball=floor)
    return suite


SUITES: Tuple[Tuple[str, Callable[[VerifySettings, np.random.Generator], SuiteResult]], ...] = (
    ('sandwich', suite_sandwich),
    ('sweep', suite_sweep),
    ('hardy', suite_hardy),
    ('faber_krahn', suite_faber_krahn),
    ('reverse_holder', suite_reverse_holder),
    ('machinery', suite_machinery),
    ('cross_oracle', suite_cross_oracle),
    ('shape', suite_shape),
)


def run_verification(quick: bool = False, seed: int = DEFAULT_SEED,
                     only: Optional[List[str]] = None) -> List[SuiteResult]:
    """
    Run the suites in order with one seeded generator per suite.

    Any exception inside a suite is recorded as a failed check so the
    remaining suites still run.
    """
    settings = QUICK if quick else FULL
    results = []
    logging.info(f"📊 Verification ({'quick' if quick else 'full'}, seed={seed})")
    for index, (name, suite_fn) in enumerate(SUITES):
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, index])
        start = time.perf_counter()
        try:
            result = suite_fn(settings, rng)
        except Exception as e:
            logging.error(f"Suite {name} aborted: {type(e).__name__}: {e}")
            result = SuiteResult(name)
            result.check("suite completed", False, error=str(e), error_type=type(e).__name__)
        result.seconds = time.perf_counter() - start
        status = "✅" if result.passed else "❌"
        logging.info(f"   {status} {name}: {sum(c['passed'] for c in result.checks)}/"
                     f"{len(result.checks)} checks in {result.seconds:.1f}s")
        results.append(result)
    return results
