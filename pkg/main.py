#!/usr/bin/env python3
"""
Drift Spectrum Toolkit - Command-Line Frontend

Eigenvalues of the drift Laplacian L = -Delta - x.grad on balls and raster
domains, the Hardy weight, the reverse Hoelder constant, shape searches and
the verification suites. Results go to stdout (JSON by default, CSV with
--format csv); logs go to stderr and the log file.

Exit codes: 0 ok, 2 usage or domain error, 3 numerical or unexpected failure,
4 verification failure.

Version: 1.0.0
"""

import argparse
import logging
import sys
import time
from typing import Any, Callable, Dict, List, Optional

import numpy as np

# Application configuration
APP_VERSION = "1.0.0"
APP_TITLE = "Drift Spectrum Toolkit"
LOG_FILE = 'drift_spectrum.log'
DEFAULT_SEED = 42

from errors import (UNEXPECTED_ERROR_EXIT_CODE, ConsistencyError, DriftSpectrumError,
                    UsageError, VerificationFailure)
from field_solver_2d import (domination_check, eigenpairs, eigenvalue_bounds,
                             faber_krahn_check, isoperimetric_check,
                             maximum_principle_check, torsion)
from hardy import find_T, hardy_constant_report, hardy_ratio, random_cubic_profile
from measure_geom import ball_volume
from radial_solver import (DEFAULT_CELLS, DEFAULT_TOLERANCE, ball_spectrum,
                           lambda1_sweep, whole_space_levels)
from raster_domain import (BallFamilyConfig, aligned_disk_domain, annulus_domain,
                           load_mask, rectangle_domain, save_mask)
from report_export import (RunResult, ReportExporter, SPECTRUM_COLUMNS, SWEEP_COLUMNS,
                           spectrum_rows)
from reverse_holder import build_chiti, chiti_constant, sl_sigma1
from shapeopt import MAX_EVALUATIONS, ObjectiveSpec, experiment_k2, nelder_mead
from verification import SUITES, run_verification


def setup_logging(log_file: str = LOG_FILE, verbose: bool = False) -> None:
    """Log to a file and to stderr; stdout is reserved for results."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _dimension(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"dimension must be >= 2, got {text}")
    return value


def cmd_ball_spectrum(args: argparse.Namespace) -> RunResult:
    spectrum = ball_spectrum(args.dim, args.radius, args.count, tol=args.tol, cells=args.cells)
    outputs = spectrum.to_dict()
    outputs['eigenvalues'] = spectrum.eigenvalues[:args.count]
    return RunResult('ball-spectrum',
                     {'dim': args.dim, 'radius': args.radius, 'count': args.count},
                     outputs, {'tolerance': args.tol, 'cells': args.cells},
                     spectrum_rows(spectrum.to_dict()), SPECTRUM_COLUMNS)


def cmd_sweep(args: argparse.Namespace) -> RunResult:
    if not 0 < args.rmin < args.rmax:
        raise UsageError(f"need 0 < rmin < rmax, got {args.rmin}, {args.rmax}")
    radii = np.linspace(args.rmin, args.rmax, args.steps)
    values = lambda1_sweep(args.dim, radii)
    if any(b >= a for a, b in zip(values, values[1:])):
        logging.error("lambda_1(B_r) failed to decrease along the sweep")
        raise ConsistencyError("lambda_1(B_r) is not strictly decreasing on the sweep")

    plateau = values[-1]
    outputs = {
        'radii': radii.tolist(),
        'lambda1': values,
        'plateau': plateau,
        'distance_to_N': abs(plateau - args.dim),
        'distance_to_3N/2': abs(plateau - 1.5 * args.dim),
        'whole_space_levels': whole_space_levels(args.dim),
    }
    rows = [{'r': float(r), 'lambda1': v} for r, v in zip(radii, values)]
    # Trailer rows carry the plateau report under the same two columns
    rows += [{'r': key, 'lambda1': outputs[key]}
             for key in ('plateau', 'distance_to_N', 'distance_to_3N/2')]
    return RunResult('sweep', {'dim': args.dim, 'rmin': args.rmin, 'rmax': args.rmax,
                               'steps': args.steps},
                     outputs, {'cells': DEFAULT_CELLS, 'richardson': True}, rows, SWEEP_COLUMNS)


def cmd_hardy(args: argparse.Namespace) -> RunResult:
    outputs = hardy_constant_report(args.dim, tuple(args.ks))
    rng = np.random.default_rng(args.seed)
    weight = find_T(args.dim)
    ratios = [hardy_ratio(weight, random_cubic_profile(args.dim, rng)) for _ in range(args.profiles)]
    outputs['random_profiles'] = {'count': args.profiles,
                                  'min_ratio': min(ratios) if ratios else None}
    rows = [{'k': item['k'], 'ratio': item['ratio']} for item in outputs['sharpness']]
    return RunResult('hardy', {'dim': args.dim, 'ks': list(args.ks), 'profiles': args.profiles,
                               'seed': args.seed},
                     outputs, {}, rows, ('k', 'ratio'))


def cmd_chiti(args: argparse.Namespace) -> RunResult:
    data = build_chiti(args.dim, args.lam, cells=args.cells)
    constant = chiti_constant(data, args.r, args.q)
    # C is homogeneous of degree 0 in z
    scaled = data.z_star.scaled(3.0)
    rescaled = scaled.norm(args.q) / scaled.norm(args.r)
    invariant = abs(rescaled - constant) <= 1e-12 * constant
    outputs = dict(data.to_dict(), constant=constant, scale_invariant=invariant)
    if args.sigma:
        outputs['sigma1'] = sl_sigma1(args.dim, data.L_tilde)
    return RunResult('chiti', {'dim': args.dim, 'lambda': args.lam, 'r': args.r, 'q': args.q},
                     outputs, {'cells': args.cells})


def cmd_domain_spectrum(args: argparse.Namespace) -> RunResult:
    domain = load_mask(args.mask)
    spectrum = eigenpairs(domain, args.count, tol=args.tol)
    outputs = spectrum.to_dict()
    outputs['eigenvalues'] = spectrum.eigenvalues
    outputs['weighted_measure'] = domain.weighted_measure()
    outputs['components'] = domain.component_count()
    if args.checks:
        outputs['bounds'] = eigenvalue_bounds(domain, args.count, spectrum).to_dict()
        outputs['faber_krahn'] = faber_krahn_check(domain, spectrum).to_dict()
        outputs['isoperimetric'] = isoperimetric_check(domain).to_dict()
    return RunResult('domain-spectrum', {'mask': args.mask, 'count': args.count}, outputs,
                     {'tolerance': args.tol, 'grid': domain.grid_summary()},
                     spectrum_rows(spectrum.to_dict()), SPECTRUM_COLUMNS)


def cmd_torsion(args: argparse.Namespace) -> RunResult:
    domain = load_mask(args.mask)
    outputs: Dict[str, Any] = {'torsion': torsion(domain).to_dict()}
    if args.domination:
        outputs['domination'] = domination_check(domain, args.domination).to_dict()
    if args.trials:
        outputs['maximum_principle'] = maximum_principle_check(domain, args.trials,
                                                               args.seed).to_dict()
    return RunResult('torsion', {'mask': args.mask, 'domination': args.domination,
                                 'trials': args.trials, 'seed': args.seed},
                     outputs, {'grid': domain.grid_summary()})


def cmd_shape_search(args: argparse.Namespace) -> RunResult:
    c = args.c if args.c is not None else ball_volume(2, 1.0)
    if args.experiment == 'k2':
        report = experiment_k2(c, args.h)
        rows = [{'name': e['name'], 'lambda_k': e['lambda_k']} for e in report['configs']]
        return RunResult('shape-search', {'experiment': 'k2', 'c': c, 'h': args.h}, report,
                         {'h': args.h}, rows, ('name', 'lambda_k'))

    if len(args.centers) != len(args.radii):
        raise UsageError(f"{len(args.centers)} centers but {len(args.radii)} radii")
    spec = ObjectiveSpec(args.k, c, args.h)
    result = nelder_mead(spec, BallFamilyConfig(tuple(args.centers), tuple(args.radii)),
                         tol=args.tol, max_evaluations=args.max_evaluations)
    rows = [{'evaluations': n, 'value': v} for n, v in result.trace]
    return RunResult('shape-search', dict(spec.to_dict(), centers=args.centers, radii=args.radii),
                     result.to_dict(), {'tolerance': args.tol,
                                        'max_evaluations': args.max_evaluations},
                     rows, ('evaluations', 'value'))


def cmd_verify(args: argparse.Namespace) -> RunResult:
    results = run_verification(quick=args.quick, seed=args.seed, only=args.suite)
    outputs = {'passed': all(r.passed for r in results),
               'suites': [r.to_dict(timing=args.timing) for r in results]}
    rows = [{'suite': r.name, 'check': c['check'], 'passed': c['passed']}
            for r in results for c in r.checks]
    return RunResult('verify', {'quick': args.quick, 'seed': args.seed, 'suite': args.suite},
                     outputs, {}, rows, ('suite', 'check', 'passed'))


def cmd_make_mask(args: argparse.Namespace) -> RunResult:
    if args.shape == 'disk':
        domain = aligned_disk_domain((args.cx, 0.0), args.radius, args.h)
    elif args.shape == 'annulus':
        domain = annulus_domain(args.inner, args.radius, args.h)
    else:
        domain = rectangle_domain(-args.radius, -args.radius, args.radius, args.radius, args.h)
    save_mask(domain, args.path)
    return RunResult('make-mask', {'shape': args.shape, 'radius': args.radius, 'h': args.h,
                                   'path': args.path},
                     {'grid': domain.grid_summary(), 'weighted_measure': domain.weighted_measure()})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='drift-spectrum', description=APP_TITLE)
    parser.add_argument('--version', action='version', version=f"{APP_TITLE} {APP_VERSION}")
    parser.add_argument('--format', choices=('json', 'csv'), default='json',
                        help='result format on stdout')
    parser.add_argument('--output', help='write the result to this file as well')
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED,
                        help='seed for randomized checks')
    parser.add_argument('--timing', action='store_true', help='add runtime seconds to meta')
    parser.add_argument('--log-file', default=LOG_FILE)
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('ball-spectrum', help='eigenvalues of the centered ball')
    p.add_argument('--dim', type=_dimension, required=True)
    p.add_argument('--radius', type=_positive_float, required=True)
    p.add_argument('--count', type=_positive_int, required=True)
    p.add_argument('--tol', type=_positive_float, default=DEFAULT_TOLERANCE)
    p.add_argument('--cells', type=_positive_int, default=DEFAULT_CELLS)
    p.set_defaults(handler=cmd_ball_spectrum)

    p = sub.add_parser('sweep', help='lambda_1(B_r) over a range of radii')
    p.add_argument('--dim', type=_dimension, required=True)
    p.add_argument('--rmin', type=_positive_float, required=True)
    p.add_argument('--rmax', type=_positive_float, required=True)
    p.add_argument('--steps', type=_positive_int, default=40)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser('hardy', help='Hardy weight, sharpness sequence and random profiles')
    p.add_argument('--dim', type=_dimension, required=True)
    p.add_argument('--ks', type=_positive_int, nargs='+', default=[10, 100, 1000, 10000])
    p.add_argument('--profiles', type=int, default=100)
    p.set_defaults(handler=cmd_hardy)

    p = sub.add_parser('chiti', help='reverse Hoelder constant of the matched ball')
    p.add_argument('--dim', type=_dimension, required=True)
    p.add_argument('--lambda', dest='lam', type=_positive_float, required=True)
    p.add_argument('--r', type=_positive_float, required=True)
    p.add_argument('--q', type=_positive_float, required=True, help="exponent, 'inf' allowed")
    p.add_argument('--cells', type=_positive_int, default=DEFAULT_CELLS)
    p.add_argument('--sigma', action='store_true', help='also solve the 1D check problem')
    p.set_defaults(handler=cmd_chiti)

    p = sub.add_parser('domain-spectrum', help='eigenvalues of a mask-file domain')
    p.add_argument('--mask', required=True)
    p.add_argument('--count', type=_positive_int, required=True)
    p.add_argument('--tol', type=_positive_float, default=1e-8)
    p.add_argument('--checks', action='store_true', help='bounds, Faber-Krahn, isoperimetry')
    p.set_defaults(handler=cmd_domain_spectrum)

    p = sub.add_parser('torsion', help='torsion function and maximum-principle checks')
    p.add_argument('--mask', required=True)
    p.add_argument('--domination', type=int, default=0, help='eigenfunctions to dominate')
    p.add_argument('--trials', type=int, default=0, help='random maximum-principle trials')
    p.set_defaults(handler=cmd_torsion)

    p = sub.add_parser('shape-search', help='minimize lambda_k over ball families')
    p.add_argument('--experiment', choices=('k2',))
    p.add_argument('--k', type=_positive_int, default=1)
    p.add_argument('--c', type=_positive_float, help='measure budget, default m_2(B_1)')
    p.add_argument('--h', type=_positive_float, default=1 / 32)
    p.add_argument('--centers', type=float, nargs='+', default=[-0.3, 1.6])
    p.add_argument('--radii', type=_positive_float, nargs='+', default=[0.8, 0.4])
    p.add_argument('--tol', type=_positive_float, default=1e-4)
    p.add_argument('--max-evaluations', type=_positive_int, default=MAX_EVALUATIONS)
    p.set_defaults(handler=cmd_shape_search)

    p = sub.add_parser('verify', help='run the verification suites')
    p.add_argument('--quick', action='store_true')
    p.add_argument('--suite', nargs='+', choices=[name for name, _ in SUITES])
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('make-mask', help='write a mask file for a simple shape')
    p.add_argument('path')
    p.add_argument('--shape', choices=('disk', 'annulus', 'square'), default='disk')
    p.add_argument('--radius', type=_positive_float, default=1.0)
    p.add_argument('--inner', type=_positive_float, default=0.5)
    p.add_argument('--cx', type=float, default=0.0)
    p.add_argument('--h', type=_positive_float, default=1 / 64)
    p.set_defaults(handler=cmd_make_mask)
    return parser


def run(argv: Optional[List[str]] = None, stream=None) -> int:
    """
    Parse arguments, run one command and print its result.

    Returns:
        int: Process exit code
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_file, args.verbose)
    stream = stream or sys.stdout
    handler: Callable[[argparse.Namespace], RunResult] = args.handler

    start = time.perf_counter()
    try:
        result = handler(args)
        if args.timing:
            result.meta['runtime_seconds'] = time.perf_counter() - start
        stream.write(ReportExporter(args.format).write(result, args.output))
        if args.command == 'verify' and not result.outputs['passed']:
            raise VerificationFailure("verification suites reported failures")
    except DriftSpectrumError as e:
        logging.error(f"{args.command} failed: {e}")
        return e.exit_code
    except Exception as e:
        logging.error(f"{args.command} failed unexpectedly: {type(e).__name__}: {e}")
        return UNEXPECTED_ERROR_EXIT_CODE
    logging.info(f"{args.command} finished")
    return 0


def main() -> None:
    """Application entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
