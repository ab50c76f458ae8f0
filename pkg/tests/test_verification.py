#!/usr/bin/env python3
"""
Tests for the verification suite runner
"""

import math
import os
import sys

import numpy as np
import pytest

# Add the repository root to path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import verification
from verification import QUICK, SUITES, SuiteResult, random_domain, run_verification


def test_suite_result_bookkeeping():
    suite = SuiteResult('demo')
    assert suite.passed
    assert suite.check("first", True, value=1.0)
    assert not suite.check("second", False, value=2.0)
    assert not suite.passed
    document = suite.to_dict()
    assert document['suite'] == 'demo'
    assert document['checks'][1] == {'check': 'second', 'passed': False, 'value': 2.0}
    assert 'seconds' not in document
    assert 'seconds' in suite.to_dict(timing=True)


def test_random_domains_are_reproducible():
    first = [random_domain(np.random.default_rng([7, 1]), 1 / 16) for _ in range(2)]
    second = [random_domain(np.random.default_rng([7, 1]), 1 / 16) for _ in range(2)]
    for a, b in zip(first, second):
        assert np.array_equal(a.mask, b.mask)
        assert a.active_count > 0


def test_suite_names_are_unique():
    names = [name for name, _ in SUITES]
    assert len(names) == len(set(names))
    assert 'sandwich' in names and 'shape' in names


def test_quick_sandwich_passes():
    (result,) = run_verification(quick=True, only=['sandwich'])
    assert result.name == 'sandwich'
    assert result.passed, [c for c in result.checks if not c['passed']]
    assert len(result.checks) == 12


def test_quick_machinery_passes():
    (result,) = run_verification(quick=True, seed=5, only=['machinery'])
    assert result.passed, [c for c in result.checks if not c['passed']]
    assert QUICK.mp_trials == 10


def test_detail_cannot_override_the_outcome():
    suite = SuiteResult('demo')
    assert not suite.check("report", False, **{'passed': True, 'margin': -0.5})
    assert suite.checks[0] == {'check': 'report', 'passed': False, 'margin': -0.5}
    assert not suite.passed


def test_crashing_suite_is_recorded(monkeypatch):
    def _crash(settings, rng):
        raise RuntimeError("matrix exploded")

    monkeypatch.setattr(verification, 'SUITES', (('crash', _crash),) + SUITES[:1])
    crashed, sandwich = run_verification(quick=True)
    assert crashed.name == 'crash'
    assert not crashed.passed
    (check,) = crashed.checks
    assert check['check'] == 'suite completed'
    assert check['error_type'] == 'RuntimeError'
    assert check['error'] == 'matrix exploded'
    assert sandwich.name == 'sandwich' and sandwich.passed


def test_quick_reverse_holder_passes():
    (result,) = run_verification(quick=True, only=['reverse_holder'])
    assert result.passed, [c for c in result.checks if not c['passed']]
    labels = [c['check'] for c in result.checks]
    assert 'rasterized ball concentration' in labels
    assert 'rasterized ball ratio r=2.0 q=inf' in labels


def test_disk_agreement_is_relative():
    (result,) = run_verification(quick=True, only=['cross_oracle'])
    (check,) = [c for c in result.checks if c['check'] == 'disk vs radial']
    assert check['rtol'] == QUICK.disk_rtol
    assert math.isclose(check['absolute_gap'], abs(check['planar'] - check['radial']))
    assert math.isclose(check['relative_gap'], check['absolute_gap'] / check['radial'])
    assert check['passed'] == (check['relative_gap'] <= QUICK.disk_rtol)
    assert check['passed'], check


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
