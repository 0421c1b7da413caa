"""
Standalone test cases for the grid refinement studies.

Run with: uv run python test_convergence_study_standalone.py
"""

import tempfile
from pathlib import Path

import numpy as np

from convergence_study import (
    IDENTITY_BAND,
    ORDER_BAND,
    StudyResult,
    exact_drift_laplacian_cos,
    identity_order,
    measured_tolerance_constant,
    operator_order,
    run_study,
    solution_order,
    study_report,
    tolerance_constant,
)
from errors import PreconditionError
from model_space import ModelSpace
from profiles import cosine_bump, euclidean_warp, gaussian_weight, spherical_warp

BUMP = cosine_bump(2.0, 1.0)


def euclidean(m=3.0):
    return ModelSpace(n=3, m=m, warp=euclidean_warp(), r_max=2.0)


def gaussian_space():
    return ModelSpace(n=3, m=8, warp=euclidean_warp(), weight=gaussian_weight(0.5), r_max=2.0)


def sphere():
    return ModelSpace(n=3, m=3, warp=spherical_warp(), r_max=np.pi)


def exact_cos_on_flat_space():
    values = exact_drift_laplacian_cos(euclidean(), np.array([0.0, 1.0]))
    return abs(values[0] + 3.0) < 1e-15 and abs(values[1] - (-np.cos(1.0) - 2.0 * np.sin(1.0))) < 1e-14


def solution_study_writes_csv():
    with tempfile.TemporaryDirectory() as tmp:
        solution_order(gaussian_space(), BUMP, cells=(32, 64), csv_dir=tmp)
        return sorted(p.name for p in Path(tmp).iterdir()) == ["convergence_N32.csv", "convergence_N64.csv"]


def study_names_on_weighted_space():
    studies = run_study(gaussian_space(), BUMP, cells=(32, 64))
    return [s.name for s in studies]


def study_names_on_sphere():
    studies = run_study(sphere(), BUMP, cells=(32, 64))
    return [s.name for s in studies]


def bochner_study_in_identity_band():
    study = identity_order(gaussian_space(), BUMP)[1]
    return study.name == "bochner" and study.band == IDENTITY_BAND and study.in_band


def report_flags_studies_outside_band():
    good = StudyResult(name="operator", cells=[1, 2], errors=[4.0, 1.0], ratios=[4.0], r_max=1.0)
    bad = StudyResult(name="solution", cells=[1, 2], errors=[3.0, 1.0], ratios=[3.0], r_max=1.0)
    lines = study_report([good, bad]).splitlines()
    return lines[3].endswith("ok") and lines[4].endswith(f"outside [{ORDER_BAND[0]}, {ORDER_BAND[1]}]")


# Test Suite
def run_tests():
    """Run all convergence study tests"""
    print("=" * 60)
    print("CONVERGENCE STUDY - TEST SUITE")
    print("=" * 60)
    print()

    passed = 0
    failed = 0
    tests = []

    # Bookkeeping
    tests.append({
        'name': 'Ratio 4 is observed order 2',
        'call': lambda: StudyResult(name="x", cells=[1, 2], errors=[4.0, 1.0], ratios=[4.0], r_max=1.0).observed_order,
        'expected': [2.0]
    })

    tests.append({
        'name': 'Ratios 4.0 and 4.3 are in band with slack 0.1',
        'check': lambda: (lambda s: s.in_band and abs(s.band_slack - 0.1) < 1e-12)(
            StudyResult(name="x", cells=[1, 2, 4], errors=[17.2, 4.3, 1.0], ratios=[4.0, 4.3], r_max=1.0))
    })

    tests.append({
        'name': 'Ratio 3.0 is outside the order band',
        'call': lambda: (lambda s: (s.in_band, round(s.band_slack, 12)))(
            StudyResult(name="x", cells=[1, 2], errors=[3.0, 1.0], ratios=[3.0], r_max=1.0)),
        'expected': (False, -0.6)
    })

    tests.append({
        'name': 'Report marks in-band and out-of-band studies',
        'check': report_flags_studies_outside_band
    })

    tests.append({
        'name': 'C_tol from error 1e-3 at N = 100, r_max = 2',
        'check': lambda: abs(measured_tolerance_constant(
            StudyResult(name="x", cells=[100], errors=[1e-3], ratios=[], r_max=2.0)) - 25.0) < 1e-12
    })

    tests.append({
        'name': 'Exact Δ_f cos r on flat space, pole and r = 1',
        'check': exact_cos_on_flat_space
    })

    # Orders
    tests.append({
        'name': 'Operator on the sphere refines at second order',
        'check': lambda: operator_order(sphere()).in_band
    })

    tests.append({
        'name': 'Operator with Gaussian weight and open end refines at second order',
        'check': lambda: operator_order(gaussian_space()).in_band
    })

    tests.append({
        'name': 'Manufactured solve refines at second order',
        'check': lambda: solution_order(gaussian_space(), BUMP).in_band
    })

    tests.append({
        'name': 'h-equation residual on the exact field refines at second order',
        'check': lambda: identity_order(euclidean(), BUMP)[0].in_band
    })

    tests.append({
        'name': 'Δ_f H residual away from the open end refines at second order',
        'check': bochner_study_in_identity_band
    })

    tests.append({
        'name': 'Measured C_tol on the Gaussian space is below the fixed default',
        'check': lambda: 0.0 < tolerance_constant(gaussian_space()) < 10.0
    })

    # Study composition
    tests.append({
        'name': 'Per-N CSV files are written',
        'check': solution_study_writes_csv
    })

    tests.append({
        'name': 'Open weighted model runs all four studies',
        'call': study_names_on_weighted_space,
        'expected': ["operator", "solution", "h_equation", "bochner"]
    })

    tests.append({
        'name': 'Closed model with m = n skips the solution and Δ_f H studies',
        'call': study_names_on_sphere,
        'expected': ["operator", "h_equation"]
    })

    # Run all tests
    print("STANDARD TESTS:")
    print("-" * 60)
    for test in tests:
        try:
            if 'check' in test:
                ok = bool(test['check']())
                result = ok
            else:
                result = test['call']()
                ok = result == test['expected']
            if ok:
                print(f"✓ {test['name']}")
                passed += 1
            else:
                print(f"✗ {test['name']}")
                print(f"  Expected: {test.get('expected', True)}, Got: {result}")
                failed += 1
        except Exception as e:
            print(f"✗ {test['name']}")
            print(f"  Error: {e}")
            failed += 1

    # Error case tests
    print()
    print("ERROR HANDLING TESTS:")
    print("-" * 60)
    error_tests = []

    error_tests.append({
        'name': 'Refinement grids that do not nest',
        'call': lambda: operator_order(euclidean(), cells=(100, 256)),
        'expected_error': PreconditionError,
        'error_msg': 'multiples of 100'
    })

    error_tests.append({
        'name': 'Solution study on a closed model',
        'call': lambda: solution_order(sphere(), BUMP, cells=(32,)),
        'expected_error': PreconditionError,
        'error_msg': 'open model'
    })

    for test in error_tests:
        try:
            result = test['call']()
            print(f"✗ {test['name']}")
            print(f"  Expected error but got result: {result}")
            failed += 1
        except test['expected_error'] as e:
            if test['error_msg'] in str(e):
                print(f"✓ {test['name']}")
                passed += 1
            else:
                print(f"✗ {test['name']}")
                print(f"  Wrong error message: {e}")
                failed += 1
        except Exception as e:
            print(f"✗ {test['name']}")
            print(f"  Unexpected error: {e}")
            failed += 1

    # Summary
    print()
    print("=" * 60)
    print(f"RESULTS: {passed} passed, {failed} failed")
    print("=" * 60)

    return failed == 0


def test_all():
    assert run_tests()


if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
