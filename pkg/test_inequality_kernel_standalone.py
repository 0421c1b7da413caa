"""
Standalone test cases for the algebraic inequalities, the cutoff and the coth bound.

Run with: uv run python test_inequality_kernel_standalone.py
"""

import numpy as np
from pydantic import ValidationError

from errors import PreconditionError
from inequality_kernel import (
    AlgebraSample,
    check_cutoff_conditions,
    coth_bound_check,
    cs_chain_check,
    cs_chain_equality_w,
    cs_chain_minimizing_w,
    cs_chain_monte_carlo,
    cutoff_ratio,
    four_term_monte_carlo,
    four_term_slack,
    four_term_slack_arrays,
    quintic_cutoff,
    run_kernel_suite,
    smoothstep,
)


def monte_carlo_is_reproducible():
    a = four_term_monte_carlo(samples=50_000, seed=11)
    b = four_term_monte_carlo(samples=50_000, seed=11)
    return a.min_scaled_slack == b.min_scaled_slack and a.passed


def cs_chain_equality_case():
    s1, s2 = cs_chain_check(3, 5.0, np.eye(3), [cs_chain_equality_w(3, 5.0, 3.0), 0.0, 0.0], [1.0, 0.0, 0.0])
    return abs(s1) < 1e-14 and abs(s2) < 1e-14


def cs_chain_minimizer_matches_closed_form():
    w, value = cs_chain_minimizing_w(3, 5.0, 3.0)
    return abs(w - cs_chain_equality_w(3, 5.0, 3.0)) < 1e-6 and abs(value) < 1e-10


def cutoff_shape():
    profile = quintic_cutoff()
    t = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 2.5])
    return np.allclose(profile.psi(t), [1.0, 1.0, 1.0, 0.5, 0.0, 0.0]) and np.all(profile.dpsi(t) <= 0.0)


# Test Suite
def run_tests():
    """Run all inequality kernel tests"""
    print("=" * 60)
    print("INEQUALITY KERNEL - TEST SUITE")
    print("=" * 60)
    print()

    passed = 0
    failed = 0
    tests = []

    # Four-term inequality
    tests.append({
        'name': 'a = b = c = 0, mu = 2, eps = 1/2, y = 1, z = 0: slack 0.75',
        'check': lambda: abs(four_term_slack(AlgebraSample(a=0, b=0, c=0, y=1, z=0, mu=2, eps=0.5)) - 0.75) < 1e-12
    })

    tests.append({
        'name': 'a = b = c = 1, mu = 2, eps = 1/2, y = 4, z = 1: slack 1 + 0.75·2^(1/3)',
        'check': lambda: abs(four_term_slack(AlgebraSample(a=1, b=1, c=1, y=4, z=1, mu=2, eps=0.5))
                             - (1.0 + 0.75 * 2.0 ** (1.0 / 3.0))) < 1e-12
    })

    tests.append({
        'name': 'Vectorized slack agrees with the scalar form',
        'check': lambda: abs(float(four_term_slack_arrays([1.0], [1.0], [1.0], [4.0], [1.0], [2.0], [0.5])[0][0])
                             - four_term_slack(AlgebraSample(a=1, b=1, c=1, y=4, z=1, mu=2, eps=0.5))) < 1e-12
    })

    tests.append({
        'name': 'Monte-Carlo suite has no failures',
        'call': lambda: four_term_monte_carlo(samples=200_000, seed=0).failures,
        'expected': 0
    })

    tests.append({
        'name': 'Monte-Carlo suite is reproducible per seed',
        'check': monte_carlo_is_reproducible
    })

    # Cutoff
    tests.append({
        'name': 'Smoothstep endpoints',
        'call': lambda: (float(smoothstep(0.0)), float(smoothstep(1.0)), float(smoothstep(0.5))),
        'expected': (0.0, 1.0, 0.5)
    })

    tests.append({
        'name': 'Cutoff is 1 on [0,1], 0 beyond 2, nonincreasing',
        'check': cutoff_shape
    })

    tests.append({
        'name': 'c2 = 10/√3',
        'check': lambda: abs(quintic_cutoff().c2 - 10.0 / np.sqrt(3.0)) < 1e-6
    })

    tests.append({
        'name': 'c1 near 3.29',
        'check': lambda: abs(quintic_cutoff().c1 - 3.29) < 0.01
    })

    tests.append({
        'name': 'Ratio -ψ\'/√ψ vanishes toward t = 2',
        'check': lambda: float(cutoff_ratio(2.0 - 1e-8)) < 1e-2
    })

    tests.append({
        'name': 'Cutoff conditions and golden-section constants agree',
        'call': lambda: check_cutoff_conditions().passed,
        'expected': True
    })

    # Cauchy-Schwarz chain
    tests.append({
        'name': 'Identity Hessian at the equality w: both slacks 0',
        'check': cs_chain_equality_case
    })

    tests.append({
        'name': 'Numerical minimizer matches w = -(m-n)·tr/n',
        'check': cs_chain_minimizer_matches_closed_form
    })

    tests.append({
        'name': 'Random symmetric matrices keep both slacks >= 0',
        'check': lambda: min(cs_chain_monte_carlo(4, 6.5, trials=2_000, seed=1)) >= -1e-12
    })

    # coth bound
    tests.append({
        'name': '1 + x - x coth x at x = 1',
        'check': lambda: abs(coth_bound_check(1.0) - (2.0 - 1.0 / np.tanh(1.0))) < 1e-15 and abs(coth_bound_check(1.0) - 0.687) < 1e-3
    })

    tests.append({
        'name': 'coth bound nonnegative on a log grid',
        'check': lambda: float(np.min(coth_bound_check(np.geomspace(1e-6, 1e3, 1000)))) >= 0.0
    })

    # Suite
    tests.append({
        'name': 'Kernel suite passes with 20000 samples',
        'call': lambda: run_kernel_suite(samples=20_000, seed=0).passed,
        'expected': True
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
        'name': 'Sample with y - mu·z <= 0',
        'call': lambda: AlgebraSample(a=0, b=0, c=0, y=1, z=1, mu=2, eps=0.5),
        'expected_error': ValidationError,
        'error_msg': 'y - mu*z > 0'
    })

    error_tests.append({
        'name': 'Sample with mu = 1',
        'call': lambda: AlgebraSample(a=0, b=0, c=0, y=1, z=0, mu=1, eps=0.5),
        'expected_error': ValidationError,
        'error_msg': 'greater than 1'
    })

    error_tests.append({
        'name': 'Vectorized samples outside the domain',
        'call': lambda: four_term_slack_arrays([0.0], [0.0], [0.0], [1.0], [1.0], [2.0], [0.5]),
        'expected_error': PreconditionError,
        'error_msg': 'y - mu*z > 0'
    })

    error_tests.append({
        'name': 'Weighted chain with m = n',
        'call': lambda: cs_chain_check(3, 3.0, np.eye(3), np.zeros(3), np.zeros(3)),
        'expected_error': PreconditionError,
        'error_msg': 'm > n'
    })

    error_tests.append({
        'name': 'Non-symmetric Hessian',
        'call': lambda: cs_chain_check(2, 3.0, [[1.0, 2.0], [0.0, 1.0]], np.zeros(2), np.zeros(2)),
        'expected_error': PreconditionError,
        'error_msg': 'symmetric'
    })

    error_tests.append({
        'name': 'coth bound at x = 0',
        'call': lambda: coth_bound_check(0.0),
        'expected_error': PreconditionError,
        'error_msg': 'x > 0'
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
