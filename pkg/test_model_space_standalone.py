"""
Standalone test cases for model spaces, curvature bounds and the Laplacian comparison.

Run with: uv run python test_model_space_standalone.py
"""

import numpy as np
from pydantic import ValidationError

from errors import ConfigError, PoleError, PreconditionError
from model_space import (
    ModelSpace,
    comparison_check,
    curvature_lower_bound,
    curvature_profile,
    drift_laplacian_radial,
    ricci_fm_eigenvalues,
    ricci_fm_eigenvalues_at_pole,
    space_from_spec,
)
from profiles import (
    constant_weight,
    cosine_weight,
    euclidean_warp,
    gaussian_weight,
    hyperbolic_warp,
    polynomial_weight,
    spherical_warp,
    third_derivative_at_zero,
)


def euclidean(n=3, m=3, r_max=2.0, weight=None):
    return ModelSpace(n=n, m=m, warp=euclidean_warp(), weight=weight or constant_weight(), r_max=r_max)


def hyperbolic(n=3, m=3, r_max=2.0):
    return ModelSpace(n=n, m=m, warp=hyperbolic_warp(), r_max=r_max)


def sphere(n=3, m=3, weight=None):
    return ModelSpace(n=n, m=m, warp=spherical_warp(), weight=weight or constant_weight(), r_max=np.pi)


def comparison_equality_on_hyperbolic():
    space = hyperbolic(n=4, m=4, r_max=5.0)
    r = np.linspace(0.01, 5.0, 1000)
    return float(np.max(np.abs(comparison_check(space, 1.0, r)))) <= 1e-10


def comparison_nonnegative_on_gaussian():
    space = euclidean(n=3, m=5, r_max=2.0, weight=gaussian_weight(0.5))
    k = curvature_lower_bound(space, 2.0)
    r = np.linspace(0.01, 2.0, 1000)
    return float(np.min(comparison_check(space, k, r))) >= -1e-10


def pole_limit_matches_closed_form():
    space = euclidean(n=3, m=5, weight=gaussian_weight(0.5))
    profile = curvature_profile(space)
    near = 1e-3
    return abs(float(profile.radial(0.0)) - float(ricci_fm_eigenvalues(space, near)[0])) < 1e-5


# Test Suite
def run_tests():
    """Run all model space tests"""
    print("=" * 60)
    print("MODEL SPACE - TEST SUITE")
    print("=" * 60)
    print()

    passed = 0
    failed = 0
    tests = []

    # Curvature lower bound
    tests.append({
        'name': 'Euclidean, f = 0: k = 0',
        'call': lambda: curvature_lower_bound(euclidean(), 2.0),
        'expected': 0.0
    })

    tests.append({
        'name': 'Hyperbolic, f = 0, m = n: k = 1',
        'call': lambda: round(curvature_lower_bound(hyperbolic(), 2.0), 10),
        'expected': 1.0
    })

    tests.append({
        'name': 'Euclidean, f = r²/2, m - n = R2²: k = 0',
        'call': lambda: curvature_lower_bound(euclidean(n=3, m=7, weight=gaussian_weight(0.5)), 2.0),
        'expected': 0.0
    })

    tests.append({
        'name': 'Euclidean, f = r²/2, m - n = 2 on [0, 2]: k = 1/(m-1)',
        'check': lambda: abs(curvature_lower_bound(euclidean(n=3, m=5, weight=gaussian_weight(0.5)), 2.0) - 0.25) < 1e-12
    })

    tests.append({
        'name': 'Round sphere: Ric = n-1 > 0, k = 0',
        'call': lambda: curvature_lower_bound(sphere(), np.pi),
        'expected': 0.0
    })

    tests.append({
        'name': 'Sphere with cosine weight, m > n: k = 0',
        'call': lambda: curvature_lower_bound(sphere(n=3, m=5, weight=cosine_weight(0.1)), np.pi),
        'expected': 0.0
    })

    # Eigenvalues
    tests.append({
        'name': 'Hyperbolic eigenvalues at r = 1: both -(n-1)',
        'check': lambda: np.allclose(ricci_fm_eigenvalues(hyperbolic(), 1.0), (-2.0, -2.0), atol=1e-12)
    })

    tests.append({
        'name': 'Tangential eigenvalue near the pole keeps all digits',
        'check': lambda: (abs(ricci_fm_eigenvalues(hyperbolic(), 1e-3)[1] + 2.0) < 1e-13
                          and abs(ricci_fm_eigenvalues(sphere(), 1e-3)[1] - 2.0) < 1e-13)
    })

    tests.append({
        'name': 'Hyperbolic bound is k = 1 without rounding',
        'check': lambda: abs(curvature_lower_bound(hyperbolic(), 2.0) - 1.0) < 1e-14
    })

    tests.append({
        'name': 'Sphere pole limits: origin and antipode equal n-1',
        'check': lambda: (abs(ricci_fm_eigenvalues_at_pole(sphere(), "origin") - 2.0) < 1e-12
                          and abs(ricci_fm_eigenvalues_at_pole(sphere(), "antipode") - 2.0) < 1e-12)
    })

    tests.append({
        'name': 'Pole limit continuous with the closed forms',
        'check': pole_limit_matches_closed_form
    })

    tests.append({
        'name': 'Third derivative of sin at 0 is -1',
        'check': lambda: abs(third_derivative_at_zero(spherical_warp()) + 1.0) < 1e-12
    })

    tests.append({
        'name': 'Even polynomial weight: third derivative vanishes at 0',
        'check': lambda: abs(third_derivative_at_zero(polynomial_weight([0.5, 0.1]))) < 1e-8
    })

    # Drift Laplacian
    tests.append({
        'name': 'Euclidean Δ_f r at r = 1: n - 1',
        'call': lambda: drift_laplacian_radial(euclidean(), 1.0),
        'expected': 2.0
    })

    tests.append({
        'name': 'Hyperbolic Δ_f r = (n-1) coth r',
        'check': lambda: abs(drift_laplacian_radial(hyperbolic(), 1.5) - 2.0 / np.tanh(1.5)) < 1e-12
    })

    tests.append({
        'name': 'Euclidean, f = r²/2: Δ_f r = (n-1)/r - r',
        'check': lambda: abs(drift_laplacian_radial(euclidean(n=3, m=5, weight=gaussian_weight(0.5)), 0.5) - (4.0 - 0.5)) < 1e-12
    })

    # Comparison
    tests.append({
        'name': 'Hyperbolic comparison is an equality at 10³ radii',
        'check': comparison_equality_on_hyperbolic
    })

    tests.append({
        'name': 'Euclidean, f = 0, k = 0: slack (m-n)/r',
        'check': lambda: abs(comparison_check(euclidean(n=3, m=5), 0.0, 2.0) - 1.0) < 1e-12
    })

    tests.append({
        'name': 'Gaussian weight, m > n: comparison slack >= 0',
        'check': comparison_nonnegative_on_gaussian
    })

    # Closed model and config
    tests.append({
        'name': 'Sphere with r_max = π is closed',
        'call': lambda: (sphere().closed, euclidean().closed),
        'expected': (True, False)
    })

    tests.append({
        'name': 'space_from_spec builds a weighted sphere',
        'check': lambda: space_from_spec({"warp": "spherical", "n": 3, "m": 5, "r_max": np.pi,
                                          "weight": {"name": "cosine", "alpha": 0.1}}).weighted
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
        'name': 'm < n rejected',
        'call': lambda: euclidean(n=3, m=2.5),
        'expected_error': ValidationError,
        'error_msg': 'n <= m'
    })

    error_tests.append({
        'name': 'm = n with a non-constant weight rejected',
        'call': lambda: euclidean(n=3, m=3, weight=gaussian_weight(0.5)),
        'expected_error': ValidationError,
        'error_msg': 'constant weight'
    })

    error_tests.append({
        'name': 'Spherical r_max beyond π rejected',
        'call': lambda: ModelSpace(n=3, m=3, warp=spherical_warp(), r_max=4.0),
        'expected_error': ValidationError,
        'error_msg': 'r_max <= pi'
    })

    error_tests.append({
        'name': 'Closed sphere with f\'(π) != 0 rejected',
        'call': lambda: sphere(n=3, m=5, weight=gaussian_weight(0.5)),
        'expected_error': ValidationError,
        'error_msg': "f'(pi)=0"
    })

    error_tests.append({
        'name': 'Eigenvalues at the pole need the limit path',
        'call': lambda: ricci_fm_eigenvalues(euclidean(), 0.0),
        'expected_error': PoleError,
        'error_msg': 'pole'
    })

    error_tests.append({
        'name': 'Drift Laplacian at the antipode of the sphere',
        'call': lambda: drift_laplacian_radial(sphere(), np.pi),
        'expected_error': PoleError,
        'error_msg': 'pole'
    })

    error_tests.append({
        'name': 'Comparison with k below the curvature bound',
        'call': lambda: comparison_check(hyperbolic(), 0.5, 1.0),
        'expected_error': PreconditionError,
        'error_msg': 'below the curvature bound'
    })

    error_tests.append({
        'name': 'Antipode limit on an open model',
        'call': lambda: ricci_fm_eigenvalues_at_pole(euclidean(), "antipode"),
        'expected_error': PreconditionError,
        'error_msg': 'closed spherical'
    })

    error_tests.append({
        'name': 'Unknown warp name',
        'call': lambda: space_from_spec({"warp": "torus", "n": 3, "r_max": 1.0}),
        'expected_error': ConfigError,
        'error_msg': 'Unknown warp'
    })

    error_tests.append({
        'name': 'Missing r_max',
        'call': lambda: space_from_spec({"warp": "euclidean", "n": 3}),
        'expected_error': ConfigError,
        'error_msg': 'missing key'
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
