"""
Standalone test cases for the nonlinearity families and the Liouville sign conditions.

Run with: uv run python test_nonlinearity_standalone.py
"""

import numpy as np

from errors import ConfigError, DomainError, PreconditionError
from model_space import ModelSpace
from nonlinearity import (
    Lichnerowicz,
    LogGamma,
    PowerSum,
    PowerTerm,
    SpatialSource,
    family_from_spec,
    has_no_positive_zeros,
    liouville_conditions,
    liouville_mu_search,
    log_gamma_hypotheses,
    sigma_jet,
    sigma_x_drift_laplacian,
    sigma_xx,
)
from profiles import constant, constant_weight, cosine_bump, euclidean_warp, exponential, polynomial


def power_sum(*pairs):
    return PowerSum(terms=[PowerTerm(p=constant(p), a=a) for p, a in pairs])


def jet_tuple(family, r, u):
    j = sigma_jet(family, r, u)
    return (j.sigma, j.sigma_u, j.sigma_uu, j.sigma_x, j.sigma_xu)


def numeric_source_derivatives():
    family = SpatialSource(source=np.cos, label="cos")
    r = np.array([0.3, 0.7, 1.4])
    j = sigma_jet(family, r, np.ones_like(r))
    return (np.allclose(j.sigma_x, -np.sin(r), atol=1e-7)
            and np.allclose(sigma_xx(family, r, np.ones_like(r)), -np.cos(r), atol=1e-6))


def drift_laplacian_of_spatial_profile():
    space = ModelSpace(n=3, m=3, warp=euclidean_warp(), weight=constant_weight(), r_max=2.0)
    family = SpatialSource.from_profile(cosine_bump(2.0, 1.0))
    r = np.array([0.0, 0.5, 1.0])
    values = sigma_x_drift_laplacian(family, space, r, np.ones_like(r))
    expected = np.array([-3.0, -np.cos(0.5) - 2.0 * np.sin(0.5) / 0.5, -np.cos(1.0) - 2.0 * np.sin(1.0)])
    return np.allclose(values, expected, atol=1e-12)


def constant_coefficients_have_no_x_laplacian():
    space = ModelSpace(n=3, m=3, warp=euclidean_warp(), r_max=2.0)
    r = np.linspace(0.0, 2.0, 9)
    values = sigma_x_drift_laplacian(power_sum((1.0, 0.5), (2.0, 1.0)), space, r, 1.0 + r)
    return np.all(values == 0.0)


# Test Suite
def run_tests():
    """Run all nonlinearity tests"""
    print("=" * 60)
    print("NONLINEARITY - TEST SUITE")
    print("=" * 60)
    print()

    passed = 0
    failed = 0
    tests = []

    # Jets
    tests.append({
        'name': 'Linear term u at u = 3',
        'call': lambda: jet_tuple(power_sum((1.0, 1.0)), 0.5, 3.0),
        'expected': (3.0, 1.0, 0.0, 0.0, 0.0)
    })

    tests.append({
        'name': 'u^(1/2) at u = 4',
        'call': lambda: jet_tuple(power_sum((1.0, 0.5)), 0.0, 4.0)[:3],
        'expected': (2.0, 0.25, -1.0 / 32.0)
    })

    tests.append({
        'name': 'u log u at u = e: sigma = e, sigma_u = 2, sigma_uu = 1/e',
        'check': lambda: np.allclose(
            jet_tuple(LogGamma(p=constant(1.0), gamma=polynomial([0.0, 1.0])), 0.0, np.e)[:3],
            (np.e, 2.0, 1.0 / np.e), atol=1e-14)
    })

    tests.append({
        'name': 'Lichnerowicz with r = 0 equals its PowerSum reduction',
        'check': lambda: np.allclose(
            jet_tuple(Lichnerowicz(p=constant(1.0), q=constant(2.0), r_coef=constant(0.0), h_coef=constant(-1.0),
                                   alpha=0.5, beta=-1.0), 0.2, 1.7),
            jet_tuple(power_sum((1.0, 0.5), (2.0, -1.0), (-1.0, 1.0)), 0.2, 1.7), atol=1e-14)
    })

    tests.append({
        'name': 'Spatial coefficient p(r) = 1 + r²: sigma_x = 2r u',
        'check': lambda: abs(sigma_jet(PowerSum(terms=[PowerTerm(p=polynomial([1.0, 0.0, 1.0]), a=1.0)]), 0.5, 2.0).sigma_x - 2.0) < 1e-14
    })

    tests.append({
        'name': 'Numeric derivatives of a sampled source match cos',
        'check': numeric_source_derivatives
    })

    tests.append({
        'name': 'Constant coefficients: Δ_f Σ^x = 0',
        'check': constant_coefficients_have_no_x_laplacian
    })

    tests.append({
        'name': 'Δ_f of source 2 + cos r, pole value n·s\'\'(0)',
        'check': drift_laplacian_of_spatial_profile
    })

    # Liouville conditions
    tests.append({
        'name': 'u^(1/2), mu = 1.5: holds and certified',
        'call': lambda: (lambda v: (v.status, v.certified))(liouville_conditions(power_sum((1.0, 0.5)), 1.5)),
        'expected': ('holds', True)
    })

    tests.append({
        'name': 'u², mu = 2: fails on uΣ_u - Σ',
        'call': lambda: (lambda v: (v.status, v.failed_condition))(liouville_conditions(power_sum((1.0, 2.0)), 2.0)),
        'expected': ('fails', 'u*sigma_u-sigma<=0')
    })

    tests.append({
        'name': 'u - 1 fails Σ >= 0 with a witness below 1',
        'check': lambda: (lambda v: v.status == 'fails' and v.failed_condition == 'sigma>=0' and v.witness_u < 1.0)(
            liouville_conditions(power_sum((1.0, 1.0), (-1.0, 0.0)), 2.0))
    })

    tests.append({
        'name': 'Single-point range decides exactly',
        'call': lambda: liouville_conditions(power_sum(), 3.0, (1.0, 1.0)).status,
        'expected': 'holds'
    })

    tests.append({
        'name': 'Lichnerowicz with r = 0, p, h >= 0, exponents <= 1: certified',
        'call': lambda: liouville_conditions(Lichnerowicz(p=constant(1.0), q=constant(0.0), r_coef=constant(0.0),
                                                          h_coef=constant(0.5), alpha=0.5, beta=0.0), 1.5).certified,
        'expected': True
    })

    tests.append({
        'name': 'mu search for u^(1/2) lands in (1, 2)',
        'check': lambda: 1.0 < liouville_mu_search(power_sum((1.0, 0.5))) < 2.0
    })

    tests.append({
        'name': 'mu search for u² is empty',
        'call': lambda: liouville_mu_search(power_sum((1.0, 2.0))),
        'expected': None
    })

    tests.append({
        'name': 'mu search for Σ = 0 returns the smallest grid value',
        'check': lambda: abs(liouville_mu_search(power_sum()) - 1.01) < 1e-12
    })

    tests.append({
        'name': 'No positive zeros: u^(1/2) certified, u - 1 has one',
        'call': lambda: (has_no_positive_zeros(power_sum((1.0, 0.5))), has_no_positive_zeros(power_sum((1.0, 1.0), (-1.0, 0.0)))),
        'expected': (True, False)
    })

    tests.append({
        'name': 'Log family with constant gamma = 1: certified',
        'call': lambda: log_gamma_hypotheses(LogGamma(p=constant(1.0), gamma=constant(1.0)), 2.0).status,
        'expected': 'holds'
    })

    tests.append({
        'name': 'Log family with decaying gamma = e^(-t/4), mu = 1.2: certified',
        'call': lambda: log_gamma_hypotheses(LogGamma(p=constant(1.0), gamma=exponential(1.0, -0.25)), 1.2).certified,
        'expected': True
    })

    tests.append({
        'name': 'Log family with gamma(t) = 10 + t fails gamma\' <= 0',
        'call': lambda: log_gamma_hypotheses(LogGamma(p=constant(1.0), gamma=polynomial([10.0, 1.0])), 2.0).failed_condition,
        'expected': "gamma'<=0"
    })

    tests.append({
        'name': 'Log family window mu < 1/s',
        'call': lambda: log_gamma_hypotheses(LogGamma(p=constant(0.0), gamma=constant(1.0), q=constant(1.0), s=0.5), 2.5).failed_condition,
        'expected': 'mu<1/s'
    })

    # Config
    tests.append({
        'name': 'family_from_spec: PowerSum',
        'call': lambda: family_from_spec({"variant": "PowerSum", "terms": [{"p": 1.0, "a": 0.5}]}).coefficients(),
        'expected': [(1.0, 0.5)]
    })

    tests.append({
        'name': 'family_from_spec: LogGamma with polynomial gamma',
        'call': lambda: family_from_spec({"variant": "LogGamma", "gamma": {"name": "polynomial", "coeffs": [1.0, -0.5]}}).variant,
        'expected': 'LogGamma'
    })

    tests.append({
        'name': 'family_from_spec: SpatialSource is u-independent',
        'call': lambda: sigma_jet(family_from_spec({"variant": "SpatialSource", "source": 2.0}), 0.3, 5.0).sigma_u,
        'expected': 0.0
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
        'name': 'Non-positive u',
        'call': lambda: sigma_jet(power_sum((1.0, 0.5)), 0.0, 0.0),
        'expected_error': DomainError,
        'error_msg': 'u > 0'
    })

    error_tests.append({
        'name': 'mu = 1 rejected',
        'call': lambda: liouville_conditions(power_sum((1.0, 0.5)), 1.0),
        'expected_error': PreconditionError,
        'error_msg': 'mu > 1'
    })

    error_tests.append({
        'name': 'Spatially varying Σ rejected by the sign conditions',
        'call': lambda: liouville_conditions(PowerSum(terms=[PowerTerm(p=polynomial([1.0, 0.0, 1.0]), a=1.0)]), 2.0),
        'expected_error': PreconditionError,
        'error_msg': 'independent of x'
    })

    error_tests.append({
        'name': 'Unknown variant',
        'call': lambda: family_from_spec({"variant": "Cubic"}),
        'expected_error': ConfigError,
        'error_msg': 'Unknown nonlinearity variant'
    })

    error_tests.append({
        'name': 'Lichnerowicz without exponents',
        'call': lambda: family_from_spec({"variant": "Lichnerowicz", "p": 1.0}),
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
