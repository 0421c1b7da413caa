"""
Smooth scalar profiles with closed-form first and second derivatives.

One type serves warps φ(r), weights f(r), coefficient profiles p(r) of the
nonlinearity, the γ functions of the log family and exact manufactured
solutions. Every callable is vectorized over numpy arrays.
"""

import logging
from typing import Any, Callable, Dict, Optional

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, Field
from scipy.differentiate import derivative

from errors import ConfigError

logger = logging.getLogger(__name__)

ScalarFn = Callable[[np.ndarray], np.ndarray]


class SmoothProfile(BaseModel):
    """Scalar profile with analytic value, first and second derivative"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    params: Dict[str, Any] = Field(default_factory=dict)
    fn: ScalarFn
    d1: ScalarFn
    d2: ScalarFn
    d3: Optional[ScalarFn] = None
    # 1 − (d1)², kept in closed form for warps where it cancels near the pole
    one_minus_d1_sq: Optional[ScalarFn] = None
    is_constant: bool = False

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def first(self, t):
        return self.d1(np.asarray(t, dtype=float))

    def second(self, t):
        return self.d2(np.asarray(t, dtype=float))

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, **self.params}


def third_derivative_at(profile: SmoothProfile, t: float) -> float:
    """
    Third derivative at a single point.

    Uses the closed form when the profile carries one, otherwise an adaptive
    finite-difference derivative of the analytic second derivative.
    """
    if profile.d3 is not None:
        return float(profile.d3(np.asarray(t, dtype=float)))
    result = derivative(profile.d2, float(t))
    if not result.success:
        logger.warning(f"Third derivative of {profile.name} at {t:g} did not converge (error {result.error:g})")
    return float(result.df)


def third_derivative_at_zero(profile: SmoothProfile) -> float:
    return third_derivative_at(profile, 0.0)


def _full(t: np.ndarray, c: float) -> np.ndarray:
    return np.full_like(np.asarray(t, dtype=float), c)


# ==================== Warps ====================

def euclidean_warp() -> SmoothProfile:
    return SmoothProfile(
        name="euclidean",
        fn=lambda r: r * 1.0,
        d1=lambda r: _full(r, 1.0),
        d2=lambda r: _full(r, 0.0),
        d3=lambda r: _full(r, 0.0),
        one_minus_d1_sq=lambda r: _full(r, 0.0),
    )


def hyperbolic_warp() -> SmoothProfile:
    return SmoothProfile(
        name="hyperbolic",
        fn=np.sinh,
        d1=np.cosh,
        d2=np.sinh,
        d3=np.cosh,
        one_minus_d1_sq=lambda r: -np.sinh(r) ** 2,
    )


def spherical_warp() -> SmoothProfile:
    return SmoothProfile(
        name="spherical",
        fn=np.sin,
        d1=np.cos,
        d2=lambda r: -np.sin(r),
        d3=lambda r: -np.cos(r),
        one_minus_d1_sq=lambda r: np.sin(r) ** 2,
    )


WARPS: Dict[str, Callable[..., SmoothProfile]] = {
    "euclidean": euclidean_warp,
    "hyperbolic": hyperbolic_warp,
    "spherical": spherical_warp,
}


# ==================== Weights ====================

def constant_weight(value: float = 0.0) -> SmoothProfile:
    return SmoothProfile(
        name="constant",
        params={"value": value},
        fn=lambda r: _full(r, value),
        d1=lambda r: _full(r, 0.0),
        d2=lambda r: _full(r, 0.0),
        d3=lambda r: _full(r, 0.0),
        is_constant=True,
    )


def gaussian_weight(alpha: float = 0.5) -> SmoothProfile:
    """f = α r², so f' = 2α r and f'' = 2α"""
    return SmoothProfile(
        name="gaussian",
        params={"alpha": alpha},
        fn=lambda r: alpha * r * r,
        d1=lambda r: 2.0 * alpha * r,
        d2=lambda r: _full(r, 2.0 * alpha),
        d3=lambda r: _full(r, 0.0),
        is_constant=alpha == 0.0,
    )


def polynomial_weight(coeffs) -> SmoothProfile:
    """
    Weight with even powers only: f = c_1 r² + c_2 r⁴ + ...

    Odd powers are excluded so that f'(0) = 0 at the pole.

    Args:
        coeffs: coefficients of r², r⁴, r⁶, ... in order
    """
    coeffs = [float(c) for c in coeffs]
    full = np.zeros(2 * len(coeffs) + 1)
    full[2::2] = coeffs
    poly = Polynomial(full)
    p1, p2, p3 = poly.deriv(1), poly.deriv(2), poly.deriv(3)
    return SmoothProfile(
        name="polynomial",
        params={"coeffs": coeffs},
        fn=poly,
        d1=p1,
        d2=p2,
        d3=p3,
        is_constant=not any(coeffs),
    )


def cosine_weight(alpha: float = 0.5) -> SmoothProfile:
    """f = α(1 − cos r); smooth at both poles of the round sphere"""
    return SmoothProfile(
        name="cosine",
        params={"alpha": alpha},
        fn=lambda r: alpha * (1.0 - np.cos(r)),
        d1=lambda r: alpha * np.sin(r),
        d2=lambda r: alpha * np.cos(r),
        d3=lambda r: -alpha * np.sin(r),
        is_constant=alpha == 0.0,
    )


WEIGHTS: Dict[str, Callable[..., SmoothProfile]] = {
    "constant": constant_weight,
    "gaussian": gaussian_weight,
    "polynomial": polynomial_weight,
    "cosine": cosine_weight,
}


# ==================== Coefficient, gamma and exact-solution profiles ====================

def constant(value: float) -> SmoothProfile:
    return SmoothProfile(
        name="constant",
        params={"value": float(value)},
        fn=lambda t: _full(t, value),
        d1=lambda t: _full(t, 0.0),
        d2=lambda t: _full(t, 0.0),
        d3=lambda t: _full(t, 0.0),
        is_constant=True,
    )


def polynomial(coeffs) -> SmoothProfile:
    """General polynomial c_0 + c_1 t + c_2 t² + ..."""
    coeffs = [float(c) for c in coeffs]
    poly = Polynomial(coeffs)
    return SmoothProfile(
        name="polynomial",
        params={"coeffs": coeffs},
        fn=poly,
        d1=poly.deriv(1),
        d2=poly.deriv(2),
        d3=poly.deriv(3),
        is_constant=not any(coeffs[1:]),
    )


def exponential(a: float = 1.0, b: float = 1.0) -> SmoothProfile:
    """a·exp(b t)"""
    return SmoothProfile(
        name="exponential",
        params={"a": a, "b": b},
        fn=lambda t: a * np.exp(b * t),
        d1=lambda t: a * b * np.exp(b * t),
        d2=lambda t: a * b * b * np.exp(b * t),
        d3=lambda t: a * b ** 3 * np.exp(b * t),
        is_constant=a == 0.0 or b == 0.0,
    )


def cosine_bump(offset: float = 2.0, amplitude: float = 1.0) -> SmoothProfile:
    """offset + amplitude·cos t"""
    return SmoothProfile(
        name="cosine_bump",
        params={"offset": offset, "amplitude": amplitude},
        fn=lambda t: offset + amplitude * np.cos(t),
        d1=lambda t: -amplitude * np.sin(t),
        d2=lambda t: -amplitude * np.cos(t),
        d3=lambda t: amplitude * np.sin(t),
        is_constant=amplitude == 0.0,
    )


def gaussian_bump(offset: float = 1.0, amplitude: float = 0.5, width: float = 1.0) -> SmoothProfile:
    """offset + amplitude·exp(−t²/width²)"""
    w2 = width * width

    def g(t):
        return np.exp(-t * t / w2)

    return SmoothProfile(
        name="gaussian_bump",
        params={"offset": offset, "amplitude": amplitude, "width": width},
        fn=lambda t: offset + amplitude * g(t),
        d1=lambda t: amplitude * (-2.0 * t / w2) * g(t),
        d2=lambda t: amplitude * (4.0 * t * t / (w2 * w2) - 2.0 / w2) * g(t),
        d3=lambda t: amplitude * (12.0 * t / (w2 * w2) - 8.0 * t ** 3 / w2 ** 3) * g(t),
        is_constant=amplitude == 0.0,
    )


PROFILES: Dict[str, Callable[..., SmoothProfile]] = {
    "constant": constant,
    "polynomial": polynomial,
    "exponential": exponential,
    "cosine_bump": cosine_bump,
    "gaussian_bump": gaussian_bump,
}


def profile_from_spec(spec, catalog: Optional[Dict[str, Callable[..., SmoothProfile]]] = None) -> SmoothProfile:
    """
    Build a profile from a config value.

    A bare number is a constant profile; a dict names a catalog entry and
    passes the remaining keys as keyword parameters.

    Args:
        spec: number or {"name": ..., **params}
        catalog: name -> constructor table (default: coefficient profiles)

    Returns:
        The constructed SmoothProfile
    """
    catalog = PROFILES if catalog is None else catalog
    if isinstance(spec, (int, float)):
        return constant(float(spec))
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"Profile must be a number or a mapping with 'name', got {spec!r}")
    params = {k: v for k, v in spec.items() if k != "name"}
    name = spec["name"]
    if name not in catalog:
        raise ConfigError(f"Unknown profile '{name}'; choose from {sorted(catalog)}")
    try:
        return catalog[name](**params)
    except TypeError as e:
        raise ConfigError(f"Bad parameters for profile '{name}': {e}") from e
