"""
Rotationally symmetric model spaces dr² + φ(r)² g_sphere with weight e^{-f}.

Curvature of the Bakry-Emery tensor Ric_f^m = Ric + Hess f − df⊗df/(m−n) in
the radial and tangential directions, its lower bound k, the radial drift
Laplacian coefficient and the weighted Laplacian comparison.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import ConfigError, PoleError, PreconditionError
from profiles import WARPS, WEIGHTS, SmoothProfile, constant_weight, profile_from_spec, third_derivative_at

logger = logging.getLogger(__name__)

# below this value of φ the closed forms lose digits and the pole limit is used
POLE_PHI = 1e-4
CLOSED_TOL = 1e-12


class ModelSpace(BaseModel):
    """Rotationally symmetric smooth metric measure space (n, m, φ, f, r_max)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=2, description="Topological dimension")
    m: float = Field(description="Synthetic dimension, n <= m < inf")
    warp: SmoothProfile
    weight: SmoothProfile = Field(default_factory=constant_weight)
    r_max: float = Field(gt=0, description="Domain radius")
    curvature_resolution: int = Field(default=2001, ge=16, description="Evaluation nodes for k")

    @model_validator(mode="after")
    def validate_space(self):
        if not np.isfinite(self.m) or self.m < self.n:
            raise ValueError(f"m must satisfy n <= m < inf, got m={self.m} with n={self.n}")
        if self.m == self.n and not self.weight.is_constant:
            raise ValueError("m = n requires a constant weight (the (m-n) denominator vanishes)")
        if abs(float(self.warp(0.0))) > 1e-12 or abs(float(self.warp.first(0.0)) - 1.0) > 1e-12:
            raise ValueError(f"Warp '{self.warp.name}' is not smooth at the pole: need φ(0)=0, φ'(0)=1")
        if abs(float(self.weight.first(0.0))) > 1e-12:
            raise ValueError(f"Weight '{self.weight.name}' needs f'(0)=0 at the pole")
        if self.warp.name == "spherical" and self.r_max > np.pi + CLOSED_TOL:
            raise ValueError(f"Spherical model needs r_max <= pi, got {self.r_max}")
        interior = np.linspace(0.0, self.r_max, 1001)[1:-1]
        if np.any(self.warp(interior) <= 0.0):
            raise ValueError(f"Warp '{self.warp.name}' is not positive on (0, {self.r_max})")
        if self.closed and abs(float(self.weight.first(np.pi))) > 1e-10:
            raise ValueError("Closed spherical model needs f'(pi)=0 for a smooth weight at the antipode")
        return self

    @property
    def closed(self) -> bool:
        """True for the round sphere covered up to the antipodal pole"""
        return self.warp.name == "spherical" and abs(self.r_max - np.pi) <= CLOSED_TOL

    @property
    def weighted(self) -> bool:
        return not self.weight.is_constant

    def describe(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "warp": self.warp.describe(),
            "weight": self.weight.describe(),
            "r_max": self.r_max,
            "closed": self.closed,
        }

    def _m_minus_n_inv(self) -> float:
        return 0.0 if self.m == self.n else 1.0 / (self.m - self.n)


@dataclass(frozen=True)
class CurvatureProfile:
    """Eigenvalue functions of Ric_f^m along the radius, poles included"""

    space: ModelSpace

    def radial(self, r) -> np.ndarray:
        return _eigenvalues(self.space, np.asarray(r, dtype=float))[0]

    def tangential(self, r) -> np.ndarray:
        return _eigenvalues(self.space, np.asarray(r, dtype=float))[1]

    def minimum(self, r) -> np.ndarray:
        radial, tangential = _eigenvalues(self.space, np.asarray(r, dtype=float))
        return np.minimum(radial, tangential)


def pole_mask(space: ModelSpace, r: np.ndarray) -> np.ndarray:
    """Nodes at the origin, or at the antipode of the closed sphere"""
    r = np.asarray(r, dtype=float)
    at_origin = r <= 0.0
    at_antipode = np.zeros_like(at_origin) if not space.closed else r >= np.pi - CLOSED_TOL
    return at_origin | at_antipode


def _closed_forms(space: ModelSpace, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = space.n
    phi, dphi, ddphi = space.warp(r), space.warp.first(r), space.warp.second(r)
    df, ddf = space.weight.first(r), space.weight.second(r)
    radial = -(n - 1) * ddphi / phi + ddf - df * df * space._m_minus_n_inv()
    if space.warp.one_minus_d1_sq is not None:
        defect = space.warp.one_minus_d1_sq(r)
    else:
        defect = (1.0 - dphi) * (1.0 + dphi)
    tangential = -ddphi / phi + (n - 2) * defect / (phi * phi) + dphi * df / phi
    return radial, tangential


def ricci_fm_eigenvalues_at_pole(space: ModelSpace, which: str = "origin") -> float:
    """
    Common limit of both eigenvalues at a pole.

    At the origin: −(n−1)φ'''(0) + f''(0). At the antipode of the closed
    sphere: (n−1)φ'''(π) + f''(π).
    """
    if which == "origin":
        return -(space.n - 1) * third_derivative_at(space.warp, 0.0) + float(space.weight.second(0.0))
    if which == "antipode":
        if not space.closed:
            raise PreconditionError("Antipodal limit exists only on the closed spherical model")
        return (space.n - 1) * third_derivative_at(space.warp, np.pi) + float(space.weight.second(np.pi))
    raise ValueError(f"Unknown pole '{which}'")


def _eigenvalues(space: ModelSpace, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    r = np.atleast_1d(r)
    radial = np.empty_like(r)
    tangential = np.empty_like(r)
    phi = np.abs(space.warp(r))
    near_origin = (r <= 0.0) | ((phi < POLE_PHI) & (r < 0.5 * space.r_max))
    near_antipode = space.closed & ((r >= np.pi - CLOSED_TOL) | ((phi < POLE_PHI) & (r >= 0.5 * space.r_max)))
    regular = ~(near_origin | near_antipode)
    if np.any(regular):
        radial[regular], tangential[regular] = _closed_forms(space, r[regular])
    if np.any(near_origin):
        radial[near_origin] = tangential[near_origin] = ricci_fm_eigenvalues_at_pole(space, "origin")
    if np.any(near_antipode):
        radial[near_antipode] = tangential[near_antipode] = ricci_fm_eigenvalues_at_pole(space, "antipode")
    return radial, tangential


def ricci_fm_eigenvalues(space: ModelSpace, r):
    """
    Radial and tangential eigenvalues of Ric_f^m at radius r.

    radial     = −(n−1)φ''/φ + f'' − f'²/(m−n)
    tangential = −φ''/φ + (n−2)(1−φ'²)/φ² + φ'f'/φ

    Args:
        space: model space
        r: radius (scalar or array) strictly inside (0, r_max) for open models

    Returns:
        (lambda_radial, lambda_tangential), scalars for scalar input
    """
    r_arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r_arr)
    poles = pole_mask(space, flat)
    if np.any(poles):
        raise PoleError("ricci_fm_eigenvalues", float(flat[poles][0]))
    radial, tangential = _eigenvalues(space, r_arr)
    if r_arr.ndim == 0:
        return float(radial[0]), float(tangential[0])
    return radial, tangential


def curvature_profile(space: ModelSpace) -> CurvatureProfile:
    return CurvatureProfile(space=space)


def curvature_lower_bound(space: ModelSpace, R2: float, resolution: int = None) -> float:
    """
    Smallest k >= 0 with Ric_f^m >= −(m−1)k on the ball of radius R2.

    The minimum eigenvalue is taken over a uniform evaluation grid on [0, R2]
    with the pole limit at r = 0.
    """
    if not 0.0 < R2 <= space.r_max + CLOSED_TOL:
        raise PreconditionError(f"curvature_lower_bound needs 0 < R2 <= r_max, got R2={R2}")
    resolution = resolution or space.curvature_resolution
    r = np.linspace(0.0, min(R2, space.r_max), resolution)
    lam_min = float(np.min(CurvatureProfile(space).minimum(r)))
    return max(0.0, -lam_min / (space.m - 1.0))


def drift_coefficient(space: ModelSpace, r: np.ndarray) -> np.ndarray:
    """(n−1)φ'/φ − f' without pole checks; callers keep r off the poles"""
    return (space.n - 1) * space.warp.first(r) / space.warp(r) - space.weight.first(r)


def drift_laplacian_radial(space: ModelSpace, r):
    """
    First-order coefficient of Δ_f on radial functions.

    Δ_f u = u'' + ((n−1)φ'/φ − f')u'. At the pole use Δ_f u(0) = n u''(0).
    """
    r_arr = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r_arr)
    poles = pole_mask(space, flat)
    if np.any(poles):
        raise PoleError("drift_laplacian_radial", float(flat[poles][0]))
    b = drift_coefficient(space, r_arr)
    return float(b) if r_arr.ndim == 0 else b


def comparison_bound(space: ModelSpace, k: float, r):
    """(m−1)√k coth(√k r), with the k = 0 limit (m−1)/r"""
    r = np.asarray(r, dtype=float)
    if k == 0.0:
        return (space.m - 1.0) / r
    sk = np.sqrt(k)
    return (space.m - 1.0) * sk / np.tanh(sk * r)


def comparison_check(space: ModelSpace, k: float, r):
    """
    Signed slack of the weighted Laplacian comparison Δ_f r <= (m−1)√k coth(√k r).

    Raises:
        PreconditionError: if the space's curvature bound on [0, r] exceeds k
    """
    if k < 0.0:
        raise PreconditionError(f"comparison_check needs k >= 0, got {k}")
    r_arr = np.asarray(r, dtype=float)
    needed = curvature_lower_bound(space, float(np.max(r_arr)))
    if needed > k * (1.0 + 1e-6) + 1e-9:
        raise PreconditionError(f"Supplied k={k:g} is below the curvature bound {needed:g} on [0, {np.max(r_arr):g}]")
    slack = comparison_bound(space, k, r_arr) - drift_laplacian_radial(space, r_arr)
    return float(slack) if r_arr.ndim == 0 else slack


def space_from_spec(spec: Dict[str, Any]) -> ModelSpace:
    """
    Build a catalog space from a config block.

    Expected keys: warp (name), n, m, r_max, optional weight
    ({"name": ..., params}) and curvature_resolution.
    """
    try:
        warp_name = spec["warp"]
        if warp_name not in WARPS:
            raise ConfigError(f"Unknown warp '{warp_name}'; choose from {sorted(WARPS)}")
        weight_spec = spec.get("weight", {"name": "constant"})
        weight = profile_from_spec(weight_spec, catalog=WEIGHTS)
        n = int(spec["n"])
        return ModelSpace(
            n=n,
            m=float(spec.get("m", n)),
            warp=WARPS[warp_name](),
            weight=weight,
            r_max=float(spec["r_max"]),
            curvature_resolution=int(spec.get("curvature_resolution", 2001)),
        )
    except KeyError as e:
        raise ConfigError(f"Space block is missing key {e}") from e
