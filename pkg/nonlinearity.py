"""
Nonlinearities Σ(x, u) for Δ_f u + Σ(x, u) = 0.

Families:
    PowerSum       Σ p_j(r) u^{a_j}
    LogGamma       p(r) u γ(log u) + q(r) u^s
    Lichnerowicz   p u^α + q u^β + r u log u + h u
    SpatialSource  s(r), independent of u (manufactured solutions)

Each family returns the jet (Σ, Σ_u, Σ_uu, Σ_x, Σ_xu) and ∂_rr Σ at frozen u
in closed form, except SpatialSource built from an opaque callable, which is
differentiated adaptively.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.differentiate import derivative

from errors import ConfigError, DomainError, PreconditionError
from model_space import ModelSpace, drift_coefficient, pole_mask
from profiles import SmoothProfile, constant, profile_from_spec

logger = logging.getLogger(__name__)

DEFAULT_U_RANGE = (1e-3, 1e3)
MU_MAX = 10.0
SIGN_TOL = 1e-12


@dataclass(frozen=True)
class SigmaJet:
    """Σ and the partials entering the estimate constants, at given (r, u)"""

    sigma: Any
    sigma_u: Any
    sigma_uu: Any
    sigma_x: Any
    sigma_xu: Any


class PowerTerm(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: SmoothProfile
    a: float


class PowerSum(BaseModel):
    """Σ p_j(r) u^{a_j}"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variant: Literal["PowerSum"] = "PowerSum"
    terms: List[PowerTerm] = Field(default_factory=list)

    @property
    def spatially_constant(self) -> bool:
        return all(t.p.is_constant for t in self.terms)

    def jet(self, r, u) -> SigmaJet:
        zero = np.zeros(np.broadcast(r, u).shape)
        s, su, suu, sx, sxu = zero.copy(), zero.copy(), zero.copy(), zero.copy(), zero.copy()
        for t in self.terms:
            p, dp, a = t.p(r), t.p.first(r), t.a
            ua = u ** a
            s = s + p * ua
            sx = sx + dp * ua
            if a != 0.0:
                ua1 = a * u ** (a - 1.0)
                su = su + p * ua1
                sxu = sxu + dp * ua1
                if a != 1.0:
                    suu = suu + p * a * (a - 1.0) * u ** (a - 2.0)
        return SigmaJet(s, su, suu, sx, sxu)

    def sigma_xx(self, r, u):
        out = np.zeros(np.broadcast(r, u).shape)
        for t in self.terms:
            out = out + t.p.second(r) * u ** t.a
        return out

    def coefficients(self) -> List[Tuple[float, float]]:
        """(p_j, a_j) pairs with p_j read at r = 0; meaningful when spatially constant"""
        return [(float(t.p(0.0)), t.a) for t in self.terms]

    def describe(self) -> Dict[str, Any]:
        return {"variant": self.variant, "terms": [{"p": t.p.describe(), "a": t.a} for t in self.terms]}


class LogGamma(BaseModel):
    """p(r) u γ(log u) + q(r) u^s"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variant: Literal["LogGamma"] = "LogGamma"
    p: SmoothProfile
    gamma: SmoothProfile
    q: SmoothProfile = Field(default_factory=lambda: constant(0.0))
    s: float = 0.0

    @property
    def spatially_constant(self) -> bool:
        return self.p.is_constant and self.q.is_constant

    def jet(self, r, u) -> SigmaJet:
        lu = np.log(u)
        g, g1, g2 = self.gamma(lu), self.gamma.first(lu), self.gamma.second(lu)
        p, dp = self.p(r), self.p.first(r)
        q, dq = self.q(r), self.q.first(r)
        s = self.s
        us = u ** s
        sigma = p * u * g + q * us
        sigma_u = p * (g + g1) + q * s * u ** (s - 1.0)
        sigma_uu = p * (g1 + g2) / u + q * s * (s - 1.0) * u ** (s - 2.0)
        sigma_x = dp * u * g + dq * us
        sigma_xu = dp * (g + g1) + dq * s * u ** (s - 1.0)
        return SigmaJet(sigma, sigma_u, sigma_uu, sigma_x, sigma_xu)

    def sigma_xx(self, r, u):
        return self.p.second(r) * u * self.gamma(np.log(u)) + self.q.second(r) * u ** self.s

    def describe(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "p": self.p.describe(),
            "gamma": self.gamma.describe(),
            "q": self.q.describe(),
            "s": self.s,
        }


class Lichnerowicz(BaseModel):
    """p u^α + q u^β + r u log u + h u"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variant: Literal["Lichnerowicz"] = "Lichnerowicz"
    p: SmoothProfile
    q: SmoothProfile
    r_coef: SmoothProfile = Field(default_factory=lambda: constant(0.0))
    h_coef: SmoothProfile = Field(default_factory=lambda: constant(0.0))
    alpha: float
    beta: float

    @property
    def spatially_constant(self) -> bool:
        return all(c.is_constant for c in (self.p, self.q, self.r_coef, self.h_coef))

    def jet(self, r, u) -> SigmaJet:
        al, be = self.alpha, self.beta
        lu = np.log(u)
        p, q, rc, hc = self.p(r), self.q(r), self.r_coef(r), self.h_coef(r)
        dp, dq, drc, dhc = self.p.first(r), self.q.first(r), self.r_coef.first(r), self.h_coef.first(r)
        ua, ub = u ** al, u ** be
        ua1, ub1 = al * u ** (al - 1.0), be * u ** (be - 1.0)
        sigma = p * ua + q * ub + rc * u * lu + hc * u
        sigma_u = p * ua1 + q * ub1 + rc * (lu + 1.0) + hc
        sigma_uu = p * al * (al - 1.0) * u ** (al - 2.0) + q * be * (be - 1.0) * u ** (be - 2.0) + rc / u
        sigma_x = dp * ua + dq * ub + drc * u * lu + dhc * u
        sigma_xu = dp * ua1 + dq * ub1 + drc * (lu + 1.0) + dhc
        return SigmaJet(sigma, sigma_u, sigma_uu, sigma_x, sigma_xu)

    def sigma_xx(self, r, u):
        return (
            self.p.second(r) * u ** self.alpha
            + self.q.second(r) * u ** self.beta
            + self.r_coef.second(r) * u * np.log(u)
            + self.h_coef.second(r) * u
        )

    def as_power_sum(self) -> Optional[PowerSum]:
        """Equivalent PowerSum when the u log u coefficient vanishes identically"""
        if not (self.r_coef.is_constant and float(self.r_coef(0.0)) == 0.0):
            return None
        return PowerSum(
            terms=[PowerTerm(p=self.p, a=self.alpha), PowerTerm(p=self.q, a=self.beta), PowerTerm(p=self.h_coef, a=1.0)]
        )

    def describe(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "p": self.p.describe(),
            "q": self.q.describe(),
            "r": self.r_coef.describe(),
            "h": self.h_coef.describe(),
            "alpha": self.alpha,
            "beta": self.beta,
        }


class SpatialSource(BaseModel):
    """
    u-independent source s(r).

    When built from a SmoothProfile the closed-form derivatives are used;
    otherwise (manufactured sources) the even extension s(|r|) is
    differentiated adaptively.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    variant: Literal["SpatialSource"] = "SpatialSource"
    source: Callable[[np.ndarray], np.ndarray]
    d1: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "source"
    params: Dict[str, Any] = Field(default_factory=dict)
    is_constant: bool = False

    @classmethod
    def from_profile(cls, profile: SmoothProfile) -> "SpatialSource":
        return cls(
            source=profile.fn,
            d1=profile.d1,
            d2=profile.d2,
            label=profile.name,
            params=profile.params,
            is_constant=profile.is_constant,
        )

    @property
    def spatially_constant(self) -> bool:
        return self.is_constant

    def _even(self, r):
        return self.source(np.abs(r))

    def _first(self, r):
        if self.d1 is not None:
            return self.d1(r)
        r = np.asarray(r, dtype=float)
        out = derivative(self._even, r, initial_step=0.05).df
        return np.where(r == 0.0, 0.0, out)

    def _second(self, r):
        if self.d2 is not None:
            return self.d2(r)

        def first(x):
            return derivative(self._even, x, initial_step=0.05).df

        return derivative(first, np.asarray(r, dtype=float), initial_step=0.05).df

    def jet(self, r, u) -> SigmaJet:
        shape = np.broadcast(r, u).shape
        zero = np.zeros(shape)
        sigma = np.broadcast_to(self.source(np.asarray(r, dtype=float)), shape).astype(float)
        sigma_x = np.broadcast_to(self._first(r), shape).astype(float)
        return SigmaJet(sigma, zero, zero.copy(), sigma_x, zero.copy())

    def sigma_xx(self, r, u):
        return np.broadcast_to(self._second(r), np.broadcast(r, u).shape).astype(float)

    def describe(self) -> Dict[str, Any]:
        return {"variant": self.variant, "source": self.label, **self.params}


NonlinearityFamily = Union[PowerSum, LogGamma, Lichnerowicz, SpatialSource]


def _check_u(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)):
        raise DomainError(f"Nonlinearity needs u > 0, got min u = {np.min(u):g}")
    return u


def _scalarize(value, scalar: bool):
    return float(np.asarray(value).reshape(-1)[0]) if scalar else np.asarray(value)


def sigma_jet(family: NonlinearityFamily, r, u) -> SigmaJet:
    """
    Exact Σ, Σ_u, Σ_uu, Σ_x, Σ_xu at (r, u).

    Args:
        family: nonlinearity
        r: radius (scalar or array)
        u: positive value(s), broadcast against r

    Returns:
        SigmaJet with floats for scalar input, arrays otherwise

    Raises:
        DomainError: if any u <= 0
    """
    u_arr = _check_u(u)
    r_arr = np.asarray(r, dtype=float)
    scalar = r_arr.ndim == 0 and u_arr.ndim == 0
    jet = family.jet(r_arr, u_arr)
    return SigmaJet(*(_scalarize(v, scalar) for v in (jet.sigma, jet.sigma_u, jet.sigma_uu, jet.sigma_x, jet.sigma_xu)))


def sigma_xx(family: NonlinearityFamily, r, u):
    """∂_rr Σ at frozen u"""
    u_arr = _check_u(u)
    r_arr = np.asarray(r, dtype=float)
    return _scalarize(family.sigma_xx(r_arr, u_arr), r_arr.ndim == 0 and u_arr.ndim == 0)


def sigma_x_drift_laplacian(family: NonlinearityFamily, space: ModelSpace, r, u):
    """
    Δ_f Σ^x = ∂_rr Σ + ((n−1)φ'/φ − f') ∂_r Σ at frozen u.

    At a pole the radial derivative vanishes and the value is n·∂_rr Σ.
    """
    u_arr = _check_u(u)
    r_arr = np.asarray(r, dtype=float)
    rr, uu = np.broadcast_arrays(np.atleast_1d(r_arr), np.atleast_1d(u_arr))
    jet = family.jet(rr, uu)
    sxx = family.sigma_xx(rr, uu)
    out = np.empty(rr.shape)
    poles = pole_mask(space, rr)
    out[poles] = space.n * sxx[poles]
    regular = ~poles
    out[regular] = sxx[regular] + drift_coefficient(space, rr[regular]) * jet.sigma_x[regular]
    return _scalarize(out, r_arr.ndim == 0 and u_arr.ndim == 0)


# ==================== Liouville sign conditions ====================

class LiouvilleVerdict(BaseModel):
    """holds / fails(witness) / unknown for the three Liouville sign conditions"""

    status: Literal["holds", "fails", "unknown"]
    mu: float
    u_range: Tuple[float, float]
    certified: bool = False
    witness_u: Optional[float] = None
    failed_condition: Optional[str] = None
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.status == "holds"


CONDITION_NAMES = ("sigma>=0", "u*sigma_u-sigma<=0", "mu*u^2*sigma_uu-u*sigma_u+sigma>=0")


def _condition_values(family: NonlinearityFamily, mu: float, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    jet = family.jet(np.zeros_like(u), u)
    c1 = jet.sigma
    c2 = u * jet.sigma_u - jet.sigma
    c3 = mu * u * u * jet.sigma_uu - u * jet.sigma_u + jet.sigma
    scale = 1.0 + np.abs(jet.sigma) + np.abs(u * jet.sigma_u) + np.abs(mu * u * u * jet.sigma_uu)
    return c1, c2, c3, scale


def _power_sum_certificate(terms: List[Tuple[float, float]], mu: float) -> bool:
    for p, a in terms:
        if p < 0.0 or p * (a - 1.0) > 0.0 or p * (a - 1.0) * (mu * a - 1.0) < 0.0:
            return False
    return True


def _log_gamma_certificate(family: LogGamma, mu: float) -> bool:
    p, q, s = float(family.p(0.0)), float(family.q(0.0)), family.s
    if p < 0.0 or q < 0.0 or (q != 0.0 and s > 1.0):
        return False
    if q != 0.0 and 0.0 < s < 1.0 and not mu < 1.0 / s:
        return False
    if p == 0.0:
        return True
    g = family.gamma
    if g.is_constant:
        return float(g(0.0)) >= 0.0
    if g.name == "exponential":
        a, b = g.params["a"], g.params["b"]
        return a >= 0.0 and (a == 0.0 or b == 0.0 or (b < 0.0 and mu * b + mu - 1.0 <= 0.0))
    return False


def _certificate(family: NonlinearityFamily, mu: float) -> bool:
    if isinstance(family, PowerSum):
        return _power_sum_certificate(family.coefficients(), mu)
    if isinstance(family, Lichnerowicz):
        reduced = family.as_power_sum()
        return reduced is not None and _power_sum_certificate(reduced.coefficients(), mu)
    if isinstance(family, LogGamma):
        return _log_gamma_certificate(family, mu)
    if isinstance(family, SpatialSource):
        return float(family.source(np.asarray(0.0))) >= 0.0
    return False


def liouville_conditions(
    family: NonlinearityFamily,
    mu: float,
    u_range: Tuple[float, float] = DEFAULT_U_RANGE,
    grid_points: int = 4001,
) -> LiouvilleVerdict:
    """
    Check Σ >= 0, uΣ_u − Σ <= 0 and μu²Σ_uu − uΣ_u + Σ >= 0 on a range of u.

    A symbolic certificate (sign rules per family) gives `holds`. Otherwise a
    dense logarithmic grid either finds a violation, giving `fails` with the
    witness, or finds none, giving `unknown`. A one-point range is decided
    exactly at that point.

    Raises:
        PreconditionError: for μ <= 1 or a spatially varying Σ
    """
    if not mu > 1.0:
        raise PreconditionError(f"Liouville conditions need mu > 1, got {mu}")
    if not family.spatially_constant:
        raise PreconditionError("Liouville conditions need a nonlinearity independent of x")
    lo, hi = float(u_range[0]), float(u_range[1])
    if not 0.0 < lo <= hi:
        raise PreconditionError(f"u_range must be a nonempty positive interval, got {u_range}")

    u = np.array([lo]) if lo == hi else np.geomspace(lo, hi, grid_points)
    values = _condition_values(family, mu, u)
    c1, c2, c3, scale = values
    tol = SIGN_TOL * scale
    violations = (c1 < -tol, c2 > tol, c3 < -tol)
    for name, bad in zip(CONDITION_NAMES, violations):
        if np.any(bad):
            idx = int(np.argmax(bad))
            return LiouvilleVerdict(
                status="fails", mu=mu, u_range=(lo, hi), witness_u=float(u[idx]), failed_condition=name
            )
    if lo == hi:
        return LiouvilleVerdict(status="holds", mu=mu, u_range=(lo, hi), certified=True, note="single point")
    if _certificate(family, mu):
        return LiouvilleVerdict(status="holds", mu=mu, u_range=(lo, hi), certified=True, note="sign rules")
    return LiouvilleVerdict(status="unknown", mu=mu, u_range=(lo, hi), note="grid-consistent, no certificate")


def liouville_mu_search(
    family: NonlinearityFamily,
    u_range: Tuple[float, float] = DEFAULT_U_RANGE,
    mu_max: float = MU_MAX,
    points: int = 200,
) -> Optional[float]:
    """
    Smallest μ on a logarithmic grid in (1, mu_max] for which the conditions hold.

    For PowerSum the window μ < 1/a_j for exponents a_j in (0, 1) is applied
    before any evaluation.
    """
    mus = np.geomspace(1.01, mu_max, points)
    if isinstance(family, PowerSum):
        for _, a in family.coefficients():
            if 0.0 < a < 1.0:
                mus = mus[mus < 1.0 / a]
    for mu in mus:
        if liouville_conditions(family, float(mu), u_range).holds:
            return float(mu)
    return None


def has_no_positive_zeros(family: NonlinearityFamily, u_range: Tuple[float, float] = DEFAULT_U_RANGE) -> Optional[bool]:
    """
    Whether Σ(u) has no zero for u > 0.

    Returns:
        True when certified (PowerSum with all p_j >= 0 and some p_j > 0),
        False when a zero or sign change is found on the range,
        None when the grid shows none but nothing certifies it
    """
    if not family.spatially_constant:
        raise PreconditionError("has_no_positive_zeros needs a nonlinearity independent of x")
    reduced = family.as_power_sum() if isinstance(family, Lichnerowicz) else family
    if isinstance(reduced, PowerSum):
        coeffs = [p for p, _ in reduced.coefficients()]
        if coeffs and all(p >= 0.0 for p in coeffs) and any(p > 0.0 for p in coeffs):
            return True
    u = np.geomspace(u_range[0], u_range[1], 4001)
    sigma = family.jet(np.zeros_like(u), u).sigma
    if np.any(sigma == 0.0) or np.any(np.sign(sigma[1:]) != np.sign(sigma[:-1])):
        return False
    return None


def log_gamma_hypotheses(family: LogGamma, mu: float, u_range: Tuple[float, float] = DEFAULT_U_RANGE) -> LiouvilleVerdict:
    """
    Hypotheses of the log-family Liouville theorem.

    p, q >= 0, s <= 1, 1 < μ < 1/s when 0 < s < 1, and along log u:
    γ >= 0, γ' <= 0, μγ'' + (μ−1)γ' >= 0. Certified for constant or
    decaying exponential γ, grid-checked otherwise.
    """
    lo, hi = u_range
    p, q, s = float(family.p(0.0)), float(family.q(0.0)), family.s
    if p < 0.0 or q < 0.0:
        return LiouvilleVerdict(status="fails", mu=mu, u_range=(lo, hi), failed_condition="p,q>=0")
    if q != 0.0 and s > 1.0:
        return LiouvilleVerdict(status="fails", mu=mu, u_range=(lo, hi), failed_condition="s<=1")
    if q != 0.0 and 0.0 < s < 1.0 and not mu < 1.0 / s:
        return LiouvilleVerdict(status="fails", mu=mu, u_range=(lo, hi), failed_condition="mu<1/s")
    t = np.log(np.geomspace(lo, hi, 4001))
    g, g1, g2 = family.gamma(t), family.gamma.first(t), family.gamma.second(t)
    checks = (("gamma>=0", g < -SIGN_TOL), ("gamma'<=0", g1 > SIGN_TOL), ("mu*gamma''+(mu-1)*gamma'>=0", mu * g2 + (mu - 1.0) * g1 < -SIGN_TOL))
    if p != 0.0:
        for name, bad in checks:
            if np.any(bad):
                return LiouvilleVerdict(
                    status="fails", mu=mu, u_range=(lo, hi), witness_u=float(np.exp(t[int(np.argmax(bad))])), failed_condition=name
                )
    if _log_gamma_certificate(family, mu):
        return LiouvilleVerdict(status="holds", mu=mu, u_range=(lo, hi), certified=True, note="gamma certificate")
    return LiouvilleVerdict(status="unknown", mu=mu, u_range=(lo, hi), note="grid-consistent, no certificate")


# ==================== Config ====================

def _terms_from_spec(raw) -> List[PowerTerm]:
    return [PowerTerm(p=profile_from_spec(t["p"]), a=float(t["a"])) for t in raw]


def family_from_spec(spec: Dict[str, Any]) -> NonlinearityFamily:
    """
    Build a family from a config block keyed by 'variant'.

    PowerSum:      {"terms": [{"p": 1.0, "a": 0.5}, ...]}
    LogGamma:      {"p": .., "gamma": {"name": "polynomial", "coeffs": [..]}, "q": .., "s": ..}
    Lichnerowicz:  {"p": .., "q": .., "r": .., "h": .., "alpha": .., "beta": ..}
    SpatialSource: {"source": <profile>}
    """
    variant = spec.get("variant")
    try:
        if variant == "PowerSum":
            return PowerSum(terms=_terms_from_spec(spec.get("terms", [])))
        if variant == "LogGamma":
            return LogGamma(
                p=profile_from_spec(spec.get("p", 1.0)),
                gamma=profile_from_spec(spec["gamma"]),
                q=profile_from_spec(spec.get("q", 0.0)),
                s=float(spec.get("s", 0.0)),
            )
        if variant == "Lichnerowicz":
            return Lichnerowicz(
                p=profile_from_spec(spec.get("p", 0.0)),
                q=profile_from_spec(spec.get("q", 0.0)),
                r_coef=profile_from_spec(spec.get("r", 0.0)),
                h_coef=profile_from_spec(spec.get("h", 0.0)),
                alpha=float(spec["alpha"]),
                beta=float(spec["beta"]),
            )
        if variant == "SpatialSource":
            return SpatialSource.from_profile(profile_from_spec(spec["source"]))
    except KeyError as e:
        raise ConfigError(f"Family '{variant}' is missing key {e}") from e
    raise ConfigError(f"Unknown nonlinearity variant '{variant}'")
