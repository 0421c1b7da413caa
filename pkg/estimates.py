"""
Li-Yau type gradient estimates, Harnack inequalities and the Liouville check
for positive solutions of Δ_f u + Σ(x, u) = 0 on a radial grid.

Local estimate on B_R, valid for every μ > 1 and ε in (0, 1):

    |∇u|²/(μu²) + Σ/u <= geometric(R, k, c1, c2) + sqrt block(A, B, C) + growth

The global estimate on the closed model drops the geometric 1/R² block.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, model_validator
from scipy.integrate import cumulative_trapezoid

from errors import CurvatureNotNonnegative, PreconditionError
from grid_ops import DEFAULT_C_TOL, Field, discretization_tolerance, radial_derivative, radial_second_derivative
from inequality_kernel import quintic_cutoff
from model_space import CLOSED_TOL, ModelSpace, curvature_lower_bound
from nonlinearity import (
    DEFAULT_U_RANGE,
    LiouvilleVerdict,
    NonlinearityFamily,
    has_no_positive_zeros,
    liouville_conditions,
    liouville_mu_search,
    sigma_jet,
    sigma_x_drift_laplacian,
)
from solver import corrupt_field

logger = logging.getLogger(__name__)

MU_GRID = tuple(round(0.1 * i, 10) for i in range(11, 81))
EPS_GRID = tuple(round(0.05 * i, 10) for i in range(1, 20))
# curvature bounds below this count as Ric_f^m >= 0
FLAT_K = 1e-10


@lru_cache(maxsize=1)
def _cutoff_constants() -> Tuple[float, float]:
    profile = quintic_cutoff()
    return profile.c1, profile.c2


class EstimateParams(BaseModel):
    """μ, ε, R with the cutoff constants c1, c2 and the curvature data m, k"""

    model_config = ConfigDict(frozen=True)

    mu: float = PydanticField(default=2.0, gt=1.0)
    eps: float = PydanticField(default=0.5, gt=0.0, lt=1.0)
    R: float = PydanticField(gt=0.0)
    c1: float = PydanticField(gt=0.0)
    c2: float = PydanticField(gt=0.0)
    m: float = PydanticField(ge=2.0)
    k: float = PydanticField(ge=0.0)
    r_max: Optional[float] = PydanticField(default=None, gt=0.0)

    @model_validator(mode="after")
    def validate_radius(self):
        if self.r_max is not None and 2.0 * self.R > self.r_max * (1.0 + CLOSED_TOL):
            raise ValueError(f"Ball radius needs 2R <= r_max, got R={self.R} with r_max={self.r_max}")
        return self

    @classmethod
    def for_space(cls, space: ModelSpace, R: float, mu: float = 2.0, eps: float = 0.5) -> "EstimateParams":
        """Fill m, k over B_2R and c1, c2 from the quintic cutoff"""
        if 2.0 * R > space.r_max * (1.0 + CLOSED_TOL):
            raise PreconditionError(f"Ball radius needs 2R <= r_max, got R={R} with r_max={space.r_max}")
        c1, c2 = _cutoff_constants()
        k = curvature_lower_bound(space, min(2.0 * R, space.r_max))
        return cls(mu=mu, eps=eps, R=R, c1=c1, c2=c2, m=space.m, k=k, r_max=space.r_max)

    def with_mu_eps(self, mu: float, eps: float) -> "EstimateParams":
        return self.model_copy(update={"mu": mu, "eps": eps})

    def describe(self) -> dict:
        return self.model_dump()


class SupInfBundle(BaseModel):
    A_sigma: float = PydanticField(ge=0.0)
    B_sigma: float = PydanticField(ge=0.0)
    C_sigma: float = PydanticField(ge=0.0)
    sup_growth: float = PydanticField(ge=0.0)
    inf_neg_sigma: float = PydanticField(le=0.0)
    radius: Optional[float] = None
    nodes: int = 0

    @model_validator(mode="after")
    def validate_finite(self):
        values = (self.A_sigma, self.B_sigma, self.C_sigma, self.sup_growth, self.inf_neg_sigma)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"Estimate constants must be finite, got {values}")
        return self


class RhsBreakdown(BaseModel):
    geometric: float
    sqrt_block: float
    growth: float
    total: float


class EstimateReport(BaseModel):
    """Node-wise lhs on the ball against the scalar rhs"""

    kind: str
    r: List[float]
    lhs: List[float]
    rhs: float
    breakdown: RhsBreakdown
    max_lhs: float
    min_slack: float
    witness_r: float
    tolerance: float
    passed: bool
    params: EstimateParams
    bundle: SupInfBundle
    grid_cells: int
    corrupted: bool = False


class HarnackReport(BaseModel):
    kind: str
    H_const: float = PydanticField(ge=0.0)
    sup_grad_log_sq: float
    grad_bound_slack: float
    supinf_slack: float
    diameter: float
    sup_u: float
    inf_u: float
    quadrature_error: Optional[float] = None
    quadrature_tol: Optional[float] = None
    pairwise_slack: Optional[float] = None
    grad_tolerance: float
    supinf_tolerance: float
    grad_pass: bool
    supinf_pass: bool
    passed: bool


class LiouvilleReport(BaseModel):
    verdict: LiouvilleVerdict
    declared_verdict: Optional[LiouvilleVerdict] = None
    k: float
    gradient_sup: float
    sigma_at_solution: float
    tolerance: float
    constancy_claimed: bool
    passed: bool
    note: str = ""


# ==================== Sup/inf bundle ====================

@dataclass(frozen=True)
class _JetOnBall:
    """Σ derivatives at the nodes of B_2R, shared across μ"""

    u: np.ndarray
    sigma: np.ndarray
    sigma_u: np.ndarray
    sigma_uu: np.ndarray
    sigma_x: np.ndarray
    sigma_xu: np.ndarray
    drift_lap_sigma_x: np.ndarray
    inner_u: np.ndarray
    inner_sigma: np.ndarray
    radius: Optional[float]


def _jet_on_ball(u: Field, family: NonlinearityFamily, space: ModelSpace, R: Optional[float]) -> _JetOnBall:
    u.require_positive("sup_inf_bundle")
    if R is None:
        outer = inner = np.ones(u.grid.cells + 1, dtype=bool)
    else:
        outer, inner = u.grid.ball(2.0 * R), u.grid.ball(R)
    r, values = u.r[outer], u.values[outer]
    jet = sigma_jet(family, r, values)
    lap = sigma_x_drift_laplacian(family, space, r, values)
    inner_sigma = np.atleast_1d(sigma_jet(family, u.r[inner], u.values[inner]).sigma)
    return _JetOnBall(
        u=values,
        sigma=np.atleast_1d(jet.sigma),
        sigma_u=np.atleast_1d(jet.sigma_u),
        sigma_uu=np.atleast_1d(jet.sigma_uu),
        sigma_x=np.atleast_1d(jet.sigma_x),
        sigma_xu=np.atleast_1d(jet.sigma_xu),
        drift_lap_sigma_x=np.atleast_1d(lap),
        inner_u=u.values[inner],
        inner_sigma=inner_sigma,
        radius=R,
    )


def _bundle_from_jet(j: _JetOnBall, m: float, k: float, mu: float) -> SupInfBundle:
    u = j.u
    a_terms = (2.0 * (m - 1.0) * k * u + np.maximum(-j.sigma + u * j.sigma_u - mu * u * u * j.sigma_uu, 0.0)) / (2.0 * u)
    b_terms = np.abs(j.sigma_x - mu * u * j.sigma_xu) / u
    c_terms = np.maximum(-j.drift_lap_sigma_x, 0.0) / u
    growth = np.maximum(u * j.sigma_u - j.sigma, 0.0) / u
    neg = np.minimum(j.inner_sigma, 0.0) / j.inner_u
    return SupInfBundle(
        A_sigma=float(np.max(a_terms)),
        B_sigma=float(np.max(b_terms)),
        C_sigma=float(np.max(c_terms)),
        sup_growth=float(np.max(growth)),
        inf_neg_sigma=float(np.min(neg)),
        radius=j.radius,
        nodes=int(u.size),
    )


def sup_inf_bundle(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams, whole_domain: bool = False) -> SupInfBundle:
    """
    Grid suprema of the estimate constants.

    A_Σ = sup (2(m−1)k u + (−Σ + uΣ_u − μu²Σ_uu)_+)/(2u)
    B_Σ = sup |Σ_x − μuΣ_xu|/u
    C_Σ = sup (−Δ_f Σ^x)_+/u
    sup_growth = sup (uΣ_u − Σ)_+/u

    Suprema run over B_2R and inf_neg_sigma = inf (Σ)_−/u over B_R, or
    both over the whole grid when whole_domain is set.

    Raises:
        PositivityError: if u has a non-positive node
    """
    jet = _jet_on_ball(u, family, space, None if whole_domain else params.R)
    return _bundle_from_jet(jet, params.m, params.k, params.mu)


# ==================== Right-hand sides ====================

def rhs_breakdown(bundle: SupInfBundle, params: EstimateParams, include_geometric: bool = True) -> RhsBreakdown:
    m, mu, eps, R, k = params.m, params.mu, params.eps, params.R, params.k
    c1, c2 = params.c1, params.c2
    geometric = 0.0
    if include_geometric:
        bracket = c2 + (m - 1.0) * c1 * (1.0 + R * np.sqrt(k)) + 2.0 * c1 * c1
        geometric = m * mu / (2.0 * R * R) * (bracket + m * c1 * c1 * mu * mu / (4.0 * (mu - 1.0)))
    a_part = m * mu * mu * bundle.A_sigma**2 / ((1.0 - eps) * (mu - 1.0) ** 2)
    b_part = np.cbrt(27.0 * m * mu * mu * bundle.B_sigma**4 / (4.0 * eps * (mu - 1.0) ** 2))
    c_part = 2.0 * mu * bundle.C_sigma
    sqrt_block = np.sqrt(m) / 2.0 * np.sqrt(a_part + b_part + c_part)
    growth = m * mu / 2.0 * bundle.sup_growth
    geometric, sqrt_block, growth = float(geometric), float(sqrt_block), float(growth)
    return RhsBreakdown(geometric=geometric, sqrt_block=sqrt_block, growth=growth, total=geometric + sqrt_block + growth)


def local_rhs(bundle: SupInfBundle, params: EstimateParams) -> float:
    return rhs_breakdown(bundle, params, include_geometric=True).total


def global_rhs(bundle: SupInfBundle, params: EstimateParams) -> float:
    return rhs_breakdown(bundle, params, include_geometric=False).total


def harnack_constant(bundle: SupInfBundle, params: EstimateParams, local: bool = True) -> float:
    """ℍ = μ·rhs − μ·inf (Σ)_−/u; the sup terms use B_2R, the inf term B_R"""
    rhs = local_rhs(bundle, params) if local else global_rhs(bundle, params)
    return params.mu * rhs - params.mu * bundle.inf_neg_sigma


# ==================== Estimate checks ====================

def _lhs(u: Field, family: NonlinearityFamily, mu: float) -> np.ndarray:
    du = radial_derivative(u)
    sigma = np.asarray(sigma_jet(family, u.r, u.values).sigma, dtype=float)
    return du * du / (mu * u.values**2) + sigma / u.values


def _require_ball(space: ModelSpace, params: EstimateParams) -> None:
    if 2.0 * params.R > space.r_max * (1.0 + CLOSED_TOL):
        raise PreconditionError(f"Ball B_2R with R={params.R} leaves the domain r_max={space.r_max}")


def _report(kind: str, u: Field, family: NonlinearityFamily, params: EstimateParams, bundle: SupInfBundle,
            breakdown: RhsBreakdown, mask: np.ndarray, c_tol: float, corrupted: bool = False) -> EstimateReport:
    lhs = _lhs(u, family, params.mu)[mask]
    r = u.r[mask]
    idx = int(np.argmax(lhs))
    max_lhs = float(lhs[idx])
    slack = breakdown.total - max_lhs
    tol = discretization_tolerance(u.grid, breakdown.total, c_tol)
    return EstimateReport(
        kind=kind,
        r=r.tolist(),
        lhs=lhs.tolist(),
        rhs=breakdown.total,
        breakdown=breakdown,
        max_lhs=max_lhs,
        min_slack=slack,
        witness_r=float(r[idx]),
        tolerance=tol,
        passed=slack >= -tol,
        params=params,
        bundle=bundle,
        grid_cells=u.grid.cells,
        corrupted=corrupted,
    )


def check_local_estimate(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
                         c_tol: float = DEFAULT_C_TOL) -> EstimateReport:
    """
    Local estimate on B_R with the constants taken over B_2R.

    Returns:
        EstimateReport; passed iff min_slack >= −C_tol·h²·(1 + |rhs|)

    Raises:
        PreconditionError: if B_2R leaves the domain
        PositivityError: if u has a non-positive node
    """
    _require_ball(space, params)
    bundle = sup_inf_bundle(u, family, space, params)
    breakdown = rhs_breakdown(bundle, params, include_geometric=True)
    report = _report("local", u, family, params, bundle, breakdown, u.grid.ball(params.R), c_tol)
    logger.debug(f"local estimate R={params.R:g} mu={params.mu:g}: rhs={report.rhs:.6g} max_lhs={report.max_lhs:.6g}")
    return report


def check_global_estimate(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
                          c_tol: float = DEFAULT_C_TOL) -> EstimateReport:
    """
    Global estimate over the whole closed model; no 1/R² block.

    Raises:
        PreconditionError: on open models, whose Dirichlet boundary is outside the global setting
    """
    if not space.closed:
        raise PreconditionError("Global estimate needs a closed model; open models carry a Dirichlet boundary")
    k = curvature_lower_bound(space, space.r_max)
    if k > params.k * (1.0 + 1e-6) + 1e-12:
        logger.info(f"Raising k from {params.k:g} to the global bound {k:g}")
        params = params.model_copy(update={"k": k})
    bundle = sup_inf_bundle(u, family, space, params, whole_domain=True)
    breakdown = rhs_breakdown(bundle, params, include_geometric=False)
    mask = np.ones(u.grid.cells + 1, dtype=bool)
    return _report("global", u, family, params, bundle, breakdown, mask, c_tol)


def negative_control(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
                     amplitude: float = 0.999, frequency: float = 10.0, c_tol: float = DEFAULT_C_TOL) -> EstimateReport:
    """Local estimate on u·(1 + amplitude·sin(frequency·r)); a sound check fails here"""
    corrupted = corrupt_field(u, amplitude, frequency)
    _require_ball(space, params)
    bundle = sup_inf_bundle(corrupted, family, space, params)
    breakdown = rhs_breakdown(bundle, params, include_geometric=True)
    report = _report("local", corrupted, family, params, bundle, breakdown, corrupted.grid.ball(params.R), c_tol, corrupted=True)
    if report.passed:
        logger.warning(f"Corrupted field passed the local estimate (slack {report.min_slack:.3g})")
    return report


# ==================== Harnack ====================

def _log_derivatives(u: Field) -> Tuple[np.ndarray, np.ndarray]:
    du = radial_derivative(u)
    logs = u.with_values(np.log(u.values), name="log u")
    return du / u.values, radial_second_derivative(logs)


def harnack(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
            bundle: Optional[SupInfBundle] = None, c_tol: float = DEFAULT_C_TOL) -> HarnackReport:
    """
    Harnack inequality sup_{B_R} u <= e^{2R√ℍ} inf_{B_R} u.

    Checks the gradient bound sup |∇u|²/u² <= ℍ, the sup/inf form, and that
    integrating u'/u along the radius reproduces log u(r) − log u(0) by the
    trapezoidal rule.
    """
    _require_ball(space, params)
    bundle = bundle or sup_inf_bundle(u, family, space, params)
    H = max(harnack_constant(bundle, params, local=True), 0.0)
    mask = u.grid.ball(params.R)
    r, values = u.r[mask], u.values[mask]
    grad_log, dd_log = _log_derivatives(u)
    grad_log, dd_log = grad_log[mask], dd_log[mask]

    sup_grad = float(np.max(grad_log**2))
    sup_u, inf_u = float(np.max(values)), float(np.min(values))
    grad_slack = H - sup_grad
    supinf_slack = float(np.exp(2.0 * params.R * np.sqrt(H)) * inf_u - sup_u)

    integral = cumulative_trapezoid(grad_log, r, initial=0.0)
    direct = np.log(values) - np.log(values[0])
    quad_err = float(np.max(np.abs(integral - direct)))
    quad_tol = discretization_tolerance(u.grid, (1.0 + params.R) * (float(np.max(np.abs(dd_log))) + float(np.max(np.abs(grad_log)))), c_tol)

    grad_tol = discretization_tolerance(u.grid, H, c_tol)
    supinf_tol = discretization_tolerance(u.grid, sup_u, c_tol)
    grad_pass = grad_slack >= -grad_tol
    supinf_pass = supinf_slack >= -supinf_tol
    if grad_pass and not supinf_pass:
        logger.warning("Gradient bound holds but the sup/inf form does not; check the quadrature")
    return HarnackReport(
        kind="local",
        H_const=H,
        sup_grad_log_sq=sup_grad,
        grad_bound_slack=grad_slack,
        supinf_slack=supinf_slack,
        diameter=2.0 * params.R,
        sup_u=sup_u,
        inf_u=inf_u,
        quadrature_error=quad_err,
        quadrature_tol=quad_tol,
        grad_tolerance=grad_tol,
        supinf_tolerance=supinf_tol,
        grad_pass=grad_pass,
        supinf_pass=supinf_pass,
        passed=grad_pass and supinf_pass and quad_err <= quad_tol,
    )


def harnack_global(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
                   c_tol: float = DEFAULT_C_TOL) -> HarnackReport:
    """
    Global Harnack on the closed model: log u(r_i) − log u(r_j) <= |r_i − r_j|·√ℍ
    for every pair of nodes, and sup u <= e^{π√ℍ} inf u.
    """
    if not space.closed:
        raise PreconditionError("Global Harnack needs a closed model")
    k = curvature_lower_bound(space, space.r_max)
    if k > params.k:
        params = params.model_copy(update={"k": k})
    bundle = sup_inf_bundle(u, family, space, params, whole_domain=True)
    H = max(harnack_constant(bundle, params, local=False), 0.0)
    grad_log, _ = _log_derivatives(u)
    sup_grad = float(np.max(grad_log**2))
    logs = np.log(u.values)
    r = u.r
    excess = (logs[:, None] - logs[None, :]) - np.abs(r[:, None] - r[None, :]) * np.sqrt(H)
    pairwise_slack = float(-np.max(excess))
    sup_u, inf_u = float(np.max(u.values)), float(np.min(u.values))
    supinf_slack = float(np.exp(space.r_max * np.sqrt(H)) * inf_u - sup_u)

    grad_tol = discretization_tolerance(u.grid, H, c_tol)
    supinf_tol = discretization_tolerance(u.grid, sup_u, c_tol)
    grad_pass = H - sup_grad >= -grad_tol
    supinf_pass = supinf_slack >= -supinf_tol and pairwise_slack >= -discretization_tolerance(u.grid, 0.0, c_tol)
    return HarnackReport(
        kind="global",
        H_const=H,
        sup_grad_log_sq=sup_grad,
        grad_bound_slack=H - sup_grad,
        supinf_slack=supinf_slack,
        diameter=space.r_max,
        sup_u=sup_u,
        inf_u=inf_u,
        pairwise_slack=pairwise_slack,
        grad_tolerance=grad_tol,
        supinf_tolerance=supinf_tol,
        grad_pass=grad_pass,
        supinf_pass=supinf_pass,
        passed=grad_pass and supinf_pass,
    )


# ==================== Liouville ====================

def check_liouville(u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
                    c_tol: float = DEFAULT_C_TOL) -> LiouvilleReport:
    """
    Liouville conclusion on the closed model with Ric_f^m >= 0.

    The sign conditions are evaluated on the solved range of u at params.mu,
    and if they fail there, at the smallest μ found by liouville_mu_search.
    When they hold, u must be constant and Σ(u) must vanish.

    Raises:
        PreconditionError: open model or spatially varying Σ
        CurvatureNotNonnegative: if the curvature bound k is positive
    """
    if not space.closed:
        raise PreconditionError("Liouville check runs on the closed model only")
    k = curvature_lower_bound(space, space.r_max)
    if k > FLAT_K:
        raise CurvatureNotNonnegative(k)
    u.require_positive("check_liouville")
    u_range = (float(np.min(u.values)), float(np.max(u.values)))
    verdict = liouville_conditions(family, params.mu, u_range)
    if not verdict.holds:
        mu = liouville_mu_search(family, u_range)
        if mu is not None:
            verdict = liouville_conditions(family, mu, u_range)
    declared = liouville_conditions(family, verdict.mu, DEFAULT_U_RANGE)

    grad_log, _ = _log_derivatives(u)
    gradient_sup = float(np.max(np.abs(grad_log)))
    sigma = np.asarray(sigma_jet(family, u.r, u.values).sigma, dtype=float)
    sigma_max = float(np.max(np.abs(sigma)))
    tol = discretization_tolerance(u.grid, u_range[1], c_tol)

    if verdict.holds:
        passed = gradient_sup <= tol and sigma_max <= tol
        note = "constant solution" if passed else "conditions hold but u is not constant"
    else:
        passed = True
        note = f"conditions {verdict.status}; no constancy claim"
    logger.info(f"Liouville: {verdict.status} at mu={verdict.mu:g}, sup|grad u|/u={gradient_sup:.3g}")
    return LiouvilleReport(
        verdict=verdict,
        declared_verdict=declared,
        k=k,
        gradient_sup=gradient_sup,
        sigma_at_solution=sigma_max,
        tolerance=tol,
        constancy_claimed=verdict.holds,
        passed=passed,
        note=note,
    )


def nonexistence_consistent(family: NonlinearityFamily, mu: float = 2.0) -> bool:
    """Conditions hold and Σ has no positive zeros, so no positive solution is expected"""
    verdict = liouville_conditions(family, mu, DEFAULT_U_RANGE)
    if not verdict.holds:
        found = liouville_mu_search(family, DEFAULT_U_RANGE)
        if found is None:
            return False
    return has_no_positive_zeros(family, DEFAULT_U_RANGE) is True


# ==================== Parameter search ====================

def optimize_params(u: Field, family: NonlinearityFamily, space: ModelSpace, R: float,
                    base: Optional[EstimateParams] = None) -> EstimateParams:
    """
    Grid search μ in {1.1, ..., 8}, ε in {0.05, ..., 0.95} minimizing local_rhs.

    Ties keep the lexicographically smallest (μ, ε).
    """
    base = base or EstimateParams.for_space(space, R)
    jet = _jet_on_ball(u, family, space, R)
    best, best_rhs = None, np.inf
    for mu in MU_GRID:
        bundle = _bundle_from_jet(jet, base.m, base.k, mu)
        for eps in EPS_GRID:
            candidate = base.with_mu_eps(mu, eps)
            rhs = local_rhs(bundle, candidate)
            if rhs < best_rhs:
                best, best_rhs = candidate, rhs
    if best is None:
        logger.warning("No finite rhs on the (mu, eps) grid; keeping defaults")
        return base
    logger.info(f"Optimized params mu={best.mu:g} eps={best.eps:g} rhs={best_rhs:.6g}")
    return best
