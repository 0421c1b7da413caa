"""
Radial grids, the discrete weighted Laplacian and discrete identity checks.

The operator is second order: central differences in the interior, the
reflection Δ_f u(0) = 2n(u_1 − u_0)/h² at a pole, and a one-sided
four-point row at an open outer radius.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from errors import PositivityError, PreconditionError
from model_space import CLOSED_TOL, CurvatureProfile, ModelSpace, curvature_lower_bound, drift_coefficient
from nonlinearity import NonlinearityFamily, sigma_jet, sigma_x_drift_laplacian

logger = logging.getLogger(__name__)

MIN_CELLS = 16
DEFAULT_C_TOL = 10.0
# nodes at an open r_max reached by one-sided stencils, nested once for H = |∇h|² + ...
OPEN_END_NODES = 3


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes r_0 = 0 < ... < r_N = r_max"""

    r_max: float
    cells: int
    closed: bool = False

    def __post_init__(self):
        if self.cells < MIN_CELLS:
            raise ValueError(f"Grid needs at least {MIN_CELLS} cells, got {self.cells}")
        if not self.r_max > 0.0:
            raise ValueError(f"Grid radius must be positive, got {self.r_max}")

    @classmethod
    def for_space(cls, space: ModelSpace, cells: int = 512) -> "RadialGrid":
        return cls(r_max=space.r_max, cells=cells, closed=space.closed)

    @property
    def h(self) -> float:
        return self.r_max / self.cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.cells + 1)

    def ball(self, radius: float) -> np.ndarray:
        """Boolean mask of nodes with r <= radius"""
        return self.nodes <= radius + 1e-12 * self.r_max

    def fits(self, space: ModelSpace) -> bool:
        return abs(self.r_max - space.r_max) <= CLOSED_TOL * max(1.0, space.r_max) and self.closed == space.closed


@dataclass(frozen=True)
class Field:
    """Node values on a radial grid"""

    grid: RadialGrid
    values: np.ndarray
    name: str = "u"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.cells + 1,):
            raise ValueError(f"Field '{self.name}' has {values.shape} values for {self.grid.cells + 1} nodes")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def positive(self) -> bool:
        return bool(np.all(self.values > 0.0))

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values, name: Optional[str] = None) -> "Field":
        return Field(self.grid, np.asarray(values, dtype=float), name or self.name)

    def require_positive(self, where: str) -> None:
        if not self.positive:
            idx = int(np.argmin(self.values))
            raise PositivityError(where, float(self.r[idx]), float(self.values[idx]))


@dataclass(frozen=True)
class OneSidedClosure:
    """Row `row` with coefficients on nodes start .. start+len(coeffs)-1"""

    row: int
    start: int
    coeffs: np.ndarray


@dataclass(frozen=True)
class DiscreteOperator:
    """
    Tridiagonal weighted Laplacian with an optional one-sided closure row.

    Band arrays have length N+1; lower[0] and upper[N] are unused.
    """

    grid: RadialGrid
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    closure: Optional[OneSidedClosure] = None
    pole_rows: tuple = field(default_factory=tuple)

    def apply(self, values) -> np.ndarray:
        """
        Apply to node values in difference form.

        Every row sums to zero, so each row is rewritten on d_i = u_{i+1} − u_i;
        constants map to exactly zero and the round-off floor scales with
        the variation of u, not its size.
        """
        u = np.asarray(values, dtype=float)
        N = self.grid.cells
        d = np.diff(u)
        out = np.empty(N + 1)
        out[0] = self.upper[0] * d[0]
        out[1:N] = self.upper[1:N] * d[1:N] - self.lower[1:N] * d[0:N - 1]
        if self.closure is not None:
            c = self.closure
            seg = u[c.start:c.start + len(c.coeffs)] - u[c.row]
            out[c.row] = float(np.dot(c.coeffs, seg))
        else:
            out[N] = -self.lower[N] * d[N - 1]
        return out

    def norm_inf(self) -> float:
        """Largest absolute row sum"""
        N = self.grid.cells
        rows = np.abs(self.diag)
        rows[1:] += np.abs(self.lower[1:])
        rows[:N] += np.abs(self.upper[:N])
        if self.closure is not None:
            rows[self.closure.row] = float(np.sum(np.abs(self.closure.coeffs)))
        return float(np.max(rows))

    def to_dense(self) -> np.ndarray:
        N = self.grid.cells
        A = np.diag(self.diag) + np.diag(self.upper[:N], 1) + np.diag(self.lower[1:], -1)
        if self.closure is not None:
            c = self.closure
            A[c.row, :] = 0.0
            A[c.row, c.start:c.start + len(c.coeffs)] = c.coeffs
        return A

    def banded(self) -> np.ndarray:
        """
        (3, N+1) layout for scipy.linalg.solve_banded((1, 1), ...).

        A closure row does not fit the band; its entries are left zero and the
        caller must replace that row (Dirichlet data on open models).
        """
        N = self.grid.cells
        ab = np.zeros((3, N + 1))
        ab[0, 1:] = self.upper[:N]
        ab[1, :] = self.diag
        ab[2, :N] = self.lower[1:]
        if self.closure is not None:
            ab[1, self.closure.row] = 0.0
            ab[2, self.closure.row - 1] = 0.0
        return ab


def assemble_witten(space: ModelSpace, grid: RadialGrid) -> DiscreteOperator:
    """
    Second-order discretization of Δ_f u = u'' + ((n−1)φ'/φ − f')u'.

    Args:
        space: model space
        grid: radial grid covering [0, space.r_max]

    Returns:
        DiscreteOperator with pole rows at r = 0 (and at r = π on the closed sphere)
    """
    if not grid.fits(space):
        raise PreconditionError(f"Grid (r_max={grid.r_max}, closed={grid.closed}) does not fit space r_max={space.r_max}")
    N, h = grid.cells, grid.h
    r = grid.nodes
    n = space.n
    lower = np.zeros(N + 1)
    diag = np.zeros(N + 1)
    upper = np.zeros(N + 1)

    b = drift_coefficient(space, r[1:N])
    lower[1:N] = 1.0 / h**2 - b / (2.0 * h)
    diag[1:N] = -2.0 / h**2
    upper[1:N] = 1.0 / h**2 + b / (2.0 * h)

    diag[0] = -2.0 * n / h**2
    upper[0] = 2.0 * n / h**2
    pole_rows = [0]
    closure = None
    if space.closed:
        lower[N] = 2.0 * n / h**2
        diag[N] = -2.0 * n / h**2
        pole_rows.append(N)
    else:
        b_end = float(drift_coefficient(space, np.asarray(r[N])))
        second = np.array([-1.0, 4.0, -5.0, 2.0]) / h**2
        first = np.array([0.0, 1.0, -4.0, 3.0]) / (2.0 * h)
        closure = OneSidedClosure(row=N, start=N - 3, coeffs=second + b_end * first)
    return DiscreteOperator(grid=grid, lower=lower, diag=diag, upper=upper, closure=closure, pole_rows=tuple(pole_rows))


# ==================== Derivatives ====================

def radial_derivative(field: Field) -> np.ndarray:
    """u' by second-order differences; zero at pole nodes"""
    grid = field.grid
    du = np.gradient(field.values, grid.h, edge_order=2)
    du[0] = 0.0
    if grid.closed:
        du[-1] = 0.0
    return du


def radial_second_derivative(field: Field) -> np.ndarray:
    """u'' with reflection at poles and a one-sided stencil at an open end"""
    grid = field.grid
    u, h, N = field.values, grid.h, grid.cells
    d = np.diff(u)
    out = np.empty(N + 1)
    out[1:N] = (d[1:] - d[:-1]) / h**2
    out[0] = 2.0 * d[0] / h**2
    if grid.closed:
        out[N] = -2.0 * d[N - 1] / h**2
    else:
        out[N] = (2.0 * u[N] - 5.0 * u[N - 1] + 4.0 * u[N - 2] - u[N - 3]) / h**2
    return out


def gradient_norm(field: Field) -> Field:
    return field.with_values(np.abs(radial_derivative(field)), name=f"|grad {field.name}|")


def _tangential_over_phi(field: Field, space: ModelSpace, du: np.ndarray, ddu: np.ndarray) -> np.ndarray:
    """φ'u'/φ with its pole limit u''"""
    r = field.r
    out = np.empty_like(du)
    out[0] = ddu[0]
    last = field.grid.cells + 1 if not field.grid.closed else field.grid.cells
    out[1:last] = space.warp.first(r[1:last]) * du[1:last] / space.warp(r[1:last])
    if field.grid.closed:
        out[-1] = ddu[-1]
    return out


def hessian_norm_sq_radial(field: Field, space: ModelSpace) -> Field:
    """|Hess u|² = (u'')² + (n−1)(φ'u'/φ)²; n(u'')² at a pole"""
    du = radial_derivative(field)
    ddu = radial_second_derivative(field)
    t = _tangential_over_phi(field, space, du, ddu)
    return field.with_values(ddu**2 + (space.n - 1) * t**2, name=f"|hess {field.name}|^2")


def identity_mask(grid: RadialGrid) -> np.ndarray:
    """Nodes where every stencil of the identity checks is central or a pole reflection"""
    mask = np.ones(grid.cells + 1, dtype=bool)
    if not grid.closed:
        mask[-OPEN_END_NODES:] = False
    return mask


def discretization_tolerance(grid: RadialGrid, scale: float = 0.0, c_tol: float = DEFAULT_C_TOL) -> float:
    """C_tol·h²·(1 + |scale|)"""
    return c_tol * grid.h**2 * (1.0 + abs(scale))


# ==================== Identity checks ====================

def _log_field(u: Field, where: str) -> Field:
    u.require_positive(where)
    return u.with_values(np.log(u.values), name="h")


def check_h_equation(u: Field, family: NonlinearityFamily, space: ModelSpace) -> Field:
    """Residual of Δ_f h + |∇h|² + e^{-h} Σ(x, e^h) = 0 with h = log u"""
    h = _log_field(u, "check_h_equation")
    L = assemble_witten(space, u.grid)
    dh = radial_derivative(h)
    jet = sigma_jet(family, u.r, u.values)
    residual = L.apply(h.values) + dh**2 + jet.sigma / u.values
    return u.with_values(residual, name="h_equation_residual")


@dataclass(frozen=True)
class _HTerms:
    u: np.ndarray
    dh: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    lap_H: np.ndarray
    lap_h: np.ndarray
    jet: object
    lap_sigma_x: np.ndarray


def _h_terms(hfield: Field, space: ModelSpace, mu: float, family: NonlinearityFamily) -> _HTerms:
    r = hfield.r
    u = np.exp(hfield.values)
    dh = radial_derivative(hfield)
    jet = sigma_jet(family, r, u)
    H = dh**2 + mu * jet.sigma / u
    Hfield = hfield.with_values(H, name="H")
    L = assemble_witten(space, hfield.grid)
    # Δ_f h from the h-equation, which the solution satisfies exactly
    lap_h = -(dh**2 + jet.sigma / u)
    return _HTerms(
        u=u,
        dh=dh,
        H=H,
        dH=radial_derivative(Hfield),
        lap_H=L.apply(H),
        lap_h=lap_h,
        jet=jet,
        lap_sigma_x=np.asarray(sigma_x_drift_laplacian(family, space, r, u)),
    )


def check_bochner_identity(hfield: Field, space: ModelSpace, mu: float, family: NonlinearityFamily) -> Field:
    """
    Residual of the Δ_f H identity for H = |∇h|² + μ e^{-h} Σ(x, e^h).

    Δ_f H = 2|∇²h|² + 2⟨∇f,∇h⟩²/(m−n) − 2⟨∇h,∇H⟩ + 2 Ric_f^m(∇h,∇h)
            − 2(μ−1)e^{-h}Σ|∇h|² + 2(μ−1)e^{-h}⟨∇h,∇Σ⟩ + μ Δ_f(e^{-h}Σ)

    The left side is the discrete operator applied to H; the right side is
    assembled from discrete derivatives of h and the exact Σ jet, with
    Ric_f^m(∇h,∇h) = lambda_radial·h'² and Δ_f(e^{-h}Σ) expanded by the
    product rule.

    H is built from the discrete h', so at an open r_max the operator and
    the derivative of H nest two one-sided stencils and the residual there
    does not shrink with h. Compare only on identity_mask(grid).
    """
    if space.m == space.n:
        raise PreconditionError("Bochner identity check divides by m - n; needs m > n")
    t = _h_terms(hfield, space, mu, family)
    r = hfield.r
    e_h = t.u
    inv = 1.0 / e_h
    jet = t.jet
    dh, dh2 = t.dh, t.dh**2
    df = space.weight.first(r)
    lam_r = CurvatureProfile(space).radial(r)
    hess_sq = hessian_norm_sq_radial(hfield, space).values

    grad_sigma = jet.sigma_x + e_h * jet.sigma_u * dh
    lap_sigma = (
        t.lap_sigma_x
        + 2.0 * e_h * jet.sigma_xu * dh
        + e_h * dh2 * (jet.sigma_u + e_h * jet.sigma_uu)
        + e_h * jet.sigma_u * t.lap_h
    )
    lap_exp = -inv * (t.lap_h - dh2)
    lap_weighted_sigma = jet.sigma * lap_exp + 2.0 * (-inv * dh) * grad_sigma + inv * lap_sigma

    rhs = (
        2.0 * hess_sq
        + 2.0 * (df * dh) ** 2 / (space.m - space.n)
        - 2.0 * dh * t.dH
        + 2.0 * lam_r * dh2
        - 2.0 * (mu - 1.0) * inv * jet.sigma * dh2
        + 2.0 * (mu - 1.0) * inv * dh * grad_sigma
        + mu * lap_weighted_sigma
    )
    return hfield.with_values(t.lap_H - rhs, name="bochner_residual")


def check_h_inequality(hfield: Field, space: ModelSpace, mu: float, family: NonlinearityFamily, k: Optional[float] = None) -> Field:
    """
    Slack of the lower bound for Δ_f H under Ric_f^m >= −(m−1)k:

    Δ_f H >= 2(Δ_f h)²/m − 2⟨∇h,∇H⟩ + (e^{-h}Σ − Σ_u)H
             + [e^{-h}Σ − Σ_u + μe^hΣ_uu − 2(m−1)k]|∇h|²
             − 2⟨∇h, e^{-h}Σ_x − μΣ_xu⟩ + μe^{-h}Δ_fΣ^x

    Returns the node-wise LHS − RHS; nonnegative up to discretization error.
    """
    if k is None:
        k = curvature_lower_bound(space, space.r_max)
    t = _h_terms(hfield, space, mu, family)
    jet = t.jet
    inv = 1.0 / t.u
    dh2 = t.dh**2
    a = inv * jet.sigma - jet.sigma_u
    rhs = (
        2.0 * t.lap_h**2 / space.m
        - 2.0 * t.dh * t.dH
        + a * t.H
        + (a + mu * t.u * jet.sigma_uu - 2.0 * (space.m - 1.0) * k) * dh2
        - 2.0 * t.dh * (inv * jet.sigma_x - mu * jet.sigma_xu)
        + mu * inv * t.lap_sigma_x
    )
    return hfield.with_values(t.lap_H - rhs, name="h_inequality_slack")


def cs_chain_field(hfield: Field, space: ModelSpace) -> Field:
    """
    Node-wise slack of |∇²h|² + (f'h')²/(m−n) − (Δ_f h)²/m.

    All three terms come from the same discrete h', h'', so the slack is an
    algebraic identity of the stencil values and must be >= 0 to round-off.
    """
    dh = radial_derivative(hfield)
    ddh = radial_second_derivative(hfield)
    t = _tangential_over_phi(hfield, space, dh, ddh)
    df = space.weight.first(hfield.r)
    lap_f = ddh + (space.n - 1) * t - df * dh
    hess_sq = ddh**2 + (space.n - 1) * t**2
    weight_term = 0.0 if space.m == space.n else (df * dh) ** 2 / (space.m - space.n)
    return hfield.with_values(hess_sq + weight_term - lap_f**2 / space.m, name="cs_chain_slack")


def field_to_frame(field: Field, **columns) -> pd.DataFrame:
    """DataFrame with columns r, <field name>, and any extra equal-length columns"""
    frame = pd.DataFrame({"r": field.r, field.name: field.values})
    for name, values in columns.items():
        frame[name] = np.asarray(values, dtype=float)
    return frame
