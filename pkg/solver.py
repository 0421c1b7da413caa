"""
Positive solutions of Δ_f u + Σ(x, u) = 0 on the radial domain.

Damped Newton with continuation in a scalar t multiplying Σ. The Jacobian
is the tridiagonal weighted Laplacian plus diag(t·Σ_u) and is solved with
scipy's banded solver.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, model_validator
from scipy.linalg import LinAlgError, solve_banded

from errors import NonConvergence, PositivityLoss, PreconditionError
from grid_ops import Field, RadialGrid, assemble_witten
from model_space import ModelSpace
from nonlinearity import NonlinearityFamily, SpatialSource, sigma_jet
from profiles import SmoothProfile

logger = logging.getLogger(__name__)

TAIL_THRESHOLD = 1e-3
FLOOR_FACTOR = 4.0


class BVPProblem(BaseModel):
    """Δ_f u + Σ = 0 with u(r_max) = u_b on open models, pole symmetry on the closed sphere"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: ModelSpace
    family: NonlinearityFamily
    boundary_value: Optional[float] = PydanticField(default=None, gt=0)
    initial_level: Optional[float] = PydanticField(default=None, gt=0)

    @model_validator(mode="after")
    def validate_boundary(self):
        if self.space.closed and self.boundary_value is not None:
            raise ValueError("Closed spherical model has no boundary; Dirichlet data is not allowed")
        if not self.space.closed and self.boundary_value is None:
            raise ValueError("Open model needs a positive Dirichlet value at r_max")
        return self

    @property
    def default_level(self) -> float:
        if self.initial_level is not None:
            return self.initial_level
        return 1.0 if self.space.closed else float(self.boundary_value)


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    newton_tol: float = PydanticField(default=1e-10, gt=0)
    max_iter: int = PydanticField(default=50, gt=0)
    damping: float = PydanticField(default=0.5, gt=0, lt=1)
    max_halvings: int = PydanticField(default=20, gt=0)
    continuation_steps: int = PydanticField(default=1, ge=1)
    continuation_tol: float = PydanticField(default=1e-6, gt=0, description="Tolerance of intermediate steps")
    grid_cells: int = PydanticField(default=512, ge=16)


@dataclass(frozen=True)
class SolveResult:
    u: Field
    residual_norm: float
    iterations: int
    positive: bool
    converged: bool
    history: List[float] = field(default_factory=list)
    tail_constant: Optional[float] = None

    def __post_init__(self):
        if self.converged and not self.positive:
            raise ValueError("A converged solve must be positive")


def residual(problem: BVPProblem, u: Field, scale: float = 1.0) -> Field:
    """
    Node-wise Δ_f u + scale·Σ(r, u); the Dirichlet row holds u_N − u_b.

    Raises:
        PositivityError: if u has a non-positive node
    """
    u.require_positive("residual")
    L = assemble_witten(problem.space, u.grid)
    values = L.apply(u.values)
    if scale != 0.0:
        values = values + scale * np.asarray(sigma_jet(problem.family, u.r, u.values).sigma)
    if not problem.space.closed:
        values[-1] = u.values[-1] - problem.boundary_value
    return u.with_values(values, name="residual")


def _newton_step(problem: BVPProblem, L, u: Field, F: np.ndarray, scale: float) -> np.ndarray:
    sigma_u = scale * np.asarray(sigma_jet(problem.family, u.r, u.values).sigma_u)
    ab = L.banded()
    ab[1, :] += sigma_u
    if not problem.space.closed:
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
    elif not np.any(sigma_u):
        # constants span the kernel; the minimum-norm step keeps the mean level
        A = L.to_dense()
        return np.linalg.lstsq(A, -F, rcond=None)[0]
    try:
        return solve_banded((1, 1), ab, -F)
    except (LinAlgError, ValueError) as e:
        logger.warning(f"Banded Jacobian solve failed ({e}); using least squares")
        A = L.to_dense() + np.diag(sigma_u)
        if not problem.space.closed:
            A[-1, :] = 0.0
            A[-1, -1] = 1.0
        return np.linalg.lstsq(A, -F, rcond=None)[0]


def residual_floor(L, values) -> float:
    """Round-off level of the residual, FLOOR_FACTOR·eps·‖L‖∞·max|u|"""
    return FLOOR_FACTOR * float(np.finfo(float).eps) * L.norm_inf() * float(np.max(np.abs(values)))


def _tail_constant(history: List[float]) -> Optional[float]:
    """max r_{k+1}/r_k² over the quadratic tail (r_k < 1e-3)"""
    ratios = [b / (a * a) for a, b in zip(history, history[1:]) if 0.0 < a < TAIL_THRESHOLD]
    return max(ratios) if ratios else None


def _initial_values(problem: BVPProblem, grid: RadialGrid, initial: Optional[Field]) -> np.ndarray:
    if initial is not None:
        if initial.grid.cells != grid.cells:
            raise PreconditionError(f"Initial field has {initial.grid.cells} cells, solver uses {grid.cells}")
        values = np.array(initial.values, dtype=float)
    else:
        values = np.full(grid.cells + 1, problem.default_level)
    if not problem.space.closed:
        values[-1] = problem.boundary_value
    return values


def _at_floor(L, u: Field, norm: float, scale: float) -> bool:
    floor = residual_floor(L, u.values)
    if norm > floor:
        return False
    logger.info(f"Residual {norm:.3e} at the round-off floor {floor:.3e} (t={scale:g}); accepting the iterate")
    return True


def solve_newton(problem: BVPProblem, config: SolverConfig = SolverConfig(), initial: Optional[Field] = None) -> SolveResult:
    """
    Damped Newton with continuation.

    Each continuation step solves with Σ scaled by t = k/steps; intermediate
    steps stop at continuation_tol, the last at newton_tol. A step is halved
    until the iterate stays positive and the residual decreases.
    An iterate whose residual has reached the round-off floor is accepted
    even when newton_tol lies below that floor.

    Args:
        problem: boundary value problem
        config: solver settings
        initial: optional starting field on the solver grid

    Returns:
        Converged SolveResult

    Raises:
        NonConvergence: iteration or damping budget exhausted
        PositivityLoss: no damped step keeps the iterate positive
    """
    grid = RadialGrid.for_space(problem.space, config.grid_cells)
    L = assemble_witten(problem.space, grid)
    u = Field(grid, _initial_values(problem, grid, initial))
    u.require_positive("solve_newton initial guess")
    steps = config.continuation_steps
    history: List[float] = []
    total_iterations = 0

    for step in range(1, steps + 1):
        scale = step / steps
        tol = config.newton_tol if step == steps else max(config.newton_tol, config.continuation_tol)
        step_history: List[float] = []
        F = residual(problem, u, scale).values
        norm = float(np.max(np.abs(F)))
        step_history.append(norm)
        iterations = 0
        while norm > tol:
            if iterations >= config.max_iter:
                if _at_floor(L, u, norm, scale):
                    break
                raise NonConvergence(
                    f"Newton did not converge in {config.max_iter} iterations at t={scale:g} (residual {norm:.3e})",
                    history + step_history,
                )
            delta = _newton_step(problem, L, u, F, scale)
            lam = 1.0
            accepted = False
            any_positive = False
            for _ in range(config.max_halvings + 1):
                trial = u.values + lam * delta
                if np.all(trial > 0.0):
                    any_positive = True
                    trial_field = u.with_values(trial)
                    F_trial = residual(problem, trial_field, scale).values
                    trial_norm = float(np.max(np.abs(F_trial)))
                    if trial_norm < norm or trial_norm <= tol:
                        u, F, norm = trial_field, F_trial, trial_norm
                        accepted = True
                        break
                lam *= config.damping
            iterations += 1
            step_history.append(norm)
            logger.debug(f"t={scale:.3f} iter={iterations} lambda={lam:.3g} residual={norm:.3e}")
            if not accepted:
                if any_positive and _at_floor(L, u, norm, scale):
                    break
                logger.warning(f"Damping exhausted at t={scale:g} after {config.max_halvings} halvings")
                if not any_positive:
                    raise PositivityLoss(f"Every damped Newton step leaves u <= 0 at t={scale:g}")
                raise NonConvergence(
                    f"Damping exhausted at t={scale:g} (residual {norm:.3e})", history + step_history
                )
        total_iterations += iterations
        history.extend(step_history)
        if steps > 1:
            logger.info(f"Continuation step {step}/{steps}: residual {norm:.3e} after {iterations} iterations")

    tail = _tail_constant(step_history)
    if tail is not None:
        logger.info(f"Quadratic Newton tail constant C={tail:.3g}")
    return SolveResult(
        u=u.with_values(u.values, name="u"),
        residual_norm=norm,
        iterations=total_iterations,
        positive=u.positive,
        converged=True,
        history=history,
        tail_constant=tail,
    )


def manufacture(space: ModelSpace, u_exact: SmoothProfile, grid: Optional[RadialGrid] = None) -> Tuple[SpatialSource, Field]:
    """
    Source Σ(r) = −Δ_f u_exact(r) so that u_exact solves the equation exactly.

    Args:
        space: model space
        u_exact: positive profile with u_exact'(0) = 0
        grid: grid for the sampled exact field (default 512 cells)

    Returns:
        (SpatialSource family, exact field on the grid)
    """
    grid = grid or RadialGrid.for_space(space, 512)
    if abs(float(u_exact.first(0.0))) > 1e-12:
        raise PreconditionError(f"Manufactured solution needs u'(0)=0, got {float(u_exact.first(0.0)):g}")
    exact = Field(grid, u_exact(grid.nodes), name="u_exact")
    exact.require_positive("manufacture")
    n = space.n

    def source(r):
        r = np.asarray(r, dtype=float)
        phi = space.warp(r)
        d1, d2 = u_exact.first(r), u_exact.second(r)
        at_pole = np.abs(phi) < 1e-12
        safe_phi = np.where(at_pole, 1.0, phi)
        b = (n - 1) * space.warp.first(r) / safe_phi - space.weight.first(r)
        return np.where(at_pole, -n * d2, -(d2 + b * d1))

    family = SpatialSource(
        source=source,
        label=f"manufactured:{u_exact.name}",
        params={"u_exact": u_exact.describe()},
        is_constant=u_exact.is_constant,
    )
    return family, exact


def seeded_initial_field(grid: RadialGrid, seed: int, amplitude: float = 0.1, level: float = 1.0, modes: int = 4) -> Field:
    """level + amplitude·Σ_k a_k cos(kπ r/r_max) with a_k ~ U(−1, 1) from the seed"""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, modes)
    r = grid.nodes
    values = level + amplitude * sum(a[k - 1] * np.cos(k * np.pi * r / grid.r_max) for k in range(1, modes + 1))
    return Field(grid, values, name="u_initial")


def corrupt_field(u: Field, amplitude: float = 0.999, frequency: float = 10.0) -> Field:
    """u·(1 + amplitude·sin(frequency·r)); stays positive for amplitude < 1"""
    if not 0.0 <= amplitude < 1.0:
        raise PreconditionError(f"Corruption amplitude must lie in [0, 1), got {amplitude}")
    return u.with_values(u.values * (1.0 + amplitude * np.sin(frequency * u.r)), name="u_corrupted")
