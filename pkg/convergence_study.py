#!/usr/bin/env python
"""
Grid refinement studies for the radial discretization.

Each study runs on N in {128, 256, 512} and records the max node error per
grid and the ratios of consecutive errors; second-order stencils give
ratios close to 4. Errors are compared at the nodes of the coarsest grid, so
every N measures the same points.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from errors import PreconditionError
from grid_ops import (
    RadialGrid,
    assemble_witten,
    check_bochner_identity,
    check_h_equation,
    field_to_frame,
    identity_mask,
)
from model_space import ModelSpace, drift_coefficient, pole_mask
from profiles import SmoothProfile
from solver import BVPProblem, SolverConfig, manufacture, solve_newton

logger = logging.getLogger(__name__)

DEFAULT_CELLS = (128, 256, 512)
# accepted bands for consecutive error ratios
ORDER_BAND = (3.6, 4.4)
IDENTITY_BAND = (3.4, 4.6)


class StudyResult(BaseModel):
    """Errors per grid and consecutive ratios error[i]/error[i+1]"""

    name: str
    cells: List[int]
    errors: List[float]
    ratios: List[float]
    r_max: float
    band: Tuple[float, float] = ORDER_BAND

    @property
    def in_band(self) -> bool:
        lo, hi = self.band
        return bool(self.ratios) and all(lo <= q <= hi for q in self.ratios)

    @property
    def band_slack(self) -> float:
        """Signed distance of the worst ratio to the nearer band edge; negative outside"""
        lo, hi = self.band
        return float(min(min(q - lo, hi - q) for q in self.ratios))

    @property
    def observed_order(self) -> List[float]:
        return [float(np.log2(q)) if q > 0 else float("nan") for q in self.ratios]

    def to_row(self) -> Dict:
        return {"study": self.name, **{f"N={n}": e for n, e in zip(self.cells, self.errors)},
                **{f"ratio{i}": q for i, q in enumerate(self.ratios)}}


def _ratios(errors: Sequence[float]) -> List[float]:
    return [float(a / b) if b > 0 else float("inf") for a, b in zip(errors, errors[1:])]


def _shared_nodes(cells: Sequence[int], N: int) -> np.ndarray:
    """Indices on the N-cell grid of the coarsest grid's nodes"""
    coarse = cells[0]
    if N % coarse:
        raise PreconditionError(f"Refinement needs multiples of {coarse} cells, got {N}")
    return np.arange(coarse + 1) * (N // coarse)


def _max_error(values: np.ndarray, cells: Sequence[int], N: int, mask: Optional[np.ndarray] = None) -> float:
    sampled = np.abs(values[_shared_nodes(cells, N)])
    if mask is not None:
        sampled = sampled[mask]
    return float(np.max(sampled))


def exact_drift_laplacian_cos(space: ModelSpace, r: np.ndarray) -> np.ndarray:
    """Δ_f cos r = −cos r − b(r) sin r, with n·(−cos r) at the poles"""
    r = np.asarray(r, dtype=float)
    out = -space.n * np.cos(r)
    regular = ~pole_mask(space, r)
    out[regular] = -np.cos(r[regular]) - drift_coefficient(space, r[regular]) * np.sin(r[regular])
    return out


def operator_order(space: ModelSpace, cells: Sequence[int] = DEFAULT_CELLS) -> StudyResult:
    """Max node error of the assembled operator applied to cos r"""
    errors = []
    for N in cells:
        grid = RadialGrid.for_space(space, N)
        L = assemble_witten(space, grid)
        err = L.apply(np.cos(grid.nodes)) - exact_drift_laplacian_cos(space, grid.nodes)
        errors.append(_max_error(err, cells, N))
        logger.debug(f"operator N={N}: max error {errors[-1]:.3e}")
    return StudyResult(name="operator", cells=list(cells), errors=errors, ratios=_ratios(errors), r_max=space.r_max)


def solution_order(
    space: ModelSpace,
    u_exact: SmoothProfile,
    cells: Sequence[int] = DEFAULT_CELLS,
    newton_tol: float = 1e-9,
    csv_dir: Optional[str] = None,
) -> StudyResult:
    """
    Manufactured Dirichlet solves against the exact solution.

    With csv_dir, writes convergence_N<N>.csv (r, u_exact, u_h, error) per grid.

    Raises:
        PreconditionError: on the closed model, where Σ = Σ(r) leaves the
            constant level undetermined
    """
    if space.closed:
        raise PreconditionError("Solution refinement needs an open model with Dirichlet data")
    errors = []
    for N in cells:
        grid = RadialGrid.for_space(space, N)
        family, exact = manufacture(space, u_exact, grid)
        problem = BVPProblem(space=space, family=family, boundary_value=float(exact.values[-1]))
        result = solve_newton(problem, SolverConfig(grid_cells=N, newton_tol=newton_tol))
        err = result.u.values - exact.values
        errors.append(_max_error(err, cells, N))
        if csv_dir:
            path = Path(csv_dir) / f"convergence_N{N}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            frame = field_to_frame(exact, u_h=result.u.values, error=np.abs(err))
            frame.to_csv(path, index=False)
            logger.info(f"Wrote {path}")
    return StudyResult(name="solution", cells=list(cells), errors=errors, ratios=_ratios(errors), r_max=space.r_max)


def identity_order(
    space: ModelSpace,
    u_exact: SmoothProfile,
    mu: float = 2.0,
    cells: Sequence[int] = DEFAULT_CELLS,
) -> List[StudyResult]:
    """
    Residuals of the h-equation and, when m > n, of the Δ_f H identity on
    the exact field, away from the one-sided stencils at an open end.
    """
    mask = identity_mask(RadialGrid.for_space(space, cells[0]))
    h_errors, b_errors = [], []
    for N in cells:
        grid = RadialGrid.for_space(space, N)
        family, exact = manufacture(space, u_exact, grid)
        h_errors.append(_max_error(check_h_equation(exact, family, space).values, cells, N, mask))
        if space.m > space.n:
            hfield = exact.with_values(np.log(exact.values), name="h")
            b_errors.append(_max_error(check_bochner_identity(hfield, space, mu, family).values, cells, N, mask))
    studies = [StudyResult(name="h_equation", cells=list(cells), errors=h_errors, ratios=_ratios(h_errors),
                           r_max=space.r_max, band=IDENTITY_BAND)]
    if b_errors:
        studies.append(StudyResult(name="bochner", cells=list(cells), errors=b_errors, ratios=_ratios(b_errors),
                                   r_max=space.r_max, band=IDENTITY_BAND))
    return studies


def measured_tolerance_constant(study: StudyResult) -> float:
    """C_tol = 10·max(error·N²/r_max²), i.e. 10·max(error/h²)"""
    scaled = [e * n * n / study.r_max**2 for n, e in zip(study.cells, study.errors)]
    return 10.0 * float(max(scaled))


def tolerance_constant(space: ModelSpace, cells: Sequence[int] = DEFAULT_CELLS) -> float:
    """C_tol measured from the operator study on the space"""
    c_tol = measured_tolerance_constant(operator_order(space, cells))
    logger.info(f"Measured C_tol = {c_tol:.3g} on {space.warp.name}, n={space.n}, m={space.m:g}")
    return c_tol


def study_report(studies: List[StudyResult]) -> str:
    lines = ["=" * 70, "Grid refinement", "=" * 70]
    for study in studies:
        errors = "  ".join(f"N={n}: {e:.3e}" for n, e in zip(study.cells, study.errors))
        ratios = ", ".join(f"{q:.2f}" for q in study.ratios)
        flag = "ok" if study.in_band else f"outside [{study.band[0]}, {study.band[1]}]"
        lines.append(f"{study.name:<12} {errors}  ratios [{ratios}] {flag}")
    lines.append("=" * 70)
    return "\n".join(lines)


def run_study(space: ModelSpace, u_exact: SmoothProfile, mu: float = 2.0,
              cells: Sequence[int] = DEFAULT_CELLS, csv_dir: Optional[str] = None) -> List[StudyResult]:
    """Operator, solution (open models) and identity studies on one space"""
    studies = [operator_order(space, cells)]
    if not space.closed:
        studies.append(solution_order(space, u_exact, cells, csv_dir=csv_dir))
    studies.extend(identity_order(space, u_exact, mu, cells))
    return studies


def main():
    from model_space import space_from_spec
    from profiles import PROFILES

    logging.basicConfig(format="%(asctime)s - %(name)s - %(levelname)s - %(message)s", level=logging.INFO)
    space = space_from_spec({"warp": "euclidean", "n": 3, "m": 8, "r_max": 2.0,
                             "weight": {"name": "gaussian", "alpha": 0.5}})
    studies = run_study(space, PROFILES["cosine_bump"](offset=2.0, amplitude=1.0))
    print("\n" + study_report(studies))
    for study in studies:
        print(f"{study.name:<12} C_tol = {measured_tolerance_constant(study):.3g}")


if __name__ == "__main__":
    main()
