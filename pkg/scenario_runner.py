"""
Scenario runner: parse a scenario file, solve each scenario, run its checks
and write reports. Scenarios run concurrently up to `jobs`; summaries come
back in config order.
"""

import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from matplotlib.figure import Figure
import numpy as np
from pydantic import BaseModel, ValidationError
from simpleeval import simple_eval

from convergence_study import StudyResult, run_study, study_report, tolerance_constant
from errors import ConfigError, NonConvergence, PositivityLoss, PreconditionError, WorkbenchError
from estimates import (
    EstimateParams,
    EstimateReport,
    check_global_estimate,
    check_liouville,
    check_local_estimate,
    harnack,
    harnack_global,
    nonexistence_consistent,
    optimize_params,
)
from grid_ops import (
    Field,
    RadialGrid,
    check_bochner_identity,
    check_h_equation,
    check_h_inequality,
    cs_chain_field,
    discretization_tolerance,
    identity_mask,
)
from inequality_kernel import run_kernel_suite
from model_space import ModelSpace, comparison_check, curvature_lower_bound, pole_mask, space_from_spec
from models import CheckResult, RunConfig, RunSummary, Scenario
from nonlinearity import NonlinearityFamily, family_from_spec
from profiles import profile_from_spec
from report_io import ReportWriter, plot_frame
from solver import BVPProblem, SolveResult, SolverConfig, corrupt_field, manufacture, residual, seeded_initial_field, solve_newton

logger = logging.getLogger(__name__)

CONSTANTS = {"pi": np.pi, "e": np.e}
# arithmetic strings use numbers, operators and the names in CONSTANTS, e.g. "pi/2"
_ARITHMETIC = re.compile(r"^[0-9A-Za-z_.+\-*/() ]+$")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_]\w*")


@dataclass
class ScenarioOutcome:
    summary: RunSummary
    reports: Dict[str, BaseModel] = field(default_factory=dict)
    u: Optional[Field] = None
    plot_report: Optional[EstimateReport] = None


class IdentitySummary(BaseModel):
    h_equation: float
    cs_chain: float
    comparison: float
    h_inequality: float


class ResidualRecord(BaseModel):
    values: List[float]


class ConvergenceRecord(BaseModel):
    studies: List[StudyResult]


# ==================== Config ====================

def _is_arithmetic(text: str) -> bool:
    if not _ARITHMETIC.match(text):
        return False
    names = _NAME.findall(_NUMBER.sub(" ", text))
    if any(name not in CONSTANTS for name in names):
        return False
    return bool(names) or any(c.isdigit() for c in text)


def evaluate_numbers(obj: Any) -> Any:
    """Replace arithmetic strings such as "pi/2" by their value"""
    if isinstance(obj, dict):
        return {k: evaluate_numbers(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [evaluate_numbers(v) for v in obj]
    if isinstance(obj, str) and _is_arithmetic(obj):
        try:
            return float(simple_eval(obj, names=CONSTANTS))
        except Exception as e:
            raise ConfigError(f"Cannot evaluate expression '{obj}': {e}") from e
    return obj


def load_config(path: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read and validate a scenario file.

    Raises:
        ConfigError: unreadable file, malformed JSON (with line/column) or schema violation
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e.msg}", line=e.lineno, column=e.colno) from e
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    raw = evaluate_numbers(raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "out":
            raw.setdefault("output", {})["directory"] = value
        else:
            raw[key] = value
    try:
        config = RunConfig(**raw)
    except ValidationError as e:
        raise ConfigError(f"{path}: {e}") from e
    for scenario in config.scenarios:
        _validate_catalog(scenario, path)
    return config


def _validate_catalog(scenario: Scenario, path: str) -> None:
    """Catalog names of a scenario must exist before anything runs"""
    try:
        space_from_spec(scenario.space)
        spec = scenario.family
        if spec["variant"] == "Manufactured":
            if "u_exact" not in spec:
                raise ConfigError("Manufactured family needs 'u_exact'")
            profile_from_spec(spec["u_exact"])
        else:
            family_from_spec(spec)
    except (ConfigError, ValidationError, ValueError, KeyError) as e:
        raise ConfigError(f"{path}: scenario '{scenario.name}': {str(e).splitlines()[0]}") from e


def build_family(scenario: Scenario, space: ModelSpace, grid: RadialGrid):
    """Family from the config block; 'Manufactured' also returns the exact field"""
    spec = scenario.family
    if spec["variant"] == "Manufactured":
        if "u_exact" not in spec:
            raise ConfigError(f"Scenario '{scenario.name}': Manufactured family needs 'u_exact'")
        return manufacture(space, profile_from_spec(spec["u_exact"]), grid)
    return family_from_spec(spec), None


def build_params(scenario: Scenario, space: ModelSpace, u: Field, family: NonlinearityFamily) -> EstimateParams:
    spec = scenario.params
    R = float(spec.get("R", space.r_max / 2.0))
    base = EstimateParams.for_space(space, R, mu=float(spec.get("mu", 2.0)), eps=float(spec.get("eps", 0.5)))
    if spec.get("optimize"):
        return optimize_params(u, family, space, R, base=base)
    return base


# ==================== Checks ====================

def _row(scenario: str, check: str, passed: bool, slack: Optional[float], tol: Optional[float], note: str = "") -> CheckResult:
    return CheckResult(scenario=scenario, check=check, status="PASS" if passed else "FAIL", slack=slack, tol=tol, note=note)


def _skip(scenario: str, check: str, note: str) -> CheckResult:
    return CheckResult(scenario=scenario, check=check, status="SKIP", note=note)


def run_identities(name: str, u: Field, family: NonlinearityFamily, space: ModelSpace, params: EstimateParams,
                   reports: Dict[str, BaseModel], c_tol: float) -> List[CheckResult]:
    """h-equation, Δ_f H identity, its lower bound, the CS chain and the Laplacian comparison"""
    rows = []
    mask = identity_mask(u.grid)
    hfield = u.with_values(np.log(u.values), name="h")
    scale = float(np.max(np.abs(np.gradient(hfield.values, u.grid.h)))) + 1.0

    # truncation error of h'' and h'^2 grows like scale^4, that of Δ_f H like scale^6
    h_res = check_h_equation(u, family, space).values[mask]
    tol = discretization_tolerance(u.grid, scale**4, c_tol)
    rows.append(_row(name, "identities.h_equation", float(np.max(np.abs(h_res))) <= tol, -float(np.max(np.abs(h_res))), tol))

    if space.m > space.n:
        b_res = check_bochner_identity(hfield, space, params.mu, family).values[mask]
        tol = discretization_tolerance(u.grid, scale**6, c_tol)
        rows.append(_row(name, "identities.bochner", float(np.max(np.abs(b_res))) <= tol, -float(np.max(np.abs(b_res))), tol))
    else:
        rows.append(_skip(name, "identities.bochner", "needs m > n"))

    k = curvature_lower_bound(space, space.r_max)
    ineq = float(np.min(check_h_inequality(hfield, space, params.mu, family, k).values[mask]))
    tol = discretization_tolerance(u.grid, scale**6, c_tol)
    rows.append(_row(name, "identities.h_inequality", ineq >= -tol, ineq, tol))

    cs = float(np.min(cs_chain_field(hfield, space).values))
    cs_tol = 1e-10 * (1.0 + scale**2)
    rows.append(_row(name, "identities.cs_chain", cs >= -cs_tol, cs, cs_tol))

    interior = u.r[~pole_mask(space, u.r) & (u.r > 0.0)]
    comparison = float(np.min(comparison_check(space, k, interior)))
    comparison_tol = 1e-10 * (1.0 + (space.m - 1.0) / u.grid.h)
    rows.append(_row(name, "identities.comparison", comparison >= -comparison_tol, comparison, comparison_tol))
    reports["identities"] = IdentitySummary(h_equation=-rows[0].slack, cs_chain=cs, comparison=comparison, h_inequality=ineq)
    return rows


def _solve(scenario: Scenario, space: ModelSpace, family: NonlinearityFamily, exact: Optional[Field],
           config: RunConfig, grid: RadialGrid) -> Tuple[BVPProblem, SolveResult]:
    boundary = scenario.boundary
    if boundary is None and exact is not None and not space.closed:
        boundary = float(exact.values[-1])
    problem = BVPProblem(space=space, family=family, boundary_value=None if space.closed else boundary,
                         initial_level=scenario.solver.get("initial_level"))
    settings = {k: v for k, v in scenario.solver.items() if k != "initial_level"}
    settings["grid_cells"] = grid.cells
    solver_config = SolverConfig(**settings)
    initial = None
    if scenario.initial is not None:
        spec = scenario.initial
        initial = seeded_initial_field(
            grid,
            seed=int(spec.get("seed", config.seed)),
            amplitude=float(spec.get("amplitude", 0.1)),
            level=float(spec.get("level", problem.default_level)),
        )
    return problem, solve_newton(problem, solver_config, initial)


def run_scenario(scenario: Scenario, config: RunConfig, checks: Optional[List[str]] = None) -> ScenarioOutcome:
    """
    Solve one scenario and run its checks; numerical errors become FAIL rows.
    """
    name = scenario.name
    wanted = [c for c in scenario.checks if checks is None or c in checks]
    summary = RunSummary(scenario=name, grid_cells=config.grid, seed=config.seed)
    outcome = ScenarioOutcome(summary=summary)
    if not wanted:
        return outcome
    start = time.perf_counter()

    try:
        space = space_from_spec(scenario.space)
        grid = RadialGrid.for_space(space, config.grid)
        family, exact = build_family(scenario, space, grid)
    except (ConfigError, ValidationError, PreconditionError, ValueError) as e:
        logger.error(f"Scenario '{name}' setup failed: {e}")
        summary.checks.append(CheckResult(scenario=name, check="setup", status="FAIL", note=str(e).splitlines()[0]))
        return outcome

    try:
        problem, result = _solve(scenario, space, family, exact, config, grid)
    except (NonConvergence, PositivityLoss) as e:
        logger.warning(f"Scenario '{name}': {e}")
        consistent = "liouville" in wanted and nonexistence_consistent(family, float(scenario.params.get("mu", 2.0)))
        for check in wanted:
            if check == "liouville" and consistent:
                summary.checks.append(_row(name, check, True, None, None, "nonexistence-consistent"))
            elif check == "kernel":
                summary.checks.extend(_kernel_rows(name, scenario, config, outcome.reports))
            else:
                summary.checks.append(_row(name, check, False, None, None, f"solve failed: {type(e).__name__}"))
        summary.timings["total"] = time.perf_counter() - start
        return outcome
    except (ValidationError, WorkbenchError) as e:
        logger.error(f"Scenario '{name}' solve failed: {e}", exc_info=True)
        summary.checks.append(CheckResult(scenario=name, check="solve", status="FAIL", note=str(e).splitlines()[0]))
        return outcome

    summary.timings["solve"] = time.perf_counter() - start
    summary.solve = {
        "iterations": result.iterations,
        "residual_norm": result.residual_norm,
        "tail_constant": result.tail_constant,
        "c_tol": scenario.c_tol if scenario.c_tol is not None else tolerance_constant(space),
    }
    if exact is not None:
        summary.solve["max_error"] = float(np.max(np.abs(result.u.values - exact.values)))
    u = result.u
    if scenario.corrupt is not None:
        u = corrupt_field(u, float(scenario.corrupt.get("amplitude", 0.999)), float(scenario.corrupt.get("frequency", 10.0)))
    outcome.u = u
    outcome.reports["residual"] = ResidualRecord(values=residual(problem, result.u).values.tolist())

    for check in wanted:
        try:
            summary.checks.extend(_run_check(check, name, scenario, config, space, family, u, outcome, summary.solve["c_tol"]))
        except (PreconditionError, NotImplementedError) as e:
            summary.checks.append(_skip(name, check, str(e)))
        except WorkbenchError as e:
            logger.error(f"Scenario '{name}' check '{check}' failed: {e}", exc_info=True)
            summary.checks.append(_row(name, check, False, None, None, type(e).__name__))
    summary.timings["total"] = time.perf_counter() - start
    logger.info(f"Scenario '{name}' finished in {summary.timings['total']:.2f}s")
    return outcome


def _kernel_rows(name: str, scenario: Scenario, config: RunConfig, reports: Dict[str, BaseModel]) -> List[CheckResult]:
    samples = int(scenario.kernel.get("samples", 100_000))
    seed = int(scenario.kernel.get("seed", config.seed))
    report = run_kernel_suite(samples=samples, seed=seed)
    reports["kernel"] = report
    return [_row(name, "kernel", report.passed, report.four_term.min_scaled_slack, 0.0)]


def _run_check(check: str, name: str, scenario: Scenario, config: RunConfig, space: ModelSpace,
               family: NonlinearityFamily, u: Field, outcome: ScenarioOutcome, c_tol: float) -> List[CheckResult]:
    reports = outcome.reports
    note = "corrupted" if scenario.corrupt is not None else ""
    if check == "kernel":
        return _kernel_rows(name, scenario, config, reports)
    if check == "convergence":
        if space.closed:
            return [_skip(name, check, "needs an open model")]
        u_exact = profile_from_spec(scenario.family.get("u_exact", {"name": "cosine_bump", "offset": 2.0, "amplitude": 1.0}))
        csv_dir = str(Path(config.output.directory) / name)
        studies = run_study(space, u_exact, float(scenario.params.get("mu", 2.0)), csv_dir=csv_dir)
        logger.info(f"Scenario '{name}':\n{study_report(studies)}")
        reports["convergence"] = ConvergenceRecord(studies=studies)
        return [_row(name, f"convergence.{s.name}", s.in_band, s.band_slack, 0.0, f"band {s.band[0]}-{s.band[1]}")
                for s in studies]

    params = build_params(scenario, space, u, family)
    if check == "local":
        report = check_local_estimate(u, family, space, params, c_tol=c_tol)
        reports["local"] = report
        outcome.plot_report = report
        return [_row(name, check, report.passed, report.min_slack, report.tolerance, note)]
    if check == "global":
        report = check_global_estimate(u, family, space, params, c_tol=c_tol)
        reports["global"] = report
        if outcome.plot_report is None:
            outcome.plot_report = report
        return [_row(name, check, report.passed, report.min_slack, report.tolerance, note)]
    if check == "harnack":
        report = harnack(u, family, space, params, c_tol=c_tol)
        reports["harnack"] = report
        rows = [_row(name, check, report.passed, min(report.grad_bound_slack, report.supinf_slack), report.grad_tolerance, note)]
        if space.closed:
            report_g = harnack_global(u, family, space, params, c_tol=c_tol)
            reports["harnack_global"] = report_g
            rows.append(_row(name, "harnack_global", report_g.passed, report_g.pairwise_slack, report_g.grad_tolerance, note))
        return rows
    if check == "liouville":
        report = check_liouville(u, family, space, params, c_tol=c_tol)
        reports["liouville"] = report
        return [_row(name, check, report.passed, -report.gradient_sup, report.tolerance, report.note)]
    if check == "identities":
        return run_identities(name, u, family, space, params, reports, c_tol)
    raise ConfigError(f"Unknown check '{check}'")


# ==================== Output ====================

def write_outputs(outcome: ScenarioOutcome, out_dir: str, png: bool = False) -> List[Path]:
    """Reports for one scenario; nothing is written for an empty check set"""
    summary = outcome.summary
    if not summary.checks:
        return []
    writer = ReportWriter(out_dir, summary.scenario)
    paths = [writer.write_report(summary, outcome.reports)]
    if outcome.u is not None:
        record = outcome.reports.get("residual")
        paths.append(writer.write_field(outcome.u, np.asarray(record.values) if record is not None else None))
    estimates = {k: v for k, v in outcome.reports.items() if isinstance(v, EstimateReport)}
    path = writer.write_estimates(estimates)
    if path is not None:
        paths.append(path)
    convergence = outcome.reports.get("convergence")
    if convergence is not None:
        paths.append(writer.write_convergence(convergence.studies))
    paths.extend(emit_plots(outcome, out_dir, png))
    return paths


def emit_plots(outcome: ScenarioOutcome, out_dir: str, png: bool = False) -> List[Path]:
    """plot.csv (r, u, lhs, rhs_line, slack) and optionally plot.png"""
    if outcome.u is None or outcome.plot_report is None:
        return []
    writer = ReportWriter(out_dir, outcome.summary.scenario)
    paths = [writer.write_plot_data(outcome.u, outcome.plot_report)]
    if png:
        frame = plot_frame(outcome.u, outcome.plot_report)
        fig = Figure(figsize=(10, 7))
        top, bottom = fig.subplots(2, 1, sharex=True)
        top.plot(frame['r'], frame['u'], color='steelblue', linewidth=1.2)
        top.set_ylabel('u', fontsize=11, fontweight='bold')
        top.grid(alpha=0.3, linestyle='--')
        bottom.plot(frame['r'], frame['lhs'], color='orangered', linewidth=1.2, label='lhs')
        bottom.plot(frame['r'], frame['rhs_line'], color='black', linestyle='--', linewidth=1.0, label='rhs')
        bottom.set_xlabel('r', fontsize=11, fontweight='bold')
        bottom.legend()
        bottom.grid(alpha=0.3, linestyle='--')
        fig.suptitle(f"{outcome.summary.scenario}: {outcome.plot_report.kind} estimate", fontsize=13, fontweight='bold')
        fig.tight_layout()
        path = writer.directory / 'plot.png'
        fig.savefig(path, dpi=100, bbox_inches='tight')
        paths.append(path)
    return paths


def run(config_path: str, overrides: Optional[Dict[str, Any]] = None, checks: Optional[List[str]] = None) -> List[RunSummary]:
    """
    Run every scenario of a config file and write its reports.

    Args:
        config_path: scenario file
        overrides: top-level keys replacing file values (out, jobs, grid, seed)
        checks: optional filter of check names

    Returns:
        RunSummary per scenario, in config order

    Raises:
        ConfigError: unreadable or invalid config
    """
    config = load_config(config_path, overrides)
    out_dir = config.output.directory

    def work(scenario: Scenario) -> RunSummary:
        outcome = run_scenario(scenario, config, checks)
        try:
            write_outputs(outcome, out_dir, config.output.png)
        except OSError as e:
            logger.error(f"Writing reports for '{scenario.name}' failed: {e}")
            outcome.summary.checks.append(CheckResult(scenario=scenario.name, check="output", status="FAIL", note=str(e)))
        return outcome.summary

    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        return list(executor.map(work, config.scenarios))
