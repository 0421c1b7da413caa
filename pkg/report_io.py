"""
Report writer
Writes out/<scenario>/{report.json, field.csv, estimate.csv, plot.csv, convergence.csv}
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from convergence_study import StudyResult
from estimates import EstimateReport
from grid_ops import Field, field_to_frame
from models import RunSummary

logger = logging.getLogger(__name__)

ESTIMATE_COLUMNS = [
    'scenario',
    'check',
    'mu',
    'eps',
    'R',
    'k',
    'A',
    'B',
    'C',
    'rhs',
    'max_lhs',
    'slack',
    'pass',
]

PLOT_COLUMNS = ['r', 'u', 'lhs', 'rhs_line', 'slack']


class ReportWriter:
    """Writes one scenario's reports into its own directory"""

    def __init__(self, out_dir: str, scenario: str):
        """
        Args:
            out_dir: root output directory
            scenario: scenario name, used as the subdirectory
        """
        self.directory = Path(out_dir) / scenario
        self.scenario = scenario

    def _ensure_dir(self):
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OSError(f"Cannot create output directory {self.directory}: {e}") from e

    def write_report(self, summary: RunSummary, reports: Dict[str, BaseModel]) -> Path:
        """report.json with the run summary and every check report"""
        self._ensure_dir()
        path = self.directory / 'report.json'
        payload = {
            'summary': summary.model_dump(mode='json'),
            'reports': {name: report.model_dump(mode='json') for name, report in reports.items()},
        }
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2)
            f.write('\n')
        return path

    def write_field(self, u: Field, residual: Optional[np.ndarray] = None) -> Path:
        """field.csv with columns r, u, residual"""
        self._ensure_dir()
        path = self.directory / 'field.csv'
        residual = np.zeros_like(u.values) if residual is None else residual
        frame = field_to_frame(u.with_values(u.values, name='u'), residual=residual)
        frame.to_csv(path, index=False)
        return path

    def write_estimates(self, reports: Dict[str, EstimateReport]) -> Optional[Path]:
        """estimate.csv with one flat row per estimate report"""
        if not reports:
            return None
        self._ensure_dir()
        path = self.directory / 'estimate.csv'
        rows = [estimate_row(self.scenario, name, report) for name, report in reports.items()]
        pd.DataFrame(rows, columns=ESTIMATE_COLUMNS).to_csv(path, index=False)
        return path

    def write_plot_data(self, u: Field, report: EstimateReport) -> Path:
        """plot.csv over the ball of the estimate: r, u, lhs, rhs_line, slack"""
        self._ensure_dir()
        path = self.directory / 'plot.csv'
        plot_frame(u, report).to_csv(path, index=False)
        return path

    def write_convergence(self, studies: List[StudyResult]) -> Optional[Path]:
        """convergence.csv with one row per refinement study: errors per N and ratios"""
        if not studies:
            return None
        self._ensure_dir()
        path = self.directory / 'convergence.csv'
        pd.DataFrame([s.to_row() for s in studies]).to_csv(path, index=False)
        return path


def estimate_row(scenario: str, check: str, report: EstimateReport) -> Dict:
    return {
        'scenario': scenario,
        'check': check,
        'mu': report.params.mu,
        'eps': report.params.eps,
        'R': report.params.R,
        'k': report.params.k,
        'A': report.bundle.A_sigma,
        'B': report.bundle.B_sigma,
        'C': report.bundle.C_sigma,
        'rhs': report.rhs,
        'max_lhs': report.max_lhs,
        'slack': report.min_slack,
        'pass': report.passed,
    }


def plot_frame(u: Field, report: EstimateReport) -> pd.DataFrame:
    r = np.asarray(report.r)
    lhs = np.asarray(report.lhs)
    values = u.values[: r.size]
    return pd.DataFrame({
        'r': r,
        'u': values,
        'lhs': lhs,
        'rhs_line': np.full(r.size, report.rhs),
        'slack': report.rhs - lhs,
    }, columns=PLOT_COLUMNS)


def read_plot_data(path: str) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [c for c in PLOT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is missing columns {missing}")
    return frame


def summary_table(summaries: List[RunSummary]) -> pd.DataFrame:
    """One row per check across scenarios, in config order"""
    rows = [check.model_dump() for s in summaries for check in s.checks]
    return pd.DataFrame(rows, columns=['scenario', 'check', 'status', 'slack', 'tol', 'note'])
