from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


CHECK_NAMES = ("local", "global", "harnack", "liouville", "identities", "kernel", "convergence")
CheckName = Literal["local", "global", "harnack", "liouville", "identities", "kernel", "convergence"]


class OutputConfig(BaseModel):
    """Where and what to write per scenario"""
    directory: str = "out"
    png: bool = False


class Scenario(BaseModel):
    """One solve plus the checks to run on the solution"""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.\-]+$", description="Also the output subdirectory")
    space: dict[str, Any]
    family: dict[str, Any]
    boundary: Optional[float] = Field(default=None, gt=0, description="Dirichlet value at r_max on open models")
    params: dict[str, Any] = Field(default_factory=dict, description="mu, eps, R, optimize")
    solver: dict[str, Any] = Field(default_factory=dict)
    initial: Optional[dict[str, Any]] = Field(default=None, description="seeded initial guess: seed, amplitude, level")
    checks: list[CheckName] = Field(default_factory=list)
    corrupt: Optional[dict[str, float]] = Field(default=None, description="amplitude, frequency of the negative control")
    kernel: dict[str, Any] = Field(default_factory=dict)
    c_tol: Optional[float] = Field(default=None, gt=0, description="Tolerance constant; measured on the space when absent")

    @field_validator('checks')
    @classmethod
    def validate_checks(cls, v):
        if len(set(v)) != len(v):
            raise ValueError('Checks must not repeat')
        return v

    @field_validator('family')
    @classmethod
    def validate_family(cls, v):
        if 'variant' not in v:
            raise ValueError("Family block needs a 'variant'")
        return v

    @model_validator(mode='after')
    def validate_radius(self):
        """Ensure the ball B_2R fits inside the domain"""
        R, r_max = self.params.get('R'), self.space.get('r_max')
        if isinstance(R, (int, float)) and isinstance(r_max, (int, float)):
            if R <= 0 or 2 * R > r_max * (1 + 1e-12):
                raise ValueError(f'Ball radius R={R} needs 0 < 2R <= r_max={r_max}')
        return self


class RunConfig(BaseModel):
    """Top-level scenario file"""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0)
    grid: int = Field(default=512, ge=16, description="Grid cells N")
    jobs: int = Field(default=1, ge=1)
    output: OutputConfig = Field(default_factory=OutputConfig)
    scenarios: list[Scenario] = Field(min_length=1)

    @model_validator(mode='after')
    def validate_unique_names(self):
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ValueError('Scenario names must be unique')
        return self


class CheckResult(BaseModel):
    """One summary line"""
    scenario: str
    check: str
    status: Literal["PASS", "FAIL", "SKIP"]
    slack: Optional[float] = None
    tol: Optional[float] = None
    note: str = ""

    def summary_line(self) -> str:
        slack = "nan" if self.slack is None else f"{self.slack:g}"
        tol = "nan" if self.tol is None else f"{self.tol:g}"
        line = f"{self.scenario} {self.check} {self.status} slack={slack} tol={tol}"
        return f"{line} {self.note}" if self.note else line


class RunSummary(BaseModel):
    """Per-scenario outcome; timings are kept out of report files"""
    scenario: str
    grid_cells: int
    seed: int
    checks: list[CheckResult] = Field(default_factory=list)
    solve: dict[str, Any] = Field(default_factory=dict)
    timings: dict[str, float] = Field(default_factory=dict, exclude=True)

    @property
    def passed(self) -> bool:
        return all(c.status != "FAIL" for c in self.checks)
