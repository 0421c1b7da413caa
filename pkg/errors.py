"""
Exception hierarchy for the workbench.

Input problems derive from ValueError, numerical failures from RuntimeError,
so callers can catch either family without importing this module.
"""

from typing import List, Optional


class WorkbenchError(Exception):
    """Base class for every error raised by the workbench"""


class PoleError(WorkbenchError, ValueError):
    """A radial formula was evaluated at a pole where only its limit exists"""

    def __init__(self, quantity: str, r: float):
        super().__init__(f"{quantity} is undefined at the pole r={r:g}; use the limit path")
        self.quantity = quantity
        self.r = r


class DomainError(WorkbenchError, ValueError):
    """Argument outside the domain of a formula (e.g. u <= 0 for the nonlinearity)"""


class PositivityError(WorkbenchError, ValueError):
    """A field that must represent a positive solution has a non-positive node"""

    def __init__(self, where: str, r: float, value: float):
        super().__init__(f"{where}: field is not positive at r={r:g} (value {value:g})")
        self.r = r
        self.value = value


class PreconditionError(WorkbenchError, ValueError):
    """A documented precondition of an operation does not hold"""


class CurvatureNotNonnegative(PreconditionError):
    """Liouville check requested on a space whose Bakry-Emery bound k is positive"""

    def __init__(self, k: float):
        super().__init__(f"Liouville check needs Ric_f^m >= 0 but curvature bound k={k:g}")
        self.k = k


class ConfigError(WorkbenchError, ValueError):
    """Scenario configuration could not be parsed or references unknown names"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class NonConvergence(WorkbenchError, RuntimeError):
    """Newton iteration exhausted its iteration or damping budget"""

    def __init__(self, message: str, history: Optional[List[float]] = None):
        super().__init__(message)
        self.history = list(history or [])


class PositivityLoss(WorkbenchError, RuntimeError):
    """Newton iterate lost positivity and damping could not restore it"""
