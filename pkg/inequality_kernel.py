#!/usr/bin/env python
"""
Algebraic ingredients of the gradient estimate, checked numerically.

- the four-term algebraic inequality used to close the maximum principle argument
- the quintic smoothstep cutoff ψ̄ and its constants c1, c2
- the Cauchy-Schwarz chain |Hess|² >= (tr)²/n and its weighted extension
- the bound x coth x <= 1 + x
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import minimize_scalar

from errors import PreconditionError

logger = logging.getLogger(__name__)

SLACK_REL_TOL = 1e-10
CHUNK = 100_000


# ==================== Four-term algebraic inequality ====================

class AlgebraSample(BaseModel):
    a: float
    b: float
    c: float = Field(ge=0, description="c = 0 is the continuous limit of the c-term")
    y: float = Field(gt=0)
    z: float
    mu: float = Field(gt=1)
    eps: float = Field(gt=0, lt=1)

    @model_validator(mode="after")
    def validate_gap(self):
        if not self.y - self.mu * self.z > 0:
            raise ValueError(f"Need y - mu*z > 0, got {self.y - self.mu * self.z:g}")
        return self


def _four_term_sides(a, b, c, y, z, mu, eps) -> Tuple[np.ndarray, np.ndarray]:
    gap = y - mu * z
    sy = np.sqrt(y)
    lhs = (y - z) ** 2 - a * sy * gap - b * y - c * sy
    c_term = 0.75 * np.power(c, 4.0 / 3.0) * np.cbrt(mu**2 / (4.0 * eps * (mu - 1.0) ** 2))
    rhs = (
        gap**2 / mu**2
        - a**2 * mu**2 * gap / (8.0 * (mu - 1.0))
        - c_term
        - mu**2 * b**2 / (4.0 * (1.0 - eps) * (mu - 1.0) ** 2)
    )
    return lhs, rhs


def four_term_slack(s: AlgebraSample) -> float:
    """
    LHS − RHS of

    (y−z)² − a√y(y−μz) − by − c√y
        >= (y−μz)²/μ² − a²μ²(y−μz)/(8(μ−1)) − (3/4)c^{4/3}(μ²/(4ε(μ−1)²))^{1/3} − μ²b²/(4(1−ε)(μ−1)²)
    """
    lhs, rhs = _four_term_sides(s.a, s.b, s.c, s.y, s.z, s.mu, s.eps)
    return float(lhs - rhs)


def four_term_slack_arrays(a, b, c, y, z, mu, eps) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized slack and its scale 1 + |LHS| + |RHS|"""
    a, b, c, y, z, mu, eps = (np.asarray(v, dtype=float) for v in (a, b, c, y, z, mu, eps))
    if np.any(y <= 0) or np.any(mu <= 1) or np.any((eps <= 0) | (eps >= 1)) or np.any(c < 0):
        raise PreconditionError("Samples need y > 0, mu > 1, 0 < eps < 1, c >= 0")
    if np.any(y - mu * z <= 0):
        raise PreconditionError("Samples need y - mu*z > 0")
    lhs, rhs = _four_term_sides(a, b, c, y, z, mu, eps)
    return lhs - rhs, 1.0 + np.abs(lhs) + np.abs(rhs)


def draw_four_term_samples(rng: np.random.Generator, size: int) -> dict:
    """y log-uniform on [1e-3, 1e3], z in (−y, y/μ), μ in (1, 10], ε in (0.01, 0.99), a, b in [−10, 10], c in (0, 10]"""
    y = np.exp(rng.uniform(np.log(1e-3), np.log(1e3), size))
    mu = 10.0 - rng.uniform(0.0, 9.0, size)
    z = rng.uniform(-y, y / mu)
    return {
        "a": rng.uniform(-10.0, 10.0, size),
        "b": rng.uniform(-10.0, 10.0, size),
        "c": 10.0 - rng.uniform(0.0, 10.0, size),
        "y": y,
        "z": z,
        "mu": mu,
        "eps": rng.uniform(0.01, 0.99, size),
    }


class MonteCarloResult(BaseModel):
    samples: int
    seed: int
    min_scaled_slack: float
    failures: int
    passed: bool


def four_term_monte_carlo(samples: int = 1_000_000, seed: int = 0, witness_path: Optional[str] = None) -> MonteCarloResult:
    """
    Seeded Monte-Carlo suite for the four-term inequality.

    Samples are drawn in chunks, each with its own generator spawned from the
    base seed, so results do not depend on chunk scheduling.

    Args:
        samples: total number of samples
        seed: base seed
        witness_path: if given and a sample fails, failing rows are written here as CSV
    """
    n_chunks = -(-samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    worst = np.inf
    failed = []
    for i, child in enumerate(children):
        size = min(CHUNK, samples - i * CHUNK)
        draw = draw_four_term_samples(np.random.default_rng(child), size)
        slack, scale = four_term_slack_arrays(**draw)
        scaled = slack / scale
        worst = min(worst, float(np.min(scaled)))
        bad = slack < -SLACK_REL_TOL * scale
        if np.any(bad):
            frame = pd.DataFrame({k: v[bad] for k, v in draw.items()})
            frame["slack"] = slack[bad]
            failed.append(frame)
    failures = int(sum(len(f) for f in failed))
    if failures and witness_path:
        pd.concat(failed).to_csv(witness_path, index=False)
        logger.warning(f"{failures} four-term samples failed; witnesses written to {witness_path}")
    return MonteCarloResult(samples=samples, seed=seed, min_scaled_slack=worst, failures=failures, passed=failures == 0)


# ==================== Cutoff ====================

def smoothstep(s):
    """S(s) = 6s⁵ − 15s⁴ + 10s³"""
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def smoothstep_d1(s):
    return 30.0 * s * s * (1.0 - s) ** 2


def smoothstep_d2(s):
    return 120.0 * s**3 - 180.0 * s * s + 60.0 * s


@dataclass(frozen=True)
class CutoffProfile:
    psi: Callable
    dpsi: Callable
    ddpsi: Callable
    c1: float
    c2: float


def _psi(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return 1.0 - smoothstep(s)


def _dpsi(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return -smoothstep_d1(s)


def _ddpsi(t):
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return -smoothstep_d2(s)


def cutoff_ratio(t):
    """−ψ̄'/√ψ̄ on [1, 2) in the form 30√v(1−v)²/√(10 − 15v + 6v²), v = 2 − t"""
    v = np.clip(2.0 - np.asarray(t, dtype=float), 0.0, 1.0)
    return 30.0 * np.sqrt(v) * (1.0 - v) ** 2 / np.sqrt(10.0 - 15.0 * v + 6.0 * v * v)


def quintic_cutoff(points: int = 100_000) -> CutoffProfile:
    """
    ψ̄(t) = 1 on [0,1], 1 − S(t−1) on [1,2], 0 on [2,∞).

    c1 = sup(−ψ̄'/√ψ̄) and c2 = sup(−ψ̄'') are grid maxima over [1, 2].
    """
    t = np.linspace(1.0, 2.0, points)
    c1 = float(np.max(cutoff_ratio(t)))
    c2 = float(np.max(-_ddpsi(t)))
    return CutoffProfile(psi=_psi, dpsi=_dpsi, ddpsi=_ddpsi, c1=c1, c2=c2)


def cutoff_constants_golden() -> Tuple[float, float]:
    """Independent golden-section maximization of c1 and c2"""
    r1 = minimize_scalar(lambda t: -float(cutoff_ratio(t)), bracket=(1.1, 1.72, 1.95), method="golden", tol=1e-10)
    r2 = minimize_scalar(lambda s: -float(smoothstep_d2(s)), bracket=(0.0, 0.2, 0.5), method="golden", tol=1e-10)
    return -float(r1.fun), -float(r2.fun)


class CutoffReport(BaseModel):
    c1: float
    c2: float
    c1_golden: float
    c2_golden: float
    conditions_hold: bool
    endpoint_ratio: float
    c2_continuity_gap: float
    passed: bool


def check_cutoff_conditions(profile: Optional[CutoffProfile] = None, points: int = 100_000) -> CutoffReport:
    """
    Conditions on a dense grid of [0, 3]:
    ψ̄ = 1 on [0,1], ψ̄ = 0 on [2,∞), 0 <= ψ̄ <= 1, ψ̄' <= 0,
    −c1 <= ψ̄'/√ψ̄ <= 0 where ψ̄ > 0, ψ̄'' >= −c2, and C² matching at t = 1, 2.

    The ratio −ψ̄'/√ψ̄ behaves like 3√(10(2−t)) near t = 2; its vanishing is
    checked at t = 2 − 1e-8.
    """
    profile = profile or quintic_cutoff(points)
    t = np.linspace(0.0, 3.0, 3 * points + 1)
    psi, dpsi, ddpsi = profile.psi(t), profile.dpsi(t), profile.ddpsi(t)
    inner, outer, band = t <= 1.0, t >= 2.0, (t > 1.0) & (t < 2.0)
    ratio = cutoff_ratio(t[band])
    ok = (
        np.all(psi[inner] == 1.0)
        and np.all(psi[outer] == 0.0)
        and np.all((psi >= 0.0) & (psi <= 1.0))
        and np.all(dpsi <= 0.0)
        and np.all(ratio <= profile.c1 + 1e-6)
        and np.all(ddpsi >= -profile.c2 - 1e-6)
    )
    delta = 1e-4
    gap = 0.0
    for knot in (1.0, 2.0):
        left = (profile.psi(knot) - 2.0 * profile.psi(knot - delta) + profile.psi(knot - 2 * delta)) / delta**2
        right = (profile.psi(knot + 2 * delta) - 2.0 * profile.psi(knot + delta) + profile.psi(knot)) / delta**2
        gap = max(gap, float(abs(left - right)))
    endpoint_ratio = float(cutoff_ratio(2.0 - 1e-8))
    c1_g, c2_g = cutoff_constants_golden()
    passed = bool(
        ok
        and gap <= 100.0 * delta
        and endpoint_ratio < 1e-2
        and abs(profile.c1 - c1_g) <= 1e-6
        and abs(profile.c2 - c2_g) <= 1e-6
    )
    return CutoffReport(
        c1=profile.c1,
        c2=profile.c2,
        c1_golden=c1_g,
        c2_golden=c2_g,
        conditions_hold=bool(ok),
        endpoint_ratio=endpoint_ratio,
        c2_continuity_gap=gap,
        passed=passed,
    )


# ==================== Cauchy-Schwarz chain and coth bound ====================

def cs_chain_check(n: int, m: float, hessian, grad_f, grad_u) -> Tuple[float, float]:
    """
    Slacks of |H|² >= (tr H)²/n and (tr H)²/n + w²/(m−n) >= (tr H − w)²/m, w = ⟨∇f, ∇u⟩.
    """
    if n < 2 or not m > n:
        raise PreconditionError(f"cs_chain_check needs n >= 2 and m > n, got n={n}, m={m}")
    H = np.asarray(hessian, dtype=float)
    if H.shape != (n, n) or not np.allclose(H, H.T):
        raise PreconditionError(f"Hessian must be a symmetric {n}x{n} matrix")
    tr = float(np.trace(H))
    w = float(np.dot(grad_f, grad_u))
    slack1 = float(np.sum(H * H)) - tr * tr / n
    slack2 = tr * tr / n + w * w / (m - n) - (tr - w) ** 2 / m
    return slack1, slack2


def cs_chain_equality_w(n: int, m: float, trace: float) -> float:
    """The w at which the weighted step is an equality: w = −(m−n)·tr/n"""
    return -(m - n) * trace / n


def cs_chain_minimizing_w(n: int, m: float, trace: float) -> Tuple[float, float]:
    """Numerical minimizer of the weighted slack over w and the minimum value"""

    def slack(w):
        return trace * trace / n + w * w / (m - n) - (trace - w) ** 2 / m

    res = minimize_scalar(slack)
    return float(res.x), float(res.fun)


def cs_chain_monte_carlo(n: int, m: float, trials: int = 10_000, seed: int = 0) -> Tuple[float, float]:
    """Minimum slacks over random symmetric matrices and gradient pairs"""
    rng = np.random.default_rng(seed)
    worst1 = worst2 = np.inf
    for _ in range(trials):
        A = rng.normal(size=(n, n))
        s1, s2 = cs_chain_check(n, m, (A + A.T) / 2.0, rng.normal(size=n), rng.normal(size=n))
        worst1, worst2 = min(worst1, s1), min(worst2, s2)
    return worst1, worst2


def coth_bound_check(x):
    """1 + x − x coth x, nonnegative for x > 0"""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise PreconditionError("coth_bound_check needs x > 0")
    slack = 1.0 + x_arr - x_arr / np.tanh(x_arr)
    return float(slack) if x_arr.ndim == 0 else slack


# ==================== Suite ====================

class KernelReport(BaseModel):
    four_term: MonteCarloResult
    cutoff: CutoffReport
    cs_min_slack: Tuple[float, float]
    coth_min_slack: float
    passed: bool


def run_kernel_suite(samples: int = 1_000_000, seed: int = 0, n: int = 3, m: float = 8.0) -> KernelReport:
    four_term = four_term_monte_carlo(samples, seed)
    cutoff = check_cutoff_conditions()
    cs = cs_chain_monte_carlo(n, m, trials=10_000, seed=seed)
    coth = float(np.min(coth_bound_check(np.geomspace(1e-6, 1e3, 10_000))))
    passed = four_term.passed and cutoff.passed and min(cs) >= -1e-12 * (1.0 + n) and coth >= 0.0
    logger.info(f"Kernel suite: four-term min {four_term.min_scaled_slack:.3e}, c1={cutoff.c1:.4f}, c2={cutoff.c2:.4f}")
    return KernelReport(four_term=four_term, cutoff=cutoff, cs_min_slack=cs, coth_min_slack=coth, passed=passed)
