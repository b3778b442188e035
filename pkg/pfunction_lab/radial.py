#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 🎯 RADIAL - Shooting solver for the ball problem
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Radial profiles φ(r) on [0, R] used as the high-accuracy reference
# Functions: ode_rhs, integrate, shoot, lemma22_check, radial_p_function_check,
#            existence_boundary
# Note: an unreachable spacelike profile is an ExistenceFailure result
# ═══════════════════════════════════════════════════════════════════════════════

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np
from scipy import optimize

from .checks import CheckReport, clean_mapping
from .errors import DomainViolationError, ShootingError, SpacelikeViolationError
from .problem import ProblemSpec, big_G, cumulative_F_array

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 2000
MIN_STEPS = 200
SHOOT_TOL = 1e-10
EXPANSION = 1.5
MAX_EXPANSIONS = 60
SPACELIKE_RETRIES = 12


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📦 RESULTS - Converged profile or existence failure                         │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class RadialSolution:
    R: float
    n: int
    r_grid: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    phi_second: np.ndarray
    phi0: float

    @property
    def h_r(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    @property
    def u_min(self) -> float:
        return float(self.phi[0])

    @property
    def end_value(self) -> float:
        return float(self.phi[-1])

    @property
    def max_slope(self) -> float:
        return float(np.max(np.abs(self.phi_prime)))

    def dump_rows(self) -> List[Dict[str, float]]:
        return [
            {"r": float(r), "phi": float(p), "phi_prime": float(dp), "phi_second": float(ddp)}
            for r, p, dp, ddp in zip(self.r_grid, self.phi, self.phi_prime, self.phi_second)
        ]

    def summary(self) -> Dict[str, Any]:
        return {
            "R": self.R,
            "n": self.n,
            "h_r": self.h_r,
            "phi0": self.phi0,
            "phi_R": self.end_value,
            "max_abs_phi_prime": self.max_slope,
        }


@dataclass(frozen=True)
class ExistenceFailure:
    """No admissible center value: every trial profile left the spacelike region
    or φ(R) never changed sign."""

    R: float
    n: int
    problem: str
    reason: str
    attempts: List[Dict[str, Any]] = field(default_factory=list)

    kind = "existence_failure"

    def to_dict(self) -> Dict[str, Any]:
        return clean_mapping(
            {"kind": self.kind, "R": self.R, "n": self.n, "problem": self.problem, "reason": self.reason, "attempts": self.attempts}
        )


RadialResult = Union[RadialSolution, ExistenceFailure]


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🧮 ODE - G φ″ + (n−1) g φ′/r = f(φ) G                                        │
# └─────────────────────────────────────────────────────────────────────────────┘
def ode_rhs(spec: ProblemSpec, n: int, r: float, phi: float, phi_prime: float) -> float:
    """φ″ from the radial equation; at r = 0 the regularized limit
    f(φ)·G(0)/((n−1)g(0) + G(0))."""
    if r < 0.0:
        raise DomainViolationError(f"r must be non-negative, got {r}")
    s = phi_prime * phi_prime
    if s >= spec.s_limit:
        raise SpacelikeViolationError(f"|phi'|^2 = {s:.6g} reached s_limit at r = {r:.6g}", r=r, s=s)
    f = float(spec.f(phi))
    if r == 0.0:
        G0 = big_G(spec, 0.0)
        return f * G0 / ((n - 1) * float(spec.g(0.0)) + G0)
    return f - (n - 1) * float(spec.g_over_G(s)) * phi_prime / r


def _steps_for(R: float, h_r: Optional[float]) -> int:
    if h_r is None:
        return DEFAULT_STEPS
    if not h_r > 0.0:
        raise DomainViolationError(f"h_r must be positive, got {h_r}")
    if h_r > R / MIN_STEPS * (1.0 + 1e-12):
        raise DomainViolationError(f"h_r = {h_r:g} exceeds R/{MIN_STEPS} = {R / MIN_STEPS:g}")
    return int(math.ceil(R / h_r - 1e-9))


def integrate(spec: ProblemSpec, n: int, phi0: float, R: float, h_r: Optional[float] = None) -> RadialSolution:
    """Classical RK4 on (φ, φ′) from r = 0 with φ(0) = phi0, φ′(0) = 0.

    The step is R/ceil(R/h_r) so the last node sits on r = R.
    """
    if not phi0 < 0.0:
        raise DomainViolationError(f"phi0 must be negative, got {phi0}")
    if not R > 0.0:
        raise DomainViolationError(f"R must be positive, got {R}")
    steps = _steps_for(R, h_r)
    h = R / steps
    r_grid = np.linspace(0.0, R, steps + 1)
    phi = np.empty(steps + 1)
    dphi = np.empty(steps + 1)
    ddphi = np.empty(steps + 1)
    y, dy = float(phi0), 0.0
    phi[0], dphi[0] = y, dy
    for k in range(steps):
        r = k * h
        a1 = ode_rhs(spec, n, r, y, dy)
        ddphi[k] = a1
        a2 = ode_rhs(spec, n, r + 0.5 * h, y + 0.5 * h * dy, dy + 0.5 * h * a1)
        a3 = ode_rhs(spec, n, r + 0.5 * h, y + 0.5 * h * (dy + 0.5 * h * a1), dy + 0.5 * h * a2)
        a4 = ode_rhs(spec, n, r + h, y + h * (dy + 0.5 * h * a2), dy + h * a3)
        y, dy = (
            y + h * dy + h * h * (a1 + a2 + a3) / 6.0,
            dy + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0,
        )
        phi[k + 1], dphi[k + 1] = y, dy
    ddphi[steps] = ode_rhs(spec, n, R, y, dy)
    return RadialSolution(float(R), int(n), r_grid, phi, dphi, ddphi, float(phi0))


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🎯 SHOOTING - Bracket φ(R; φ0) = 0, then Brent                              │
# └─────────────────────────────────────────────────────────────────────────────┘
class _ShootingMap:
    """φ0 ↦ φ(R; φ0) with an evaluation ledger and a monotonicity guard."""

    def __init__(self, spec: ProblemSpec, n: int, R: float, h_r: Optional[float]):
        self.spec, self.n, self.R, self.h_r = spec, n, R, h_r
        self.ledger: List[Dict[str, Any]] = []
        self._values: Dict[float, float] = {}

    def __call__(self, phi0: float) -> float:
        try:
            end = integrate(self.spec, self.n, phi0, self.R, self.h_r).end_value
        except SpacelikeViolationError as e:
            self.ledger.append({"phi0": phi0, "outcome": "spacelike_violation", "r": e.r})
            raise
        self.ledger.append({"phi0": phi0, "outcome": "ok", "phi_R": end})
        self._guard(phi0, end)
        return end

    def _guard(self, phi0: float, end: float):
        self._values[phi0] = end
        keys = sorted(self._values)
        ends = np.array([self._values[k] for k in keys])
        slack = 1e-13 * np.maximum(1.0, np.abs(ends[1:]))
        if np.any(ends[:-1] > ends[1:] + slack):
            raise ShootingError(f"phi(R) is not increasing in phi0 near phi0 = {phi0:.12g}: {list(zip(keys, ends))}")


def _try(shooting: _ShootingMap, phi0: float) -> Optional[float]:
    try:
        return shooting(phi0)
    except SpacelikeViolationError:
        return None


def shoot(spec: ProblemSpec, n: int, R: float, tol: float = SHOOT_TOL, h_r: Optional[float] = None) -> RadialResult:
    """Find φ0 < 0 with |φ(R)| ≤ tol, or report why none exists."""
    if not R > 0.0:
        raise DomainViolationError(f"R must be positive, got {R}")
    if not tol > 0.0:
        raise DomainViolationError(f"tol must be positive, got {tol}")
    shooting = _ShootingMap(spec, n, R, h_r)

    def failure(reason: str) -> ExistenceFailure:
        logger.info("radial shoot on R=%g (%s): %s", R, spec.name, reason)
        return ExistenceFailure(float(R), int(n), spec.name, reason, list(shooting.ledger))

    guess = -R * R * float(spec.f(0.0)) / (2.0 * n)
    end = None
    for _ in range(SPACELIKE_RETRIES):
        end = _try(shooting, guess)
        if end is not None:
            break
        guess /= EXPANSION
    if end is None:
        return failure("every trial center value left the spacelike region")

    if end == 0.0:
        return integrate(spec, n, guess, R, h_r)
    if end > 0.0:
        hi, lo, factor = guess, None, EXPANSION
        anchor, retries = guess, 0
        for _ in range(MAX_EXPANSIONS):
            trial = anchor * factor
            value = _try(shooting, trial)
            if value is None:
                retries += 1
                if retries > SPACELIKE_RETRIES:
                    return failure("spacelike violations while expanding the bracket downward")
                factor = 1.0 + 0.5 * (factor - 1.0)
                continue
            if value <= 0.0:
                lo = trial
                break
            hi, anchor = trial, trial
        if lo is None:
            return failure("phi(R) stayed positive over the whole bracket search")
    else:
        lo, hi = guess, None
        anchor = guess
        for _ in range(MAX_EXPANSIONS):
            trial = anchor / EXPANSION
            value = _try(shooting, trial)
            if value is not None and value >= 0.0:
                hi = trial
                break
            if value is not None:
                lo = trial
            anchor = trial
        if hi is None:
            return failure("phi(R) stayed negative over the whole bracket search")

    def safe(phi0: float) -> float:
        value = _try(shooting, phi0)
        if value is None:
            raise ShootingError(f"spacelike violation inside the bracket at phi0 = {phi0:.12g}")
        return value

    root = optimize.brentq(safe, lo, hi, xtol=1e-3 * tol, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    solution = integrate(spec, n, root, R, h_r)
    if abs(solution.end_value) > tol:
        raise ShootingError(f"shooting stalled: |phi(R)| = {abs(solution.end_value):.3e} > tol = {tol:.1e}")
    if np.any(solution.phi_prime[1:] <= 0.0):
        logger.warning("radial profile on R=%g has non-positive phi' away from the center", R)
    logger.debug("radial shoot R=%g n=%d: phi0=%.12g after %d evaluations", R, n, root, len(shooting.ledger))
    return solution


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔍 PROFILE CHECKS - Convexity of φ and v, radial P-function                  │
# └─────────────────────────────────────────────────────────────────────────────┘
def center_curvature(sol: RadialSolution) -> float:
    """φ″(0) from the integrated values: φ is even, so φ0 + a r² + b r⁴ through r = 0, h, 2h."""
    h = sol.h_r
    d1 = sol.phi[1] - sol.phi[0]
    d2 = sol.phi[2] - sol.phi[0]
    return float((16.0 * d1 - d2) / (6.0 * h * h))


def lemma22_check(sol: RadialSolution, spec: ProblemSpec, center_tol: float = 1e-8) -> CheckReport:
    """φ″ > 0 on [0, R) and (2Fφ″ + fφ′²)/(2F√F) > 0 where F = F(φ) > 0.

    The centre value φ″(0) = f(φ0)G(0)/((n−1)g(0) + G(0)) is compared with a
    difference estimate of the profile, within center_tol or 10·h_r³.
    """
    inner = slice(0, len(sol.r_grid) - 1)
    phi, dphi, ddphi = sol.phi[inner], sol.phi_prime[inner], sol.phi_second[inner]
    F = cumulative_F_array(spec, np.minimum(phi, 0.0))
    ok = F > 0.0
    convexity = (2.0 * F[ok] * ddphi[ok] + spec.f(phi[ok]) * dphi[ok] ** 2) / (2.0 * F[ok] * np.sqrt(F[ok]))
    G0 = big_G(spec, 0.0)
    closed = float(spec.f(sol.phi0)) * G0 / ((sol.n - 1) * float(spec.g(0.0)) + G0)
    min_phi_second = float(np.min(ddphi))
    min_convexity = float(np.min(convexity)) if convexity.size else math.nan
    estimate = center_curvature(sol)
    center_error = abs(estimate - closed)
    tol = max(center_tol, 10.0 * sol.h_r ** 3 * max(1.0, abs(closed)))
    passed = min_phi_second > 0.0 and min_convexity > 0.0 and center_error <= tol
    return CheckReport(
        "lemma22",
        passed,
        {
            "min_phi_second": min_phi_second,
            "min_v_profile_convexity": min_convexity,
            "phi_second_center": float(sol.phi_second[0]),
            "phi_second_center_estimate": estimate,
            "phi_second_center_closed_form": closed,
            "center_error": center_error,
            "center_tol": tol,
        },
    )


def radial_p_function_check(sol: RadialSolution, spec: ProblemSpec, beta: float, rel_tol: float = 1e-4) -> CheckReport:
    """Minimum principle for Φ = φ′² + βF(φ) along the profile."""
    if not 1.0 <= beta <= 2.0:
        raise DomainViolationError(f"beta must lie in [1, 2], got {beta}")
    Phi = sol.phi_prime ** 2 + beta * cumulative_F_array(spec, np.minimum(sol.phi, 0.0))
    boundary = float(sol.phi_prime[-1] ** 2)
    interior = Phi[:-1]
    scale = max(1.0, boundary)
    k = int(np.argmin(interior))
    spread = float(np.max(Phi) - np.min(Phi))
    return CheckReport(
        f"radial_p_function[beta={beta:g}]",
        bool(interior[k] >= boundary - rel_tol * scale),
        {
            "beta": beta,
            "interior_min_phi": float(interior[k]),
            "interior_argmin_r": float(sol.r_grid[k]),
            "boundary_phi": boundary,
            "margin": float(interior[k] - boundary),
            "non_constant": spread > 1e-6 * scale,
        },
    )


def existence_boundary(
    spec: ProblemSpec,
    n: int,
    R_lo: float,
    R_hi: float,
    rtol: float = 1e-3,
    steps: int = 400,
) -> Dict[str, Any]:
    """Bracket the empirical existence radius by bisection on R.

    Returns the largest R found solvable, the smallest R found unsolvable
    (None when R_hi is still solvable) and the number of shoots.
    """
    if not 0.0 < R_lo < R_hi:
        raise DomainViolationError(f"need 0 < R_lo < R_hi, got {R_lo}, {R_hi}")

    def solvable(R: float) -> bool:
        return isinstance(shoot(spec, n, R, tol=1e-8, h_r=R / steps), RadialSolution)

    shoots = 2
    if not solvable(R_lo):
        return {"problem": spec.name, "n": n, "R_exists": None, "R_fails": R_lo, "shoots": 1}
    if solvable(R_hi):
        return {"problem": spec.name, "n": n, "R_exists": R_hi, "R_fails": None, "shoots": shoots}
    lo, hi = R_lo, R_hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        shoots += 1
        if solvable(mid):
            lo = mid
        else:
            hi = mid
    logger.info("existence boundary for %s (n=%d): R in (%.6g, %.6g]", spec.name, n, lo, hi)
    return {"problem": spec.name, "n": n, "R_exists": lo, "R_fails": hi, "shoots": shoots}
