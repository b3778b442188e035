#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 🔧 SOLVER 2D - Damped Newton with load continuation on a clipped grid
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Solve (g/G)Δu + (2g′/G)u_i u_j u_ij = λ f(u), u = 0 on ∂Ω
# Functions: residual, jacobian, newton_solve, require_planar
# Note: non-convergence and unreachable spacelike margins come back as
#       Field2D(converged=False, failure=SolverFailure(...))
# ═══════════════════════════════════════════════════════════════════════════════

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .checks import clean_mapping
from .errors import DomainViolationError, SpacelikeViolationError
from .geometry import ClippedGrid
from .problem import ProblemSpec

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (0.25, 0.5, 0.75, 0.9, 1.0)


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 50
    linear_rtol: float = 1e-10
    fd_eps: float = 1e-7
    s_margin: float = 1e-6
    max_halvings: int = 30
    ilu_drop_tol: float = 1e-6
    ilu_fill_factor: float = 20.0

    def __post_init__(self):
        for name in ("tol", "linear_rtol", "fd_eps", "s_margin"):
            if not getattr(self, name) > 0.0:
                raise DomainViolationError(f"{name} must be positive")
        if self.max_iter < 1 or self.max_halvings < 1:
            raise DomainViolationError("max_iter and max_halvings must be >= 1")


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📦 RESULTS - Field2D and SolverFailure                                      │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class SolverFailure:
    kind: str  # "non_convergence" | "existence_failure"
    lam: float
    iteration: int
    residual_norm: float
    message: str
    history: List[Dict[str, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return clean_mapping(
            {
                "kind": self.kind,
                "lambda": self.lam,
                "iteration": self.iteration,
                "residual_norm": self.residual_norm,
                "message": self.message,
                "history": self.history,
            }
        )


@dataclass
class Field2D:
    """Nodal values on the unknowns of ``grid``; u = 0 on ∂Ω is implied."""

    spec: ProblemSpec
    grid: ClippedGrid
    values: np.ndarray
    converged: bool
    residual_norm: float
    lam: float
    history: List[Dict[str, float]] = field(default_factory=list)
    failure: Optional[SolverFailure] = None

    @property
    def ext(self) -> np.ndarray:
        return self.grid.extended(self.values)

    @property
    def u_min(self) -> float:
        return float(np.min(self.values)) if len(self.values) else 0.0

    @property
    def argmin_xy(self) -> Tuple[float, float]:
        k = int(np.argmin(self.values))
        return float(self.grid.x[k]), float(self.grid.y[k])

    def with_values(self, values: np.ndarray) -> "Field2D":
        """Same grid and spec, other values (used for synthetic test fields)."""
        return Field2D(self.spec, self.grid, np.asarray(values, dtype=float), True, 0.0, self.lam)

    def dump_rows(self) -> List[Dict[str, Any]]:
        g = self.grid
        return [
            {"i": int(i + g.i0), "j": int(j + g.j0), "x": float(x), "y": float(y), "u": float(u)}
            for i, j, x, y, u in zip(g.node_i, g.node_j, g.x, g.y, self.values)
        ]

    def summary(self) -> Dict[str, Any]:
        return clean_mapping(
            {
                "h": self.grid.h,
                "unknowns": self.grid.n_unknowns,
                "merged_nodes": self.grid.n_merged,
                "converged": self.converged,
                "lambda": self.lam,
                "residual_norm": self.residual_norm,
                "u_min": self.u_min,
                "newton_steps": len(self.history),
            }
        )


def require_planar(spec: ProblemSpec):
    """The clipped grid discretizes the plane only; n enters κ(n−1), α and the bounds."""
    if spec.n != 2:
        raise DomainViolationError(f"the 2D solver needs n = 2, problem {spec.name!r} has n = {spec.n}")


def field_from_values(spec: ProblemSpec, grid: ClippedGrid, values, lam: float = 1.0) -> Field2D:
    """Wrap given nodal values as a field (analytic test fields, restarts)."""
    require_planar(spec)
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_unknowns,):
        raise DomainViolationError(f"expected {grid.n_unknowns} values, got shape {values.shape}")
    return Field2D(spec, grid, values, True, 0.0, lam)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🧮 RESIDUAL - Non-divergence form with Shortley–Weller stencils             │
# └─────────────────────────────────────────────────────────────────────────────┘
def grid_residual(
    spec: ProblemSpec, grid: ClippedGrid, values: np.ndarray, lam: float, s_cap: Optional[float] = None
) -> Tuple[np.ndarray, float]:
    """Nodal residual and max discrete s; raises when s reaches ``s_cap``
    (default s_limit)."""
    d = grid.derivatives(grid.extended(values))
    ux, uy = d["ux"], d["uy"]
    s = ux * ux + uy * uy
    cap = spec.s_limit if s_cap is None else s_cap
    k = int(np.argmax(s)) if len(s) else 0
    s_max = float(s[k]) if len(s) else 0.0
    if s_max >= cap:
        location = (float(grid.x[k]), float(grid.y[k]))
        raise SpacelikeViolationError(f"discrete |grad u|^2 = {s_max:.6g} reached {cap:.6g} at {location}", location=location, s=s_max)
    g = spec.g(s)
    gp = spec.g_prime(s)
    G = g + 2.0 * s * gp
    quad = ux * ux * d["uxx"] + 2.0 * ux * uy * d["uxy"] + uy * uy * d["uyy"]
    res = (g / G) * (d["uxx"] + d["uyy"]) + (2.0 * gp / G) * quad - lam * spec.f(values)
    return np.asarray(res, dtype=float), s_max


def residual(spec: ProblemSpec, fld: Field2D, lam: float) -> np.ndarray:
    res, _ = grid_residual(spec, fld.grid, fld.values, lam)
    return res


def jacobian(spec: ProblemSpec, grid: ClippedGrid, values: np.ndarray, lam: float, base: np.ndarray, eps: float) -> sparse.csr_matrix:
    """Finite-difference Jacobian on the stencil sparsity, one residual per column colour."""
    n = grid.n_unknowns
    rows, cols = grid.sparsity()
    colors = grid.colors()
    col_color = colors[cols]
    data = np.zeros(len(rows))
    for c in np.unique(colors):
        mask = colors == c
        bump = np.where(mask, eps, 0.0)
        try:
            shifted, _ = grid_residual(spec, grid, values + bump, lam)
            diff = (shifted - base) / eps
        except SpacelikeViolationError:
            shifted, _ = grid_residual(spec, grid, values - bump, lam)
            diff = (base - shifted) / eps
        hit = col_color == c
        data[hit] = diff[rows[hit]]
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def _linear_step(J: sparse.csr_matrix, rhs: np.ndarray, config: NewtonConfig) -> np.ndarray:
    """BiCGStab with an incomplete-LU preconditioner, direct solve as fallback."""
    try:
        ilu = splinalg.spilu(J.tocsc(), drop_tol=config.ilu_drop_tol, fill_factor=config.ilu_fill_factor)
        M = splinalg.LinearOperator(J.shape, ilu.solve)
        step, info = splinalg.bicgstab(J, rhs, rtol=config.linear_rtol, atol=0.0, M=M, maxiter=10 * J.shape[0])
        if info == 0 and np.all(np.isfinite(step)):
            return step
        logger.warning("bicgstab returned info=%d, falling back to a direct solve", info)
    except RuntimeError as e:
        logger.warning("incomplete LU failed (%s), falling back to a direct solve", e)
    return splinalg.spsolve(J.tocsc(), rhs)


def _validate_schedule(schedule: Sequence[float]) -> Tuple[float, ...]:
    sched = tuple(float(x) for x in schedule)
    if not sched:
        raise DomainViolationError("lambda schedule must not be empty")
    if any(x < 0.0 or x > 1.0 for x in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
        raise DomainViolationError(f"lambda schedule must be increasing within [0, 1], got {sched}")
    return sched


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔁 NEWTON - Continuation in λ, halving line search, s-margin safeguard      │
# └─────────────────────────────────────────────────────────────────────────────┘
def newton_solve(
    spec: ProblemSpec,
    grid: ClippedGrid,
    schedule: Sequence[float] = DEFAULT_SCHEDULE,
    config: Optional[NewtonConfig] = None,
    initial: Optional[np.ndarray] = None,
) -> Field2D:
    """Solve from u ≡ 0 (or ``initial``) through each λ of ``schedule``."""
    require_planar(spec)
    config = config or NewtonConfig()
    sched = _validate_schedule(schedule)
    u = np.zeros(grid.n_unknowns) if initial is None else np.array(initial, dtype=float)
    s_cap = spec.s_limit * (1.0 - config.s_margin)
    history: List[Dict[str, float]] = []
    lam_done = 0.0
    norm = 0.0

    def failed(kind: str, lam: float, it: int, message: str) -> Field2D:
        logger.warning("newton %s at lambda=%g, iteration %d: %s", kind, lam, it, message)
        failure = SolverFailure(kind, lam, it, norm, message, list(history))
        return Field2D(spec, grid, u, False, norm, lam_done, list(history), failure)

    for lam in sched:
        try:
            res, _ = grid_residual(spec, grid, u, lam, s_cap)
        except SpacelikeViolationError as e:
            return failed("existence_failure", lam, 0, str(e))
        norm = float(np.max(np.abs(res))) if len(res) else 0.0
        it = 0
        while norm > config.tol:
            if it >= config.max_iter:
                return failed("non_convergence", lam, it, f"residual {norm:.3e} after {it} Newton steps")
            eps = config.fd_eps * max(1.0, float(np.max(np.abs(u))))
            J = jacobian(spec, grid, u, lam, res, eps)
            step = _linear_step(J, -res, config)
            damping, accepted, admissible = 1.0, False, False
            for _ in range(config.max_halvings):
                trial = u + damping * step
                try:
                    trial_res, _ = grid_residual(spec, grid, trial, lam, s_cap)
                except SpacelikeViolationError:
                    damping *= 0.5
                    continue
                admissible = True
                trial_norm = float(np.max(np.abs(trial_res)))
                if trial_norm < norm:
                    accepted = True
                    break
                damping *= 0.5
            it += 1
            if not accepted:
                kind = "non_convergence" if admissible else "existence_failure"
                reason = "line search found no decrease" if admissible else "spacelike margin unattainable"
                return failed(kind, lam, it, reason)
            u, res, norm = trial, trial_res, trial_norm
            history.append({"lambda": lam, "iter": it, "residual_norm": norm, "step_damping": damping})
            logger.debug("lambda=%g iter=%d residual=%.3e damping=%g", lam, it, norm, damping)
        lam_done = lam
        logger.info("continuation step lambda=%g converged in %d Newton steps (residual %.3e)", lam, it, norm)

    return Field2D(spec, grid, u, True, norm, lam_done, history)
