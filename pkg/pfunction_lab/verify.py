#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 🏁 VERIFY - Closed-form bounds and the theorem checks
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Cardano / trigonometric gradient bounds, concavity, minimum principle,
#          lower and upper u_min bounds, boundary identities, and the aggregated
#          VerificationReport
# Functions: lower_bound_euclid, lower_bound_lorentz, theorem1_check,
#            theorem2_check, theorem3_check, upper_bound_check,
#            eq41_check, boundary_identity_check, run_verification,
#            verify_radial, bounds_table, validity_map
# ═══════════════════════════════════════════════════════════════════════════════

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .checks import CheckReport, clean_mapping
from .errors import DomainViolationError, FieldError, GridError, ValidityRegionError
from .fields import DerivedFields, VField, derive, p_function, ps_inequality_residual, v_equation_residual, v_field
from .geometry import MIN_LEG, ConvexDomain, alpha, alpha_ball, inradius, make_grid
from .problem import (
    HypothesisReport,
    ProblemSpec,
    builtin_problem,
    check_theorem1_hypothesis,
    check_theorem2_hypothesis,
)
from .radial import ExistenceFailure, RadialSolution, existence_boundary, lemma22_check, radial_p_function_check, shoot
from .solver2d import DEFAULT_SCHEDULE, Field2D, NewtonConfig, newton_solve, require_planar

logger = logging.getLogger(__name__)

LORENTZ_ALPHA_LIMIT = 2.0 / (3.0 * math.sqrt(3.0))
THEOREM_SLACK = 1e-3
MIN_PRINCIPLE_SLACK = 1e-4
NON_CONSTANT_SLACK = 1e-6
EQ51_SLACK = 1e-4
PS_SLACK = 1e-6

Solution = Union[Field2D, RadialSolution]


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🧮 CUBIC BOUNDS - q³ + q = α (Cardano) and q³ − q + α = 0 (trigonometric)   │
# └─────────────────────────────────────────────────────────────────────────────┘
def euclid_root(a: float) -> float:
    """Real root of q³ + q − α = 0 by Cardano's formula."""
    if not a > 0.0:
        raise DomainViolationError(f"alpha must be positive, got {a}")
    D = math.sqrt(a * a / 4.0 + 1.0 / 27.0)
    q = float(np.cbrt(a / 2.0 + D) + np.cbrt(a / 2.0 - D))
    # one Newton polish against cancellation for small alpha
    return q - (q ** 3 + q - a) / (3.0 * q * q + 1.0)


def lower_bound_euclid(a: float) -> float:
    return euclid_root(a) ** 2


def lorentz_root(a: float) -> float:
    """Smallest positive root of q³ − q + α = 0, valid for 0 < α ≤ 2/(3√3)."""
    if not a > 0.0:
        raise DomainViolationError(f"alpha must be positive, got {a}")
    if a > LORENTZ_ALPHA_LIMIT:
        raise ValidityRegionError(
            f"alpha = {a:.6g} exceeds 2/(3*sqrt(3)) = {LORENTZ_ALPHA_LIMIT:.6g}: no spacelike gradient bound",
            alpha=a,
            alpha_limit=LORENTZ_ALPHA_LIMIT,
        )
    arg = min(1.0, max(-1.0, -3.0 * math.sqrt(3.0) * a / 2.0))
    q = 2.0 / math.sqrt(3.0) * math.cos(math.acos(arg) / 3.0 - 2.0 * math.pi / 3.0)
    slope = 3.0 * q * q - 1.0
    if abs(slope) > 1e-3:
        q -= (q ** 3 - q + a) / slope
    return q


def lower_bound_lorentz(a: float) -> float:
    return lorentz_root(a) ** 2


def bounds_table(alphas: Sequence[float]) -> List[Dict[str, Any]]:
    """(α, Euclidean bound, Lorentzian bound or validity error) rows."""
    rows = []
    for a in alphas:
        row: Dict[str, Any] = {"alpha": float(a), "euclid": lower_bound_euclid(a)}
        try:
            row["lorentz"] = lower_bound_lorentz(a)
        except ValidityRegionError as e:
            row["lorentz"] = None
            row["lorentz_error"] = str(e)
        rows.append(row)
    return rows


def validity_map(n: int = 2, R_lo: float = 0.1, R_hi: float = 5.0, rtol: float = 1e-3) -> Dict[str, Any]:
    """Lorentzian bound-validity radius beside the empirical radial existence radius."""
    spec = builtin_problem("lorentzian", n)
    return {
        "n": n,
        "alpha_limit": LORENTZ_ALPHA_LIMIT,
        "R_alpha": 2.0 * (n - 1) * LORENTZ_ALPHA_LIMIT,
        "existence": existence_boundary(spec, n, R_lo, R_hi, rtol=rtol),
    }


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔍 THEOREM CHECKS                                                           │
# └─────────────────────────────────────────────────────────────────────────────┘
def problem_family(spec: ProblemSpec) -> Optional[str]:
    """``euclidean`` / ``lorentzian`` when spec is that built-in with f ≡ 1."""
    if spec.f_constant != 1.0:
        return None
    for name in ("euclidean", "lorentzian"):
        ref = builtin_problem(name, spec.n)
        if spec.g_coef == ref.g_coef and spec.s_limit == ref.s_limit:
            return name
    return None


def _is_degenerate(fld: Field2D) -> bool:
    return not np.any(fld.values != 0.0)


def theorem1_check(
    spec: ProblemSpec,
    fld: Field2D,
    derived: Optional[DerivedFields] = None,
    vf: Optional[VField] = None,
    hypothesis: Optional[HypothesisReport] = None,
) -> CheckReport:
    """Strict concavity of v: largest core eigenvalue of ∇²v below −h²."""
    hypothesis = hypothesis or check_theorem1_hypothesis(spec)
    if _is_degenerate(fld):
        return CheckReport("theorem1", None, {"hypothesis_verdict": hypothesis.verdict}, verdict="degenerate field")
    derived = derived or derive(fld)
    vf = vf or v_field(spec, fld)
    core = derived.core_mask
    h2 = fld.grid.h ** 2
    eig = vf.eig_max[core]
    full = int(np.sum(eig < -h2))
    deficient = int(core.sum()) - full
    det = vf.det[core]
    k = int(np.argmax(eig))
    return CheckReport(
        "theorem1",
        bool(np.max(eig) < -h2),
        {
            "max_core_eigenvalue": float(eig[k]),
            "argmax_xy": [float(fld.grid.x[core][k]), float(fld.grid.y[core][k])],
            "threshold": -h2,
            "rank_profile": {
                "full_rank": full,
                "rank_deficient": deficient,
                "constant": full == 0 or deficient == 0,
                "det_min": float(np.min(det)),
                "det_max": float(np.max(det)),
            },
            "core_nodes": int(core.sum()),
            "hypothesis_verdict": hypothesis.verdict,
        },
    )


def beta_regime(beta: float) -> str:
    if beta == 1.0:
        return "continuity"
    if beta == 2.0:
        return "endpoint"
    return "theorem"


def theorem2_check(
    spec: ProblemSpec,
    derived: DerivedFields,
    beta: float,
    hypothesis: Optional[HypothesisReport] = None,
) -> CheckReport:
    """Minimum principle for Φ(·;β): interior min ≥ boundary min − tol."""
    if not 1.0 <= beta <= 2.0:
        raise DomainViolationError(f"beta must lie in [1, 2], got {beta}")
    hypothesis = hypothesis or check_theorem2_hypothesis(spec, beta)
    phi = p_function(spec, derived, beta)
    k = int(np.argmin(phi.interior))
    b = int(np.argmin(phi.boundary))
    interior_min = float(phi.interior[k])
    boundary_min = float(phi.boundary[b])
    scale = max(1.0, boundary_min)
    spread = float(max(np.max(phi.interior), np.max(phi.boundary)) - min(interior_min, boundary_min))
    grid = derived.field.grid
    return CheckReport(
        f"theorem2[beta={beta:g}]",
        bool(interior_min >= boundary_min - MIN_PRINCIPLE_SLACK * scale),
        {
            "beta": beta,
            "regime": beta_regime(beta),
            "interior_min_phi": interior_min,
            "interior_argmin_xy": [float(grid.x[k]), float(grid.y[k])],
            "boundary_min_phi": boundary_min,
            "boundary_argmin_t": float(derived.boundary.t[b]),
            "margin": interior_min - boundary_min,
            "minimum_on_boundary": interior_min >= boundary_min,
            "non_constant": spread > NON_CONSTANT_SLACK * scale,
            "hypothesis_verdict": hypothesis.verdict,
        },
    )


def _solution_u_min(solution: Solution) -> float:
    return solution.u_min


def _boundary_principle(spec: ProblemSpec, hypothesis: Optional[HypothesisReport]) -> HypothesisReport:
    """The β = 1 minimum principle that the lower bound and the Φ(·;1) checks rest on."""
    return hypothesis or check_theorem2_hypothesis(spec, 1.0)


def theorem3_check(
    spec: ProblemSpec,
    domain: Optional[ConvexDomain],
    solution: Solution,
    hypothesis: Optional[HypothesisReport] = None,
) -> CheckReport:
    """−u_min ≥ q_m² bound with α = 1/(2(n−1)K_max) (R/(2(n−1)) on balls).

    Raises ValidityRegionError for a Lorentzian α beyond 2/(3√3). When the β = 1
    hypothesis fails the outcome is still computed and carries that verdict.
    """
    family = problem_family(spec)
    if family is None:
        return CheckReport("theorem3", None, {"problem": spec.name}, verdict="not applicable")
    if isinstance(solution, RadialSolution):
        a = alpha_ball(solution.R, solution.n)
    else:
        a = alpha(domain, spec.n)
    bound = lower_bound_euclid(a) if family == "euclidean" else lower_bound_lorentz(a)
    depth = -_solution_u_min(solution)
    return CheckReport(
        "theorem3",
        bool(depth >= bound * (1.0 - THEOREM_SLACK)),
        {
            "family": family,
            "alpha": a,
            "lower_bound": bound,
            "u_min": -depth,
            "gap": depth - bound,
            "hypothesis_verdict": _boundary_principle(spec, hypothesis).verdict,
        },
    )


def upper_bound_check(
    domain: Optional[ConvexDomain],
    solution: Solution,
    spec: Optional[ProblemSpec] = None,
    derived: Optional[DerivedFields] = None,
) -> CheckReport:
    """−u_min ≤ d²/2 plus the nodewise |∇u|² ≤ 2u − 2u_min."""
    u_min = _solution_u_min(solution)
    if isinstance(solution, RadialSolution):
        d = solution.R
        margin = 2.0 * solution.phi - 2.0 * u_min - solution.phi_prime ** 2
    else:
        d = inradius(domain)
        derived = derived or derive(solution)
        margin = 2.0 * solution.values - 2.0 * u_min - derived.s_field
    scale = max(1.0, abs(u_min))
    ceiling = 0.5 * d * d
    eq51_min = float(np.min(margin))
    quantities: Dict[str, Any] = {
        "d": d,
        "ceiling": ceiling,
        "u_min": u_min,
        "eq51_min": eq51_min,
        "eq51_pass": eq51_min >= -EQ51_SLACK * scale,
    }
    if spec is not None and isinstance(solution, Field2D):
        phi2 = p_function(spec, derived, 2.0).interior
        k = int(np.argmax(phi2))
        at = np.array([solution.grid.x[k], solution.grid.y[k]])
        quantities["phi2_max"] = float(phi2[k])
        quantities["phi2_argmax_xy"] = at.tolist()
        quantities["phi2_argmax_to_umin_distance"] = float(np.hypot(*(at - np.array(derived.u_min_xy))))
    passed = (-u_min <= ceiling * (1.0 + THEOREM_SLACK)) and quantities["eq51_pass"]
    return CheckReport("upper_bound", bool(passed), quantities)


def eq41_check(spec: ProblemSpec, derived: DerivedFields, hypothesis: Optional[HypothesisReport] = None) -> CheckReport:
    """Φ(·;1) ≥ q_m² at every interior node."""
    q2 = derived.q_m ** 2
    gap = p_function(spec, derived, 1.0).interior - q2
    scale = max(1.0, q2)
    return CheckReport(
        "eq41_field",
        bool(np.min(gap) >= -MIN_PRINCIPLE_SLACK * scale),
        {
            "min_gap": float(np.min(gap)),
            "q_m": derived.q_m,
            "hypothesis_verdict": _boundary_principle(spec, hypothesis).verdict,
        },
    )


def boundary_identity_residual(spec: ProblemSpec, derived: DerivedFields) -> np.ndarray:
    """u_nn + (n−1)κ u_n (g/G)(u_n²) − f(0) at each boundary sample."""
    s = np.minimum(derived.u_n ** 2, spec.s_limit * (1.0 - 1e-12))
    return derived.u_nn + (spec.n - 1) * derived.boundary.curvature * derived.u_n * spec.g_over_G(s) - float(spec.f(0.0))


def boundary_identity_check(
    spec: ProblemSpec,
    derived: DerivedFields,
    coarse: Optional[DerivedFields] = None,
    beta: float = 1.0,
    hypothesis: Optional[HypothesisReport] = None,
) -> CheckReport:
    """Boundary identity, its decay under refinement, and u_nn ≤ βf(0)/2 at the
    boundary sample minimizing Φ(·;β)."""
    fine = float(np.max(np.abs(boundary_identity_residual(spec, derived))))
    quantities: Dict[str, Any] = {"max_residual": fine}
    passed: Optional[bool] = None
    if coarse is not None:
        rough = float(np.max(np.abs(boundary_identity_residual(spec, coarse))))
        order = math.log2(rough / fine) if fine > 0.0 and rough > 0.0 else math.inf
        quantities.update({"coarse_max_residual": rough, "order": order})
        passed = order >= 0.8 or fine <= 1e-8
    hypothesis = hypothesis or check_theorem2_hypothesis(spec, beta)
    k = int(np.argmin(derived.u_n))
    ceiling = beta * float(spec.f(0.0)) / 2.0
    tol = derived.h * max(1.0, float(spec.f(0.0)))
    quantities["u_nn_ceiling"] = {
        "beta": beta,
        "u_nn": float(derived.u_nn[k]),
        "ceiling": ceiling,
        "t": float(derived.boundary.t[k]),
        "pass": bool(derived.u_nn[k] <= ceiling + tol),
        "hypothesis_verdict": hypothesis.verdict,
        "counted": hypothesis.verdict != "fail",
    }
    if passed is not None and quantities["u_nn_ceiling"]["counted"]:
        passed = passed and quantities["u_nn_ceiling"]["pass"]
    return CheckReport("boundary_identity", passed, quantities)


def identity_residual_checks(
    spec: ProblemSpec,
    fld: Field2D,
    derived: DerivedFields,
    vf: VField,
    coarse: Optional[Field2D] = None,
) -> List[CheckReport]:
    """v-equation residual (with decay on a fixed region) and the plane
    Hessian-gradient inequality."""
    sections = []
    depth = 2.0 * fld.grid.h * 3.0
    fine = v_equation_residual(spec, fld, derived, vf)
    quantities: Dict[str, Any] = {"max_abs_residual": float(np.max(np.abs(fine)))}
    passed: Optional[bool] = None
    if coarse is not None:
        fixed_fine = float(np.max(np.abs(v_equation_residual(spec, fld, derived, vf, min_distance=depth))))
        coarse_derived = derive(coarse)
        fixed_coarse = float(np.max(np.abs(v_equation_residual(spec, coarse, coarse_derived, min_distance=depth))))
        order = math.log2(fixed_coarse / fixed_fine) if fixed_fine > 0.0 and fixed_coarse > 0.0 else math.inf
        quantities.update({"fixed_region_depth": depth, "fine": fixed_fine, "coarse": fixed_coarse, "order": order})
        passed = order >= 1.5 or fixed_fine <= 1e-8
    sections.append(CheckReport("v_equation", passed, quantities))

    ps = ps_inequality_residual(derived)
    keep = derived.core_mask & (derived.s_field >= 1e-10)
    lap = derived.laplacian[keep]
    scale = max(1.0, float(np.max(lap ** 2 * derived.s_field[keep]))) if keep.any() else 1.0
    ps_min = float(np.min(ps)) if ps.size else 0.0
    sections.append(
        CheckReport("ps_inequality", bool(ps_min >= -PS_SLACK * scale), {"min_residual": ps_min, "nodes": int(ps.size), "scale": scale})
    )
    return sections


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📋 REPORT - Aggregation and deterministic JSON                              │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass
class VerificationReport:
    meta: Dict[str, Any]
    sections: List[CheckReport] = field(default_factory=list)
    hypotheses: List[HypothesisReport] = field(default_factory=list)
    failure: Optional[Dict[str, Any]] = None

    def _counts(self, section: CheckReport) -> bool:
        """Theorem sections with a failed hypothesis are kept as evidence only."""
        if section.passed is None:
            return False
        verdict = section.quantities.get("hypothesis_verdict")
        return verdict != "fail"

    @property
    def passed(self) -> bool:
        if self.failure is not None:
            return False
        return all(s.passed for s in self.sections if self._counts(s))

    def section(self, name: str) -> CheckReport:
        for s in self.sections:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return clean_mapping(
            {
                "meta": self.meta,
                "pass": self.passed,
                "failure": self.failure,
                "hypotheses": [h.to_dict() for h in self.hypotheses],
                "sections": {s.name: {**s.to_dict(), "counted": self._counts(s)} for s in self.sections},
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False)


def _theorem3_section(
    spec: ProblemSpec,
    domain: Optional[ConvexDomain],
    solution: Solution,
    hypothesis: Optional[HypothesisReport] = None,
) -> CheckReport:
    try:
        return theorem3_check(spec, domain, solution, hypothesis)
    except ValidityRegionError as e:
        return CheckReport(
            "theorem3",
            None,
            {"alpha": e.alpha, "alpha_limit": e.alpha_limit, "message": str(e)},
            verdict="outside validity region",
        )


def run_verification(
    spec: ProblemSpec,
    domain: ConvexDomain,
    h: float,
    betas: Sequence[float] = (1.0, 1.5, 2.0),
    schedule: Sequence[float] = DEFAULT_SCHEDULE,
    newton: Optional[NewtonConfig] = None,
    refine: bool = True,
    min_nodes_across: float = 10.0,
    boundary_count: int = 512,
    min_leg: float = MIN_LEG,
) -> VerificationReport:
    """Solve at h (and 2h for order estimates) and run every check."""
    require_planar(spec)
    meta = {"problem": spec.to_record(), "domain": domain.to_record(), "h": h, "betas": list(betas), "schedule": list(schedule)}
    t1 = check_theorem1_hypothesis(spec)
    t2 = {b: check_theorem2_hypothesis(spec, b) for b in betas}
    principle = t2.get(1.0) or check_theorem2_hypothesis(spec, 1.0)
    report = VerificationReport(meta, hypotheses=[t1, *t2.values()])

    grid = make_grid(domain, h, min_nodes_across, min_leg, boundary_count)
    fld = newton_solve(spec, grid, schedule, newton)
    meta["solver"] = fld.summary()
    if not fld.converged:
        report.failure = fld.failure.to_dict()
        return report

    coarse_fld: Optional[Field2D] = None
    if refine:
        try:
            coarse_grid = make_grid(domain, 2.0 * h, min_nodes_across, min_leg, boundary_count)
            candidate = newton_solve(spec, coarse_grid, schedule, newton)
            coarse_fld = candidate if candidate.converged else None
            meta["coarse_solver"] = candidate.summary()
        except GridError as e:
            meta["coarse_solver"] = {"skipped": str(e)}

    derived = derive(fld)
    vf = v_field(spec, fld)
    coarse_derived = None
    if coarse_fld is not None:
        try:
            coarse_derived = derive(coarse_fld)
        except FieldError as e:
            meta["coarse_solver"]["derive_skipped"] = str(e)
            coarse_fld = None

    report.sections.append(theorem1_check(spec, fld, derived, vf, t1))
    report.sections.extend(theorem2_check(spec, derived, b, t2[b]) for b in betas)
    report.sections.append(_theorem3_section(spec, domain, fld, principle))
    report.sections.append(upper_bound_check(domain, fld, spec, derived))
    report.sections.append(eq41_check(spec, derived, principle))
    report.sections.append(boundary_identity_check(spec, derived, coarse_derived, hypothesis=principle))
    report.sections.extend(identity_residual_checks(spec, fld, derived, vf, coarse_fld))
    if coarse_fld is not None:
        meta["u_min_fine"] = fld.u_min
        meta["u_min_coarse"] = coarse_fld.u_min
    logger.info("verification on %s (h=%g): %s", domain.describe(), h, "pass" if report.passed else "fail")
    return report


def verify_radial(
    spec: ProblemSpec,
    R: float,
    betas: Sequence[float] = (1.0, 1.5, 2.0),
    tol: float = 1e-10,
    h_r: Optional[float] = None,
    solution: Optional[RadialSolution] = None,
) -> Union[VerificationReport, ExistenceFailure]:
    """Ball checks on the radial profile: convexity, Φ minimum principle, sandwich."""
    result = solution if solution is not None else shoot(spec, spec.n, R, tol=tol, h_r=h_r)
    if isinstance(result, ExistenceFailure):
        return result
    meta = {"problem": spec.to_record(), "R": R, "n": spec.n, "radial": result.summary()}
    report = VerificationReport(meta, hypotheses=[check_theorem1_hypothesis(spec)])
    report.sections.append(lemma22_check(result, spec))
    for b in betas:
        hyp = check_theorem2_hypothesis(spec, b)
        report.hypotheses.append(hyp)
        section = radial_p_function_check(result, spec, b)
        section.quantities["hypothesis_verdict"] = hyp.verdict
        report.sections.append(section)
    report.sections.append(_theorem3_section(spec, None, result))
    report.sections.append(upper_bound_check(None, result))
    return report


def radial_reference(spec: ProblemSpec, R: float, tol: float = 1e-10) -> Optional[float]:
    """u_min of the ball problem, None when no profile exists."""
    result = shoot(spec, spec.n, R, tol=tol)
    return result.u_min if isinstance(result, RadialSolution) else None
