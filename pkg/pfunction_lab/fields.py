#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 📊 FIELDS - Discrete calculus on solved fields and the derived quantities
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Gradients, Hessians, boundary u_n / u_nn, the P-function Φ(·;β),
#          the concavity transform v and the identity residuals built on them
# Functions: derive, p_function, v_field, v_equation_residual,
#            ps_inequality_residual, derived_rows
# ═══════════════════════════════════════════════════════════════════════════════

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import DomainViolationError, FieldError
from .geometry import INTERIOR, BoundarySamples, ClippedGrid, boundary_samples, distance_to_boundary
from .problem import ProblemSpec, cumulative_F_array, v_of_u_array
from .solver2d import Field2D

logger = logging.getLogger(__name__)

CORE_DEPTH = 3.0
PS_GRADIENT_FLOOR = 1e-10
NORMAL_FIT_DEGREE = 4
NORMAL_SAMPLES = 12
NORMAL_START = 0.25


@dataclass(frozen=True)
class DerivedFields:
    field: Field2D
    grad: np.ndarray           # (n, 2) u_x, u_y
    hess: np.ndarray           # (n, 3) u_xx, u_xy, u_yy
    s_field: np.ndarray
    distance: np.ndarray
    core_mask: np.ndarray
    u_min: float
    u_min_xy: Tuple[float, float]
    boundary: BoundarySamples
    u_n: np.ndarray
    u_nn: np.ndarray

    @property
    def q_m(self) -> float:
        return float(np.min(self.u_n))

    @property
    def laplacian(self) -> np.ndarray:
        return self.hess[:, 0] + self.hess[:, 2]

    @property
    def h(self) -> float:
        return self.field.grid.h


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔍 INTERPOLATION - 4×4 tensor Lagrange over unknown nodes                   │
# └─────────────────────────────────────────────────────────────────────────────┘
def _lagrange_weights(t: float) -> np.ndarray:
    nodes = np.arange(4.0)
    w = np.ones(4)
    for k in range(4):
        for m in range(4):
            if m != k:
                w[k] *= (t - nodes[m]) / (k - nodes[m])
    return w


_SHIFTS = sorted(((a, b) for a in range(-2, 3) for b in range(-2, 3)), key=lambda ab: (abs(ab[0]) + abs(ab[1]), ab))


def interpolate(grid: ClippedGrid, lattice: np.ndarray, x: float, y: float) -> float:
    """Bicubic value at (x, y) from a 4×4 block of unknown nodes.

    The block is centred on the cell holding the point and shifted inward
    when it would touch a non-unknown node.
    """
    xi = (x - grid.origin[0]) / grid.h - grid.i0
    eta = (y - grid.origin[1]) / grid.h - grid.j0
    bi, bj = int(math.floor(xi)) - 1, int(math.floor(eta)) - 1
    ny, nx = grid.classes.shape
    for di, dj in _SHIFTS:
        i0, j0 = bi + di, bj + dj
        if i0 < 0 or j0 < 0 or i0 + 4 > nx or j0 + 4 > ny:
            continue
        if np.all(grid.classes[j0:j0 + 4, i0:i0 + 4] == INTERIOR):
            wx = _lagrange_weights(xi - i0)
            wy = _lagrange_weights(eta - j0)
            return float(wy @ lattice[j0:j0 + 4, i0:i0 + 4] @ wx)
    raise FieldError(f"no 4x4 block of interior nodes near ({x:.6g}, {y:.6g}); refine the grid")


def normal_span(h: float, depth_scale: float) -> float:
    """Fit window along the normal: √(h·d), so the window holds more nodes as h shrinks."""
    return math.sqrt(h * depth_scale)


def normal_derivatives(fld: Field2D, boundary: BoundarySamples, span: float) -> Tuple[np.ndarray, np.ndarray]:
    """Outward u_n and u_nn from a least-squares polynomial along the inward normal.

    u(t) = Σ c_k (t/span)^k for k = 1..NORMAL_FIT_DEGREE, so u = 0 on ∂Ω is built in;
    samples sit at depths span·[NORMAL_START, 1].
    """
    grid = fld.grid
    lattice = grid.lattice_field(fld.values)
    tau = np.linspace(NORMAL_START, 1.0, NORMAL_SAMPLES)
    depths = span * tau
    samples = np.empty((len(depths), len(boundary)))
    for k, (p, nrm) in enumerate(zip(boundary.points, boundary.normals)):
        for m, depth in enumerate(depths):
            q = p - depth * nrm
            samples[m, k] = interpolate(grid, lattice, q[0], q[1])
    design = np.vander(tau, NORMAL_FIT_DEGREE + 1, increasing=True)[:, 1:]
    coef, *_ = np.linalg.lstsq(design, samples, rcond=None)
    u_n = -coef[0] / span
    u_nn = 2.0 * coef[1] / (span * span)
    return u_n, u_nn


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📐 DERIVE - Gradient, Hessian, core mask and boundary data                  │
# └─────────────────────────────────────────────────────────────────────────────┘
def derive(fld: Field2D, boundary_count: Optional[int] = None, core_depth: float = CORE_DEPTH) -> DerivedFields:
    grid = fld.grid
    d = grid.derivatives(fld.ext)
    grad = np.column_stack([d["ux"], d["uy"]])
    hess = np.column_stack([d["uxx"], d["uxy"], d["uyy"]])
    distance = distance_to_boundary(grid.domain, np.column_stack([grid.x, grid.y]), samples=2048)
    core = distance > core_depth * grid.h
    if not core.any():
        raise FieldError(f"no core nodes deeper than {core_depth:g}h at h={grid.h:g}; refine the grid")
    boundary = grid.boundary if boundary_count is None else boundary_samples(grid.domain, boundary_count)
    span = normal_span(grid.h, float(np.max(distance)))
    u_n, u_nn = normal_derivatives(fld, boundary, span)
    if np.any(u_n <= 0.0) and np.any(fld.values != 0.0):
        logger.warning("u_n <= 0 at %d of %d boundary samples", int(np.sum(u_n <= 0.0)), len(u_n))
    k = int(np.argmin(fld.values))
    return DerivedFields(
        field=fld,
        grad=grad,
        hess=hess,
        s_field=grad[:, 0] ** 2 + grad[:, 1] ** 2,
        distance=distance,
        core_mask=core,
        u_min=float(fld.values[k]),
        u_min_xy=(float(grid.x[k]), float(grid.y[k])),
        boundary=boundary,
        u_n=u_n,
        u_nn=u_nn,
    )


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🎛️ P-FUNCTION - Φ(·;β) = |∇u|² + β∫_u^0 f                                   │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class PFunction:
    beta: float
    interior: np.ndarray
    boundary: np.ndarray


def _nonpositive(u: np.ndarray) -> np.ndarray:
    if np.any(u > 0.0):
        logger.debug("clipping %d positive nodal values to 0 before F(u)", int(np.sum(u > 0.0)))
    return np.minimum(u, 0.0)


def p_function(spec: ProblemSpec, derived: DerivedFields, beta: float) -> PFunction:
    if not beta > 0.0:
        raise DomainViolationError(f"beta must be positive, got {beta}")
    F = cumulative_F_array(spec, _nonpositive(derived.field.values))
    return PFunction(float(beta), derived.s_field + beta * F, derived.u_n ** 2)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🌙 V-FIELD - v = ∫_u^0 dy/√F(y) and its Hessian                             │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class VField:
    v: np.ndarray
    grad: np.ndarray           # (n, 2)
    hess: np.ndarray           # (n, 3) v_xx, v_xy, v_yy
    eig_max: np.ndarray
    eig_min: np.ndarray

    @property
    def det(self) -> np.ndarray:
        return self.hess[:, 0] * self.hess[:, 2] - self.hess[:, 1] ** 2


def symmetric_eigenvalues(hess: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues (max, min) of 2×2 symmetric [[a, b], [b, c]]."""
    a, b, c = hess[:, 0], hess[:, 1], hess[:, 2]
    mean = 0.5 * (a + c)
    radius = np.hypot(0.5 * (a - c), b)
    return mean + radius, mean - radius


def v_field(spec: ProblemSpec, fld: Field2D) -> VField:
    grid = fld.grid
    v = v_of_u_array(spec, _nonpositive(fld.values))
    merged_v = v_of_u_array(spec, _nonpositive(grid.merged_values(fld.values)))
    ext = grid.extended(v, merged_v)
    vx, vy = grid.first_derivatives(ext)
    vxx, vxy, vyy = grid.second_derivatives(ext)
    hess = np.column_stack([vxx, vxy, vyy])
    eig_max, eig_min = symmetric_eigenvalues(hess)
    return VField(v, np.column_stack([vx, vy]), hess, eig_max, eig_min)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🧾 IDENTITY RESIDUALS - v-equation and the Hessian-gradient inequality      │
# └─────────────────────────────────────────────────────────────────────────────┘
def v_equation_residual(
    spec: ProblemSpec,
    fld: Field2D,
    derived: Optional[DerivedFields] = None,
    vf: Optional[VField] = None,
    min_distance: Optional[float] = None,
) -> np.ndarray:
    """a_ij(v, Dv) v_ij − b(v, Dv) at core nodes, b = −1 − |Dv|²/2.

    ``min_distance`` replaces the core mask by a fixed depth so that two grids
    can be compared on the same region.
    """
    derived = derived or derive(fld)
    vf = vf or v_field(spec, fld)
    core = derived.core_mask if min_distance is None else derived.distance > min_distance
    F = cumulative_F_array(spec, _nonpositive(fld.values[core]))
    vx, vy = vf.grad[core, 0], vf.grad[core, 1]
    vxx, vxy, vyy = vf.hess[core].T
    dv2 = vx * vx + vy * vy
    s = np.minimum(F * dv2, spec.s_limit * (1.0 - 1e-12))
    g, gp = spec.g(s), spec.g_prime(s)
    G = g + 2.0 * s * gp
    scale = np.sqrt(F) / spec.f(fld.values[core])
    trace = (g / G) * (vxx + vyy)
    quad = (2.0 * gp / G) * F * (vx * vx * vxx + 2.0 * vx * vy * vxy + vy * vy * vyy)
    b = -1.0 - 0.5 * dv2
    return scale * (trace + quad) - b


def ps_inequality_residual(derived: DerivedFields) -> np.ndarray:
    """RHS − LHS of the Hessian-gradient inequality at core nodes with |∇u|² ≥ 1e−10.

    In the plane the difference vanishes identically (Cayley–Hamilton), so
    values are roundoff-sized.
    """
    keep = derived.core_mask & (derived.s_field >= PS_GRADIENT_FLOOR)
    ux, uy = derived.grad[keep].T
    a, b, c = derived.hess[keep].T
    s = derived.s_field[keep]
    lap = a + c
    hgx, hgy = a * ux + b * uy, b * ux + c * uy
    ghg = ux * hgx + uy * hgy
    frob = a * a + 2.0 * b * b + c * c
    return s * lap * lap + 2.0 * (hgx * hgx + hgy * hgy) - 2.0 * lap * ghg - frob * s


def derived_rows(spec: ProblemSpec, derived: DerivedFields, beta: float, vf: Optional[VField] = None) -> List[Dict[str, Any]]:
    """Rows (x, y, u, ux, uy, uxx, uxy, uyy, s, Φβ, v, λmax(∇²v))."""
    fld = derived.field
    vf = vf or v_field(spec, fld)
    phi = p_function(spec, derived, beta).interior
    rows = []
    for k in range(fld.grid.n_unknowns):
        rows.append(
            {
                "x": float(fld.grid.x[k]),
                "y": float(fld.grid.y[k]),
                "u": float(fld.values[k]),
                "ux": float(derived.grad[k, 0]),
                "uy": float(derived.grad[k, 1]),
                "uxx": float(derived.hess[k, 0]),
                "uxy": float(derived.hess[k, 1]),
                "uyy": float(derived.hess[k, 2]),
                "s": float(derived.s_field[k]),
                "phi_beta": float(phi[k]),
                "v": float(vf.v[k]),
                "lambda_max_hess_v": float(vf.eig_max[k]),
            }
        )
    return rows
