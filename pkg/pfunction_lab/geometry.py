#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 📐 GEOMETRY - Strictly convex planar domains and Shortley–Weller grids
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Boundary parametrizations, curvature, K_max, α, inradius and the
#          clipped Cartesian grid (with its unequal-arm stencils)
# Functions: disk, ellipse, blob, parse_domain, curvature, k_max, alpha,
#            inradius, boundary_samples, distance_to_boundary, make_grid
# ═══════════════════════════════════════════════════════════════════════════════

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import ConfigError, ConvexityError, DomainViolationError, GridError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
CURVATURE_SAMPLES = 4096
KMAX_RTOL = 1e-10
INRADIUS_RTOL = 1e-8
ON_BOUNDARY_TOL = 1e-12
MIN_LEG = 0.05

# Stencil directions: E, W, N, S and quadrants NE, NW, SW, SE
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))
QUADRANTS = ((1, 1), (-1, 1), (-1, -1), (1, -1))
QUADRANT_ARMS = ((0, 2), (1, 2), (1, 3), (0, 3))


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🟢 CONVEX DOMAIN - Closed C² boundary t ↦ γ(t), counterclockwise            │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class ConvexDomain:
    """Smooth strictly convex region centered at the origin.

    kinds: ``disk`` (R), ``ellipse`` (a, b), ``blob`` (R, eps, k) with radial
    profile r(θ) = R(1 + eps·cos kθ).
    """

    kind: str
    params: Tuple[Tuple[str, float], ...]

    def __post_init__(self):
        p = self.param
        if self.kind == "disk":
            if not p("R") > 0.0:
                raise DomainViolationError("disk radius must be positive")
        elif self.kind == "ellipse":
            if not (p("a") > 0.0 and p("b") > 0.0):
                raise DomainViolationError("ellipse semi-axes must be positive")
        elif self.kind == "blob":
            if not (p("R") > 0.0 and 0.0 <= p("eps") < 1.0 and p("k") >= 1 and p("k") == int(p("k"))):
                raise DomainViolationError("blob needs R > 0, 0 <= eps < 1 and integer k >= 1")
        else:
            raise DomainViolationError(f"unknown domain kind '{self.kind}'")
        t = np.linspace(0.0, TWO_PI, CURVATURE_SAMPLES, endpoint=False)
        kappa = _raw_curvature(self, t)
        worst = int(np.argmin(kappa))
        if kappa[worst] <= 0.0:
            raise ConvexityError(
                f"{self.describe()} is not strictly convex (curvature {kappa[worst]:.3e} at t={t[worst]:.6f})",
                t=float(t[worst]),
                kappa=float(kappa[worst]),
            )

    def param(self, key: str) -> float:
        return dict(self.params)[key]

    def describe(self) -> str:
        body = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.kind}:{body}"

    def to_record(self) -> Dict[str, Any]:
        return {"kind": self.kind, **dict(self.params)}

    # ┌─ Parametrization and derivatives ─┐
    def _radial(self, t):
        R, eps, k = self.param("R"), self.param("eps"), self.param("k")
        r = R * (1.0 + eps * np.cos(k * t))
        dr = -R * eps * k * np.sin(k * t)
        ddr = -R * eps * k * k * np.cos(k * t)
        return r, dr, ddr

    def point(self, t) -> Tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        if self.kind == "disk":
            R = self.param("R")
            return R * np.cos(t), R * np.sin(t)
        if self.kind == "ellipse":
            return self.param("a") * np.cos(t), self.param("b") * np.sin(t)
        r, _, _ = self._radial(t)
        return r * np.cos(t), r * np.sin(t)

    def d1(self, t) -> Tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        if self.kind == "disk":
            R = self.param("R")
            return -R * np.sin(t), R * np.cos(t)
        if self.kind == "ellipse":
            return -self.param("a") * np.sin(t), self.param("b") * np.cos(t)
        r, dr, _ = self._radial(t)
        c, s = np.cos(t), np.sin(t)
        return dr * c - r * s, dr * s + r * c

    def d2(self, t) -> Tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        if self.kind == "disk":
            R = self.param("R")
            return -R * np.cos(t), -R * np.sin(t)
        if self.kind == "ellipse":
            return -self.param("a") * np.cos(t), -self.param("b") * np.sin(t)
        r, dr, ddr = self._radial(t)
        c, s = np.cos(t), np.sin(t)
        return ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s

    def indicator(self, x, y):
        """Negative inside, zero on the boundary, roughly a signed distance."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if self.kind == "disk":
            return np.hypot(x, y) - self.param("R")
        if self.kind == "ellipse":
            a, b = self.param("a"), self.param("b")
            return (np.hypot(x / a, y / b) - 1.0) * min(a, b)
        r, _, _ = self._radial(np.arctan2(y, x))
        return np.hypot(x, y) - r

    def contains(self, x, y, tol: float = ON_BOUNDARY_TOL):
        """Strict interior test; points within ``tol`` of the boundary are outside."""
        return self.indicator(x, y) < -tol

    @functools.cached_property
    def bounding_radius(self) -> float:
        x, y = self.point(np.linspace(0.0, TWO_PI, CURVATURE_SAMPLES, endpoint=False))
        return float(np.max(np.hypot(x, y)))

    @functools.cached_property
    def centroid(self) -> Tuple[float, float]:
        # Green's theorem on a dense polygon
        x, y = self.point(np.linspace(0.0, TWO_PI, 8192, endpoint=False))
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * np.sum(cross)
        cx = np.sum((x + xn) * cross) / (6.0 * area)
        cy = np.sum((y + yn) * cross) / (6.0 * area)
        # symmetric kinds have their centroid at the origin exactly
        snap = 1e-12 * self.bounding_radius
        return (0.0 if abs(cx) < snap else float(cx), 0.0 if abs(cy) < snap else float(cy))


def disk(R: float = 1.0) -> ConvexDomain:
    return ConvexDomain("disk", (("R", float(R)),))


def ellipse(a: float, b: float) -> ConvexDomain:
    return ConvexDomain("ellipse", (("a", float(a)), ("b", float(b))))


def blob(R: float, eps: float, k: int) -> ConvexDomain:
    return ConvexDomain("blob", (("R", float(R)), ("eps", float(eps)), ("k", float(k))))


_DOMAIN_KEYS = {"disk": ("R",), "ellipse": ("a", "b"), "blob": ("R", "eps", "k")}


def domain_from_record(record: Dict[str, Any]) -> ConvexDomain:
    kind = str(record.get("kind", "")).strip().lower()
    if kind not in _DOMAIN_KEYS:
        raise ConfigError(f"unknown domain kind '{kind}' (choose from {sorted(_DOMAIN_KEYS)})")
    missing = [k for k in _DOMAIN_KEYS[kind] if k not in record]
    if missing:
        raise ConfigError(f"domain '{kind}' is missing {missing}")
    try:
        values = {k: float(record[k]) for k in _DOMAIN_KEYS[kind]}
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad domain parameter: {e}") from e
    return {"disk": disk, "ellipse": ellipse, "blob": blob}[kind](**values)


def parse_domain(text: str) -> ConvexDomain:
    """Parse ``disk:R=1``, ``ellipse:a=2,b=1`` or ``blob:R=1,eps=0.05,k=3``."""
    kind, _, body = text.strip().partition(":")
    record: Dict[str, Any] = {"kind": kind}
    for item in filter(None, (p.strip() for p in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"domain parameter '{item}' is not key=value")
        record[key.strip()] = value.strip()
    return domain_from_record(record)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 〰️ CURVATURE - κ(t), K_max and α                                           │
# └─────────────────────────────────────────────────────────────────────────────┘
def _raw_curvature(domain: ConvexDomain, t) -> np.ndarray:
    xp, yp = domain.d1(t)
    xpp, ypp = domain.d2(t)
    return (xp * ypp - yp * xpp) / (xp * xp + yp * yp) ** 1.5


def curvature(domain: ConvexDomain, t):
    """κ = (x′y″ − y′x″)/(x′² + y′²)^{3/2}, required strictly positive."""
    kappa = _raw_curvature(domain, t)
    if np.any(kappa <= 0.0):
        bad = float(np.min(kappa))
        raise ConvexityError(f"non-positive curvature {bad:.3e} on {domain.describe()}", kappa=bad)
    return float(kappa) if np.ndim(kappa) == 0 else kappa


@functools.lru_cache(maxsize=64)
def k_max(domain: ConvexDomain, samples: int = CURVATURE_SAMPLES, rtol: float = KMAX_RTOL) -> float:
    """Maximum boundary curvature: dense sampling, then golden-section refinement."""
    t = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    kappa = curvature(domain, t)
    i = int(np.argmax(kappa))
    best = float(kappa[i])
    if best - float(np.min(kappa)) <= 1e-14 * best:
        return best
    dt = t[1] - t[0]
    bracket = (t[i] - dt, t[i], t[i] + dt)
    try:
        res = optimize.minimize_scalar(lambda s: -float(curvature(domain, s)), bracket=bracket, method="golden", tol=rtol)
        return max(best, float(-res.fun))
    except ValueError:
        logger.debug("golden-section bracket rejected on %s, keeping sampled maximum", domain.describe())
        return best


def alpha(domain: ConvexDomain, n: int = 2) -> float:
    """α = 1/(2(n−1)K_max)."""
    if int(n) != n or n < 2:
        raise DomainViolationError(f"n must be an integer >= 2, got {n}")
    return 1.0 / (2.0 * (n - 1) * k_max(domain))


def alpha_ball(R: float, n: int) -> float:
    """α for the ball of radius R in dimension n (mean curvature 1/R)."""
    if int(n) != n or n < 2:
        raise DomainViolationError(f"n must be an integer >= 2, got {n}")
    return R / (2.0 * (n - 1))


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📏 DISTANCES - Boundary samples, distance to ∂Ω, inradius                   │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class BoundarySamples:
    t: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def boundary_samples(domain: ConvexDomain, count: int) -> BoundarySamples:
    """Uniform-in-t samples with outward unit normals and curvature."""
    t = np.linspace(0.0, TWO_PI, int(count), endpoint=False)
    x, y = domain.point(t)
    xp, yp = domain.d1(t)
    speed = np.hypot(xp, yp)
    normals = np.column_stack([yp / speed, -xp / speed])
    return BoundarySamples(t, np.column_stack([x, y]), normals, curvature(domain, t))


def distance_to_boundary(domain: ConvexDomain, points, samples: int = CURVATURE_SAMPLES, chunk: int = 512) -> np.ndarray:
    """Approximate distance to ∂Ω by minimum over dense boundary samples."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    bx, by = domain.point(np.linspace(0.0, TWO_PI, samples, endpoint=False))
    out = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        d2 = (block[:, 0:1] - bx[None, :]) ** 2 + (block[:, 1:2] - by[None, :]) ** 2
        out[start:start + chunk] = np.sqrt(np.min(d2, axis=1))
    return out


def _exact_distance(domain: ConvexDomain, p: np.ndarray, t_dense: np.ndarray, bx: np.ndarray, by: np.ndarray) -> float:
    i = int(np.argmin((bx - p[0]) ** 2 + (by - p[1]) ** 2))
    dt = t_dense[1] - t_dense[0]

    def dist2(s: float) -> float:
        x, y = domain.point(s)
        return float((x - p[0]) ** 2 + (y - p[1]) ** 2)

    res = optimize.minimize_scalar(
        dist2, bounds=(t_dense[i] - 2.0 * dt, t_dense[i] + 2.0 * dt), method="bounded", options={"xatol": 1e-13}
    )
    return math.sqrt(min(float(res.fun), dist2(t_dense[i])))


@functools.lru_cache(maxsize=64)
def inradius(domain: ConvexDomain, rtol: float = INRADIUS_RTOL) -> float:
    """Radius of the largest inscribed disk.

    Coarse maximization of the sampled distance on an interior grid, then
    coordinate ascent over axis and diagonal directions with halving steps on the refined
    point-to-curve distance.
    """
    if domain.kind == "disk":
        return domain.param("R")
    t_dense = np.linspace(0.0, TWO_PI, CURVATURE_SAMPLES, endpoint=False)
    bx, by = domain.point(t_dense)
    scale = domain.bounding_radius
    axis = np.linspace(-scale, scale, 65)
    X, Y = np.meshgrid(axis, axis)
    inside = domain.contains(X, Y)
    candidates = np.column_stack([X[inside], Y[inside]])
    if len(candidates) == 0:
        raise GridError(f"no interior sample points in {domain.describe()}")
    coarse = distance_to_boundary(domain, candidates, samples=1024)
    p = candidates[int(np.argmax(coarse))].copy()
    best = _exact_distance(domain, p, t_dense, bx, by)
    step = axis[1] - axis[0]
    directions = np.array([(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)], dtype=float)
    directions[4:] /= math.sqrt(2.0)
    while step > 1e-3 * rtol * scale:
        moved = False
        for direction in directions:
            q = p + step * direction
            if not domain.contains(q[0], q[1]):
                continue
            value = _exact_distance(domain, q, t_dense, bx, by)
            if value > best:
                p, best, moved = q, value, True
        if not moved:
            step *= 0.5
    logger.debug("inradius of %s: %.12g at (%.6g, %.6g)", domain.describe(), best, p[0], p[1])
    return best


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ #️⃣ CLIPPED GRID - Lattice anchored at the centroid, Shortley–Weller arms    │
# └─────────────────────────────────────────────────────────────────────────────┘
EXTERIOR, INTERIOR, MERGED = 0, 1, 2
CLASS_NAMES = {EXTERIOR: "exterior", INTERIOR: "interior", MERGED: "merged"}


@dataclass
class ClippedGrid:
    """Shortley–Weller grid over a convex domain.

    Unknowns are the interior lattice nodes. Every stencil arm ends at a
    lattice node (an unknown or a merged node) or at a boundary point where
    u = 0; arm lengths are fractions θ of h with ``min_leg`` ≤ θ ≤ 1. A merged
    node (a node closer than ``min_leg``·h to ∂Ω along a grid line) carries the
    value θ/(1+θ)·u(anchor), the linear interpolant between the boundary point
    and its opposite neighbor.

    Values live in an *extended vector*: unknowns, then merged nodes, then a
    single trailing zero for boundary arms.
    """

    domain: ConvexDomain
    h: float
    origin: Tuple[float, float]
    i0: int
    j0: int
    classes: np.ndarray            # (ny, nx) EXTERIOR / INTERIOR / MERGED
    legs: np.ndarray               # (ny, nx, 4) raw boundary legs θ, nan where the neighbor is inside
    node_i: np.ndarray
    node_j: np.ndarray
    merged_i: np.ndarray
    merged_j: np.ndarray
    merged_anchor: np.ndarray
    merged_weight: np.ndarray
    arm: np.ndarray                # (n, 4) arm lengths / h
    arm_index: np.ndarray          # (n, 4) extended-vector indices of the arm ends
    arm_is_node: np.ndarray        # (n, 4) arm ends at a lattice node
    diag_index: np.ndarray         # (n, 4) extended index of quadrant diagonals, -1 if unusable
    quad_weight: np.ndarray        # (n, 4) weights averaging the quadrant mixed differences
    boundary: BoundarySamples
    ext_map: np.ndarray = field(repr=False, default=None)  # (ny, nx) extended index, -1 outside

    @property
    def n_unknowns(self) -> int:
        return len(self.node_i)

    @property
    def n_merged(self) -> int:
        return len(self.merged_i)

    @property
    def zero_index(self) -> int:
        return self.n_unknowns + self.n_merged

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + (self.node_i + self.i0) * self.h

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + (self.node_j + self.j0) * self.h

    def lattice_xy(self, i, j) -> Tuple[np.ndarray, np.ndarray]:
        return self.origin[0] + (np.asarray(i) + self.i0) * self.h, self.origin[1] + (np.asarray(j) + self.j0) * self.h

    # ┌─ Extended vector ─┐
    def merged_values(self, values: np.ndarray) -> np.ndarray:
        return self.merged_weight * values[self.merged_anchor]

    def extended(self, values: np.ndarray, merged: Optional[np.ndarray] = None) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if merged is None:
            merged = self.merged_values(values)
        return np.concatenate([values, merged, [0.0]])

    # ┌─ Stencils ─┐
    def first_derivatives(self, ext: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        n, h = self.n_unknowns, self.h
        u0 = ext[:n]
        a = self.arm
        end = ext[self.arm_index]

        def one(plus: int, minus: int) -> np.ndarray:
            b, c = a[:, plus], a[:, minus]
            return (c * c * end[:, plus] - b * b * end[:, minus] + (b * b - c * c) * u0) / (b * c * (b + c) * h)

        return one(0, 1), one(2, 3)

    def second_derivatives(self, ext: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, h = self.n_unknowns, self.h
        u0 = ext[:n]
        a = self.arm
        end = ext[self.arm_index]

        def one(plus: int, minus: int) -> np.ndarray:
            b, c = a[:, plus], a[:, minus]
            return 2.0 * (end[:, plus] / (b * (b + c)) + end[:, minus] / (c * (b + c)) - u0 / (b * c)) / (h * h)

        uxy = np.zeros(n)
        for q, ((sx, sy), (ax, ay)) in enumerate(zip(QUADRANTS, QUADRANT_ARMS)):
            w = self.quad_weight[:, q]
            diag = ext[np.where(self.diag_index[:, q] >= 0, self.diag_index[:, q], self.zero_index)]
            uxy += w * sx * sy * (diag - end[:, ax] - end[:, ay] + u0) / (h * h)
        return one(0, 1), uxy, one(2, 3)

    def derivatives(self, ext: np.ndarray) -> Dict[str, np.ndarray]:
        ux, uy = self.first_derivatives(ext)
        uxx, uxy, uyy = self.second_derivatives(ext)
        return {"ux": ux, "uy": uy, "uxx": uxx, "uxy": uxy, "uyy": uyy}

    # ┌─ Jacobian plumbing ─┐
    def _resolve(self, index: np.ndarray) -> np.ndarray:
        """Map extended indices to the unknown they depend on (-1: none)."""
        n = self.n_unknowns
        out = np.full(index.shape, -1, dtype=int)
        own = (index >= 0) & (index < n)
        out[own] = index[own]
        merged = (index >= n) & (index < self.zero_index)
        m = index[merged] - n
        out[merged] = np.where(self.merged_weight[m] > 0.0, self.merged_anchor[m], -1)
        return out

    def sparsity(self) -> Tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of the residual Jacobian: 3×3 stencil plus merged anchors."""
        n = self.n_unknowns
        rows = [np.arange(n)]
        cols = [np.arange(n)]
        for index in (self._resolve(self.arm_index), self._resolve(np.where(self.quad_weight > 0.0, self.diag_index, -1))):
            for k in range(4):
                ok = index[:, k] >= 0
                rows.append(np.nonzero(ok)[0])
                cols.append(index[ok, k])
        key = np.unique(np.concatenate(rows) * n + np.concatenate(cols))
        return key // n, key % n

    def colors(self) -> np.ndarray:
        """Column groups for finite-difference Jacobians.

        A residual depends on unknowns at most two lattice steps away, so
        unknowns sharing (i mod 5, j mod 5) never meet in one row.
        """
        return (self.node_i % 5) + 5 * (self.node_j % 5)

    def lattice_field(self, values: np.ndarray) -> np.ndarray:
        """Values on the (ny, nx) lattice, nan outside."""
        ext = self.extended(values)
        out = np.full(self.classes.shape, np.nan)
        ok = self.ext_map >= 0
        out[ok] = ext[self.ext_map[ok]]
        return out

    def dump_rows(self) -> List[Dict[str, Any]]:
        """Rows (i, j, x, y, class, θ_E, θ_W, θ_N, θ_S) for every lattice node."""
        rows = []
        ny, nx = self.classes.shape
        for j in range(ny):
            for i in range(nx):
                x, y = self.lattice_xy(i, j)
                legs = self.legs[j, i]
                rows.append(
                    {
                        "i": i + self.i0,
                        "j": j + self.j0,
                        "x": float(x),
                        "y": float(y),
                        "class": CLASS_NAMES[int(self.classes[j, i])],
                        "theta_E": float(legs[0]),
                        "theta_W": float(legs[1]),
                        "theta_N": float(legs[2]),
                        "theta_S": float(legs[3]),
                    }
                )
        return rows


def _leg(domain: ConvexDomain, x: float, y: float, dx: float, dy: float, h: float, tol: float) -> float:
    """Fraction θ ∈ (0, 1] of the step h from (x, y) to the boundary along (dx, dy)."""

    def phi(theta: float) -> float:
        return float(domain.indicator(x + theta * h * dx, y + theta * h * dy))

    if phi(1.0) <= 0.0:
        return 1.0
    return optimize.brentq(phi, 0.0, 1.0, xtol=ON_BOUNDARY_TOL, rtol=4.0 * np.finfo(float).eps)


def make_grid(
    domain: ConvexDomain,
    h: float,
    min_nodes_across: float = 10.0,
    min_leg: float = MIN_LEG,
    boundary_count: int = 512,
) -> ClippedGrid:
    """Build the Shortley–Weller grid of spacing h anchored at the centroid."""
    if not h > 0.0:
        raise DomainViolationError(f"grid spacing must be positive, got {h}")
    d = inradius(domain)
    if d / h < min_nodes_across:
        raise GridError(f"h={h:g} too coarse: inradius {d:.6g} spans fewer than {min_nodes_across:g} cells")
    cx, cy = domain.centroid
    reach = domain.bounding_radius
    i0 = int(math.floor((-reach - abs(cx)) / h)) - 2
    j0 = int(math.floor((-reach - abs(cy)) / h)) - 2
    nx = -2 * i0 + 1
    ny = -2 * j0 + 1
    I, J = np.meshgrid(np.arange(nx), np.arange(ny))
    X = cx + (I + i0) * h
    Y = cy + (J + j0) * h
    tol = ON_BOUNDARY_TOL * max(1.0, reach)
    inside = domain.contains(X, Y, tol)
    if not inside.any():
        raise GridError(f"no interior nodes for h={h:g} on {domain.describe()}")

    # ┌─ Boundary legs of every inside node ─┐
    legs = np.full((ny, nx, 4), np.nan)
    js, is_ = np.nonzero(inside)
    for j, i in zip(js, is_):
        for k, (dx, dy) in enumerate(DIRECTIONS):
            if not inside[j + dy, i + dx]:
                legs[j, i, k] = _leg(domain, X[j, i], Y[j, i], dx, dy, h, tol)

    # ┌─ Merge nodes hugging the boundary ─┐
    shortest = np.where(inside, np.nanmin(np.where(np.isnan(legs), np.inf, legs), axis=2), np.inf)
    merged = inside & (shortest < min_leg)
    unknown = inside & ~merged
    classes = np.where(unknown, INTERIOR, np.where(merged, MERGED, EXTERIOR)).astype(np.int8)

    uj, ui = np.nonzero(unknown)
    mj, mi = np.nonzero(merged)
    n, m = len(ui), len(mi)
    if n == 0:
        raise GridError(f"every interior node was merged into the boundary for h={h:g}")
    ext_map = np.full((ny, nx), -1, dtype=int)
    ext_map[uj, ui] = np.arange(n)
    ext_map[mj, mi] = n + np.arange(m)
    zero = n + m

    anchors = np.zeros(m, dtype=int)
    weights = np.zeros(m)
    for k, (j, i) in enumerate(zip(mj, mi)):
        row = np.where(np.isnan(legs[j, i]), np.inf, legs[j, i])
        d_short = int(np.argmin(row))
        dx, dy = DIRECTIONS[d_short]
        qj, qi = j - dy, i - dx
        if unknown[qj, qi]:
            theta = row[d_short]
            anchors[k] = ext_map[qj, qi]
            weights[k] = theta / (1.0 + theta)

    # ┌─ Arms of unknown nodes ─┐
    arm = np.ones((n, 4))
    arm_index = np.full((n, 4), zero, dtype=int)
    arm_is_node = np.zeros((n, 4), dtype=bool)
    for k, (dx, dy) in enumerate(DIRECTIONS):
        neighbor = inside[uj + dy, ui + dx]
        arm_is_node[:, k] = neighbor
        arm_index[neighbor, k] = ext_map[uj[neighbor] + dy, ui[neighbor] + dx]
        arm[~neighbor, k] = legs[uj[~neighbor], ui[~neighbor], k]

    diag_index = np.full((n, 4), -1, dtype=int)
    for q, ((sx, sy), (ax, ay)) in enumerate(zip(QUADRANTS, QUADRANT_ARMS)):
        ok = arm_is_node[:, ax] & arm_is_node[:, ay] & inside[uj + sy, ui + sx]
        diag_index[ok, q] = ext_map[uj[ok] + sy, ui[ok] + sx]
    quad_weight = _quadrant_weights(diag_index >= 0)
    missing = int(np.sum(quad_weight.sum(axis=1) == 0.0))
    if missing:
        logger.warning("%d nodes have no usable quadrant for u_xy; mixed derivative set to 0 there", missing)

    grid = ClippedGrid(
        domain=domain,
        h=float(h),
        origin=(cx, cy),
        i0=i0,
        j0=j0,
        classes=classes,
        legs=legs,
        node_i=ui,
        node_j=uj,
        merged_i=mi,
        merged_j=mj,
        merged_anchor=anchors,
        merged_weight=weights,
        arm=arm,
        arm_index=arm_index,
        arm_is_node=arm_is_node,
        diag_index=diag_index,
        quad_weight=quad_weight,
        boundary=boundary_samples(domain, boundary_count),
        ext_map=ext_map,
    )
    logger.debug("grid h=%g on %s: %d unknowns, %d merged", h, domain.describe(), n, m)
    return grid


def _quadrant_weights(available: np.ndarray) -> np.ndarray:
    """Average opposite quadrant pairs when possible (second-order u_xy)."""
    weights = np.zeros(available.shape)
    pair_a = available[:, 0] & available[:, 2]
    pair_b = available[:, 1] & available[:, 3]
    both = pair_a & pair_b
    weights[both] = 0.25
    only_a = pair_a & ~both
    weights[only_a, 0] = weights[only_a, 2] = 0.5
    only_b = pair_b & ~both
    weights[only_b, 1] = weights[only_b, 3] = 0.5
    rest = ~(pair_a | pair_b)
    count = available[rest].sum(axis=1)
    weights[rest] = np.where(count[:, None] > 0, available[rest] / np.maximum(count, 1)[:, None], 0.0)
    return weights
