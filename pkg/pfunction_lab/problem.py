#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 🧮 PROBLEM - Coefficient family div(g(|∇u|²)∇u) = f(u)G(|∇u|²)
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Coefficient descriptors, ProblemSpec, derived quantities G, F, v and
#          the sampled structural hypotheses of the convexity and P-function
#          results
# Functions: big_G, big_G_prime, cumulative_F, v_of_u, check_theorem1_hypothesis,
#            check_theorem2_hypothesis, builtin_problem, problem_from_record
# ═══════════════════════════════════════════════════════════════════════════════

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Optional, Tuple

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainViolationError

logger = logging.getLogger(__name__)

ArrayFn = Callable[[Any], Any]

# ┌─ Numerical constants ─┐
F_RTOL = 1e-12
V_RTOL = 1e-10
S_CLAMP = 1e-9
DEFAULT_SAMPLES = 512
DEFAULT_U_LOWER = -10.0
DEFAULT_S_MAX = 100.0


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🧩 COEFFICIENTS - Scalar maps with exact first and second derivatives       │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class Coefficient:
    """A scalar coefficient x ↦ c(x) together with c′ and c″.

    All three maps accept scalars or numpy arrays. ``constant`` is set when the
    coefficient is known to be constant, which lets quadratures short-circuit to
    closed forms.
    """

    kind: str
    params: Tuple[Tuple[str, float], ...]
    value: ArrayFn = field(compare=False, repr=False)
    d1: ArrayFn = field(compare=False, repr=False)
    d2: ArrayFn = field(compare=False, repr=False)
    constant: Optional[float] = None

    def descriptor(self) -> str:
        if self.kind == "poly":
            coeffs = ";".join(repr(c) for _, c in self.params)
            return f"poly:coeffs={coeffs}"
        if self.kind == "custom":
            return "custom"
        body = ",".join(f"{k}={v!r}" for k, v in self.params)
        return f"{self.kind}:{body}"

    @classmethod
    def from_callables(cls, value: ArrayFn, d1: ArrayFn, d2: ArrayFn, constant: Optional[float] = None) -> "Coefficient":
        return cls("custom", (), value, d1, d2, constant)


def const_coefficient(c: float = 1.0) -> Coefficient:
    c = float(c)
    return Coefficient(
        "const",
        (("c", c),),
        lambda x: c + 0.0 * np.asarray(x, dtype=float),
        lambda x: 0.0 * np.asarray(x, dtype=float),
        lambda x: 0.0 * np.asarray(x, dtype=float),
        constant=c,
    )


def poly_coefficient(coeffs: Iterable[float]) -> Coefficient:
    coeffs = tuple(float(c) for c in coeffs)
    if not coeffs:
        raise ConfigError("poly coefficient needs at least one coefficient")
    p = np.polynomial.Polynomial(coeffs)
    dp, ddp = p.deriv(1), p.deriv(2)
    constant = coeffs[0] if all(c == 0.0 for c in coeffs[1:]) else None
    return Coefficient(
        "poly",
        tuple((f"c{i}", c) for i, c in enumerate(coeffs)),
        lambda x: p(np.asarray(x, dtype=float)),
        lambda x: dp(np.asarray(x, dtype=float)),
        lambda x: ddp(np.asarray(x, dtype=float)),
        constant=constant,
    )


def exp_coefficient(a: float = 1.0, b: float = 1.0) -> Coefficient:
    a, b = float(a), float(b)
    return Coefficient(
        "exp",
        (("a", a), ("b", b)),
        lambda x: a * np.exp(b * np.asarray(x, dtype=float)),
        lambda x: a * b * np.exp(b * np.asarray(x, dtype=float)),
        lambda x: a * b * b * np.exp(b * np.asarray(x, dtype=float)),
        constant=a if b == 0.0 else None,
    )


def power_coefficient(a: float, p: float, c: float = 1.0) -> Coefficient:
    """c·(1 + a·x)^p."""
    a, p, c = float(a), float(p), float(c)

    def base(x):
        return 1.0 + a * np.asarray(x, dtype=float)

    return Coefficient(
        "power",
        (("a", a), ("p", p), ("c", c)),
        lambda x: c * base(x) ** p,
        lambda x: c * p * a * base(x) ** (p - 1.0),
        lambda x: c * p * (p - 1.0) * a * a * base(x) ** (p - 2.0),
        constant=c if (a == 0.0 or p == 0.0) else None,
    )


def trig_coefficient(c: float, a: float, b: float = 1.0) -> Coefficient:
    """c + a·sin(b·x)."""
    c, a, b = float(c), float(a), float(b)
    return Coefficient(
        "trig",
        (("c", c), ("a", a), ("b", b)),
        lambda x: c + a * np.sin(b * np.asarray(x, dtype=float)),
        lambda x: a * b * np.cos(b * np.asarray(x, dtype=float)),
        lambda x: -a * b * b * np.sin(b * np.asarray(x, dtype=float)),
        constant=c if (a == 0.0 or b == 0.0) else None,
    )


_COEFFICIENT_KINDS = {
    "const": (const_coefficient, ("c",)),
    "exp": (exp_coefficient, ("a", "b")),
    "power": (power_coefficient, ("a", "p", "c")),
    "trig": (trig_coefficient, ("c", "a", "b")),
}


def parse_coefficient(text: str) -> Coefficient:
    """Parse ``kind:key=value,...`` (``poly:coeffs=1;0;2`` for polynomials)."""
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    params: Dict[str, str] = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"coefficient parameter '{item}' is not key=value")
        params[key.strip()] = value.strip()
    try:
        if kind == "poly":
            return poly_coefficient(float(c) for c in params.get("coeffs", "").split(";") if c.strip())
        if kind not in _COEFFICIENT_KINDS:
            raise ConfigError(f"unknown coefficient kind '{kind}'")
        factory, allowed = _COEFFICIENT_KINDS[kind]
        unknown = set(params) - set(allowed)
        if unknown:
            raise ConfigError(f"unknown parameters {sorted(unknown)} for '{kind}'")
        return factory(**{k: float(v) for k, v in params.items()})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"cannot parse coefficient '{text}': {e}") from e


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📐 PROBLEM SPEC - The (g, f) pair with gradient constraint and dimension    │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class ProblemSpec:
    """Immutable coefficient pair (g, f) of the Dirichlet problem.

    ``s_limit`` bounds |∇u|² (infinite for the Euclidean family, 1 for the
    Lorentzian one). Positivity of g, f and G is checked on sample grids at
    construction.
    """

    name: str
    g_coef: Coefficient
    f_coef: Coefficient
    s_limit: float = math.inf
    n: int = 2

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainViolationError(f"dimension n must be an integer >= 2, got {self.n}")
        if not self.s_limit > 0.0:
            raise DomainViolationError(f"s_limit must be positive, got {self.s_limit}")
        s, _ = clamp_s(self, default_s_samples(self))
        u = default_u_samples()
        if np.any(self.g(s) <= 0.0):
            raise DomainViolationError(f"{self.name}: g must be positive on [0, s_limit)")
        if np.any(self.f(u) <= 0.0):
            raise DomainViolationError(f"{self.name}: f must be positive for u <= 0")
        if np.any(self.g(s) + 2.0 * s * self.g_prime(s) <= 0.0):
            raise DomainViolationError(f"{self.name}: G = g + 2sg' must be positive")

    # ┌─ Coefficient access ─┐
    def g(self, s):
        return self.g_coef.value(s)

    def g_prime(self, s):
        return self.g_coef.d1(s)

    def g_second(self, s):
        return self.g_coef.d2(s)

    def f(self, u):
        return self.f_coef.value(u)

    def f_prime(self, u):
        return self.f_coef.d1(u)

    def f_second(self, u):
        return self.f_coef.d2(u)

    @property
    def f_constant(self) -> Optional[float]:
        return self.f_coef.constant

    def g_over_G(self, s):
        """g/G, the factor multiplying the friction and curvature terms."""
        g = self.g(s)
        return g / (g + 2.0 * np.asarray(s, dtype=float) * self.g_prime(s))

    def with_dimension(self, n: int) -> "ProblemSpec":
        return ProblemSpec(self.name, self.g_coef, self.f_coef, self.s_limit, n)

    def to_record(self) -> Dict[str, Any]:
        if self.name in BUILTIN_PROBLEMS and self == builtin_problem(self.name, self.n):
            return {"name": self.name, "n": self.n}
        return {
            "name": self.name,
            "g": self.g_coef.descriptor(),
            "f": self.f_coef.descriptor(),
            "s_limit": self.s_limit,
            "n": self.n,
        }


def _euclidean(n: int) -> ProblemSpec:
    return ProblemSpec("euclidean", power_coefficient(1.0, -0.5), const_coefficient(1.0), math.inf, n)


def _lorentzian(n: int) -> ProblemSpec:
    return ProblemSpec("lorentzian", power_coefficient(-1.0, -0.5), const_coefficient(1.0), 1.0, n)


def _poisson(n: int) -> ProblemSpec:
    return ProblemSpec("poisson", const_coefficient(1.0), const_coefficient(1.0), math.inf, n)


BUILTIN_PROBLEMS: Dict[str, Callable[[int], ProblemSpec]] = {
    "euclidean": _euclidean,
    "lorentzian": _lorentzian,
    "poisson": _poisson,
}


def builtin_problem(name: str, n: int = 2) -> ProblemSpec:
    try:
        return BUILTIN_PROBLEMS[name.strip().lower()](n)
    except KeyError:
        raise ConfigError(f"unknown built-in problem '{name}' (choose from {sorted(BUILTIN_PROBLEMS)})") from None


def problem_from_record(record: Dict[str, Any]) -> ProblemSpec:
    """Build a spec from ``{name, g, f, n[, s_limit]}``; built-ins need only ``name``."""
    name = str(record.get("name", "")).strip().lower()
    n = int(record.get("n", 2))
    if "g" not in record and "f" not in record:
        return builtin_problem(name, n)
    g_text, f_text = record.get("g"), record.get("f")
    if g_text is None or f_text is None:
        raise ConfigError("a custom problem needs both 'g' and 'f' descriptors")
    g_coef = g_text if isinstance(g_text, Coefficient) else parse_coefficient(str(g_text))
    f_coef = f_text if isinstance(f_text, Coefficient) else parse_coefficient(str(f_text))
    s_limit = float(record.get("s_limit", math.inf))
    return ProblemSpec(name or "custom", g_coef, f_coef, s_limit, n)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔢 DERIVED QUANTITIES - G, G′, F and the concavity transform v              │
# └─────────────────────────────────────────────────────────────────────────────┘
def _check_s(spec: ProblemSpec, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainViolationError(f"s must be non-negative, got min {s.min()}")
    if np.any(s >= spec.s_limit):
        raise DomainViolationError(f"s must stay below s_limit={spec.s_limit}, got max {s.max()}")
    return s


def big_G(spec: ProblemSpec, s):
    """G(s) = g(s) + 2s·g′(s)."""
    s = _check_s(spec, s)
    out = spec.g(s) + 2.0 * s * spec.g_prime(s)
    return float(out) if out.ndim == 0 else out


def big_G_prime(spec: ProblemSpec, s):
    """G′(s) = 3g′(s) + 2s·g″(s)."""
    s = _check_s(spec, s)
    out = 3.0 * spec.g_prime(s) + 2.0 * s * spec.g_second(s)
    return float(out) if out.ndim == 0 else out


def _check_u(u: float) -> float:
    u = float(u)
    if not math.isfinite(u) or u > 0.0:
        raise DomainViolationError(f"u must be finite and <= 0, got {u}")
    return u


def cumulative_F(spec: ProblemSpec, u: float) -> float:
    """F(u) = ∫_u^0 f(y) dy."""
    u = _check_u(u)
    if u == 0.0:
        return 0.0
    if spec.f_constant is not None:
        return -spec.f_constant * u
    value, _ = integrate.quad(lambda y: float(spec.f(y)), u, 0.0, epsabs=0.0, epsrel=F_RTOL, limit=200)
    return value


def v_of_u(spec: ProblemSpec, u: float) -> float:
    """v(u) = ∫_u^0 dy/√F(y).

    The endpoint singularity F(y) ~ f(0)|y| is removed with y = −t², which
    turns the integrand into 2t/√F(−t²) with finite limit 2/√f(0) at t = 0.
    """
    u = _check_u(u)
    if u == 0.0:
        return 0.0
    if spec.f_constant is not None:
        return 2.0 * math.sqrt(-u / spec.f_constant)
    limit = 2.0 / math.sqrt(float(spec.f(0.0)))

    def integrand(t: float) -> float:
        if t == 0.0:
            return limit
        return 2.0 * t / math.sqrt(cumulative_F(spec, -t * t))

    value, _ = integrate.quad(integrand, 0.0, math.sqrt(-u), epsabs=0.0, epsrel=V_RTOL, limit=200)
    return value


def cumulative_F_array(spec: ProblemSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(u > 0.0):
        raise DomainViolationError("u must be <= 0")
    if spec.f_constant is not None:
        return -spec.f_constant * u
    return np.fromiter((cumulative_F(spec, x) for x in u.ravel()), float, u.size).reshape(u.shape)


def v_of_u_array(spec: ProblemSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(u > 0.0):
        raise DomainViolationError("u must be <= 0")
    if spec.f_constant is not None:
        return 2.0 * np.sqrt(-u / spec.f_constant)
    return np.fromiter((v_of_u(spec, x) for x in u.ravel()), float, u.size).reshape(u.shape)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔍 HYPOTHESIS CHECKS - Sampled verdicts on opaque coefficients              │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class HypothesisReport:
    """Sampled verdict: ``pass``, ``marginal`` (holds only with equality) or ``fail``."""

    name: str
    verdict: str
    quantities: Dict[str, float]
    clamped: bool = False

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "verdict": self.verdict, "clamped": self.clamped, **self.quantities}


def default_u_samples(lower: float = DEFAULT_U_LOWER, count: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Samples of [lower, 0], geometrically clustered near u = 0."""
    return np.concatenate([lower * np.geomspace(1e-6, 1.0, count - 1)[::-1], [0.0]])


def default_s_samples(spec: ProblemSpec, count: int = DEFAULT_SAMPLES, s_max: float = DEFAULT_S_MAX) -> np.ndarray:
    """Samples of [0, s_limit] clustered near 0 and near s_limit (when finite).

    The nominal grid may touch s_limit itself; pass it through ``clamp_s``.
    """
    if math.isinf(spec.s_limit):
        return np.concatenate([[0.0], np.geomspace(1e-9, s_max, count - 1)])
    half = count // 2
    low = spec.s_limit * np.geomspace(1e-9, 0.5, half)
    high = spec.s_limit * (1.0 - np.geomspace(1e-12, 0.5, count - half - 1))
    return np.unique(np.concatenate([[0.0], low, high, [spec.s_limit]]))


def clamp_s(spec: ProblemSpec, s) -> Tuple[np.ndarray, bool]:
    """Clamp samples to s_limit·(1 − 1e−9); report whether anything moved."""
    s = np.asarray(s, dtype=float)
    if math.isinf(spec.s_limit):
        return s, False
    cap = spec.s_limit * (1.0 - S_CLAMP)
    return np.minimum(s, cap), bool(np.any(s > cap))


def _validate_u_samples(u_samples) -> np.ndarray:
    u = np.asarray(u_samples if u_samples is not None else default_u_samples(), dtype=float)
    if u.size == 0 or not np.all(np.isfinite(u)) or np.any(u > 0.0):
        raise DomainViolationError("u samples must be finite and <= 0")
    return u


def check_theorem1_hypothesis(spec: ProblemSpec, u_samples=None) -> HypothesisReport:
    """f′ > 0 and 2(f′)² − f·f″ ≥ 0 on the samples."""
    u = _validate_u_samples(u_samples)
    f, fp, fpp = spec.f(u), spec.f_prime(u), spec.f_second(u)
    convexity = 2.0 * fp * fp - f * fpp
    tol = 1e-12 * max(1.0, float(np.max(np.abs(f))) ** 2)
    min_fp, min_conv = float(np.min(fp)), float(np.min(convexity))
    if min_conv < -tol or min_fp < -tol:
        verdict = "fail"
    elif min_fp <= tol:
        verdict = "marginal"
    else:
        verdict = "pass"
    worst = int(np.argmin(np.minimum(fp, convexity)))
    quantities = {"min_f_prime": min_fp, "min_convexity": min_conv, "worst_u": float(u[worst])}
    logger.debug("theorem1 hypothesis for %s: %s %s", spec.name, verdict, quantities)
    return HypothesisReport("theorem1_hypothesis", verdict, quantities)


def check_theorem2_hypothesis(spec: ProblemSpec, beta: float, u_samples=None, s_samples=None) -> HypothesisReport:
    """g·f′·G + β·g·f²·G′ ≤ 0 on the product grid of u and s samples."""
    beta = float(beta)
    if not 1.0 <= beta <= 2.0:
        raise DomainViolationError(f"beta must lie in [1, 2], got {beta}")
    u = _validate_u_samples(u_samples)
    s, clamped = clamp_s(spec, s_samples if s_samples is not None else default_s_samples(spec))
    s = _check_s(spec, s)
    g, G, Gp = spec.g(s), big_G(spec, s), big_G_prime(spec, s)
    f, fp = spec.f(u), spec.f_prime(u)
    first = np.outer(fp, g * G)
    second = beta * np.outer(f * f, g * Gp)
    expression = first + second
    scale = max(1.0, float(np.max(np.abs(first))), float(np.max(np.abs(second))))
    tol = 1e-12 * scale
    worst = np.unravel_index(int(np.argmax(expression)), expression.shape)
    max_expr = float(expression[worst])
    if float(np.max(np.abs(expression))) <= tol:
        verdict = "marginal"
    elif max_expr <= tol:
        verdict = "pass"
    else:
        verdict = "fail"
    quantities = {
        "beta": beta,
        "max_expression": max_expr,
        "argmax_u": float(u[worst[0]]),
        "argmax_s": float(s[worst[1]]),
    }
    logger.debug("theorem2 hypothesis for %s: %s %s", spec.name, verdict, quantities)
    return HypothesisReport("theorem2_hypothesis", verdict, quantities, clamped)
