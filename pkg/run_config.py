#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 📝 RUN CONFIG - Run description parsing, validation and dumping
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Flat key = value run files with environment fallbacks
# Functions: RunConfig record, RunConfigLoader with load(), parse(), merge(), dump()
# ═══════════════════════════════════════════════════════════════════════════════

import math
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from config import (
    get_geometry_config,
    get_output_config,
    get_radial_config,
    get_solver_config,
    get_verify_config,
    parse_float_list,
)
from pfunction_lab.errors import ConfigError, LabError
from pfunction_lab.geometry import ConvexDomain, parse_domain
from pfunction_lab.problem import ProblemSpec, builtin_problem, problem_from_record
from pfunction_lab.solver2d import NewtonConfig
from reporting import write_text_atomic

MODES = ("radial", "solve2d", "verify", "bounds", "sweep")


def _env_defaults() -> Dict[str, Any]:
    solver, radial = get_solver_config(), get_radial_config()
    geometry, verify, output = get_geometry_config(), get_verify_config(), get_output_config()
    return {
        "problem": verify["problem"],
        "domain": verify["domain"],
        "h": verify["h"],
        "betas": verify["betas"],
        "schedule": solver["schedule"],
        "newton_tol": solver["tol"],
        "newton_max_iter": solver["max_iter"],
        "linear_rtol": solver["linear_rtol"],
        "fd_eps": solver["fd_eps"],
        "s_margin": solver["s_margin"],
        "shoot_tol": radial["shoot_tol"],
        "radial_steps": radial["radial_steps"],
        "boundary_samples": geometry["boundary_samples"],
        "min_nodes_across": geometry["min_nodes_across"],
        "min_leg": geometry["min_leg"],
        "out_dir": output["out_dir"],
    }


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📦 RUN CONFIG RECORD                                                        │
# └─────────────────────────────────────────────────────────────────────────────┘
@dataclass(frozen=True)
class RunConfig:
    """
    📝 Everything one CLI run needs

    📋 Problem: a built-in name, or ``g``/``f`` descriptors with ``s_limit``
    📋 Domain: ``disk:R=1`` style descriptor, ``R`` for radial runs
    """

    mode: str = "verify"
    problem: str = "euclidean"
    g: Optional[str] = None
    f: Optional[str] = None
    s_limit: float = math.inf
    n: int = 2
    domain: str = "disk:R=1"
    R: float = 1.0
    h: float = 1.0 / 64.0
    h_r: Optional[float] = None
    betas: Tuple[float, ...] = (1.0, 1.5, 2.0)
    schedule: Tuple[float, ...] = (0.25, 0.5, 0.75, 0.9, 1.0)
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    linear_rtol: float = 1e-10
    fd_eps: float = 1e-7
    s_margin: float = 1e-6
    shoot_tol: float = 1e-10
    radial_steps: int = 2000
    boundary_samples: int = 512
    min_nodes_across: float = 10.0
    min_leg: float = 0.05
    alphas: Tuple[float, ...] = (0.1, 0.19245008972987526, 0.25, 0.3849001794597505, 0.5, 1.0, 2.0)
    ladder: Tuple[float, ...] = (1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0)
    existence_map: bool = False
    out_dir: str = "pflab_out"

    # ┌─ Validation ─┐
    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode '{self.mode}' (choose from {', '.join(MODES)})")
        positive = ("h", "R", "newton_tol", "linear_rtol", "fd_eps", "s_margin", "shoot_tol", "min_nodes_across")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.h_r is not None and not self.h_r > 0.0:
            raise ConfigError(f"h_r must be positive, got {self.h_r}")
        if not 0.0 < self.min_leg < 1.0:
            raise ConfigError(f"min_leg must lie in (0, 1), got {self.min_leg}")
        if self.newton_max_iter < 1 or self.radial_steps < 1 or self.boundary_samples < 8:
            raise ConfigError("newton_max_iter, radial_steps and boundary_samples are too small")
        if (self.g is None) != (self.f is None):
            raise ConfigError("a custom problem needs both g and f")
        if self.mode in ("verify", "solve2d", "sweep") and not self.domain:
            raise ConfigError(f"mode '{self.mode}' needs a domain")
        if self.mode in ("verify", "solve2d", "sweep") and self.n != 2:
            raise ConfigError(f"mode '{self.mode}' runs on planar domains and needs n = 2, got n = {self.n}")
        if any(not 1.0 <= b <= 2.0 for b in self.betas):
            raise ConfigError(f"beta values must lie in [1, 2], got {self.betas}")
        if self.mode == "sweep" and len(self.ladder) < 2:
            raise ConfigError("sweep needs at least two grid spacings")
        self.problem_spec()
        if self.mode in ("verify", "solve2d", "sweep"):
            self.domain_spec()
        return self

    # ┌─ Builders ─┐
    def problem_spec(self) -> ProblemSpec:
        try:
            if self.g is None:
                return builtin_problem(self.problem, self.n)
            record = {"name": self.problem, "g": self.g, "f": self.f, "s_limit": self.s_limit, "n": self.n}
            return problem_from_record(record)
        except ConfigError:
            raise
        except LabError as e:
            raise ConfigError(f"invalid problem: {e}") from e

    def domain_spec(self) -> ConvexDomain:
        try:
            return parse_domain(self.domain)
        except ConfigError:
            raise
        except LabError as e:
            raise ConfigError(f"invalid domain '{self.domain}': {e}") from e

    def newton_config(self) -> NewtonConfig:
        return NewtonConfig(
            tol=self.newton_tol,
            max_iter=self.newton_max_iter,
            linear_rtol=self.linear_rtol,
            fd_eps=self.fd_eps,
            s_margin=self.s_margin,
        )

    def radial_step(self, R: Optional[float] = None) -> float:
        R = self.R if R is None else R
        return self.h_r if self.h_r is not None else R / self.radial_steps

    def to_record(self) -> Dict[str, Any]:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔍 RUN CONFIG LOADER - Regex parsing with fallbacks                         │
# └─────────────────────────────────────────────────────────────────────────────┘
def _optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "yes", "1", "on"):
        return True
    if value in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_text(text: str) -> Optional[str]:
    return None if text.strip().lower() in ("", "none") else text.strip()


class RunConfigLoader:
    """
    🔍 Reads and writes flat run files

    📋 Features:
        📝 ``key = value`` or ``key: value`` lines, ``#`` comments
        🔄 Environment-driven fallbacks for keys the file omits
        💾 Dumps that re-read to an equal RunConfig
    """

    def __init__(self):
        # ┌─ Line Patterns ─┐
        self.patterns = {
            "comment": re.compile(r"^\s*(#.*)?$"),
            "entry": re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(.*?)\s*$"),
        }

        # ┌─ Field Converters ─┐
        self.converters: Dict[str, Callable[[str], Any]] = {
            "mode": str.strip,
            "problem": str.strip,
            "g": _optional_text,
            "f": _optional_text,
            "s_limit": float,
            "n": int,
            "domain": str.strip,
            "R": float,
            "h": float,
            "h_r": _optional_float,
            "betas": parse_float_list,
            "schedule": parse_float_list,
            "newton_tol": float,
            "newton_max_iter": int,
            "linear_rtol": float,
            "fd_eps": float,
            "s_margin": float,
            "shoot_tol": float,
            "radial_steps": int,
            "boundary_samples": int,
            "min_nodes_across": float,
            "min_leg": float,
            "alphas": parse_float_list,
            "ladder": parse_float_list,
            "existence_map": _bool,
            "out_dir": str.strip,
        }
        missing = {f.name for f in fields(RunConfig)} - set(self.converters)
        assert not missing, f"no converter for {missing}"

    def defaults(self) -> RunConfig:
        """Built-in defaults overridden by PFLAB_* environment variables."""
        return RunConfig(**_env_defaults())

    def parse(self, text: str, base: Optional[RunConfig] = None) -> RunConfig:
        values: Dict[str, Any] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            if self.patterns["comment"].match(line):
                continue
            match = self.patterns["entry"].match(line)
            if not match:
                raise ConfigError(f"line {number}: expected 'key = value', got {line.strip()!r}")
            key, raw = match.group(1), match.group(2)
            if key not in self.converters:
                raise ConfigError(f"line {number}: unknown key '{key}'")
            try:
                values[key] = self.converters[key](raw)
            except ValueError as e:
                raise ConfigError(f"line {number}: bad value for '{key}': {e}") from e
        return self.merge(base or self.defaults(), values)

    def load(self, path: Path, base: Optional[RunConfig] = None) -> RunConfig:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        return self.parse(text, base)

    def merge(self, config: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
        """Apply non-None overrides (flags win over files)."""
        clean = {k: (tuple(v) if isinstance(v, list) else v) for k, v in overrides.items() if v is not None}
        unknown = set(clean) - set(self.converters)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return replace(config, **clean)

    def dumps(self, config: RunConfig) -> str:
        lines = ["# pflab run configuration"]
        for f in fields(RunConfig):
            value = getattr(config, f.name)
            if isinstance(value, tuple):
                text = ",".join(repr(float(v)) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            elif value is None:
                text = "none"
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    def dump(self, config: RunConfig, path: Path) -> Path:
        return write_text_atomic(Path(path), self.dumps(config))
