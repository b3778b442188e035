#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# ⚙️ CONFIG - Configuration Management for the P-Function Lab
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: Centralized defaults for solvers, geometry, checks and outputs
# Functions: get_solver_config, get_radial_config, get_geometry_config,
#            get_verify_config, get_output_config, display_config
# Note: values come from PFLAB_* environment variables (.env honored)
# ═══════════════════════════════════════════════════════════════════════════════

import os
from typing import Any, Dict, Tuple

from dotenv import load_dotenv

load_dotenv()

# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ ⚙️ DEFAULT CONFIGURATION - Base settings for every run                     │
# └─────────────────────────────────────────────────────────────────────────────┘

# ┌─ Newton Solver Defaults ─┐
DEFAULT_NEWTON_TOL = 1e-10
DEFAULT_NEWTON_MAX_ITER = 50
DEFAULT_LINEAR_RTOL = 1e-10
DEFAULT_FD_EPS = 1e-7
DEFAULT_S_MARGIN = 1e-6
DEFAULT_SCHEDULE = "0.25,0.5,0.75,0.9,1.0"

# ┌─ Radial Solver Defaults ─┐
DEFAULT_SHOOT_TOL = 1e-10
DEFAULT_RADIAL_STEPS = 2000

# ┌─ Geometry Defaults ─┐
DEFAULT_BOUNDARY_SAMPLES = 512
DEFAULT_MIN_NODES_ACROSS = 10.0
DEFAULT_MIN_LEG = 0.05

# ┌─ Verification Defaults ─┐
DEFAULT_BETAS = "1,1.5,2"
DEFAULT_PROBLEM = "euclidean"
DEFAULT_DOMAIN = "disk:R=1"
DEFAULT_H = 1.0 / 64.0

# ┌─ Output Defaults ─┐
DEFAULT_OUT_DIR = "pflab_out"


def parse_float_list(text: str) -> Tuple[float, ...]:
    """'0.25, 0.5,1' -> (0.25, 0.5, 1.0)"""
    return tuple(float(item) for item in str(text).split(",") if item.strip())


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔧 SOLVER CONFIGURATION - Newton and continuation                          │
# └─────────────────────────────────────────────────────────────────────────────┘
def get_solver_config() -> Dict[str, Any]:
    """
    🔧 Newton solver settings with environment variable overrides

    📋 Environment Variables:
        🎯 PFLAB_NEWTON_TOL: max-norm residual target
        🔁 PFLAB_NEWTON_MAX_ITER: Newton steps allowed per load step
        📉 PFLAB_LINEAR_RTOL: relative residual of each linear solve
        📈 PFLAB_SCHEDULE: comma-separated load factors ending at 1
    """
    return {
        "tol": float(os.getenv("PFLAB_NEWTON_TOL", DEFAULT_NEWTON_TOL)),
        "max_iter": int(os.getenv("PFLAB_NEWTON_MAX_ITER", DEFAULT_NEWTON_MAX_ITER)),
        "linear_rtol": float(os.getenv("PFLAB_LINEAR_RTOL", DEFAULT_LINEAR_RTOL)),
        "fd_eps": float(os.getenv("PFLAB_FD_EPS", DEFAULT_FD_EPS)),
        "s_margin": float(os.getenv("PFLAB_S_MARGIN", DEFAULT_S_MARGIN)),
        "schedule": parse_float_list(os.getenv("PFLAB_SCHEDULE", DEFAULT_SCHEDULE)),
    }


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🎯 RADIAL CONFIGURATION - Shooting settings                                │
# └─────────────────────────────────────────────────────────────────────────────┘
def get_radial_config() -> Dict[str, Any]:
    return {
        "shoot_tol": float(os.getenv("PFLAB_SHOOT_TOL", DEFAULT_SHOOT_TOL)),
        "radial_steps": int(os.getenv("PFLAB_RADIAL_STEPS", DEFAULT_RADIAL_STEPS)),
    }


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📐 GEOMETRY CONFIGURATION - Grid and boundary sampling                     │
# └─────────────────────────────────────────────────────────────────────────────┘
def get_geometry_config() -> Dict[str, Any]:
    return {
        "boundary_samples": int(os.getenv("PFLAB_BOUNDARY_SAMPLES", DEFAULT_BOUNDARY_SAMPLES)),
        "min_nodes_across": float(os.getenv("PFLAB_MIN_NODES_ACROSS", DEFAULT_MIN_NODES_ACROSS)),
        "min_leg": float(os.getenv("PFLAB_MIN_LEG", DEFAULT_MIN_LEG)),
    }


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🏁 VERIFY CONFIGURATION - Problem, domain and β list                       │
# └─────────────────────────────────────────────────────────────────────────────┘
def get_verify_config() -> Dict[str, Any]:
    return {
        "problem": os.getenv("PFLAB_PROBLEM", DEFAULT_PROBLEM),
        "domain": os.getenv("PFLAB_DOMAIN", DEFAULT_DOMAIN),
        "h": float(os.getenv("PFLAB_H", DEFAULT_H)),
        "betas": parse_float_list(os.getenv("PFLAB_BETAS", DEFAULT_BETAS)),
    }


def get_output_config() -> Dict[str, Any]:
    return {
        "out_dir": os.getenv("PFLAB_OUT_DIR", DEFAULT_OUT_DIR),
        "verbose": os.getenv("PFLAB_VERBOSE", "false").lower() == "true",
    }


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📋 CONFIGURATION DISPLAY - Debug and info functions                       │
# └─────────────────────────────────────────────────────────────────────────────┘
def display_config():
    """
    📋 Display current configuration for debugging
    """
    sections = [
        ("🔧 Solver Configuration:", get_solver_config()),
        ("🎯 Radial Configuration:", get_radial_config()),
        ("📐 Geometry Configuration:", get_geometry_config()),
        ("🏁 Verify Configuration:", get_verify_config()),
        ("💾 Output Configuration:", get_output_config()),
    ]
    for i, (title, values) in enumerate(sections):
        print(("\n" if i else "") + title)
        print("═══════════════════════════════════════")
        for key, value in values.items():
            print(f"  {key}: {value}")


if __name__ == "__main__":
    display_config()
