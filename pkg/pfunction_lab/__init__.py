"""P-Function Lab: numerical checks of P-function bounds for div(g(|∇u|²)∇u) = f(u)G(|∇u|²)."""

from .errors import (
    ConfigError,
    ConvexityError,
    DomainViolationError,
    FieldError,
    GridError,
    LabError,
    ShootingError,
    SpacelikeViolationError,
    ValidityRegionError,
)
from .geometry import ConvexDomain, blob, disk, ellipse, make_grid, parse_domain
from .problem import ProblemSpec, builtin_problem, problem_from_record
from .radial import ExistenceFailure, RadialSolution, shoot
from .solver2d import Field2D, NewtonConfig, SolverFailure, newton_solve
from .verify import VerificationReport, run_verification, verify_radial

__version__ = "0.1.0"
