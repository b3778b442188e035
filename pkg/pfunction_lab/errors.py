#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# ❌ ERRORS - Exception hierarchy for the P-Function Lab
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: One root (LabError) so the CLI can map failures to exit codes
# Note: existence failures and Newton non-convergence are results, not errors
# ═══════════════════════════════════════════════════════════════════════════════

from typing import Any, Dict, Optional, Tuple


class LabError(Exception):
    """Base class for every error raised by the lab."""

    def to_dict(self) -> Dict[str, Any]:
        """Failure record in the same shape as the solver failure artifacts."""
        record: Dict[str, Any] = {"kind": "error", "error": type(self).__name__, "message": str(self)}
        record.update({k: v for k, v in vars(self).items() if v is not None})
        return record


class DomainViolationError(LabError, ValueError):
    """Argument outside the admissible range of an operation."""


class ConvexityError(LabError):
    """Boundary curvature is not strictly positive."""

    def __init__(self, message: str, t: Optional[float] = None, kappa: Optional[float] = None):
        super().__init__(message)
        self.t = t
        self.kappa = kappa


class GridError(LabError):
    """Clipped grid cannot be built (too coarse, empty interior)."""


class FieldError(LabError):
    """Derived-field computation impossible on the given field."""


class SpacelikeViolationError(LabError):
    """|∇u|² reached the admissible limit s_limit."""

    def __init__(
        self,
        message: str,
        r: Optional[float] = None,
        location: Optional[Tuple[float, float]] = None,
        s: Optional[float] = None,
    ):
        super().__init__(message)
        self.r = r
        self.location = location
        self.s = s


class ShootingError(LabError):
    """Shooting map misbehaved (monotonicity broken inside the bracket)."""


class ValidityRegionError(LabError):
    """Closed-form bound evaluated outside its validity region."""

    def __init__(self, message: str, alpha: float, alpha_limit: float):
        super().__init__(message)
        self.alpha = alpha
        self.alpha_limit = alpha_limit


class ConfigError(LabError):
    """Run configuration missing, malformed or inconsistent."""
