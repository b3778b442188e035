#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# ✅ CHECKS - Report sections shared by the radial, field and theorem checks
# ═══════════════════════════════════════════════════════════════════════════════

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional


def clean_number(value: Any) -> Any:
    """JSON-safe scalar: numpy scalars become Python ones, nan/inf become None."""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def clean_mapping(values: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in values.items():
        if isinstance(value, dict):
            out[key] = clean_mapping(value)
        elif isinstance(value, (list, tuple)):
            out[key] = [clean_mapping(v) if isinstance(v, dict) else clean_number(v) for v in value]
        else:
            out[key] = clean_number(value)
    return out


@dataclass(frozen=True)
class CheckReport:
    """One named check: pass flag derived from the stored quantities.

    ``passed`` is None for descriptive sections (census, skipped checks).
    """

    name: str
    passed: Optional[bool]
    quantities: Dict[str, Any] = field(default_factory=dict)
    verdict: str = ""

    @property
    def status(self) -> str:
        if self.verdict:
            return self.verdict
        if self.passed is None:
            return "info"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> Dict[str, Any]:
        return clean_mapping({"name": self.name, "pass": self.passed, "status": self.status, **self.quantities})
