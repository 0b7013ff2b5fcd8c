"""
Check records and run reports
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from emcheck.integrate import RadialProfile

logger = logging.getLogger(__name__)


@dataclass
class CheckRecord:
    """Outcome of one named check"""
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    runtime: float = 0.0
    inconclusive: bool = False
    detail: str = ""

    def to_dict(self, include_runtime: bool = False) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
            "inconclusive": bool(self.inconclusive),
            "detail": self.detail,
        }
        if include_runtime:
            data["runtime"] = round(self.runtime, 6)
        return data


@dataclass
class Report:
    kind: str
    records: List[CheckRecord] = field(default_factory=list)
    profiles: Dict[str, RadialProfile] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    @property
    def failures(self) -> List[CheckRecord]:
        return [record for record in self.records if not record.passed]

    def summary(self, include_runtime: bool = False) -> Dict[str, Any]:
        profiles = {
            name: {
                "space": profile.space_label,
                "exponent": float(profile.exponent),
                "Lambda": float(profile.Lambda),
                "radii": int(profile.radii.size),
                "violations": len(profile.violations),
                "inconclusive": bool(profile.inconclusive),
                "output": self.outputs.get(name, ""),
            }
            for name, profile in self.profiles.items()
        }
        return {
            "kind": self.kind,
            "passed": self.passed,
            "records": [record.to_dict(include_runtime) for record in self.records],
            "profiles": profiles,
        }


def residual_record(name: str, residuals, tolerance: float, started: float, detail: str = "") -> CheckRecord:
    """Record for a residual array that passes when its maximum is within tolerance"""
    worst = float(np.max(np.abs(np.asarray(residuals, dtype=float)), initial=0.0))
    passed = bool(np.isfinite(worst) and worst <= tolerance)
    record = CheckRecord(
        name=name,
        max_residual=worst,
        tolerance=tolerance,
        passed=passed,
        runtime=time.perf_counter() - started,
        detail=detail,
    )
    level = logging.DEBUG if passed else logging.WARNING
    logger.log(level, f"{name}: max residual {worst:.3e} (tolerance {tolerance:.1e}) {'ok' if passed else 'FAILED'}")
    return record
