"""
Pre-flight checks for recordings and session logs.

Schema problems are rejected when the pydantic models are built; these checks report
softer issues that still let a run proceed.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional

import numpy as np

from src.core import constants
from src.core.models import SessionLog, SkeletonRecording


class ValidationSeverity(Enum):
    WARNING = "warning"
    ERROR = "error"


class ValidationCategory(Enum):
    COVERAGE = "coverage"
    TIMING = "timing"
    CONSISTENCY = "consistency"


@dataclass
class ValidationResult:
    is_valid: bool
    severity: ValidationSeverity
    category: ValidationCategory
    field_name: str
    message: str
    suggested_fix: Optional[str] = None
    original_value: Any = None


class DataValidator:
    """Checks recordings and session logs before analysis"""

    def __init__(self, frame_rate_tolerance: float = 0.5):
        self.logger = logging.getLogger(__name__)
        self.frame_rate_tolerance = frame_rate_tolerance

    def validate_recording(self, rec: SkeletonRecording) -> List[ValidationResult]:
        results: List[ValidationResult] = []

        for exercise in [constants.NEUTRAL_EXERCISE] + list(constants.EXERCISE_JOINTS):
            if not rec.segments_for(exercise):
                results.append(ValidationResult(
                    is_valid=False, severity=ValidationSeverity.ERROR,
                    category=ValidationCategory.COVERAGE, field_name="segments",
                    message=f"no '{exercise}' segment",
                    suggested_fix="label the exercise range in the header line",
                ))

        for exercise in [constants.NEUTRAL_EXERCISE] + list(constants.EXERCISE_JOINTS):
            indices = rec.frame_indices(exercise)
            lacking = [i for i in indices if any(j not in rec.frames[i].joints for j in constants.REQUIRED_JOINTS)]
            if lacking:
                results.append(ValidationResult(
                    is_valid=False, severity=ValidationSeverity.WARNING,
                    category=ValidationCategory.COVERAGE, field_name=exercise,
                    message=f"{len(lacking)} of {len(indices)} frames lack required joints (first: frame {lacking[0]})",
                    original_value=lacking[0],
                ))

        if len(rec.frames) > 2:
            dt = np.diff([f.t for f in rec.frames])
            median = float(np.median(dt))
            irregular = int(np.sum(np.abs(dt - median) > self.frame_rate_tolerance * median))
            if irregular:
                results.append(ValidationResult(
                    is_valid=False, severity=ValidationSeverity.WARNING,
                    category=ValidationCategory.TIMING, field_name="t",
                    message=f"{irregular} frame gaps deviate from the median interval {median:.4f} s",
                ))

        for r in results:
            log = self.logger.error if r.severity == ValidationSeverity.ERROR else self.logger.warning
            log(f"{r.field_name}: {r.message}")
        return results

    def validate_session_log(self, log: SessionLog) -> List[ValidationResult]:
        results: List[ValidationResult] = []
        last_pop = None
        for i, event in enumerate(log.events):
            if event.t_pop <= event.t_spawn:
                results.append(ValidationResult(
                    is_valid=False, severity=ValidationSeverity.ERROR,
                    category=ValidationCategory.TIMING, field_name=f"events[{i}]",
                    message="pop time is not after spawn time", original_value=(event.t_spawn, event.t_pop),
                ))
                continue
            if last_pop is not None and event.t_spawn < last_pop:
                results.append(ValidationResult(
                    is_valid=False, severity=ValidationSeverity.ERROR,
                    category=ValidationCategory.CONSISTENCY, field_name=f"events[{i}]",
                    message="event overlaps the previous balloon", original_value=event.t_spawn,
                ))
                continue
            last_pop = event.t_pop
        return results

    def get_validation_summary(self, results: List[ValidationResult]) -> dict:
        summary = {"total": len(results), "by_severity": {}, "by_category": {}}
        for r in results:
            summary["by_severity"][r.severity.value] = summary["by_severity"].get(r.severity.value, 0) + 1
            summary["by_category"][r.category.value] = summary["by_category"].get(r.category.value, 0) + 1
        return summary
