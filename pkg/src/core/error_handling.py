"""
Error hierarchy and non-fatal error collection for capability-map processing
"""

import logging
import time
from typing import Optional, Dict, Any, List
from dataclasses import dataclass, field
from enum import Enum


class ErrorSeverity(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    INPUT = "input"
    INGESTION = "ingestion"
    KINEMATICS = "kinematics"
    GENERATION = "generation"
    STORAGE = "storage"
    ANALYSIS = "analysis"
    CONFIGURATION = "configuration"


class ReachmapError(Exception):
    """Base class for every domain error raised by the package"""

    category: ErrorCategory = ErrorCategory.INPUT
    severity: ErrorSeverity = ErrorSeverity.HIGH

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context

    @property
    def error_class(self) -> str:
        return type(self).__name__


class InvalidArgumentError(ReachmapError, ValueError):
    category = ErrorCategory.INPUT


class ConfigurationError(ReachmapError):
    category = ErrorCategory.CONFIGURATION


class NumericDegeneracyError(ReachmapError):
    category = ErrorCategory.KINEMATICS
    severity = ErrorSeverity.MEDIUM


class RecordingFormatError(ReachmapError):
    category = ErrorCategory.INGESTION


class IngestionError(ReachmapError):
    """A frame lacks a joint the requested computation needs"""
    category = ErrorCategory.INGESTION

    def __init__(self, message: str, frame: Optional[int] = None, joint: Optional[str] = None):
        super().__init__(message, frame=frame, joint=joint)
        self.frame = frame
        self.joint = joint


class MissingSegmentError(IngestionError):
    def __init__(self, exercise: str):
        ReachmapError.__init__(self, f"recording has no '{exercise}' segment", exercise=exercise)
        self.exercise = exercise
        self.frame = None
        self.joint = None


class ProtocolViolationError(ReachmapError):
    """A frame does not meet the measurement protocol of its exercise and is skipped"""
    category = ErrorCategory.INGESTION
    severity = ErrorSeverity.LOW


class InsufficientDataError(ReachmapError):
    category = ErrorCategory.INGESTION

    def __init__(self, exercise: str, valid_frames: int, required: int):
        super().__init__(
            f"segment '{exercise}' has {valid_frames} valid frames, at least {required} required",
            exercise=exercise, valid_frames=valid_frames, required=required,
        )
        self.exercise = exercise
        self.valid_frames = valid_frames


class LatticeTooLargeError(ReachmapError):
    category = ErrorCategory.GENERATION

    def __init__(self, lattice_size: int, cap: int):
        super().__init__(
            f"joint lattice has {lattice_size:,} points, cap is {cap:,}; coarsen the lattice step",
            lattice_size=lattice_size, cap=cap,
        )
        self.lattice_size = lattice_size
        self.cap = cap


class MapVersionError(ReachmapError):
    category = ErrorCategory.STORAGE


class MapCorruptionError(ReachmapError):
    category = ErrorCategory.STORAGE


class MapChecksumError(ReachmapError):
    category = ErrorCategory.STORAGE


class IncompatibleMapsError(ReachmapError):
    category = ErrorCategory.ANALYSIS


class UndefinedBaselineError(ReachmapError):
    category = ErrorCategory.ANALYSIS


class NoCommonRegionError(ReachmapError):
    category = ErrorCategory.ANALYSIS


class EmptySelectionError(ReachmapError):
    category = ErrorCategory.ANALYSIS


class DegenerateHullError(ReachmapError):
    category = ErrorCategory.ANALYSIS

    def __init__(self, rank: int):
        super().__init__(f"selected points span rank {rank}, a 3D hull needs rank 3", rank=rank)
        self.rank = rank


class InsufficientRegionError(ReachmapError):
    category = ErrorCategory.ANALYSIS

    def __init__(self, tier: str, eligible: int, requested: int):
        super().__init__(
            f"tier '{tier}' has {eligible} eligible voxels, {requested} requested",
            tier=tier, eligible=eligible, requested=requested,
        )
        self.tier = tier
        self.eligible = eligible


class InvalidEventError(ReachmapError):
    category = ErrorCategory.INPUT
    severity = ErrorSeverity.MEDIUM


@dataclass
class ErrorContext:
    """Context information for a recorded, non-fatal error"""
    error_id: str
    timestamp: float
    severity: ErrorSeverity
    category: ErrorCategory
    error_class: str
    message: str
    context_data: Dict[str, Any] = field(default_factory=dict)


class ErrorCollector:
    """Collects errors that are reported rather than raised (skipped frames, bad events)"""

    def __init__(self, name: str = "reachmap"):
        self.error_log: List[ErrorContext] = []
        self.logger = logging.getLogger(f"{__name__}.{name}")

    def record(self, error: ReachmapError, **context_data: Any) -> ErrorContext:
        """Record a domain error and log it at WARNING"""
        data = dict(error.context)
        data.update(context_data)
        error_context = ErrorContext(
            error_id=f"err_{len(self.error_log)}",
            timestamp=time.time(),
            severity=error.severity,
            category=error.category,
            error_class=error.error_class,
            message=str(error),
            context_data=data,
        )
        self.error_log.append(error_context)
        self.logger.warning(f"{error_context.error_class}: {error_context.message}")
        return error_context

    def __len__(self) -> int:
        return len(self.error_log)

    def get_error_summary(self) -> Dict[str, Any]:
        """Get summary of all errors encountered"""
        if not self.error_log:
            return {"total_errors": 0, "by_severity": {}, "by_category": {}, "by_class": {}}

        summary: Dict[str, Any] = {
            "total_errors": len(self.error_log),
            "by_severity": {},
            "by_category": {},
            "by_class": {},
        }
        for error in self.error_log:
            severity_key = error.severity.value
            summary["by_severity"][severity_key] = summary["by_severity"].get(severity_key, 0) + 1
            category_key = error.category.value
            summary["by_category"][category_key] = summary["by_category"].get(category_key, 0) + 1
            summary["by_class"][error.error_class] = summary["by_class"].get(error.error_class, 0) + 1
        return summary
