"""
ROM assessment from skeleton-tracking recordings.

Angles follow goniometric plane-projection conventions in the torso frame of the arm
model. The torso-down reference is neck -> hip_center in every frame.
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from src.core import constants
from src.core.error_handling import (
    ErrorCollector, IngestionError, InsufficientDataError, InvalidArgumentError,
    MissingSegmentError, NumericDegeneracyError, ProtocolViolationError, RecordingFormatError,
)
from src.core.models import (
    ArmGeometry, ExerciseStats, RomLimits, RomMeasurement, Segment, SkeletonFrame, SkeletonRecording,
)

logger = logging.getLogger(__name__)

_DEGENERATE = 1e-9

EXERCISE_REQUIRED_JOINTS: Dict[str, List[str]] = {
    "shoulder_abduction_adduction": ["neck", "hip_center", "right_shoulder", "right_elbow"],
    "shoulder_flexion_extension": ["neck", "hip_center", "right_shoulder", "right_elbow"],
    "shoulder_rotation": ["right_shoulder", "right_elbow", "right_wrist"],
    "elbow_flexion_extension": ["right_shoulder", "right_elbow", "right_wrist"],
}
LIMB_JOINTS = ["right_shoulder", "right_elbow", "right_wrist", "right_hand_tip"]


def load_recording(path: str) -> SkeletonRecording:
    """Read a JSON Lines recording: a {"segments": [...]} header line, then one frame per line"""
    header: Optional[dict] = None
    frames: List[SkeletonFrame] = []
    with open(path, "r") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise RecordingFormatError(f"{path}:{line_number}: invalid JSON ({e.msg})", line=line_number)
            if not isinstance(record, dict):
                raise RecordingFormatError(f"{path}:{line_number}: expected a JSON object", line=line_number)
            if header is None:
                if "segments" not in record:
                    raise RecordingFormatError(f"{path}:{line_number}: first line must be the segments header")
                header = record
                continue
            try:
                frames.append(SkeletonFrame(**record))
            except (ValidationError, TypeError) as e:
                raise RecordingFormatError(f"{path}:{line_number}: invalid frame ({e})", line=line_number)
    if header is None:
        raise RecordingFormatError(f"{path}: recording is empty")
    try:
        segments = [Segment(**s) for s in header["segments"]]
        recording = SkeletonRecording(frames=frames, segments=segments)
    except (ValidationError, TypeError) as e:
        raise RecordingFormatError(f"{path}: {e}")
    logger.info(f"Loaded {len(frames):,} frames and {len(segments)} segments from {path}")
    return recording


def save_recording(rec: SkeletonRecording, path: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        header = {"segments": [s.model_dump(by_alias=True) for s in rec.segments]}
        f.write(json.dumps(header) + "\n")
        for frame in rec.frames:
            joints = {name: list(position) for name, position in frame.joints.items()}
            f.write(json.dumps({"t": frame.t, "joints": joints}) + "\n")
    logger.info(f"Wrote {len(rec.frames):,} frames to {path}")


def _require(frame: SkeletonFrame, names: List[str], frame_index: Optional[int] = None) -> List[np.ndarray]:
    points = []
    for name in names:
        point = frame.joint(name)
        if point is None:
            where = f"frame {frame_index}" if frame_index is not None else "frame"
            raise IngestionError(f"{where} lacks joint '{name}'", frame=frame_index, joint=name)
        points.append(point)
    return points


def estimate_limb_lengths(rec: SkeletonRecording) -> ArmGeometry:
    """Mean shoulder-elbow, elbow-wrist and wrist-fingertip distances over the neutral segment"""
    indices = rec.frame_indices(constants.NEUTRAL_EXERCISE)
    if not indices:
        raise MissingSegmentError(constants.NEUTRAL_EXERCISE)
    lengths = np.zeros((len(indices), 3))
    for row, i in enumerate(indices):
        shoulder, elbow, wrist, tip = _require(rec.frames[i], LIMB_JOINTS, i)
        lengths[row] = [
            np.linalg.norm(elbow - shoulder),
            np.linalg.norm(wrist - elbow),
            np.linalg.norm(tip - wrist),
        ]
    mean = lengths.mean(axis=0)
    if np.any(mean <= 0):
        raise NumericDegeneracyError("neutral pose has coincident joints, limb length is zero")
    return ArmGeometry(upper_arm_length=float(mean[0]), forearm_length=float(mean[1]), hand_length=float(mean[2]))


def _plane_angle(down: np.ndarray, limb: np.ndarray, a: int, b: int) -> float:
    """Signed angle from down to limb, both projected on the plane of axes a and b"""
    if math.hypot(down[a], down[b]) < _DEGENERATE or math.hypot(limb[a], limb[b]) < _DEGENERATE:
        raise NumericDegeneracyError("reference or limb vector vanishes in the measurement plane")
    cross = down[a] * limb[b] - down[b] * limb[a]
    dot = down[a] * limb[a] + down[b] * limb[b]
    return math.atan2(cross, dot)


def _elbow_flexion(shoulder: np.ndarray, elbow: np.ndarray, wrist: np.ndarray) -> float:
    upper = shoulder - elbow
    fore = wrist - elbow
    if np.linalg.norm(upper) < _DEGENERATE or np.linalg.norm(fore) < _DEGENERATE:
        raise NumericDegeneracyError("elbow coincides with the shoulder or the wrist")
    inner = math.atan2(np.linalg.norm(np.cross(upper, fore)), float(np.dot(upper, fore)))
    return math.pi - inner


def _humeral_rotation(shoulder: np.ndarray, elbow: np.ndarray, wrist: np.ndarray) -> float:
    humerus = elbow - shoulder
    norm = np.linalg.norm(humerus)
    if norm < _DEGENERATE:
        raise NumericDegeneracyError("elbow coincides with the shoulder")
    h = humerus / norm
    fore = wrist - elbow
    fore = fore - np.dot(fore, h) * h
    reference = np.array([0.0, 1.0, 0.0])
    reference = reference - np.dot(reference, h) * h
    if np.linalg.norm(fore) < _DEGENERATE or np.linalg.norm(reference) < _DEGENERATE:
        raise NumericDegeneracyError("forearm or sagittal reference is parallel to the humerus")
    # positive toward internal rotation
    return math.atan2(-float(np.dot(h, np.cross(reference, fore))), float(np.dot(reference, fore)))


def exercise_angle(frame: SkeletonFrame, exercise: str, frame_index: Optional[int] = None) -> float:
    if exercise not in EXERCISE_REQUIRED_JOINTS:
        raise InvalidArgumentError(f"unknown exercise '{exercise}'")
    points = _require(frame, EXERCISE_REQUIRED_JOINTS[exercise], frame_index)

    if exercise in ("shoulder_abduction_adduction", "shoulder_flexion_extension"):
        neck, hip_center, shoulder, elbow = points
        down, limb = hip_center - neck, elbow - shoulder
        if exercise == "shoulder_abduction_adduction":
            return _plane_angle(down, limb, 0, 2)
        return _plane_angle(down, limb, 1, 2)

    shoulder, elbow, wrist = points
    if exercise == "elbow_flexion_extension":
        return _elbow_flexion(shoulder, elbow, wrist)

    flexion = _elbow_flexion(shoulder, elbow, wrist)
    if flexion < constants.ROTATION_MIN_ELBOW_FLEXION:
        raise ProtocolViolationError(
            f"elbow flexion {math.degrees(flexion):.1f} deg is below the rotation protocol minimum",
            frame=frame_index,
        )
    return _humeral_rotation(shoulder, elbow, wrist)


def exercise_series(rec: SkeletonRecording, exercise: str,
                    collector: Optional[ErrorCollector] = None) -> Tuple[np.ndarray, int]:
    """Per-frame angles of an exercise segment and the number of skipped frames"""
    indices = rec.frame_indices(exercise)
    if not indices:
        raise MissingSegmentError(exercise)
    angles = []
    skipped = 0
    for i in indices:
        try:
            angles.append(exercise_angle(rec.frames[i], exercise, i))
        except (NumericDegeneracyError, ProtocolViolationError, IngestionError) as e:
            skipped += 1
            if collector is not None:
                collector.record(e, exercise=exercise, frame=i)
    return np.asarray(angles, dtype=float), skipped


def _clipped_extrema(angles: np.ndarray) -> Tuple[float, float]:
    lo, hi = np.percentile(angles, [constants.ROM_LOWER_PERCENTILE, constants.ROM_UPPER_PERCENTILE])
    return float(lo), float(hi)


def _measure_exercises(rec: SkeletonRecording, collector: ErrorCollector) -> Dict[str, ExerciseStats]:
    stats = {}
    for exercise, joint in constants.EXERCISE_JOINTS.items():
        angles, skipped = exercise_series(rec, exercise, collector)
        if angles.size < constants.MIN_VALID_FRAMES:
            raise InsufficientDataError(exercise, int(angles.size), constants.MIN_VALID_FRAMES)
        lo, hi = _clipped_extrema(angles)
        stats[exercise] = ExerciseStats(
            joint=joint, valid_frames=int(angles.size), skipped_frames=skipped,
            raw_min=float(angles.min()), raw_max=float(angles.max()), lo=lo, hi=hi,
        )
        if skipped:
            logger.warning(f"{exercise}: skipped {skipped} of {skipped + angles.size} frames")
        logger.info(f"{exercise}: [{math.degrees(lo):.1f}, {math.degrees(hi):.1f}] deg from {angles.size} frames")
    return stats


def _limits_from(stats: Dict[str, ExerciseStats], nominal: RomLimits) -> RomLimits:
    intervals = list(nominal.intervals)
    for s in stats.values():
        intervals[constants.JOINT_NAMES.index(s.joint)] = (s.lo, s.hi)
    return RomLimits(intervals=intervals)


def extract_rom(rec: SkeletonRecording, nominal: RomLimits,
                collector: Optional[ErrorCollector] = None) -> RomLimits:
    """Measured [2nd, 98th] percentile limits for q1-q4; q5-q7 come from nominal"""
    stats = _measure_exercises(rec, collector or ErrorCollector("rom_capture"))
    return _limits_from(stats, nominal)


def measure_session(rec: SkeletonRecording, nominal: RomLimits) -> RomMeasurement:
    collector = ErrorCollector("rom_capture")
    geometry = estimate_limb_lengths(rec)
    stats = _measure_exercises(rec, collector)
    return RomMeasurement(
        geometry=geometry,
        rom=_limits_from(stats, nominal),
        exercises=stats,
        error_summary=collector.get_error_summary(),
    )
