import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core import constants
from src.core.models import ArmGeometry, Segment, SkeletonFrame, SkeletonRecording
from src.core.variability import TrackingNoise
from src.kinematics.arm_model import joint_positions_batch

logger = logging.getLogger(__name__)

# Programmed sweeps in degrees, wide enough to look like a healthy assessment
DEFAULT_SWEEPS_DEGREES: Dict[str, Tuple[float, float]] = {
    "shoulder_abduction_adduction": (10.0, 120.0),
    "shoulder_flexion_extension": (-30.0, 140.0),
    "shoulder_rotation": (-60.0, 50.0),
    "elbow_flexion_extension": (5.0, 135.0),
}
ROTATION_ELBOW_FLEXION_DEG = 90.0


class SkeletonGenerator:
    """
    Synthesizes ROM assessment recordings by posing the arm model.

    Each exercise is a cosine sweep between its programmed extrema, which dwells near
    the extrema the way a patient holds an end position. The shoulder rotation segment
    keeps the elbow flexed at 90 degrees.
    """

    def __init__(
        self,
        geom: ArmGeometry,
        fps: float = 30.0,
        frames_per_segment: int = 200,
        neutral_frames: int = 60,
        cycles: int = 2,
        noise: Optional[TrackingNoise] = None,
        seed: int = 0,
    ):
        self.geom = geom
        self.fps = fps
        self.frames_per_segment = frames_per_segment
        self.neutral_frames = neutral_frames
        self.cycles = cycles
        self.noise = noise or TrackingNoise()
        self.seed = seed
        self.logger = logging.getLogger(__name__)

    def _sweep(self, lo: float, hi: float) -> np.ndarray:
        phase = 2.0 * math.pi * self.cycles * np.arange(self.frames_per_segment) / self.frames_per_segment
        return 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(phase)

    def _segment_configs(self, exercise: str, lo_deg: float, hi_deg: float, rng: np.random.Generator) -> np.ndarray:
        joint = constants.JOINT_NAMES.index(constants.EXERCISE_JOINTS[exercise])
        Q = np.zeros((self.frames_per_segment, 7))
        Q[:, joint] = np.radians(self._sweep(lo_deg, hi_deg))
        if exercise == "shoulder_rotation":
            Q[:, 3] = math.radians(ROTATION_ELBOW_FLEXION_DEG)
        outliers = self.noise.outlier_frames(self.frames_per_segment, rng)
        Q[outliers, joint] = math.radians(self.noise.outlier_angle_deg)
        return Q

    def generate(self, sweeps: Optional[Dict[str, Tuple[float, float]]] = None) -> SkeletonRecording:
        sweeps = sweeps or DEFAULT_SWEEPS_DEGREES
        rng = np.random.default_rng(self.seed)

        blocks: List[np.ndarray] = [np.zeros((self.neutral_frames, 7))]
        segments = [Segment(exercise=constants.NEUTRAL_EXERCISE, start=0, stop=self.neutral_frames)]
        cursor = self.neutral_frames
        for exercise in constants.EXERCISE_JOINTS:
            if exercise not in sweeps:
                continue
            lo_deg, hi_deg = sweeps[exercise]
            blocks.append(self._segment_configs(exercise, lo_deg, hi_deg, rng))
            segments.append(Segment(exercise=exercise, start=cursor, stop=cursor + self.frames_per_segment))
            cursor += self.frames_per_segment

        Q = np.vstack(blocks)
        points = joint_positions_batch(Q, self.geom)
        n = Q.shape[0]
        joints = {
            "neck": np.broadcast_to(np.asarray(constants.SYNTHETIC_NECK), (n, 3)),
            "hip_center": np.broadcast_to(np.asarray(constants.SYNTHETIC_HIP_CENTER), (n, 3)),
            "right_shoulder": points.shoulder,
            "right_elbow": points.elbow,
            "right_wrist": points.wrist,
            "right_hand_tip": points.tip,
        }
        joints = {name: self.noise.jitter(positions, rng) for name, positions in joints.items()}

        frames = [
            SkeletonFrame(
                t=i / self.fps,
                joints={name: tuple(float(c) for c in positions[i]) for name, positions in joints.items()},
            )
            for i in range(n)
        ]
        self.logger.info(f"Synthesized {n} frames over {len(segments)} segments")
        return SkeletonRecording(frames=frames, segments=segments)


def synthesize_recording(
    geom: ArmGeometry,
    sweeps: Optional[Dict[str, Tuple[float, float]]] = None,
    fps: float = 30.0,
    noise_sd: float = 0.0,
    outlier_rate: float = 0.0,
    outlier_angle: float = 170.0,
    seed: int = 0,
    frames_per_segment: int = 200,
) -> SkeletonRecording:
    noise = TrackingNoise(position_sd=noise_sd, outlier_rate=outlier_rate, outlier_angle_deg=outlier_angle)
    generator = SkeletonGenerator(geom, fps=fps, frames_per_segment=frames_per_segment, noise=noise, seed=seed)
    return generator.generate(sweeps)
