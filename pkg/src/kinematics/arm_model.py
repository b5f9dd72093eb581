"""
Seven-DoF right-arm kinematic chain.

Torso frame: origin at the right glenohumeral joint, X to the user's right, Y anterior,
Z superior. The zero pose hangs the arm straight down with the palm facing medially, so
every link points along -Z of its parent frame.

Joint axes, each applied in the frame produced by the previous joints:
    q1  rotation about -Y (shoulder abduction lifts the arm laterally)
    q2  rotation about +X (shoulder flexion lifts the arm forward)
    q3  rotation about +Z (humeral internal rotation)
    q4  rotation about +X (elbow flexion)
    q5  rotation about +Z (forearm pronation)
    q6  rotation about -X (ulnar deviation)
    q7  rotation about +Y (wrist flexion toward the palm)
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from src.core.models import ArmGeometry, JointAngles, Pose, RomLimits, as_joint_array
from src.core.error_handling import InvalidArgumentError

JointInput = Union[JointAngles, Sequence[float], np.ndarray]


def _rot_x(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    one, zero = np.ones_like(theta), np.zeros_like(theta)
    return np.stack([
        np.stack([one, zero, zero], axis=-1),
        np.stack([zero, c, -s], axis=-1),
        np.stack([zero, s, c], axis=-1),
    ], axis=-2)


def _rot_y(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    one, zero = np.ones_like(theta), np.zeros_like(theta)
    return np.stack([
        np.stack([c, zero, s], axis=-1),
        np.stack([zero, one, zero], axis=-1),
        np.stack([-s, zero, c], axis=-1),
    ], axis=-2)


def _rot_z(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    one, zero = np.ones_like(theta), np.zeros_like(theta)
    return np.stack([
        np.stack([c, -s, zero], axis=-1),
        np.stack([s, c, zero], axis=-1),
        np.stack([zero, zero, one], axis=-1),
    ], axis=-2)


@dataclass(frozen=True)
class ArmPoints:
    """Joint centers of the chain, arrays of shape (N, 3)"""
    shoulder: np.ndarray
    elbow: np.ndarray
    wrist: np.ndarray
    tip: np.ndarray
    pointing: np.ndarray


def _as_batch(Q: np.ndarray) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != 7:
        raise InvalidArgumentError(f"expected an (N, 7) joint array, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise InvalidArgumentError("joint values must be finite")
    return Q


def joint_positions_batch(Q: np.ndarray, geom: ArmGeometry) -> ArmPoints:
    Q = _as_batch(Q)
    shoulder_rot = _rot_y(-Q[:, 0]) @ _rot_x(Q[:, 1]) @ _rot_z(Q[:, 2])
    forearm_rot = shoulder_rot @ _rot_x(Q[:, 3]) @ _rot_z(Q[:, 4])
    hand_rot = forearm_rot @ _rot_x(-Q[:, 5]) @ _rot_y(Q[:, 6])

    # each link lies along -Z of its own frame
    shoulder = np.zeros((Q.shape[0], 3))
    elbow = shoulder - geom.upper_arm_length * shoulder_rot[:, :, 2]
    wrist = elbow - geom.forearm_length * forearm_rot[:, :, 2]
    pointing = -hand_rot[:, :, 2]
    tip = wrist + geom.hand_length * pointing
    return ArmPoints(shoulder=shoulder, elbow=elbow, wrist=wrist, tip=tip, pointing=pointing)


def forward_kinematics_batch(Q: np.ndarray, geom: ArmGeometry):
    """Fingertip positions and pointing axes, each (N, 3)"""
    points = joint_positions_batch(Q, geom)
    return points.tip, points.pointing


def joint_positions(q: JointInput, geom: ArmGeometry) -> ArmPoints:
    points = joint_positions_batch(as_joint_array(q)[None, :], geom)
    return ArmPoints(
        shoulder=points.shoulder[0], elbow=points.elbow[0], wrist=points.wrist[0],
        tip=points.tip[0], pointing=points.pointing[0],
    )


def forward_kinematics(q: JointInput, geom: ArmGeometry) -> Pose:
    """TCP pose at the index fingertip in the torso frame"""
    tip, pointing = forward_kinematics_batch(as_joint_array(q)[None, :], geom)
    axis = pointing[0] / np.linalg.norm(pointing[0])
    return Pose(position=tuple(float(c) for c in tip[0]), pointing_axis=tuple(float(c) for c in axis))


def within_limits(q: JointInput, rom: RomLimits) -> bool:
    arr = as_joint_array(q)
    return bool(np.all((rom.lo <= arr) & (arr <= rom.hi)))


def within_limits_batch(Q: np.ndarray, rom: RomLimits) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    return np.all((rom.lo <= Q) & (Q <= rom.hi), axis=1)
