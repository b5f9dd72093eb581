"""
Damped-least-squares inverse kinematics with a central-difference Jacobian.

The target is a fingertip position plus a pointing direction; roll about the pointing
axis is free. Rows of a batch never interact, so a row's answer does not depend on what
else was solved alongside it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core import constants
from src.core.error_handling import InvalidArgumentError
from src.core.models import ArmGeometry, CollisionModel, JointAngles, Pose, RomLimits, as_joint_array
from src.kinematics.arm_model import JointInput, forward_kinematics_batch
from src.kinematics.collision import self_collides_batch

logger = logging.getLogger(__name__)


@dataclass
class IKBatchResult:
    q: np.ndarray          # (N, 7) final iterate, equal to the solution where success
    success: np.ndarray    # (N,) bool
    iterations: np.ndarray  # (N,) iterations used


def _residual(Q: np.ndarray, target_pos: np.ndarray, target_dir: np.ndarray, geom: ArmGeometry) -> np.ndarray:
    pos, axis = forward_kinematics_batch(Q, geom)
    return np.concatenate([pos - target_pos, constants.IK_DIRECTION_WEIGHT * (axis - target_dir)], axis=1)


def _jacobian(Q: np.ndarray, target_pos: np.ndarray, target_dir: np.ndarray, geom: ArmGeometry) -> np.ndarray:
    h = constants.IK_JACOBIAN_STEP
    J = np.empty((Q.shape[0], 6, 7))
    for j in range(7):
        step = np.zeros(7)
        step[j] = h
        forward = _residual(Q + step, target_pos, target_dir, geom)
        backward = _residual(Q - step, target_pos, target_dir, geom)
        J[:, :, j] = (forward - backward) / (2.0 * h)
    return J


def solve_ik_batch(
    target_pos: np.ndarray,
    target_dir: np.ndarray,
    seeds: np.ndarray,
    rom: RomLimits,
    geom: ArmGeometry,
    cm: Optional[CollisionModel],
    tol: float,
    ang_tol: float,
    max_iterations: int = constants.IK_MAX_ITERATIONS,
    damping: float = constants.IK_DAMPING,
) -> IKBatchResult:
    """Solve N independent IK problems; cm=None skips the self-collision test"""
    if tol <= 0 or ang_tol <= 0:
        raise InvalidArgumentError("IK tolerances must be positive")
    target_pos = np.atleast_2d(np.asarray(target_pos, dtype=float))
    target_dir = np.atleast_2d(np.asarray(target_dir, dtype=float))
    target_dir = target_dir / np.linalg.norm(target_dir, axis=1, keepdims=True)
    q = rom.clamp(np.atleast_2d(np.asarray(seeds, dtype=float)))
    n = q.shape[0]
    lo, hi = rom.lo, rom.hi
    cos_tol = math.cos(min(ang_tol, math.pi))
    damping_sq = damping * damping

    success = np.zeros(n, dtype=bool)
    iterations = np.zeros(n, dtype=np.int64)
    # targets beyond full reach can never be met
    active = np.linalg.norm(target_pos, axis=1) <= geom.total_reach + tol
    best_error = np.full(n, np.inf)
    stall = np.zeros(n, dtype=np.int64)

    for iteration in range(max_iterations + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        qa = q[idx]
        tp, td = target_pos[idx], target_dir[idx]
        pos, axis = forward_kinematics_batch(qa, geom)
        distance = np.linalg.norm(pos - tp, axis=1)
        cosine = np.sum(axis * td, axis=1)
        met = (distance <= tol) & (cosine >= cos_tol)
        if cm is not None and met.any():
            met[met] = ~self_collides_batch(qa[met], geom, cm)

        done = idx[met]
        success[done] = True
        active[done] = False
        iterations[idx] = iteration
        if iteration == max_iterations:
            break

        residual = np.concatenate([pos - tp, constants.IK_DIRECTION_WEIGHT * (axis - td)], axis=1)
        error = np.linalg.norm(residual, axis=1)
        improved = error < best_error[idx] - constants.IK_STALL_IMPROVEMENT
        best_error[idx] = np.where(improved, error, best_error[idx])
        stall[idx] = np.where(improved, 0, stall[idx] + 1)
        stalled = stall[idx] >= constants.IK_STALL_ITERATIONS
        active[idx[stalled & ~met]] = False

        step_rows = ~met & ~stalled
        if not step_rows.any():
            continue
        rows = idx[step_rows]
        Qs, r = qa[step_rows], residual[step_rows]
        J = _jacobian(Qs, tp[step_rows], td[step_rows], geom)
        Jt = np.transpose(J, (0, 2, 1))
        JJt = J @ Jt + damping_sq * np.eye(6)
        dq = -(Jt @ np.linalg.solve(JJt, r[:, :, None]))[:, :, 0]
        q[rows] = np.clip(Qs + dq, lo, hi)

    return IKBatchResult(q=q, success=success, iterations=iterations)


def solve_ik(
    target: Pose,
    seed: JointInput,
    rom: RomLimits,
    geom: ArmGeometry,
    cm: Optional[CollisionModel],
    tol: float = constants.DEFAULT_IK_POSITION_TOL,
    ang_tol: float = constants.DEFAULT_IK_ANGLE_TOL,
) -> Optional[JointAngles]:
    """
    Joint angles placing the fingertip within tol of target.position with its pointing
    axis within ang_tol of target.pointing_axis, or None when the iteration does not
    converge inside the limits without self-collision.
    """
    result = solve_ik_batch(
        np.asarray(target.position)[None, :],
        np.asarray(target.pointing_axis)[None, :],
        as_joint_array(seed)[None, :],
        rom, geom, cm, tol, ang_tol,
    )
    if not result.success[0]:
        logger.debug(f"IK did not converge for target {target.position}")
        return None
    return JointAngles.from_array(result.q[0])
