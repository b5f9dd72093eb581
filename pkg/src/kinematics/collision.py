"""Capsule and sphere self-collision checks for the arm chain"""

from typing import Dict, Tuple

import numpy as np

from src.core.models import ArmGeometry, CollisionModel, as_joint_array
from src.kinematics.arm_model import JointInput, joint_positions_batch

_EPS = 1e-12


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def segment_distance(p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """
    Distance between segments [p0, p1] and [q0, q1], broadcast over leading axes.

    Zero-length segments are valid, so a sphere is a segment with equal endpoints.
    """
    p0, p1, q0, q1 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (p0, p1, q0, q1)))
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)

    a_ok = a > _EPS
    e_ok = e > _EPS
    a_safe = np.where(a_ok, a, 1.0)
    e_safe = np.where(e_ok, e, 1.0)
    denom = a * e - b * b
    denom_ok = denom > _EPS * np.maximum(a * e, _EPS)
    denom_safe = np.where(denom_ok, denom, 1.0)

    # closest point on the infinite lines, clamped to the first segment
    s = np.where(denom_ok, np.clip((b * f - c * e) / denom_safe, 0.0, 1.0), 0.0)
    t = (b * s + f) / e_safe
    s = np.where(t < 0.0, np.clip(-c / a_safe, 0.0, 1.0),
                 np.where(t > 1.0, np.clip((b - c) / a_safe, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)

    # degenerate segments
    s = np.where(~e_ok, np.clip(-c / a_safe, 0.0, 1.0), s)
    t = np.where(~e_ok, 0.0, t)
    t = np.where(~a_ok, np.clip(f / e_safe, 0.0, 1.0), t)
    s = np.where(~a_ok, 0.0, s)
    t = np.where(~a_ok & ~e_ok, 0.0, t)

    closest_p = p0 + s[..., None] * d1
    closest_q = q0 + t[..., None] * d2
    return np.linalg.norm(closest_p - closest_q, axis=-1)


def _link_segments(Q: np.ndarray, geom: ArmGeometry, cm: CollisionModel) -> Dict[str, Tuple[np.ndarray, np.ndarray, float]]:
    points = joint_positions_batch(Q, geom)
    n = Q.shape[0]
    torso_a = np.broadcast_to(np.asarray(cm.torso_start), (n, 3))
    torso_b = np.broadcast_to(np.asarray(cm.torso_end), (n, 3))
    head = np.broadcast_to(np.asarray(cm.head_center), (n, 3))
    # adjacent-link allowance: the upper arm capsule starts below the shoulder joint
    upper_start = points.shoulder + cm.adjacent_trim * (points.elbow - points.shoulder)
    return {
        "torso": (torso_a, torso_b, cm.torso_radius),
        "head": (head, head, cm.head_radius),
        "upper_arm": (upper_start, points.elbow, cm.upper_arm_radius),
        "forearm": (points.elbow, points.tip, cm.forearm_radius),
    }


def self_collides_batch(Q: np.ndarray, geom: ArmGeometry, cm: CollisionModel) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    links = _link_segments(Q, geom, cm)
    collides = np.zeros(Q.shape[0], dtype=bool)
    for first, second in cm.pairs:
        a0, a1, ra = links[first]
        b0, b1, rb = links[second]
        collides |= segment_distance(a0, a1, b0, b1) < ra + rb
    return collides


def self_collides(q: JointInput, geom: ArmGeometry, cm: CollisionModel) -> bool:
    return bool(self_collides_batch(as_joint_array(q)[None, :], geom, cm)[0])
