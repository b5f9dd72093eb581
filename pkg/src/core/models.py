import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core import constants
from src.core.error_handling import InvalidArgumentError

Vector3 = Tuple[float, float, float]
Interval = Tuple[float, float]

_PI_SLACK = 1e-12


class Condition(str, Enum):
    UNRESTRICTED = "unrestricted"
    PARTIALLY_RESTRICTED = "partially_restricted"
    RESTRICTED = "restricted"


class Difficulty(str, Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"


DIFFICULTY_ORDER: List[Difficulty] = [Difficulty.EASY, Difficulty.MEDIUM, Difficulty.HARD]
CONDITION_ORDER: List[Condition] = [
    Condition.UNRESTRICTED, Condition.PARTIALLY_RESTRICTED, Condition.RESTRICTED,
]


def as_joint_array(q: Union["JointAngles", Sequence[float], np.ndarray]) -> np.ndarray:
    """Coerce joint angles to a finite float array of shape (7,)"""
    if isinstance(q, JointAngles):
        return q.as_array()
    arr = np.asarray(q, dtype=float)
    if arr.shape != (7,):
        raise InvalidArgumentError(f"expected 7 joint values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("joint values must be finite")
    return arr


class JointAngles(BaseModel):
    """One arm configuration, radians"""
    model_config = ConfigDict(frozen=True)

    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0
    q4: float = 0.0
    q5: float = 0.0
    q6: float = 0.0
    q7: float = 0.0

    @field_validator("q1", "q2", "q3", "q4", "q5", "q6", "q7")
    @classmethod
    def check_range(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("joint value must be finite")
        if abs(v) > math.pi + _PI_SLACK:
            raise ValueError(f"joint value {v} outside [-pi, pi]")
        return v

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.q3, self.q4, self.q5, self.q6, self.q7])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "JointAngles":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (7,):
            raise InvalidArgumentError(f"expected 7 joint values, got shape {arr.shape}")
        return cls(**{name: float(v) for name, v in zip(constants.JOINT_NAMES, arr)})

    @classmethod
    def from_degrees(cls, **degrees: float) -> "JointAngles":
        return cls(**{name: math.radians(v) for name, v in degrees.items()})


class ArmGeometry(BaseModel):
    model_config = ConfigDict(frozen=True)

    upper_arm_length: float = Field(default=constants.DEFAULT_UPPER_ARM_LENGTH, gt=0)
    forearm_length: float = Field(default=constants.DEFAULT_FOREARM_LENGTH, gt=0)
    hand_length: float = Field(default=constants.DEFAULT_HAND_LENGTH, gt=0)

    @property
    def total_reach(self) -> float:
        return self.upper_arm_length + self.forearm_length + self.hand_length

    @property
    def distal_length(self) -> float:
        """Elbow to fingertip"""
        return self.forearm_length + self.hand_length


class RomLimits(BaseModel):
    """Closed per-joint intervals [lo, hi] in radians, q1..q7"""
    model_config = ConfigDict(frozen=True)

    intervals: List[Interval] = Field(min_length=7, max_length=7)

    @field_validator("intervals")
    @classmethod
    def check_intervals(cls, v: List[Interval]) -> List[Interval]:
        for i, (lo, hi) in enumerate(v):
            name = constants.JOINT_NAMES[i]
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{name} interval must be finite")
            if lo > hi:
                raise ValueError(f"{name} interval has lo {lo} > hi {hi}")
            if lo < -math.pi - _PI_SLACK or hi > math.pi + _PI_SLACK:
                raise ValueError(f"{name} interval [{lo}, {hi}] outside [-pi, pi]")
        return v

    @property
    def lo(self) -> np.ndarray:
        return np.array([iv[0] for iv in self.intervals])

    @property
    def hi(self) -> np.ndarray:
        return np.array([iv[1] for iv in self.intervals])

    @classmethod
    def from_degrees(cls, degrees: Union[Dict[str, Sequence[float]], Sequence[Sequence[float]]]) -> "RomLimits":
        if isinstance(degrees, dict):
            missing = [n for n in constants.JOINT_NAMES if n not in degrees]
            if missing:
                raise InvalidArgumentError(f"ROM document lacks joints {missing}")
            rows = [degrees[n] for n in constants.JOINT_NAMES]
        else:
            rows = list(degrees)
        return cls(intervals=[(math.radians(lo), math.radians(hi)) for lo, hi in rows])

    @classmethod
    def nominal(cls) -> "RomLimits":
        return cls.from_degrees(constants.NOMINAL_ROM_DEGREES)

    @classmethod
    def fixed(cls, q: Sequence[float]) -> "RomLimits":
        """Degenerate limits pinning every joint to one value"""
        return cls(intervals=[(float(v), float(v)) for v in q])

    def to_degrees(self) -> Dict[str, List[float]]:
        return {
            name: [math.degrees(lo), math.degrees(hi)]
            for name, (lo, hi) in zip(constants.JOINT_NAMES, self.intervals)
        }

    def with_interval(self, joint: Union[int, str], lo: float, hi: float) -> "RomLimits":
        index = constants.JOINT_NAMES.index(joint) if isinstance(joint, str) else joint
        intervals = list(self.intervals)
        intervals[index] = (lo, hi)
        return RomLimits(intervals=intervals)

    def contains(self, other: "RomLimits") -> bool:
        """True when every interval of other lies inside the matching interval of self"""
        return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lo, self.hi)

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)


class Pose(BaseModel):
    """TCP position (meters, torso frame) and unit pointing axis"""
    model_config = ConfigDict(frozen=True)

    position: Vector3
    pointing_axis: Vector3

    @field_validator("pointing_axis")
    @classmethod
    def check_unit(cls, v: Vector3) -> Vector3:
        norm = math.sqrt(sum(c * c for c in v))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"pointing_axis norm {norm} is not 1")
        return v

    @classmethod
    def toward(cls, position: Sequence[float], direction: Sequence[float]) -> "Pose":
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return cls(position=tuple(float(c) for c in position), pointing_axis=tuple(float(c) for c in d))


class CollisionModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    torso_start: Vector3 = constants.DEFAULT_TORSO_SEGMENT[0]
    torso_end: Vector3 = constants.DEFAULT_TORSO_SEGMENT[1]
    torso_radius: float = Field(default=constants.DEFAULT_TORSO_RADIUS, gt=0)
    head_center: Vector3 = constants.DEFAULT_HEAD_CENTER
    head_radius: float = Field(default=constants.DEFAULT_HEAD_RADIUS, gt=0)
    upper_arm_radius: float = Field(default=constants.DEFAULT_UPPER_ARM_RADIUS, gt=0)
    forearm_radius: float = Field(default=constants.DEFAULT_FOREARM_RADIUS, gt=0)
    adjacent_trim: float = Field(default=constants.ADJACENT_LINK_TRIM, ge=0, lt=1)
    pairs: List[Tuple[str, str]] = Field(default_factory=lambda: list(constants.DEFAULT_COLLISION_PAIRS))

    @field_validator("pairs")
    @classmethod
    def check_pairs(cls, v: List[Tuple[str, str]]) -> List[Tuple[str, str]]:
        allowed = {("forearm", "torso"), ("forearm", "head"), ("upper_arm", "torso"), ("upper_arm", "head")}
        for pair in v:
            if tuple(pair) not in allowed:
                raise ValueError(f"unsupported collision pair {pair}")
        return v


class GenerationParams(BaseModel):
    """Capability-map generation parameters, angles in radians"""
    model_config = ConfigDict(frozen=True)

    voxel_edge: float = Field(default=constants.DEFAULT_VOXEL_EDGE, gt=0)
    lattice_step: float = Field(default=math.radians(constants.DEFAULT_LATTICE_STEP_DEG), gt=0)
    wrist_lattice_step: float = Field(default=math.radians(constants.DEFAULT_WRIST_LATTICE_STEP_DEG), gt=0)
    n_dir: int = Field(default=constants.DEFAULT_N_DIR, ge=1, le=65535)
    position_tol: Optional[float] = Field(default=None, gt=0)
    angle_tol: float = Field(default=constants.DEFAULT_IK_ANGLE_TOL, gt=0)
    witnesses_per_voxel: int = Field(default=constants.DEFAULT_WITNESSES_PER_VOXEL, ge=1)
    extra_seeds: int = Field(default=constants.DEFAULT_EXTRA_SEEDS, ge=0)
    collisions: bool = True
    max_lattice_points: int = Field(default=constants.DEFAULT_MAX_LATTICE_POINTS, ge=1)
    seed: int = Field(default=0, ge=0)

    def joint_steps(self) -> np.ndarray:
        return np.array([self.lattice_step] * 4 + [self.wrist_lattice_step] * 3)

    def score_position_tol(self) -> float:
        """Acceptance radius of the score pass; defaults to the voxel half diagonal"""
        if self.position_tol is not None:
            return self.position_tol
        return self.voxel_edge * math.sqrt(3.0) / 2.0


class VoxelGrid(BaseModel):
    """Axis-aligned grid; voxel (i, j, k) spans [origin + i*edge, origin + (i+1)*edge) per axis"""
    model_config = ConfigDict(frozen=True)

    origin: Vector3
    voxel_edge: float = Field(gt=0)
    dims: Tuple[int, int, int]

    @field_validator("dims")
    @classmethod
    def check_dims(cls, v: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(d < 1 for d in v):
            raise ValueError("grid dims must all be >= 1")
        if v[0] * v[1] * v[2] > 2 ** 32 - 1:
            raise ValueError("grid too large for 32-bit voxel indices")
        return v

    @classmethod
    def for_geometry(cls, geom: ArmGeometry, voxel_edge: float) -> "VoxelGrid":
        half_span = geom.total_reach + voxel_edge
        count = int(math.ceil(2.0 * half_span / voxel_edge - 1e-9))
        return cls(origin=(-half_span,) * 3, voxel_edge=voxel_edge, dims=(count, count, count))

    @property
    def size(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def index_of(self, points: np.ndarray) -> np.ndarray:
        """Flat voxel index per point, -1 outside the grid"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cell = np.floor((pts - np.asarray(self.origin)) / self.voxel_edge).astype(np.int64)
        dims = np.asarray(self.dims)
        inside = np.all((cell >= 0) & (cell < dims), axis=1)
        flat = (cell[:, 0] * dims[1] + cell[:, 1]) * dims[2] + cell[:, 2]
        return np.where(inside, flat, -1)

    def cells_of(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        k = idx % self.dims[2]
        j = (idx // self.dims[2]) % self.dims[1]
        i = idx // (self.dims[1] * self.dims[2])
        return np.stack([i, j, k], axis=-1)

    def center_of(self, indices: np.ndarray) -> np.ndarray:
        cells = self.cells_of(indices)
        return np.asarray(self.origin) + (cells + 0.5) * self.voxel_edge

    def corners_of(self, indices: np.ndarray) -> np.ndarray:
        """(N, 8, 3) corner coordinates of each voxel"""
        cells = self.cells_of(np.atleast_1d(indices))
        offsets = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)])
        corner_cells = cells[:, None, :] + offsets[None, :, :]
        return np.asarray(self.origin) + corner_cells * self.voxel_edge


class MapMetadata(BaseModel):
    """Everything needed to regenerate a capability map"""
    model_config = ConfigDict(frozen=True)

    user_id: str = "anonymous"
    condition: str = Condition.UNRESTRICTED.value
    rom: RomLimits
    geometry: ArmGeometry
    collision_model: CollisionModel
    params: GenerationParams
    n_dir: int = Field(ge=1)
    seed: int = Field(ge=0)
    kind: str = "capability"
    stats: Dict[str, int] = Field(default_factory=dict)


class MapComparison(BaseModel):
    volume_reduction_pct: float
    dexterity_reduction_pct: float
    common_voxel_count: int = Field(ge=0)
    user: str = ""
    condition: str = ""

    @model_validator(mode="after")
    def check_finite(self) -> "MapComparison":
        if not (math.isfinite(self.volume_reduction_pct) and math.isfinite(self.dexterity_reduction_pct)):
            raise ValueError("reductions must be finite")
        return self


class UserModel(BaseModel):
    """Parametric reaching speed: base_speed + score_gain * voxel_score + noise"""
    base_speed: float = Field(gt=0)
    score_gain: float = Field(default=0.0, ge=0)
    noise_sd: float = Field(default=0.0, ge=0)


class BalloonEvent(BaseModel):
    position: Vector3
    difficulty: Difficulty
    t_spawn: float
    t_pop: float


class SessionLog(BaseModel):
    user_id: str
    condition: Condition
    home: Vector3
    events: List[BalloonEvent] = Field(default_factory=list)
    provenance: Dict[str, object] = Field(default_factory=dict)


class Spawn(BaseModel):
    position: Vector3
    difficulty: Difficulty
    voxel_index: int
    score: float


class SpawnPlan(BaseModel):
    spawns: List[Spawn]
    home: Vector3
    seed: int
    per_tier: int = Field(ge=1)
    d_min: float = Field(ge=0)


class Segment(BaseModel):
    """Half-open frame range [from, to) labeled with an exercise id"""
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    exercise: str
    start: int = Field(alias="from", ge=0)
    stop: int = Field(alias="to", ge=0)

    @field_validator("exercise")
    @classmethod
    def check_exercise(cls, v: str) -> str:
        known = [constants.NEUTRAL_EXERCISE] + list(constants.EXERCISE_JOINTS)
        if v not in known:
            raise ValueError(f"unknown exercise '{v}', expected one of {known}")
        return v

    @model_validator(mode="after")
    def check_range(self) -> "Segment":
        if self.stop <= self.start:
            raise ValueError(f"segment '{self.exercise}' is empty: from {self.start} to {self.stop}")
        return self


class SkeletonFrame(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    joints: Dict[str, Vector3]

    @field_validator("t")
    @classmethod
    def check_time(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("timestamp must be finite")
        return v

    @field_validator("joints")
    @classmethod
    def check_joints(cls, v: Dict[str, Vector3]) -> Dict[str, Vector3]:
        for name, position in v.items():
            if not all(math.isfinite(c) for c in position):
                raise ValueError(f"joint '{name}' has non-finite coordinates")
        return v

    def joint(self, name: str) -> Optional[np.ndarray]:
        position = self.joints.get(name)
        return None if position is None else np.asarray(position, dtype=float)


class SkeletonRecording(BaseModel):
    frames: List[SkeletonFrame]
    segments: List[Segment] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_recording(self) -> "SkeletonRecording":
        times = [f.t for f in self.frames]
        for i in range(1, len(times)):
            if times[i] <= times[i - 1]:
                raise ValueError(f"timestamps must strictly increase (frame {i})")
        ordered = sorted(self.segments, key=lambda s: s.start)
        for seg in ordered:
            if seg.stop > len(self.frames):
                raise ValueError(f"segment '{seg.exercise}' ends at {seg.stop}, recording has {len(self.frames)} frames")
        for first, second in zip(ordered, ordered[1:]):
            if second.start < first.stop:
                raise ValueError(f"segments '{first.exercise}' and '{second.exercise}' overlap")
        return self

    def segments_for(self, exercise: str) -> List[Segment]:
        return [s for s in self.segments if s.exercise == exercise]

    def frame_indices(self, exercise: str) -> List[int]:
        return [i for s in self.segments_for(exercise) for i in range(s.start, s.stop)]


class ExerciseStats(BaseModel):
    joint: str
    valid_frames: int
    skipped_frames: int
    raw_min: float
    raw_max: float
    lo: float
    hi: float


class RomMeasurement(BaseModel):
    """What one assessment recording yields: limb lengths, limits and per-exercise detail"""
    geometry: ArmGeometry
    rom: RomLimits
    exercises: Dict[str, ExerciseStats]
    error_summary: Dict[str, object] = Field(default_factory=dict)


class SpeedCell(BaseModel):
    user_id: str
    condition: Condition
    difficulty: Difficulty
    mean_speed: float
    sd_speed: float
    count: int = Field(ge=1)


class InvalidEvent(BaseModel):
    user_id: str
    condition: Condition
    event_index: int
    reason: str


class SpeedReport(BaseModel):
    cells: List[SpeedCell] = Field(default_factory=list)
    invalid_events: List[InvalidEvent] = Field(default_factory=list)

    def cell(self, user_id: str, condition: Condition, difficulty: Difficulty) -> Optional[SpeedCell]:
        for c in self.cells:
            if c.user_id == user_id and c.condition == condition and c.difficulty == difficulty:
                return c
        return None

    @property
    def users(self) -> List[str]:
        seen: List[str] = []
        for c in self.cells:
            if c.user_id not in seen:
                seen.append(c.user_id)
        return seen

    @property
    def total_count(self) -> int:
        return sum(c.count for c in self.cells)
