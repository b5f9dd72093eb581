from typing import Dict, List, Tuple
import math

TOOL_VERSION = "1.0.0"

JOINT_NAMES: List[str] = ["q1", "q2", "q3", "q4", "q5", "q6", "q7"]

JOINT_DESCRIPTIONS: Dict[str, str] = {
    "q1": "shoulder abduction(+) / adduction(-)",
    "q2": "shoulder flexion(+) / extension(-)",
    "q3": "shoulder internal(+) / external(-) rotation",
    "q4": "elbow flexion(+) / extension(-)",
    "q5": "forearm pronation(+) / supination(-)",
    "q6": "wrist ulnar(+) / radial(-) deviation",
    "q7": "wrist flexion(+) / extension(-)",
}

# Nominal joint ROM in degrees. Labeled as sourced from the CDC normative joint ROM
# reference and related wrist/forearm literature; the numbers are implementer-supplied
# from that external source and mapped onto this package's sign conventions.
NOMINAL_ROM_DEGREES: Dict[str, Tuple[float, float]] = {
    "q1": (-30.0, 170.0),
    "q2": (-60.0, 165.0),
    "q3": (-90.0, 70.0),
    "q4": (0.0, 145.0),
    "q5": (-80.0, 80.0),
    "q6": (-20.0, 30.0),
    "q7": (-70.0, 75.0),
}

# Link lengths in meters: shoulder->elbow, elbow->wrist, wrist->index fingertip
DEFAULT_UPPER_ARM_LENGTH = 0.30
DEFAULT_FOREARM_LENGTH = 0.25
DEFAULT_HAND_LENGTH = 0.18

# Collision volumes (meters, torso frame)
DEFAULT_TORSO_RADIUS = 0.13
DEFAULT_TORSO_SEGMENT: Tuple[Tuple[float, float, float], Tuple[float, float, float]] = (
    (-0.18, 0.0, -0.55),
    (-0.18, 0.0, -0.05),
)
DEFAULT_HEAD_CENTER: Tuple[float, float, float] = (-0.18, 0.0, 0.25)
DEFAULT_HEAD_RADIUS = 0.10
DEFAULT_UPPER_ARM_RADIUS = 0.045
DEFAULT_FOREARM_RADIUS = 0.04
ADJACENT_LINK_TRIM = 0.20
DEFAULT_COLLISION_PAIRS: List[Tuple[str, str]] = [
    ("forearm", "torso"),
    ("forearm", "head"),
    ("upper_arm", "torso"),
]

# Inverse kinematics
IK_DAMPING = 0.1
IK_MAX_ITERATIONS = 100
IK_JACOBIAN_STEP = 1e-6
IK_DIRECTION_WEIGHT = 0.3  # meters of residual per unit of pointing-axis error
IK_STALL_ITERATIONS = 10
IK_STALL_IMPROVEMENT = 1e-7
DEFAULT_IK_POSITION_TOL = 0.005
DEFAULT_IK_ANGLE_TOL = math.radians(15.0)

# Capability map generation
DEFAULT_VOXEL_EDGE = 0.05
DEFAULT_N_DIR = 32
DEFAULT_WITNESSES_PER_VOXEL = 4
DEFAULT_EXTRA_SEEDS = 2
DEFAULT_LATTICE_STEP_DEG = 15.0
DEFAULT_WRIST_LATTICE_STEP_DEG = 30.0
DEFAULT_MAX_LATTICE_POINTS = 50_000_000
SEED_PASS_CHUNK = 100_000
SCORE_PASS_CHUNK = 64

# Map container
MAP_MAGIC = b"RMAP"
MAP_FORMAT_VERSION = 1

# ROM capture
REQUIRED_JOINTS: List[str] = [
    "neck", "hip_center", "right_shoulder", "right_elbow", "right_wrist", "right_hand_tip",
]
EXERCISE_JOINTS: Dict[str, str] = {
    "shoulder_abduction_adduction": "q1",
    "shoulder_flexion_extension": "q2",
    "shoulder_rotation": "q3",
    "elbow_flexion_extension": "q4",
}
NEUTRAL_EXERCISE = "neutral"
ROM_LOWER_PERCENTILE = 2.0
ROM_UPPER_PERCENTILE = 98.0
MIN_VALID_FRAMES = 10
ROTATION_MIN_ELBOW_FLEXION = math.radians(45.0)

# Synthetic torso landmarks (torso frame, meters)
SYNTHETIC_NECK: Tuple[float, float, float] = (-0.18, 0.0, 0.05)
SYNTHETIC_HIP_CENTER: Tuple[float, float, float] = (-0.18, 0.0, -0.55)

# Exergame planning
DEFAULT_D_MIN = 0.15
DEFAULT_PER_TIER = 10
DEFAULT_HOME: Tuple[float, float, float] = (0.0, 0.25, -0.35)
MIN_SIMULATED_SPEED = 1e-3
INTER_BALLOON_GAP = 1.0
MIN_EVENT_DURATION = 1e-3
