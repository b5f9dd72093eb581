import math

import numpy as np
import pytest
import yaml

from src.core.capability_map import CapabilityMap
from src.core.models import (
    ArmGeometry, CollisionModel, GenerationParams, MapMetadata, RomLimits, VoxelGrid,
)


@pytest.fixture
def geometry():
    return ArmGeometry(upper_arm_length=0.30, forearm_length=0.25, hand_length=0.18)


@pytest.fixture
def coarse_params():
    return GenerationParams(
        voxel_edge=0.15,
        lattice_step=math.radians(45.0),
        wrist_lattice_step=math.radians(90.0),
        n_dir=4,
        angle_tol=math.radians(20.0),
        witnesses_per_voxel=1,
        extra_seeds=1,
        seed=3,
    )


@pytest.fixture
def map_factory(geometry):
    """Builds maps on a unit-origin grid from explicit indices and score numerators"""

    def build(indices, numerators, n_dir=10, dims=(10, 10, 10), edge=0.1,
              condition="unrestricted", user_id="u1"):
        grid = VoxelGrid(origin=(0.0, 0.0, 0.0), voxel_edge=edge, dims=dims)
        metadata = MapMetadata(
            user_id=user_id, condition=condition, rom=RomLimits.nominal(), geometry=geometry,
            collision_model=CollisionModel(), params=GenerationParams(voxel_edge=edge, n_dir=n_dir),
            n_dir=n_dir, seed=0,
        )
        return CapabilityMap(
            grid=grid, metadata=metadata,
            indices=np.asarray(indices, dtype=np.uint32),
            numerators=np.asarray(numerators, dtype=np.uint16),
        )

    return build


@pytest.fixture
def coarse_config(tmp_path):
    """Run config small enough for a full CLI pipeline inside a test"""
    document = {
        "user_id": "u1",
        "seed": 5,
        "restrictions": {
            "partially_restricted": {"q1": [-10.0, 90.0], "q2": [-30.0, 90.0]},
            "restricted": {"q1": [0.0, 45.0], "q2": [0.0, 45.0], "q4": [20.0, 90.0]},
        },
        "generation": {
            "voxel_edge": 0.15,
            "lattice_step_deg": 45.0,
            "wrist_lattice_step_deg": 90.0,
            "n_dir": 4,
            "angle_tol_deg": 20.0,
            "witnesses_per_voxel": 1,
            "extra_seeds": 1,
        },
        "regions": {"per_tier": 2, "d_min": 0.05, "home": [0.0, 0.25, -0.35]},
        "user_model": {"base_speed": 0.6, "score_gain": 0.2, "noise_sd": 0.0},
        "paths": {"output_dir": str(tmp_path / "out")},
    }
    path = tmp_path / "config.yaml"
    with open(path, "w") as f:
        yaml.safe_dump(document, f)
    return str(path)
