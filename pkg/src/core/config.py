"""Run configuration and process settings"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core import constants
from src.core.error_handling import ConfigurationError
from src.core.models import (
    ArmGeometry, CollisionModel, Condition, GenerationParams, RomLimits, UserModel,
)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Settings(BaseSettings):
    """Process-level settings read from REACHMAP_* environment variables"""
    model_config = SettingsConfigDict(env_prefix="REACHMAP_")

    log: str = "INFO"
    workers: int = Field(default=1, ge=1)


def configure_logging(level: str = "INFO", verbose: bool = False):
    resolved = logging.DEBUG if verbose else getattr(logging, level.upper(), None)
    if not isinstance(resolved, int):
        raise ConfigurationError(f"unknown log level '{level}'")
    logging.basicConfig(level=resolved, format=LOG_FORMAT, force=True)


def read_document(path: str) -> Dict[str, Any]:
    """Load a YAML or JSON document, chosen by file extension"""
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    with open(file_path, 'r') as f:
        try:
            if file_path.suffix.lower() in ('.yaml', '.yml'):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot parse {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a mapping at top level")
    return data


class GenerationConfig(BaseModel):
    """Generation parameters as written in config files (angles in degrees)"""
    model_config = ConfigDict(extra="forbid")

    voxel_edge: float = Field(default=constants.DEFAULT_VOXEL_EDGE, gt=0)
    lattice_step_deg: float = Field(default=constants.DEFAULT_LATTICE_STEP_DEG, gt=0)
    wrist_lattice_step_deg: float = Field(default=constants.DEFAULT_WRIST_LATTICE_STEP_DEG, gt=0)
    n_dir: int = Field(default=constants.DEFAULT_N_DIR, ge=1, le=65535)
    position_tol: Optional[float] = Field(default=None, gt=0)
    angle_tol_deg: float = Field(default=math.degrees(constants.DEFAULT_IK_ANGLE_TOL), gt=0)
    witnesses_per_voxel: int = Field(default=constants.DEFAULT_WITNESSES_PER_VOXEL, ge=1)
    extra_seeds: int = Field(default=constants.DEFAULT_EXTRA_SEEDS, ge=0)
    collisions: bool = True
    max_lattice_points: int = Field(default=constants.DEFAULT_MAX_LATTICE_POINTS, ge=1)

    def to_params(self, seed: int) -> GenerationParams:
        return GenerationParams(
            voxel_edge=self.voxel_edge,
            lattice_step=math.radians(self.lattice_step_deg),
            wrist_lattice_step=math.radians(self.wrist_lattice_step_deg),
            n_dir=self.n_dir,
            position_tol=self.position_tol,
            angle_tol=math.radians(self.angle_tol_deg),
            witnesses_per_voxel=self.witnesses_per_voxel,
            extra_seeds=self.extra_seeds,
            collisions=self.collisions,
            max_lattice_points=self.max_lattice_points,
            seed=seed,
        )


class RegionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    per_tier: int = Field(default=constants.DEFAULT_PER_TIER, ge=1)
    d_min: float = Field(default=constants.DEFAULT_D_MIN, ge=0)
    home: Tuple[float, float, float] = constants.DEFAULT_HOME
    band: Tuple[float, float] = (0.0, 1.0)

    @field_validator("band")
    @classmethod
    def check_band(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not (0.0 <= v[0] <= v[1] <= 1.0):
            raise ValueError(f"band {v} must satisfy 0 <= a <= b <= 1")
        return v


class PathsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    recording: Optional[str] = None
    output_dir: str = "output"


class RunConfig(BaseModel):
    """Everything a CLI run reads from its config file"""
    model_config = ConfigDict(extra="forbid")

    user_id: str = "anonymous"
    condition: Condition = Condition.UNRESTRICTED
    seed: int = Field(default=0, ge=0)
    geometry: ArmGeometry = Field(default_factory=ArmGeometry)
    rom_file: Optional[str] = None
    rom_degrees: Optional[Dict[str, List[float]]] = None
    restrictions: Dict[Condition, Dict[str, List[float]]] = Field(default_factory=dict)
    collision: CollisionModel = Field(default_factory=CollisionModel)
    generation: GenerationConfig = Field(default_factory=GenerationConfig)
    regions: RegionConfig = Field(default_factory=RegionConfig)
    user_model: UserModel = Field(default_factory=lambda: UserModel(base_speed=0.6, score_gain=0.2, noise_sd=0.0))
    paths: PathsConfig = Field(default_factory=PathsConfig)
    source_path: Optional[str] = Field(default=None, exclude=True)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        data = read_document(path)
        try:
            config = cls(**data)
        except ValidationError as e:
            raise ConfigurationError(f"invalid config {path}: {e.error_count()} error(s); {e.errors()[0]['msg']}")
        config.source_path = str(path)
        if config.rom_file and not Path(config.rom_file).is_absolute():
            config.rom_file = str(Path(path).parent / config.rom_file)
        return config

    def params(self) -> GenerationParams:
        return self.generation.to_params(self.seed)

    def nominal_rom(self) -> RomLimits:
        """ROM limits from rom_degrees, rom_file or the built-in nominal table, in that order"""
        if self.rom_degrees is not None:
            return RomLimits.from_degrees(self.rom_degrees)
        if self.rom_file:
            return load_rom_file(self.rom_file)
        return RomLimits.nominal()

    def rom_for(self, condition: Condition) -> RomLimits:
        """Nominal ROM with the condition's per-joint overrides applied (degrees in the file)"""
        rom = self.nominal_rom()
        for joint, (lo, hi) in self.restrictions.get(condition, {}).items():
            rom = rom.with_interval(joint, math.radians(lo), math.radians(hi))
        return rom


def load_rom_file(path: str) -> RomLimits:
    """
    Read ROM limits from a YAML/JSON document.

    Accepts either {"joints": {"q1": [lo, hi], ...}} in degrees, the layout the rom
    command writes with "rom_degrees", or a bare {"q1": [lo, hi], ...} mapping.
    """
    data = read_document(path)
    for key in ("joints", "rom_degrees"):
        if key in data:
            data = data[key]
            break
    try:
        return RomLimits.from_degrees({k: v for k, v in data.items() if k in constants.JOINT_NAMES})
    except (ValidationError, ValueError) as e:
        raise ConfigurationError(f"invalid ROM document {path}: {e}")


def parse_band(text: Optional[str]) -> Optional[Tuple[float, float]]:
    if text is None:
        return None
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"band '{text}' must be two numbers 'a,b'")
    if len(parts) != 2:
        raise ConfigurationError(f"band '{text}' must be two numbers 'a,b'")
    return parts[0], parts[1]


def parse_point(values: Sequence[float]) -> Tuple[float, float, float]:
    if len(values) != 3:
        raise ConfigurationError("a point needs three coordinates")
    return float(values[0]), float(values[1]), float(values[2])
