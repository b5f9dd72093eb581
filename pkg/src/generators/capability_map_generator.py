"""
Capability map generation.

Two passes over the workspace:

1. Seed pass: enumerate a joint lattice anchored at 0 rad and mark the voxel holding the
   fingertip of every collision-free configuration. The first W collision-free configurations
   landing in each occupied voxel are kept as IK witnesses.
2. Score pass: for every occupied voxel, try to reach the voxel center along each of
   N_dir Fibonacci-sphere directions, seeding IK from the witnesses and then from a few
   random in-limit configurations. The score is the fraction of directions reached.

Work is split into chunks whose boundaries depend only on the problem size, and chunk
results are merged in chunk order, so the worker count never changes the output.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core import constants
from src.core.capability_map import CapabilityMap
from src.core.error_handling import InvalidArgumentError, LatticeTooLargeError
from src.core.models import (
    ArmGeometry, CollisionModel, Condition, GenerationParams, MapMetadata, RomLimits, VoxelGrid,
)
from src.core.performance import ChunkExecutor, chunk_ranges, estimate_array_memory_mb
from src.kinematics.arm_model import forward_kinematics_batch
from src.kinematics.collision import self_collides_batch
from src.kinematics.ik import solve_ik_batch

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def fibonacci_directions(n: int) -> np.ndarray:
    """n unit vectors spread over the sphere, z_i = 1 - (2i + 1)/n with golden-angle azimuth"""
    if n < 1:
        raise InvalidArgumentError("direction count must be >= 1")
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = GOLDEN_ANGLE * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def lattice_axes(rom: RomLimits, params: GenerationParams) -> List[np.ndarray]:
    """Per-joint lattice values k * step lying inside the joint interval"""
    axes = []
    for (lo, hi), step in zip(rom.intervals, params.joint_steps()):
        k_lo = math.ceil(lo / step - 1e-9)
        k_hi = math.floor(hi / step + 1e-9)
        values = np.arange(k_lo, k_hi + 1, dtype=np.float64) * step
        axes.append(np.clip(values, lo, hi))
    return axes


def lattice_size(axes: List[np.ndarray]) -> int:
    size = 1
    for axis in axes:
        size *= int(axis.size)
    return size


@dataclass
class SeedPassResult:
    """Occupied voxels (sorted) and their witness configurations"""
    occupied: np.ndarray          # uint32 (V,)
    witness_offsets: np.ndarray   # int64 (V + 1,), witnesses of voxel v are rows offsets[v]:offsets[v+1]
    witnesses: np.ndarray         # float64 (M, 7)
    stats: Dict[str, int] = field(default_factory=dict)

    def witnesses_of(self, position: int) -> np.ndarray:
        return self.witnesses[self.witness_offsets[position]:self.witness_offsets[position + 1]]


@dataclass
class _SeedChunkTask:
    axes: List[np.ndarray]
    geom: ArmGeometry
    cm: Optional[CollisionModel]
    grid: VoxelGrid
    witnesses_per_voxel: int
    start: int
    stop: int


@dataclass
class _ScoreChunkTask:
    voxels: np.ndarray
    witnesses: List[np.ndarray]
    directions: np.ndarray
    grid: VoxelGrid
    geom: ArmGeometry
    rom: RomLimits
    cm: Optional[CollisionModel]
    position_tol: float
    angle_tol: float
    extra_seeds: int
    seed: int


def _first_per_voxel(voxels: np.ndarray, limit: int) -> np.ndarray:
    """Positions of the first `limit` entries of each voxel, grouped by voxel, stable within groups"""
    order = np.argsort(voxels, kind="stable")
    sorted_voxels = voxels[order]
    if sorted_voxels.size == 0:
        return order
    group_start = np.flatnonzero(np.r_[True, sorted_voxels[1:] != sorted_voxels[:-1]])
    counts = np.diff(np.r_[group_start, sorted_voxels.size])
    rank = np.arange(sorted_voxels.size) - np.repeat(group_start, counts)
    return order[rank < limit]


def _seed_chunk(task: _SeedChunkTask) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int, int]:
    """Occupied voxels, witness voxels and configs, valid and colliding counts of one lattice range"""
    shape = tuple(axis.size for axis in task.axes)
    unravelled = np.unravel_index(np.arange(task.start, task.stop), shape)
    Q = np.column_stack([axis[idx] for axis, idx in zip(task.axes, unravelled)])

    tips, _ = forward_kinematics_batch(Q, task.geom)
    voxels = task.grid.index_of(tips)
    inside = voxels >= 0
    Q, voxels = Q[inside], voxels[inside]

    free = np.ones(Q.shape[0], dtype=bool)
    if task.cm is not None:
        free = ~self_collides_batch(Q, task.geom, task.cm)

    Q, voxels = Q[free], voxels[free]
    keep = _first_per_voxel(voxels, task.witnesses_per_voxel)
    return np.unique(voxels), voxels[keep], Q[keep], int(free.sum()), int((~free).sum())


def _score_chunk(task: _ScoreChunkTask) -> Tuple[np.ndarray, int]:
    n_vox = task.voxels.size
    n_dir = task.directions.shape[0]
    centers = task.grid.center_of(task.voxels.astype(np.int64))

    # seed list per voxel: witnesses first, then random in-limit configurations
    seed_lists = []
    for v, voxel in enumerate(task.voxels):
        rng = np.random.default_rng(np.random.SeedSequence([task.seed, int(voxel)]))
        extra = rng.uniform(task.rom.lo, task.rom.hi, size=(task.extra_seeds, 7))
        seed_lists.append(np.vstack([task.witnesses[v], extra]))

    resolved = np.zeros((n_vox, n_dir), dtype=bool)
    attempts = 0
    max_rounds = max(len(s) for s in seed_lists) if seed_lists else 0
    for round_index in range(max_rounds):
        has_seed = np.array([len(s) > round_index for s in seed_lists])
        rows_v, rows_d = np.nonzero(~resolved & has_seed[:, None])
        if rows_v.size == 0:
            break
        seeds = np.stack([seed_lists[v][round_index] for v in rows_v])
        result = solve_ik_batch(
            centers[rows_v], task.directions[rows_d], seeds,
            task.rom, task.geom, task.cm, task.position_tol, task.angle_tol,
        )
        attempts += int(rows_v.size)
        resolved[rows_v[result.success], rows_d[result.success]] = True

    return resolved.sum(axis=1).astype(np.int64), attempts


class CapabilityMapGenerator:
    """Builds capability and reachability maps for one arm, ROM and parameter set"""

    def __init__(
        self,
        geom: ArmGeometry,
        rom: RomLimits,
        cm: CollisionModel,
        params: GenerationParams,
        workers: int = 1,
        show_progress: bool = False,
    ):
        self.geom = geom
        self.rom = rom
        self.cm = cm
        self.params = params
        self.workers = workers
        self.show_progress = show_progress
        self.grid = VoxelGrid.for_geometry(geom, params.voxel_edge)
        self.logger = logging.getLogger(__name__)

    @property
    def active_collision_model(self) -> Optional[CollisionModel]:
        return self.cm if self.params.collisions else None

    def fk_seed_pass(self) -> SeedPassResult:
        axes = lattice_axes(self.rom, self.params)
        size = lattice_size(axes)
        if size > self.params.max_lattice_points:
            raise LatticeTooLargeError(size, self.params.max_lattice_points)
        self.logger.info(
            f"Seed pass: {size:,} lattice points "
            f"(~{estimate_array_memory_mb(size, 7):.1f} MB of joint values), "
            f"grid {self.grid.dims}"
        )

        tasks = [
            _SeedChunkTask(
                axes=axes, geom=self.geom, cm=self.active_collision_model, grid=self.grid,
                witnesses_per_voxel=self.params.witnesses_per_voxel,
                start=chunk.start, stop=chunk.stop,
            )
            for chunk in chunk_ranges(size, constants.SEED_PASS_CHUNK)
        ]
        executor = ChunkExecutor(self.workers, self.show_progress, "Seed pass")
        occupied_parts, voxel_parts, config_parts = [], [], []
        valid = colliding = 0
        for chunk_occupied, voxels, configs, chunk_valid, chunk_colliding in executor.map_ordered(_seed_chunk, tasks):
            occupied_parts.append(chunk_occupied)
            voxel_parts.append(voxels)
            config_parts.append(configs)
            valid += chunk_valid
            colliding += chunk_colliding

        empty = np.zeros(0, dtype=np.int64)
        occupied = np.unique(np.concatenate(occupied_parts)) if occupied_parts else empty
        all_voxels = np.concatenate(voxel_parts) if voxel_parts else empty
        all_configs = np.vstack(config_parts) if config_parts else np.zeros((0, 7))
        keep = _first_per_voxel(all_voxels, self.params.witnesses_per_voxel)
        voxels, configs = all_voxels[keep], all_configs[keep]

        # voxels is grouped by voxel in ascending order, one group per occupied voxel
        _, counts = np.unique(voxels, return_counts=True)
        offsets = np.r_[0, np.cumsum(counts)].astype(np.int64)
        stats = {
            "lattice_points": size,
            "valid_configs": valid,
            "colliding_configs": colliding,
            "occupied_voxels": int(occupied.size),
        }
        self.logger.info(f"Seed pass: {occupied.size:,} occupied voxels, {colliding:,} colliding configs")
        return SeedPassResult(
            occupied=occupied.astype(np.uint32), witness_offsets=offsets,
            witnesses=configs, stats=stats,
        )

    def score_pass(self, seed_result: SeedPassResult, user_id: str = "anonymous",
                   condition: str = Condition.UNRESTRICTED.value) -> CapabilityMap:
        directions = fibonacci_directions(self.params.n_dir)
        n_occupied = seed_result.occupied.size
        tasks = [
            _ScoreChunkTask(
                voxels=seed_result.occupied[chunk.start:chunk.stop],
                witnesses=[seed_result.witnesses_of(p) for p in chunk],
                directions=directions, grid=self.grid, geom=self.geom, rom=self.rom,
                cm=self.active_collision_model,
                position_tol=self.params.score_position_tol(),
                angle_tol=self.params.angle_tol,
                extra_seeds=self.params.extra_seeds, seed=self.params.seed,
            )
            for chunk in chunk_ranges(n_occupied, constants.SCORE_PASS_CHUNK)
        ]
        executor = ChunkExecutor(self.workers, self.show_progress, "Score pass")
        numerator_parts = []
        attempts = 0
        for numerators, chunk_attempts in executor.map_ordered(_score_chunk, tasks):
            numerator_parts.append(numerators)
            attempts += chunk_attempts

        numerators = np.concatenate(numerator_parts) if numerator_parts else np.zeros(0, dtype=np.int64)
        reached = numerators > 0
        stats = dict(seed_result.stats)
        stats.update({
            "ik_attempts": attempts,
            "scored_voxels": int(reached.sum()),
            "dropped_voxels": int((~reached).sum()),
        })
        self.logger.info(
            f"Score pass: {reached.sum():,} of {n_occupied:,} voxels scored, {attempts:,} IK attempts"
        )
        return CapabilityMap(
            grid=self.grid,
            metadata=self._metadata(user_id, condition, "capability", stats),
            indices=seed_result.occupied[reached],
            numerators=numerators[reached].astype(np.uint16),
        )

    def reachability_map(self, seed_result: SeedPassResult, user_id: str = "anonymous",
                         condition: str = Condition.UNRESTRICTED.value) -> CapabilityMap:
        """Binary map from the seed pass alone; every occupied voxel scores 1"""
        n_dir = self.params.n_dir
        return CapabilityMap(
            grid=self.grid,
            metadata=self._metadata(user_id, condition, "reachability", dict(seed_result.stats)),
            indices=seed_result.occupied,
            numerators=np.full(seed_result.occupied.size, n_dir, dtype=np.uint16),
        )

    def generate(self, user_id: str = "anonymous", condition: str = Condition.UNRESTRICTED.value) -> CapabilityMap:
        start = time.time()
        seed_result = self.fk_seed_pass()
        cmap = self.score_pass(seed_result, user_id, condition)
        self.logger.info(f"Capability map generated in {time.time() - start:.2f} seconds")
        return cmap

    def _metadata(self, user_id: str, condition: str, kind: str, stats: Dict[str, int]) -> MapMetadata:
        return MapMetadata(
            user_id=user_id, condition=condition, rom=self.rom, geometry=self.geom,
            collision_model=self.cm, params=self.params, n_dir=self.params.n_dir,
            seed=self.params.seed, kind=kind, stats=stats,
        )


def fk_seed_pass(geom: ArmGeometry, rom: RomLimits, cm: CollisionModel, grid: VoxelGrid,
                 params: GenerationParams, workers: int = 1) -> SeedPassResult:
    generator = CapabilityMapGenerator(geom, rom, cm, params, workers)
    if grid != generator.grid:
        raise InvalidArgumentError("grid does not match the geometry and voxel edge")
    return generator.fk_seed_pass()


def score_pass(seed_result: SeedPassResult, geom: ArmGeometry, rom: RomLimits, cm: CollisionModel,
               params: GenerationParams, workers: int = 1, user_id: str = "anonymous",
               condition: str = Condition.UNRESTRICTED.value) -> CapabilityMap:
    return CapabilityMapGenerator(geom, rom, cm, params, workers).score_pass(seed_result, user_id, condition)


def generate_capability_map(geom: ArmGeometry, rom: RomLimits, cm: CollisionModel, params: GenerationParams,
                            workers: int = 1, user_id: str = "anonymous",
                            condition: str = Condition.UNRESTRICTED.value,
                            show_progress: bool = False) -> CapabilityMap:
    generator = CapabilityMapGenerator(geom, rom, cm, params, workers, show_progress)
    return generator.generate(user_id, condition)


def reachability_map(seed_result: SeedPassResult, geom: ArmGeometry, rom: RomLimits, cm: CollisionModel,
                     params: GenerationParams, user_id: str = "anonymous",
                     condition: str = Condition.UNRESTRICTED.value) -> CapabilityMap:
    return CapabilityMapGenerator(geom, rom, cm, params).reachability_map(seed_result, user_id, condition)
