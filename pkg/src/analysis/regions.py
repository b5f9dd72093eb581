"""Difficulty tiers over occupied voxels and balloon spawn planning"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from src.core.capability_map import CapabilityMap
from src.core.error_handling import (
    EmptySelectionError, IncompatibleMapsError, InsufficientRegionError, InvalidArgumentError,
)
from src.core.models import DIFFICULTY_ORDER, Difficulty, Spawn, SpawnPlan, VoxelGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RegionLabels:
    """Tier per occupied voxel; tiers[i] indexes DIFFICULTY_ORDER and belongs to indices[i]"""
    grid: VoxelGrid
    indices: np.ndarray  # uint32, same order as the map
    tiers: np.ndarray    # int8
    thresholds: Dict[str, Dict[str, float]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegionLabels):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.tiers, other.tiers)
            and self.thresholds == other.thresholds
        )

    __hash__ = None  # type: ignore[assignment]

    def indices_of(self, tier: Difficulty) -> np.ndarray:
        return self.indices[self.tiers == DIFFICULTY_ORDER.index(tier)]

    def counts(self) -> Dict[str, int]:
        return {d.value: int(np.sum(self.tiers == i)) for i, d in enumerate(DIFFICULTY_ORDER)}

    def label_of(self, voxel_index: int) -> Difficulty:
        pos = int(np.searchsorted(self.indices, voxel_index))
        if pos >= self.indices.size or int(self.indices[pos]) != voxel_index:
            raise InvalidArgumentError(f"voxel {voxel_index} is not labeled")
        return DIFFICULTY_ORDER[int(self.tiers[pos])]

    def to_document(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.model_dump(mode="json"),
            "thresholds": self.thresholds,
            "counts": self.counts(),
            "voxels": {
                d.value: [int(i) for i in self.indices_of(d)] for d in DIFFICULTY_ORDER
            },
        }

    @classmethod
    def from_document(cls, document: Dict[str, Any]) -> "RegionLabels":
        try:
            grid = VoxelGrid(**document["grid"])
            pairs = [
                (int(index), tier)
                for tier, d in enumerate(DIFFICULTY_ORDER)
                for index in document["voxels"][d.value]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidArgumentError(f"malformed region labels document: {e}")
        pairs.sort()
        return cls(
            grid=grid,
            indices=np.array([p[0] for p in pairs], dtype=np.uint32),
            tiers=np.array([p[1] for p in pairs], dtype=np.int8),
            thresholds=document.get("thresholds", {}),
        )


def tier_sizes(n: int) -> Sequence[int]:
    """Tertile sizes with the remainder given to the earlier tiers"""
    base, remainder = divmod(n, 3)
    return [base + (1 if remainder > 0 else 0), base + (1 if remainder > 1 else 0), base]


def classify_regions(cmap: CapabilityMap) -> RegionLabels:
    if cmap.occupied_count == 0:
        raise EmptySelectionError("map has no occupied voxels to classify")
    scores = cmap.scores
    # score descending, ties by voxel index ascending
    ranking = np.lexsort((cmap.indices, -scores))
    tiers = np.empty(cmap.occupied_count, dtype=np.int8)
    thresholds: Dict[str, Dict[str, float]] = {}
    start = 0
    for tier, size in enumerate(tier_sizes(cmap.occupied_count)):
        members = ranking[start:start + size]
        tiers[members] = tier
        if size:
            thresholds[DIFFICULTY_ORDER[tier].value] = {
                "min_score": float(scores[members].min()),
                "max_score": float(scores[members].max()),
            }
        start += size
    labels = RegionLabels(grid=cmap.grid, indices=cmap.indices.copy(), tiers=tiers, thresholds=thresholds)
    logger.info(f"Region tiers: {labels.counts()}")
    return labels


def plan_spawns(
    cmap: CapabilityMap,
    labels: RegionLabels,
    home: Sequence[float],
    per_tier: int,
    d_min: float,
    seed: int,
) -> SpawnPlan:
    """per_tier voxel centers per tier, easy then medium then hard, at least d_min from home and never at home"""
    if per_tier < 1:
        raise InvalidArgumentError("per_tier must be >= 1")
    if labels.grid != cmap.grid or not np.array_equal(labels.indices, cmap.indices):
        raise IncompatibleMapsError("region labels were not computed from this map")
    home_point = np.asarray(home, dtype=float)
    rng = np.random.default_rng(seed)
    scores = cmap.scores
    spawns = []
    for tier_index, tier in enumerate(DIFFICULTY_ORDER):
        members = np.flatnonzero(labels.tiers == tier_index)
        centers = cmap.grid.center_of(cmap.indices[members].astype(np.int64))
        distance = np.linalg.norm(centers - home_point, axis=1)
        # a voxel centered on home is never a spawn, even with d_min 0
        eligible = (distance >= d_min) & (distance > 0.0)
        candidates = members[eligible]
        if candidates.size < per_tier:
            raise InsufficientRegionError(tier.value, int(candidates.size), per_tier)
        picks = candidates[rng.choice(candidates.size, size=per_tier, replace=False)]
        for pos in picks:
            center = cmap.grid.center_of(np.array([int(cmap.indices[pos])]))[0]
            spawns.append(Spawn(
                position=tuple(float(c) for c in center), difficulty=tier,
                voxel_index=int(cmap.indices[pos]), score=float(scores[pos]),
            ))
    return SpawnPlan(
        spawns=spawns, home=tuple(float(c) for c in home_point), seed=seed, per_tier=per_tier, d_min=d_min,
    )
