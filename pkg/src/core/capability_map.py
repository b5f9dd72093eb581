"""
In-memory capability map and its O(1) point queries.

Scores are stored as integer numerators over metadata.n_dir so equality and
serialization are exact.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from src.core.error_handling import InvalidArgumentError
from src.core.models import MapMetadata, VoxelGrid


@dataclass(frozen=True, eq=False)
class CapabilityMap:
    grid: VoxelGrid
    metadata: MapMetadata
    indices: np.ndarray     # uint32, strictly increasing
    numerators: np.ndarray  # uint16, each in [1, n_dir]

    def __post_init__(self):
        indices = np.ascontiguousarray(self.indices, dtype=np.uint32)
        numerators = np.ascontiguousarray(self.numerators, dtype=np.uint16)
        if indices.shape != numerators.shape or indices.ndim != 1:
            raise InvalidArgumentError("indices and numerators must be 1-D arrays of equal length")
        if indices.size > 1 and np.any(np.diff(indices.astype(np.int64)) <= 0):
            raise InvalidArgumentError("voxel indices must be strictly increasing")
        if indices.size and int(indices[-1]) >= self.grid.size:
            raise InvalidArgumentError("voxel index outside the grid")
        if numerators.size and (numerators.min() < 1 or numerators.max() > self.metadata.n_dir):
            raise InvalidArgumentError(f"score numerators must lie in [1, {self.metadata.n_dir}]")
        indices.setflags(write=False)
        numerators.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "numerators", numerators)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CapabilityMap):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.metadata == other.metadata
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.numerators, other.numerators)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_dir(self) -> int:
        return self.metadata.n_dir

    @property
    def occupied_count(self) -> int:
        return int(self.indices.size)

    @property
    def scores(self) -> np.ndarray:
        return self.numerators.astype(np.float64) / self.metadata.n_dir

    def is_empty(self) -> bool:
        return self.indices.size == 0

    def occupied_centers(self) -> np.ndarray:
        return self.grid.center_of(self.indices.astype(np.int64))

    def score_at_many(self, points: np.ndarray) -> np.ndarray:
        """Scores for (N, 3) points; NaN where the point is outside the grid or unoccupied"""
        flat = self.grid.index_of(points)
        result = np.full(flat.shape[0], np.nan)
        if self.indices.size == 0:
            return result
        inside = flat >= 0
        pos = np.searchsorted(self.indices, flat[inside].astype(np.uint32))
        pos_clipped = np.minimum(pos, self.indices.size - 1)
        hit = self.indices[pos_clipped] == flat[inside]
        values = np.where(hit, self.scores[pos_clipped], np.nan)
        result[inside] = values
        return result

    def score_at(self, point: Sequence[float]) -> Optional[float]:
        value = self.score_at_many(np.asarray(point, dtype=float)[None, :])[0]
        return None if np.isnan(value) else float(value)

    def restricted_to(self, keep: np.ndarray) -> "CapabilityMap":
        """Map holding only the occupied voxels selected by the boolean mask keep"""
        return CapabilityMap(
            grid=self.grid, metadata=self.metadata,
            indices=self.indices[keep], numerators=self.numerators[keep],
        )


def score_at(cmap: CapabilityMap, point: Sequence[float]) -> Optional[float]:
    return cmap.score_at(point)


def score_at_many(cmap: CapabilityMap, points: np.ndarray) -> np.ndarray:
    return cmap.score_at_many(points)


def occupied_centers(cmap: CapabilityMap) -> np.ndarray:
    return cmap.occupied_centers()


def summarize(cmap: CapabilityMap) -> List[str]:
    """Short human-readable description lines"""
    meta = cmap.metadata
    lines = [
        f"user: {meta.user_id}  condition: {meta.condition}  kind: {meta.kind}",
        f"grid: dims {cmap.grid.dims}, edge {cmap.grid.voxel_edge} m",
        f"occupied voxels: {cmap.occupied_count:,}  n_dir: {meta.n_dir}  seed: {meta.seed}",
    ]
    if cmap.occupied_count:
        scores = cmap.scores
        lines.append(f"score mean {scores.mean():.3f}, min {scores.min():.3f}, max {scores.max():.3f}")
    return lines
