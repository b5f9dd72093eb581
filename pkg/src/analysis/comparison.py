"""Workspace volume and dexterity reduction between two maps of the same grid"""

import logging
from typing import List, Tuple

import numpy as np
import pandas as pd

from src.core.capability_map import CapabilityMap
from src.core.error_handling import IncompatibleMapsError, NoCommonRegionError, UndefinedBaselineError
from src.core.models import CONDITION_ORDER, MapComparison

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["user", "condition", "volume_reduction_pct", "dexterity_reduction_pct", "common_voxels"]


def _check_grids(healthy: CapabilityMap, other: CapabilityMap):
    if healthy.grid != other.grid:
        raise IncompatibleMapsError(
            f"maps use different grids: {healthy.grid.dims}@{healthy.grid.voxel_edge} "
            f"vs {other.grid.dims}@{other.grid.voxel_edge}"
        )


def volume_reduction(healthy: CapabilityMap, other: CapabilityMap) -> float:
    _check_grids(healthy, other)
    if healthy.occupied_count == 0:
        raise UndefinedBaselineError("baseline map has no occupied voxels")
    return 100.0 * (1.0 - other.occupied_count / healthy.occupied_count)


def dexterity_reduction(healthy: CapabilityMap, other: CapabilityMap) -> Tuple[float, int]:
    """Reduction of summed scores over the voxels both maps occupy, and their count"""
    _check_grids(healthy, other)
    common, in_healthy, in_other = np.intersect1d(healthy.indices, other.indices, return_indices=True)
    if common.size == 0:
        raise NoCommonRegionError("maps share no occupied voxel")
    healthy_sum = float(np.sum(healthy.scores[in_healthy]))
    other_sum = float(np.sum(other.scores[in_other]))
    return 100.0 * (1.0 - other_sum / healthy_sum), int(common.size)


def compare_maps(healthy: CapabilityMap, other: CapabilityMap, user: str = "", condition: str = "") -> MapComparison:
    volume = volume_reduction(healthy, other)
    dexterity, common = dexterity_reduction(healthy, other)
    logger.info(f"{user or 'map'} {condition}: volume {volume:.2f}%, dexterity {dexterity:.2f}% over {common:,} voxels")
    return MapComparison(
        volume_reduction_pct=volume, dexterity_reduction_pct=dexterity,
        common_voxel_count=common, user=user, condition=condition,
    )


def comparison_frame(rows: List[MapComparison]) -> pd.DataFrame:
    """One row per comparison with the CSV report columns"""
    return pd.DataFrame(
        [
            {
                "user": r.user,
                "condition": r.condition,
                "volume_reduction_pct": round(r.volume_reduction_pct, 2),
                "dexterity_reduction_pct": round(r.dexterity_reduction_pct, 2),
                "common_voxels": r.common_voxel_count,
            }
            for r in rows
        ],
        columns=COMPARISON_COLUMNS,
    )


def comparison_table(rows: List[MapComparison]) -> pd.DataFrame:
    """Users as rows, (condition, metric) column groups"""
    frame = comparison_frame(rows)
    if frame.empty:
        return frame
    table = frame.pivot_table(
        index="user", columns="condition",
        values=["volume_reduction_pct", "dexterity_reduction_pct"], aggfunc="first",
    )
    table = table.swaplevel(0, 1, axis=1)
    known = [c.value for c in CONDITION_ORDER]
    conditions = sorted(table.columns.get_level_values(0).unique(),
                        key=lambda c: (known.index(c) if c in known else len(known), c))
    ordered = [(c, m) for c in conditions for m in ("volume_reduction_pct", "dexterity_reduction_pct") if (c, m) in table.columns]
    return table[ordered]
