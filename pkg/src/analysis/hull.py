"""
Convex-hull cue meshes around voxel selections.

Qhull triangulates coplanar regions arbitrarily and returns winding in no particular
order, so each hull face is rebuilt: coplanar facets are merged, the face polygon is the
planar hull of every point on that plane, and the polygon is fanned counter-clockwise as
seen from outside. The result has the minimal vertex set and is watertight.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from src.core.capability_map import CapabilityMap
from src.core.error_handling import DegenerateHullError, EmptySelectionError, InvalidArgumentError
from src.core.models import Difficulty, VoxelGrid

logger = logging.getLogger(__name__)

_PLANE_TOL = 1e-9
_BAND_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray   # (V, 3) float
    triangles: np.ndarray  # (T, 3) int, counter-clockwise seen from outside
    convex: bool = True

    def face_normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        normals = np.cross(b - a, c - a)
        return normals / np.linalg.norm(normals, axis=1, keepdims=True)

    def is_watertight(self) -> bool:
        """Every directed edge appears once and is matched by its reverse"""
        edges = np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        directed = {tuple(e) for e in edges.tolist()}
        if len(directed) != len(edges):
            return False
        return all((b, a) in directed for a, b in directed)

    def signed_distances(self, points: np.ndarray) -> np.ndarray:
        """Largest face-plane distance per point; <= 0 inside a convex mesh"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        normals = self.face_normals()
        anchors = self.vertices[self.triangles[:, 0]]
        offsets = np.sum(normals * anchors, axis=1)
        return np.max(pts @ normals.T - offsets[None, :], axis=1)

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        return self.signed_distances(points) <= tol

    def volume(self) -> float:
        a, b, c = (self.vertices[self.triangles[:, i]] for i in range(3))
        return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0)


def _plane_basis(normal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    helper = np.zeros(3)
    helper[np.argmin(np.abs(normal))] = 1.0
    u = np.cross(helper, normal)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return u, v


def _group_facets(equations: np.ndarray, tol: float) -> List[np.ndarray]:
    planes: List[np.ndarray] = []
    for eq in equations:
        if not any(np.dot(eq[:3], p[:3]) > 1.0 - 1e-9 and abs(eq[3] - p[3]) <= tol for p in planes):
            planes.append(eq)
    return planes


def convex_hull_mesh(points: np.ndarray) -> Mesh:
    """Convex hull of a point cloud as a watertight, outward-wound triangle mesh"""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if pts.shape[0] == 0:
        raise EmptySelectionError("no points to enclose")
    rank = int(np.linalg.matrix_rank(pts - pts[0])) if pts.shape[0] > 1 else 0
    if rank < 3:
        raise DegenerateHullError(rank)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        raise DegenerateHullError(rank)

    scale = max(1.0, float(np.max(np.abs(pts))))
    tol = _PLANE_TOL * scale
    triangles: List[Tuple[int, int, int]] = []
    for plane in _group_facets(hull.equations, tol):
        normal, offset = plane[:3], plane[3]
        on_plane = np.flatnonzero(np.abs(pts @ normal + offset) <= tol)
        u, v = _plane_basis(normal)
        planar = np.column_stack([pts[on_plane] @ u, pts[on_plane] @ v])
        # 2-D qhull lists vertices counter-clockwise and drops collinear points
        ring = on_plane[ConvexHull(planar).vertices]
        triangles.extend((int(ring[0]), int(ring[i]), int(ring[i + 1])) for i in range(1, len(ring) - 1))

    used = np.unique(np.asarray(triangles).ravel())
    remap = np.full(pts.shape[0], -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    return Mesh(vertices=pts[used], triangles=remap[np.asarray(triangles)], convex=True)


def voxel_hull(grid: VoxelGrid, indices: np.ndarray) -> Mesh:
    """Hull over the corners of the given voxels, computed on integer corner lattice coordinates"""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise EmptySelectionError("no voxels selected")
    cells = grid.cells_of(indices)
    offsets = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)])
    corners = np.unique((cells[:, None, :] + offsets[None, :, :]).reshape(-1, 3), axis=0)
    unit_mesh = convex_hull_mesh(corners.astype(np.float64))
    vertices = np.asarray(grid.origin) + unit_mesh.vertices * grid.voxel_edge
    return Mesh(vertices=vertices, triangles=unit_mesh.triangles, convex=True)


def select_band(cmap: CapabilityMap, score_range: Sequence[float]) -> np.ndarray:
    a, b = float(score_range[0]), float(score_range[1])
    if a > b:
        raise InvalidArgumentError(f"score range [{a}, {b}] is inverted")
    scores = cmap.scores
    return cmap.indices[(scores >= a - _BAND_TOL) & (scores <= b + _BAND_TOL)]


def extract_hull(cmap: CapabilityMap, score_range: Sequence[float] = (0.0, 1.0)) -> Mesh:
    selected = select_band(cmap, score_range)
    if selected.size == 0:
        raise EmptySelectionError(f"no voxel scores fall in [{score_range[0]}, {score_range[1]}]")
    mesh = voxel_hull(cmap.grid, selected)
    logger.info(
        f"Hull over {selected.size:,} voxels: {len(mesh.vertices)} vertices, "
        f"{len(mesh.triangles)} triangles, {mesh.volume():.4f} m^3"
    )
    return mesh


def hull_for_tier(cmap: CapabilityMap, labels, tier: Difficulty) -> Mesh:
    """Hull around the voxels labeled with one difficulty tier"""
    selected = labels.indices_of(tier)
    if selected.size == 0:
        raise EmptySelectionError(f"tier '{tier.value}' has no voxels")
    return voxel_hull(cmap.grid, selected)


def objects_in_reach(cmap: CapabilityMap, points: np.ndarray,
                     min_score: float = 0.0) -> List[Tuple[Optional[float], bool]]:
    """Score under each object position and whether it meets min_score for highlighting"""
    scores = cmap.score_at_many(np.atleast_2d(np.asarray(points, dtype=float)))
    result = []
    for s in scores:
        if np.isnan(s):
            result.append((None, False))
        else:
            result.append((float(s), bool(s >= min_score - _BAND_TOL)))
    return result
