"""Writers for meshes, tables and JSON artifacts"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.analysis.hull import Mesh
from src.core.error_handling import InvalidArgumentError

logger = logging.getLogger(__name__)

# torso frame (X right, Y anterior, Z up) to the Y-up OBJ convention, a proper rotation
TORSO_TO_Y_UP = np.array([
    [1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, -1.0, 0.0],
])


def _ensure_parent(path: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def write_obj(mesh: Mesh, path: str, name: str = "reach_hull", comments: Optional[Dict[str, Any]] = None):
    """Wavefront OBJ with 1-based triangle faces, vertices rotated to Y-up"""
    vertices = mesh.vertices @ TORSO_TO_Y_UP.T
    _ensure_parent(path)
    with open(path, "w") as f:
        f.write("# reachmap convex hull\n")
        f.write("# Y-up: obj (x, y, z) = torso (X, Z, -Y); torso origin at the right shoulder,\n")
        f.write("# X to the user's right, Y anterior, Z superior; meters\n")
        f.write(f"# Vertices: {len(vertices)}\n")
        f.write(f"# Faces: {len(mesh.triangles)}\n")
        for key, value in (comments or {}).items():
            f.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        f.write(f"o {name}\n")
        for v in vertices:
            f.write(f"v {v[0]:.9f} {v[1]:.9f} {v[2]:.9f}\n")
        for tri in mesh.triangles:
            f.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")
    logger.info(f"Wrote OBJ mesh ({len(vertices)} vertices, {len(mesh.triangles)} triangles) to {path}")


def read_obj(path: str) -> Mesh:
    """Read back a mesh written by write_obj, in the torso frame"""
    vertices, triangles = [], []
    with open(path, "r") as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vertices.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                triangles.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    torso = np.asarray(vertices, dtype=float) @ TORSO_TO_Y_UP
    return Mesh(vertices=torso, triangles=np.asarray(triangles, dtype=np.int64))


def write_table(frame: pd.DataFrame, path: str, float_format: str = "%.2f", index: bool = True):
    """CSV or Markdown chosen by the file extension"""
    _ensure_parent(path)
    if path.endswith(".md"):
        flat = frame.copy()
        if isinstance(flat.columns, pd.MultiIndex):
            flat.columns = [" / ".join(str(c) for c in col) for col in flat.columns]
        with open(path, "w") as f:
            f.write(flat.to_markdown(index=index, floatfmt=float_format.lstrip("%")) + "\n")
    else:
        frame.to_csv(path, index=index, float_format=float_format)
    logger.info(f"Wrote table with {len(frame)} rows to {path}")


def write_json(document: Dict[str, Any], path: str):
    _ensure_parent(path)
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
    logger.info(f"Wrote {path}")


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "r") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"{path} is not valid JSON: {e}")
    if not isinstance(document, dict):
        raise InvalidArgumentError(f"{path} does not hold a JSON object")
    return document
