"""
Capability map container.

Layout:
    magic        4 bytes   b"RMAP"
    header_len   u32 LE    length of the JSON header in bytes
    header       JSON      {"format_version", "grid", "metadata", "record_count"}, sorted keys
    records      record_count * (u32 voxel_index LE, u16 score_numerator LE), sorted by index
    checksum     32 bytes  SHA-256 over everything before it

A pure-JSON variant with the same header fields and explicit record lists is available
for interop and debugging.
"""

import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import ValidationError

from src.core import constants
from src.core.capability_map import CapabilityMap
from src.core.error_handling import (
    InvalidArgumentError, MapChecksumError, MapCorruptionError, MapVersionError,
)
from src.core.models import MapMetadata, VoxelGrid

logger = logging.getLogger(__name__)

RECORD_DTYPE = np.dtype([("index", "<u4"), ("numerator", "<u2")])
CHECKSUM_BYTES = 32
_PREFIX = struct.Struct("<4sI")


def _header(cmap: CapabilityMap) -> Dict[str, Any]:
    return {
        "format_version": constants.MAP_FORMAT_VERSION,
        "grid": cmap.grid.model_dump(mode="json"),
        "metadata": cmap.metadata.model_dump(mode="json"),
        "record_count": cmap.occupied_count,
    }


def _header_bytes(cmap: CapabilityMap) -> bytes:
    return json.dumps(_header(cmap), sort_keys=True, separators=(",", ":")).encode("utf-8")


def map_to_bytes(cmap: CapabilityMap) -> bytes:
    header = _header_bytes(cmap)
    records = np.empty(cmap.occupied_count, dtype=RECORD_DTYPE)
    records["index"] = cmap.indices
    records["numerator"] = cmap.numerators
    body = _PREFIX.pack(constants.MAP_MAGIC, len(header)) + header + records.tobytes()
    return body + hashlib.sha256(body).digest()


def map_checksum(cmap: CapabilityMap) -> str:
    """Hex SHA-256 trailer of the serialized map"""
    return map_to_bytes(cmap)[-CHECKSUM_BYTES:].hex()


def _parse_header(header: Dict[str, Any]) -> Tuple[VoxelGrid, MapMetadata, int]:
    try:
        grid = VoxelGrid(**header["grid"])
        metadata = MapMetadata(**header["metadata"])
        record_count = int(header["record_count"])
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        raise MapCorruptionError(f"map header is malformed: {e}")
    return grid, metadata, record_count


def _check_version(header: Dict[str, Any]):
    version = header.get("format_version")
    if version != constants.MAP_FORMAT_VERSION:
        raise MapVersionError(
            f"map format version {version!r} is not supported (expected {constants.MAP_FORMAT_VERSION})",
            found=version,
        )


def map_from_bytes(data: bytes) -> CapabilityMap:
    if len(data) < _PREFIX.size:
        raise MapCorruptionError(f"map file is {len(data)} bytes, too short for the header")
    magic, header_len = _PREFIX.unpack_from(data, 0)
    if magic != constants.MAP_MAGIC:
        raise MapCorruptionError(f"bad magic {magic!r}, not a capability map file")
    header_end = _PREFIX.size + header_len
    if len(data) < header_end:
        raise MapCorruptionError("map file truncated inside the header")
    try:
        header = json.loads(data[_PREFIX.size:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MapCorruptionError(f"map header is not valid JSON: {e}")
    if not isinstance(header, dict):
        raise MapCorruptionError("map header is not a JSON object")

    _check_version(header)
    grid, metadata, record_count = _parse_header(header)

    records_end = header_end + record_count * RECORD_DTYPE.itemsize
    expected = records_end + CHECKSUM_BYTES
    if len(data) < expected:
        raise MapCorruptionError(f"map file truncated: {len(data)} bytes, expected {expected}")
    if len(data) > expected:
        raise MapCorruptionError(f"map file has {len(data) - expected} trailing bytes")
    if hashlib.sha256(data[:records_end]).digest() != data[records_end:]:
        raise MapChecksumError("map checksum mismatch, file is damaged")

    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=record_count, offset=header_end)
    try:
        return CapabilityMap(
            grid=grid, metadata=metadata,
            indices=records["index"].astype(np.uint32),
            numerators=records["numerator"].astype(np.uint16),
        )
    except InvalidArgumentError as e:
        raise MapCorruptionError(f"map records are inconsistent: {e}")


def save_map(cmap: CapabilityMap, path: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(map_to_bytes(cmap))
    logger.info(f"Saved {cmap.occupied_count:,} voxels to {path}")


def load_map(path: str) -> CapabilityMap:
    with open(path, "rb") as f:
        data = f.read()
    cmap = map_from_bytes(data)
    logger.debug(f"Loaded {cmap.occupied_count:,} voxels from {path}")
    return cmap


def export_map_json(cmap: CapabilityMap, path: str):
    document = _header(cmap)
    document["records"] = [
        {"index": int(i), "numerator": int(n), "score": float(n) / cmap.n_dir}
        for i, n in zip(cmap.indices, cmap.numerators)
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
    logger.info(f"Exported map JSON to {path}")


def import_map_json(path: str) -> CapabilityMap:
    with open(path, "r") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise MapCorruptionError(f"{path} is not valid JSON: {e}")
    if not isinstance(document, dict):
        raise MapCorruptionError(f"{path} does not hold a map document")
    _check_version(document)
    grid, metadata, record_count = _parse_header(document)
    records = document.get("records", [])
    if len(records) != record_count:
        raise MapCorruptionError(f"record_count {record_count} but {len(records)} records present")
    try:
        return CapabilityMap(
            grid=grid, metadata=metadata,
            indices=np.array([r["index"] for r in records], dtype=np.uint32),
            numerators=np.array([r["numerator"] for r in records], dtype=np.uint16),
        )
    except (KeyError, InvalidArgumentError) as e:
        raise MapCorruptionError(f"map records are inconsistent: {e}")
