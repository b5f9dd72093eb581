import json

import numpy as np
import pytest

from src.core.capability_map import CapabilityMap
from src.core.error_handling import InvalidArgumentError, MapChecksumError, MapCorruptionError, MapVersionError
from src.core.models import CollisionModel, RomLimits
from src.generators.capability_map_generator import generate_capability_map
from src.storage.map_store import (
    export_map_json, import_map_json, load_map, map_checksum, map_from_bytes, map_to_bytes, save_map,
)


def random_map(map_factory, seed):
    rng = np.random.default_rng(seed)
    count = int(rng.integers(0, 300))
    indices = np.sort(rng.choice(1000, size=count, replace=False))
    numerators = rng.integers(1, 33, size=count)
    return map_factory(indices, numerators, n_dir=32, user_id=f"user{seed}")


class TestMapContainer:
    def test_round_trip_random_maps(self, map_factory):
        for seed in range(10):
            cmap = random_map(map_factory, seed)
            assert map_from_bytes(map_to_bytes(cmap)) == cmap

    def test_round_trip_generated_map(self, tmp_path, geometry, coarse_params):
        cmap = generate_capability_map(geometry, RomLimits.nominal(), CollisionModel(), coarse_params)
        path = str(tmp_path / "m.rmap")
        save_map(cmap, path)
        loaded = load_map(path)
        assert loaded == cmap
        assert map_to_bytes(loaded) == map_to_bytes(cmap)
        assert map_checksum(loaded) == map_checksum(cmap)

    def test_altered_version(self, map_factory):
        data = map_to_bytes(random_map(map_factory, 1))
        altered = data.replace(b'"format_version":1', b'"format_version":9')
        assert altered != data
        with pytest.raises(MapVersionError):
            map_from_bytes(altered)

    def test_truncated_file(self, map_factory):
        data = map_to_bytes(random_map(map_factory, 2))
        with pytest.raises(MapCorruptionError):
            map_from_bytes(data[:-10])
        with pytest.raises(MapCorruptionError):
            map_from_bytes(data[:3])

    def test_damaged_record(self, map_factory):
        cmap = map_factory([1, 2, 3], [4, 5, 6], n_dir=10)
        data = bytearray(map_to_bytes(cmap))
        # high byte of the last numerator
        data[-33] ^= 0x01
        with pytest.raises(MapChecksumError):
            map_from_bytes(bytes(data))

    def test_bad_magic(self, map_factory):
        data = map_to_bytes(random_map(map_factory, 3))
        with pytest.raises(MapCorruptionError):
            map_from_bytes(b"XXXX" + data[4:])

    def test_json_export_round_trip(self, tmp_path, map_factory):
        cmap = random_map(map_factory, 4)
        path = str(tmp_path / "m.json")
        export_map_json(cmap, path)
        with open(path) as f:
            document = json.load(f)
        assert document["record_count"] == cmap.occupied_count
        assert import_map_json(path) == cmap


class TestCapabilityMapQueries:
    def setup_method(self):
        self.edge = 0.1

    def test_score_at_voxel_center(self, map_factory):
        cmap = map_factory([0, 111, 999], [2, 5, 10], n_dir=10)
        center = cmap.grid.center_of(np.array([111]))[0]
        assert cmap.score_at(center) == pytest.approx(0.5)

    def test_outside_grid(self, map_factory):
        cmap = map_factory([0], [1], n_dir=10)
        assert cmap.score_at((-0.05, 0.05, 0.05)) is None
        assert cmap.score_at((5.0, 0.0, 0.0)) is None

    def test_unoccupied_voxel(self, map_factory):
        cmap = map_factory([0], [1], n_dir=10)
        assert cmap.score_at((0.55, 0.55, 0.55)) is None

    def test_shared_face_belongs_to_upper_voxel(self, map_factory):
        # voxels (0,0,0) and (0,0,1) share the face z = 0.1
        cmap = map_factory([0, 1], [3, 7], n_dir=10)
        assert cmap.score_at((0.05, 0.05, 0.1)) == pytest.approx(0.7)

    def test_batch_queries(self, map_factory):
        cmap = map_factory([0, 1], [3, 7], n_dir=10)
        scores = cmap.score_at_many(np.array([[0.05, 0.05, 0.05], [0.95, 0.95, 0.95], [-1.0, 0.0, 0.0]]))
        assert scores[0] == pytest.approx(0.3)
        assert np.isnan(scores[1]) and np.isnan(scores[2])

    def test_invariants_enforced(self, map_factory):
        with pytest.raises(InvalidArgumentError):
            map_factory([2, 1], [1, 1])
        with pytest.raises(InvalidArgumentError):
            map_factory([1, 2], [1, 11], n_dir=10)
        with pytest.raises(InvalidArgumentError):
            map_factory([1000], [1])

    def test_arrays_are_read_only(self, map_factory):
        cmap = map_factory([1, 2], [1, 1])
        with pytest.raises(ValueError):
            cmap.indices[0] = 5
        assert isinstance(cmap, CapabilityMap)
