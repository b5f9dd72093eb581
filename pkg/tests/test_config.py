import json
import math
from pathlib import Path

import numpy as np
import pytest

from src.core.config import (
    RunConfig, Settings, configure_logging, load_rom_file, parse_band, parse_point, read_document,
)
from src.core.error_handling import ConfigurationError
from src.core.models import Condition, RomLimits
from src.core.variability import TRACKING_PROFILES, TrackingNoise

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestSettings:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("REACHMAP_LOG", raising=False)
        monkeypatch.delenv("REACHMAP_WORKERS", raising=False)
        settings = Settings()
        assert settings.log == "INFO"
        assert settings.workers == 1

    def test_environment_prefix(self, monkeypatch):
        monkeypatch.setenv("REACHMAP_LOG", "DEBUG")
        monkeypatch.setenv("REACHMAP_WORKERS", "3")
        settings = Settings()
        assert settings.log == "DEBUG"
        assert settings.workers == 3

    def test_unknown_log_level(self):
        with pytest.raises(ConfigurationError):
            configure_logging("CHATTY")


class TestRunConfig:
    def test_demo_config(self):
        config = RunConfig.from_file(str(CONFIG_DIR / "demo_config.yaml"))
        assert config.user_id == "demo"
        assert Path(config.rom_file).is_absolute()
        assert config.nominal_rom() == RomLimits.nominal()
        assert config.regions.per_tier == 10
        params = config.params()
        assert params.seed == 7
        assert params.lattice_step == pytest.approx(math.radians(30.0))

    def test_clinic_config_loads(self):
        config = RunConfig.from_file(str(CONFIG_DIR / "clinic_config.yaml"))
        assert config.params().voxel_edge > 0

    def test_restrictions_override_nominal(self, coarse_config):
        config = RunConfig.from_file(coarse_config)
        restricted = config.rom_for(Condition.RESTRICTED).to_degrees()
        assert restricted["q1"] == pytest.approx([0.0, 45.0])
        assert restricted["q4"] == pytest.approx([20.0, 90.0])
        assert restricted["q7"] == pytest.approx([-70.0, 75.0])
        assert config.rom_for(Condition.UNRESTRICTED) == RomLimits.nominal()
        assert config.rom_for(Condition.UNRESTRICTED).contains(config.rom_for(Condition.PARTIALLY_RESTRICTED))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("user_id: x\nvoxel_size: 0.1\n")
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(str(path))

    def test_invalid_value_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("generation:\n  voxel_edge: -0.1\n")
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(str(tmp_path / "absent.yaml"))

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        config = RunConfig.from_file(str(path))
        assert config.condition == Condition.UNRESTRICTED
        assert config.nominal_rom() == RomLimits.nominal()

    def test_non_mapping_document(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigurationError):
            read_document(str(path))


class TestRomFiles:
    def setup_method(self):
        self.degrees = RomLimits.nominal().to_degrees()

    def test_nominal_file_matches_builtin_table(self):
        assert load_rom_file(str(CONFIG_DIR / "nominal_rom.yaml")) == RomLimits.nominal()

    def test_rom_command_layout(self, tmp_path):
        self.degrees["q1"] = [10.0, 120.0]
        path = tmp_path / "rom.json"
        path.write_text(json.dumps({"rom_degrees": self.degrees, "geometry": {}}))
        rom = load_rom_file(str(path))
        assert rom.to_degrees()["q1"] == pytest.approx([10.0, 120.0])
        assert rom.to_degrees()["q2"] == pytest.approx([-60.0, 165.0])

    def test_bare_mapping(self, tmp_path):
        self.degrees["q4"] = [5.0, 135.0]
        path = tmp_path / "rom.json"
        path.write_text(json.dumps(self.degrees))
        assert load_rom_file(str(path)).to_degrees()["q4"] == pytest.approx([5.0, 135.0])

    def test_missing_joint(self, tmp_path):
        path = tmp_path / "rom.yaml"
        path.write_text("q4: [5.0, 135.0]\n")
        with pytest.raises(ConfigurationError):
            load_rom_file(str(path))

    def test_inverted_interval(self, tmp_path):
        self.degrees["q4"] = [90.0, 10.0]
        path = tmp_path / "rom.json"
        path.write_text(json.dumps(self.degrees))
        with pytest.raises(ConfigurationError):
            load_rom_file(str(path))


class TestParsers:
    def test_band(self):
        assert parse_band("0.2,0.8") == (0.2, 0.8)
        assert parse_band(None) is None

    def test_bad_band(self):
        with pytest.raises(ConfigurationError):
            parse_band("0.2")
        with pytest.raises(ConfigurationError):
            parse_band("low,high")

    def test_point(self):
        assert parse_point([0, 1, 2]) == (0.0, 1.0, 2.0)
        with pytest.raises(ConfigurationError):
            parse_point([0, 1])


class TestTrackingNoise:
    def test_profiles(self):
        for name in TRACKING_PROFILES:
            assert isinstance(TrackingNoise.from_profile(name), TrackingNoise)

    def test_outlier_count(self):
        noise = TrackingNoise(outlier_rate=0.02)
        frames = noise.outlier_frames(200, np.random.default_rng(0))
        assert frames.size == 4
        assert np.all(np.diff(frames) > 0)

    def test_clean_jitter_is_identity(self):
        positions = np.ones((5, 3))
        assert np.array_equal(TrackingNoise().jitter(positions, np.random.default_rng(0)), positions)
