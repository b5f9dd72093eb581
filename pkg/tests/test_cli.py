import json
from pathlib import Path

import pandas as pd
import pytest

from reachmap import main
from src.analysis.session_report import save_session_log
from src.core.models import BalloonEvent, Condition, Difficulty, SessionLog
from src.storage.exporters import read_obj
from src.storage.map_store import load_map, save_map


class TestCommandLine:
    def test_unknown_command(self, capsys):
        assert main(["no-such-command"]) == 2

    def test_missing_argument(self, capsys):
        assert main(["info"]) == 2

    def test_rom_without_recording(self, capsys):
        assert main(["rom"]) == 2

    def test_domain_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "broken.rmap"
        path.write_bytes(b"RMA")
        assert main(["info", str(path)]) == 1
        err = capsys.readouterr().err.strip().splitlines()
        assert err[-1].startswith("error: MapCorruptionError: ")

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "build-map" in capsys.readouterr().out


class TestRomCommand:
    def test_synthetic_recording_round_trip(self, tmp_path, coarse_config, capsys):
        recording = str(tmp_path / "rec.jsonl")
        out = str(tmp_path / "rom.json")
        assert main(["-c", coarse_config, "synth-recording", "--seed", "1", "--out", recording]) == 0
        assert main(["-c", coarse_config, "rom", recording, "--out", out]) == 0

        with open(out) as f:
            document = json.load(f)
        assert document["rom_degrees"]["q1"] == pytest.approx([10.0, 120.0], abs=1.0)
        assert document["geometry"]["upper_arm_length"] == pytest.approx(0.30)
        assert recording in document["provenance"]["inputs"]
        assert "q1: [" in capsys.readouterr().out


class TestMapCommands:
    def test_build_is_reproducible(self, tmp_path, coarse_config):
        first, second = str(tmp_path / "a.rmap"), str(tmp_path / "b.rmap")
        assert main(["-c", coarse_config, "build-map", "--out", first]) == 0
        assert main(["-c", coarse_config, "build-map", "--workers", "2", "--out", second]) == 0
        assert Path(first).read_bytes() == Path(second).read_bytes()

    def test_compare_map_with_itself(self, tmp_path, coarse_config, capsys):
        path = str(tmp_path / "m.rmap")
        out = str(tmp_path / "cmp.csv")
        assert main(["-c", coarse_config, "build-map", "--reachability-only", "--out", path]) == 0
        assert main(["-c", coarse_config, "compare", path, path, "--out", out]) == 0

        assert "volume_reduction_pct=0.00" in capsys.readouterr().out
        frame = pd.read_csv(out)
        assert frame.loc[0, "volume_reduction_pct"] == 0.0
        assert frame.loc[0, "dexterity_reduction_pct"] == 0.0
        assert (tmp_path / "cmp.md").exists()
        assert (tmp_path / "cmp.provenance.json").exists()

    def test_cli_overrides_reach_the_map(self, tmp_path, coarse_config):
        path = str(tmp_path / "m.rmap")
        assert main([
            "-c", coarse_config, "build-map", "--reachability-only", "--voxel-edge", "0.2",
            "--user-id", "p7", "--condition", "restricted", "--out", path,
        ]) == 0
        cmap = load_map(path)
        assert cmap.grid.voxel_edge == pytest.approx(0.2)
        assert cmap.metadata.user_id == "p7"
        assert cmap.metadata.condition == "restricted"
        assert cmap.metadata.kind == "reachability"


class TestPipeline:
    def test_full_pipeline(self, tmp_path, coarse_config, capsys):
        out = tmp_path / "out"
        healthy = str(out / "unrestricted.rmap")
        partial = str(out / "partially_restricted.rmap")
        labels = str(out / "regions.json")
        plan = str(out / "plan.json")
        session = str(out / "session.json")
        replay = str(out / "replay.json")

        assert main(["-c", coarse_config, "build-map"]) == 0
        assert main(["-c", coarse_config, "build-map", "--condition", "partially_restricted"]) == 0
        assert Path(healthy).exists() and Path(partial).exists()

        assert main(["-c", coarse_config, "compare", healthy, partial]) == 0
        frame = pd.read_csv(out / "comparison.csv")
        assert list(frame["condition"]) == ["partially_restricted"]
        assert frame.loc[0, "volume_reduction_pct"] >= 0.0

        assert main(["-c", coarse_config, "regions", healthy]) == 0
        with open(labels) as f:
            document = json.load(f)
        assert "map_checksum" in document

        assert main(["-c", coarse_config, "plan", healthy, labels]) == 0
        with open(plan) as f:
            assert len(json.load(f)["spawns"]) == 6

        assert main(["-c", coarse_config, "simulate", healthy, "--labels", labels, "--out", session]) == 0
        assert main(["-c", coarse_config, "simulate", healthy, "--plan", plan, "--out", replay]) == 0
        with open(session) as f:
            simulated = json.load(f)
        with open(replay) as f:
            replayed = json.load(f)
        assert len(simulated["events"]) == 6
        assert simulated["events"] == replayed["events"]

        assert main(["-c", coarse_config, "report", session]) == 0
        speeds = pd.read_csv(out / "speed_report.csv")
        assert set(speeds["difficulty"]) == {"easy", "medium", "hard"}
        assert speeds["count"].sum() == 6
        assert (out / "speed_report.md").exists()

        assert main(["-c", coarse_config, "hull", healthy, "--band", "0,1"]) == 0
        mesh = read_obj(str(out / "hull.obj"))
        assert mesh.is_watertight()
        tier_hull = str(out / "easy.obj")
        assert main(["-c", coarse_config, "hull", healthy, "--tier", "easy", "--out", tier_hull]) == 0
        assert read_obj(tier_hull).volume() <= mesh.volume() + 1e-6

        assert main(["-c", coarse_config, "export-json", healthy]) == 0
        assert (out / "unrestricted.json").exists()

        capsys.readouterr()
        assert main(["info", healthy]) == 0
        assert "checksum:" in capsys.readouterr().out

    def test_labels_from_another_map_are_rejected(self, tmp_path, coarse_config, capsys):
        first = str(tmp_path / "a.rmap")
        second = str(tmp_path / "b.rmap")
        labels = str(tmp_path / "labels.json")
        assert main(["-c", coarse_config, "build-map", "--reachability-only", "--out", first]) == 0
        assert main([
            "-c", coarse_config, "build-map", "--reachability-only", "--voxel-edge", "0.2", "--out", second,
        ]) == 0
        assert main(["-c", coarse_config, "regions", first, "--out", labels]) == 0
        capsys.readouterr()
        assert main(["-c", coarse_config, "plan", second, labels]) == 1
        assert "error: IncompatibleMapsError" in capsys.readouterr().err


class TestInvalidInput:
    def _map_file(self, tmp_path, map_factory):
        path = str(tmp_path / "m.rmap")
        save_map(map_factory([0, 1, 2], [10, 5, 1]), path)
        return path

    def _error_lines(self, capsys):
        err = capsys.readouterr().err
        assert "Traceback" not in err
        return [line for line in err.splitlines() if line.startswith("error: ")]

    def test_rejected_user_model_is_one_line(self, tmp_path, coarse_config, map_factory, capsys):
        path = self._map_file(tmp_path, map_factory)
        capsys.readouterr()
        assert main([
            "-c", coarse_config, "simulate", path, "--base-speed", "-1", "--out", str(tmp_path / "s.json"),
        ]) == 1
        lines = self._error_lines(capsys)
        assert len(lines) == 1
        assert lines[0].startswith("error: InvalidArgumentError: ")
        assert "base_speed" in lines[0]

    def test_malformed_plan_is_one_line(self, tmp_path, coarse_config, map_factory, capsys):
        path = self._map_file(tmp_path, map_factory)
        plan = tmp_path / "plan.json"
        plan.write_text(json.dumps({"spawns": 3}))
        capsys.readouterr()
        assert main(["-c", coarse_config, "simulate", path, "--plan", str(plan)]) == 1
        lines = self._error_lines(capsys)
        assert len(lines) == 1
        assert lines[0].startswith("error: InvalidArgumentError: invalid SpawnPlan")


class TestSyntheticData:
    def test_profile_values_can_be_overridden(self, tmp_path, coarse_config):
        plain = tmp_path / "plain.jsonl"
        profiled = tmp_path / "profiled.jsonl"
        noisy = tmp_path / "noisy.jsonl"
        args = ["-c", coarse_config, "synth-recording", "--seed", "4", "--frames-per-segment", "40"]
        assert main(args + ["--out", str(plain)]) == 0
        assert main(args + ["--profile", "noisy", "--noise-sd", "0", "--outlier-rate", "0", "--out", str(profiled)]) == 0
        assert main(args + ["--profile", "noisy", "--out", str(noisy)]) == 0
        assert plain.read_bytes() == profiled.read_bytes()
        assert plain.read_bytes() != noisy.read_bytes()

    def test_unknown_profile(self, tmp_path, coarse_config):
        assert main(["-c", coarse_config, "synth-recording", "--profile", "blurry"]) == 2


class TestReportValidation:
    def test_overlapping_event_is_summarized(self, tmp_path, coarse_config):
        events = [
            BalloonEvent(position=(0.5, 0.0, 0.0), difficulty=Difficulty.EASY, t_spawn=0.0, t_pop=1.0),
            BalloonEvent(position=(0.5, 0.0, 0.0), difficulty=Difficulty.EASY, t_spawn=0.9, t_pop=2.0),
            BalloonEvent(position=(0.0, 0.5, 0.0), difficulty=Difficulty.HARD, t_spawn=3.0, t_pop=4.0),
        ]
        log = SessionLog(user_id="u1", condition=Condition.UNRESTRICTED, home=(0.0, 0.0, 0.0), events=events)
        path = str(tmp_path / "session.json")
        save_session_log(log, path)
        out = tmp_path / "report.csv"

        assert main(["-c", coarse_config, "report", path, "--out", str(out)]) == 0
        with open(tmp_path / "report.provenance.json") as f:
            parameters = json.load(f)["parameters"]
        assert parameters["validation"]["total"] == 1
        assert parameters["validation"]["by_category"] == {"consistency": 1}
        assert len(parameters["invalid_events"]) == 1
        assert pd.read_csv(out)["count"].sum() == 2
