import numpy as np
import pytest

from src.analysis.regions import classify_regions, plan_spawns
from src.analysis.session_report import (
    SPEED_COLUMNS, condition_grid, load_session_log, pop_speed, report_frame, save_session_log,
    session_report, speed_table,
)
from src.core.error_handling import InvalidEventError
from src.core.models import BalloonEvent, Condition, Difficulty, SessionLog, UserModel
from src.core.validation import DataValidator
from src.generators.session_generator import SessionGenerator, simulate_session

HOME = (0.0, 0.0, 0.0)


def log_from_speeds(speeds, difficulty=Difficulty.EASY, condition=Condition.UNRESTRICTED, user_id="u1",
                    distance=0.5):
    events = []
    clock = 0.0
    for speed in speeds:
        duration = distance / speed
        events.append(BalloonEvent(
            position=(distance, 0.0, 0.0), difficulty=difficulty, t_spawn=clock, t_pop=clock + duration,
        ))
        clock += duration + 1.0
    return SessionLog(user_id=user_id, condition=condition, home=HOME, events=events)


class TestPopSpeed:
    def test_distance_over_duration(self):
        assert pop_speed(HOME, (0.3, 0.4, 0.0), 2.0, 3.0) == pytest.approx(0.5)

    def test_balloon_at_home(self):
        assert pop_speed(HOME, HOME, 0.0, 1.0) == 0.0

    def test_scale_consistent(self):
        assert pop_speed(HOME, (0.2, 0.0, 0.0), 0.0, 0.4) == pytest.approx(pop_speed(HOME, (0.4, 0.0, 0.0), 0.0, 0.8))

    def test_non_positive_duration(self):
        with pytest.raises(InvalidEventError):
            pop_speed(HOME, (1.0, 0.0, 0.0), 1.0, 1.0)


class TestSessionReport:
    def test_empty(self):
        report = session_report([])
        assert report.cells == []
        assert report.total_count == 0

    def test_cell_mean_of_ten_events(self):
        speeds = [0.56, 0.61, 0.70, 0.66, 0.72, 0.59, 0.64, 0.71, 0.68, 0.73]
        assert np.mean(speeds) == pytest.approx(0.66)
        report = session_report([log_from_speeds(speeds)])
        cell = report.cell("u1", Condition.UNRESTRICTED, Difficulty.EASY)
        assert abs(cell.mean_speed - 0.66) <= 1e-9
        assert cell.count == 10

    def test_matches_hand_computed_statistics(self):
        rng = np.random.default_rng(9)
        logs = []
        expected = {}
        for condition in Condition:
            for difficulty in Difficulty:
                speeds = rng.uniform(0.2, 1.0, size=10)
                logs.append(log_from_speeds(speeds, difficulty, condition))
                measured = [0.5 / (0.5 / s) for s in speeds]
                expected[(condition, difficulty)] = (np.mean(measured), np.std(measured))
        report = session_report(logs)
        assert len(report.cells) == 9
        for (condition, difficulty), (mean, sd) in expected.items():
            cell = report.cell("u1", condition, difficulty)
            assert abs(cell.mean_speed - mean) <= 1e-12
            assert abs(cell.sd_speed - sd) <= 1e-12

    def test_single_event_cell(self):
        report = session_report([log_from_speeds([0.4])])
        cell = report.cells[0]
        assert cell.mean_speed == pytest.approx(0.4)
        assert cell.sd_speed == 0.0

    def test_invalid_events_listed_and_excluded(self):
        log = log_from_speeds([0.5, 0.5, 0.5])
        events = list(log.events)
        events[1] = BalloonEvent(position=(0.5, 0.0, 0.0), difficulty=Difficulty.EASY,
                                 t_spawn=events[1].t_spawn, t_pop=events[1].t_spawn)
        log = SessionLog(user_id="u1", condition=Condition.UNRESTRICTED, home=HOME, events=events)
        report = session_report([log])
        assert report.total_count == 2
        assert len(report.invalid_events) == 1
        assert report.invalid_events[0].event_index == 1

    def test_overlapping_event_is_invalid(self):
        log = log_from_speeds([0.5, 0.5])
        events = list(log.events)
        events[1] = BalloonEvent(position=(0.5, 0.0, 0.0), difficulty=Difficulty.EASY,
                                 t_spawn=events[0].t_pop - 0.1, t_pop=events[0].t_pop + 1.0)
        log = SessionLog(user_id="u1", condition=Condition.UNRESTRICTED, home=HOME, events=events)
        report = session_report([log])
        assert report.total_count == 1
        assert report.invalid_events[0].event_index == 1
        assert len(DataValidator().validate_session_log(log)) == 1

    def test_tables(self):
        logs = [
            log_from_speeds([0.6, 0.8], Difficulty.EASY, Condition.UNRESTRICTED),
            log_from_speeds([0.3], Difficulty.HARD, Condition.RESTRICTED),
            log_from_speeds([0.5], Difficulty.EASY, Condition.UNRESTRICTED, user_id="u2"),
        ]
        report = session_report(logs)
        frame = report_frame(report)
        assert list(frame.columns) == SPEED_COLUMNS
        assert len(frame) == 3
        assert report.users == ["u1", "u2"]

        table = speed_table(report)
        assert table.shape == (2, 9)
        assert table.loc["u1", ("unrestricted", "easy")] == pytest.approx(0.7)
        assert np.isnan(table.loc["u2", ("restricted", "hard")])

        grid = condition_grid(report, "u1")
        assert grid.shape == (3, 3)
        assert grid.loc["restricted", "hard"] == pytest.approx(0.3)

    def test_log_file_round_trip(self, tmp_path):
        log = log_from_speeds([0.5, 0.7])
        path = str(tmp_path / "session.json")
        save_session_log(log, path)
        assert load_session_log(path) == log


class TestSimulation:
    def setup_method(self):
        self.home = (-1.0, -1.0, -1.0)

    def _map(self, map_factory, condition):
        indices = np.arange(0, 900, 10)
        numerators = np.arange(indices.size) % 10 + 1
        return map_factory(indices, numerators, condition=condition)

    def test_constant_speed_without_noise_or_gain(self, map_factory):
        cmap = self._map(map_factory, "unrestricted")
        labels = classify_regions(cmap)
        model = UserModel(base_speed=0.8, score_gain=0.0, noise_sd=0.0)
        log = simulate_session(cmap, labels, self.home, model, per_tier=4, seed=3)
        assert len(log.events) == 12
        for event in log.events:
            speed = pop_speed(log.home, event.position, event.t_spawn, event.t_pop)
            assert speed == pytest.approx(0.8, rel=1e-12)

    def test_same_seed_same_log(self, map_factory):
        cmap = self._map(map_factory, "unrestricted")
        labels = classify_regions(cmap)
        model = UserModel(base_speed=0.6, score_gain=0.2, noise_sd=0.05)
        first = simulate_session(cmap, labels, self.home, model, per_tier=3, seed=11)
        second = simulate_session(cmap, labels, self.home, model, per_tier=3, seed=11)
        assert first == second

    def test_events_do_not_overlap(self, map_factory):
        cmap = self._map(map_factory, "unrestricted")
        model = UserModel(base_speed=0.6, score_gain=0.2, noise_sd=0.3)
        log = simulate_session(cmap, classify_regions(cmap), self.home, model, per_tier=5, seed=2)
        assert DataValidator().validate_session_log(log) == []
        assert session_report([log]).invalid_events == []

    def test_condition_taken_from_map(self, map_factory):
        cmap = self._map(map_factory, "restricted")
        model = UserModel(base_speed=0.6)
        log = simulate_session(cmap, classify_regions(cmap), self.home, model, per_tier=2, seed=1)
        assert log.condition == Condition.RESTRICTED

    def test_monotone_trend(self, map_factory):
        base_speeds = {
            Condition.UNRESTRICTED: 1.0,
            Condition.PARTIALLY_RESTRICTED: 0.7,
            Condition.RESTRICTED: 0.4,
        }
        logs = []
        for condition, base_speed in base_speeds.items():
            cmap = self._map(map_factory, condition.value)
            generator = SessionGenerator(UserModel(base_speed=base_speed, score_gain=0.1), "sim", condition)
            logs.append(generator.simulate(cmap, classify_regions(cmap), self.home, per_tier=10, seed=4))

        grid = condition_grid(session_report(logs), "sim").to_numpy()
        assert np.all(np.diff(grid, axis=1) <= 0)
        assert np.all(np.diff(grid, axis=0) <= 0)

    def test_replayed_plan(self, map_factory):
        cmap = self._map(map_factory, "unrestricted")
        labels = classify_regions(cmap)
        generator = SessionGenerator(UserModel(base_speed=0.6, score_gain=0.2), "sim")
        log = generator.simulate(cmap, labels, self.home, per_tier=3, seed=8, d_min=0.15)
        plan = plan_spawns(cmap, labels, self.home, 3, 0.15, 8)
        assert generator.simulate_plan(plan, 8) == log
