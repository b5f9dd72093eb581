"""Balloon-pop speed analytics"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.core.error_handling import ErrorCollector, InvalidArgumentError, InvalidEventError
from src.core.models import (
    CONDITION_ORDER, DIFFICULTY_ORDER, Condition, Difficulty, InvalidEvent, SessionLog, SpeedCell, SpeedReport,
)

logger = logging.getLogger(__name__)

SPEED_COLUMNS = ["user", "condition", "difficulty", "mean_speed", "sd_speed", "count"]


def pop_speed(home: Sequence[float], balloon: Sequence[float], t_spawn: float, t_pop: float) -> float:
    """Straight-line home-to-balloon distance over the time to pop, m/s"""
    duration = t_pop - t_spawn
    if not duration > 0:
        raise InvalidEventError(f"pop at {t_pop} is not after spawn at {t_spawn}", t_spawn=t_spawn, t_pop=t_pop)
    distance = float(np.linalg.norm(np.asarray(balloon, dtype=float) - np.asarray(home, dtype=float)))
    return distance / duration


def session_speeds(log: SessionLog, collector: ErrorCollector) -> List[Tuple[Difficulty, float]]:
    """Speeds of the valid events of one log; invalid and overlapping events are recorded"""
    speeds = []
    last_pop = None
    for i, event in enumerate(log.events):
        try:
            if last_pop is not None and event.t_spawn < last_pop:
                raise InvalidEventError(
                    f"event {i} spawns at {event.t_spawn} before the previous pop at {last_pop}",
                    event_index=i,
                )
            speed = pop_speed(log.home, event.position, event.t_spawn, event.t_pop)
        except InvalidEventError as e:
            collector.record(e, user_id=log.user_id, condition=log.condition.value, event_index=i)
            continue
        speeds.append((event.difficulty, speed))
        last_pop = event.t_pop
    return speeds


def session_report(logs: Sequence[SessionLog]) -> SpeedReport:
    """Mean and population standard deviation of pop speed per (user, condition, difficulty)"""
    collector = ErrorCollector("session_report")
    grouped: Dict[Tuple[str, Condition, Difficulty], List[float]] = {}
    invalid: List[InvalidEvent] = []
    for log in logs:
        before = len(collector)
        for difficulty, speed in session_speeds(log, collector):
            grouped.setdefault((log.user_id, log.condition, difficulty), []).append(speed)
        for entry in collector.error_log[before:]:
            invalid.append(InvalidEvent(
                user_id=log.user_id, condition=log.condition,
                event_index=int(entry.context_data["event_index"]), reason=entry.message,
            ))

    users: List[str] = []
    for log in logs:
        if log.user_id not in users:
            users.append(log.user_id)
    cells = []
    for user in users:
        for condition in CONDITION_ORDER:
            for difficulty in DIFFICULTY_ORDER:
                values = grouped.get((user, condition, difficulty))
                if not values:
                    continue
                arr = np.asarray(values)
                cells.append(SpeedCell(
                    user_id=user, condition=condition, difficulty=difficulty,
                    mean_speed=float(np.mean(arr)), sd_speed=float(np.std(arr, ddof=0)), count=int(arr.size),
                ))
    if invalid:
        logger.warning(f"{len(invalid)} invalid events excluded from the report")
    return SpeedReport(cells=cells, invalid_events=invalid)


def report_frame(report: SpeedReport) -> pd.DataFrame:
    """Long form, one row per cell, for CSV output"""
    return pd.DataFrame(
        [
            {
                "user": c.user_id, "condition": c.condition.value, "difficulty": c.difficulty.value,
                "mean_speed": c.mean_speed, "sd_speed": c.sd_speed, "count": c.count,
            }
            for c in report.cells
        ],
        columns=SPEED_COLUMNS,
    )


def speed_table(report: SpeedReport) -> pd.DataFrame:
    """Users as rows, (condition, difficulty) column groups of mean speed"""
    columns = pd.MultiIndex.from_tuples(
        [(c.value, d.value) for c in CONDITION_ORDER for d in DIFFICULTY_ORDER],
        names=["condition", "difficulty"],
    )
    table = pd.DataFrame(index=pd.Index(report.users, name="user"), columns=columns, dtype=float)
    for c in report.cells:
        table.loc[c.user_id, (c.condition.value, c.difficulty.value)] = c.mean_speed
    return table


def condition_grid(report: SpeedReport, user_id: str) -> pd.DataFrame:
    """3x3 mean speeds of one user, conditions as rows and difficulties as columns"""
    grid = pd.DataFrame(
        index=[c.value for c in CONDITION_ORDER], columns=[d.value for d in DIFFICULTY_ORDER], dtype=float,
    )
    for c in report.cells:
        if c.user_id == user_id:
            grid.loc[c.condition.value, c.difficulty.value] = c.mean_speed
    return grid


def load_session_log(path: str) -> SessionLog:
    with open(path, "r") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"{path} is not valid JSON: {e}")
    try:
        return SessionLog(**document)
    except (ValidationError, TypeError) as e:
        raise InvalidArgumentError(f"{path} is not a session log: {e}")


def save_session_log(log: SessionLog, path: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(log.model_dump(mode="json"), f, indent=2)
    logger.info(f"Wrote session log with {len(log.events)} events to {path}")
