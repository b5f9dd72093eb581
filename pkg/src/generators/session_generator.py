import logging
from typing import Optional, Sequence

import numpy as np

from src.analysis.regions import RegionLabels, plan_spawns
from src.core import constants
from src.core.capability_map import CapabilityMap
from src.core.models import BalloonEvent, Condition, SessionLog, SpawnPlan, UserModel


class SessionGenerator:
    """
    Simulates an exergame session on a capability map.

    Reaching speed grows with the score of the balloon's voxel:
    speed = max(eps, base_speed + score_gain * score + noise).
    """

    def __init__(self, user_model: UserModel, user_id: str = "simulated",
                 condition: Condition = Condition.UNRESTRICTED):
        self.user_model = user_model
        self.user_id = user_id
        self.condition = condition
        self.logger = logging.getLogger(__name__)

    def events_for(self, plan: SpawnPlan, seed: int):
        rng = np.random.default_rng([seed, 1])
        home = np.asarray(plan.home)
        events = []
        clock = 0.0
        for spawn in plan.spawns:
            noise = self.user_model.noise_sd * rng.standard_normal()
            speed = max(
                constants.MIN_SIMULATED_SPEED,
                self.user_model.base_speed + self.user_model.score_gain * spawn.score + noise,
            )
            distance = float(np.linalg.norm(np.asarray(spawn.position) - home))
            duration = max(distance / speed, constants.MIN_EVENT_DURATION)
            events.append(BalloonEvent(
                position=spawn.position, difficulty=spawn.difficulty,
                t_spawn=clock, t_pop=clock + duration,
            ))
            clock += duration + constants.INTER_BALLOON_GAP
        return events

    def simulate_plan(self, plan: SpawnPlan, seed: int) -> SessionLog:
        """Replay an existing spawn plan"""
        events = self.events_for(plan, seed)
        self.logger.info(f"Simulated {len(events)} balloons for {self.user_id} ({self.condition.value})")
        return SessionLog(
            user_id=self.user_id, condition=self.condition, home=plan.home, events=events,
            provenance={
                "seed": seed, "per_tier": plan.per_tier, "d_min": plan.d_min,
                "user_model": self.user_model.model_dump(),
            },
        )

    def simulate(self, cmap: CapabilityMap, labels: RegionLabels, home: Sequence[float], per_tier: int,
                 seed: int, d_min: float = constants.DEFAULT_D_MIN) -> SessionLog:
        return self.simulate_plan(plan_spawns(cmap, labels, home, per_tier, d_min, seed), seed)


def simulate_session(cmap: CapabilityMap, labels: RegionLabels, home: Sequence[float], user_model: UserModel,
                     per_tier: int, seed: int, d_min: float = constants.DEFAULT_D_MIN,
                     user_id: str = "simulated", condition: Optional[Condition] = None) -> SessionLog:
    if condition is None:
        known = {c.value for c in Condition}
        condition = Condition(cmap.metadata.condition) if cmap.metadata.condition in known else Condition.UNRESTRICTED
    return SessionGenerator(user_model, user_id, condition).simulate(cmap, labels, home, per_tier, seed, d_min)
