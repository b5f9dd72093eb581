from typing import Dict

import numpy as np
from pydantic import BaseModel, Field


class TrackingNoise(BaseModel):
    """Data quality issues of a skeleton tracker: joint jitter and spiked angle frames"""

    position_sd: float = Field(default=0.0, ge=0, description="isotropic Gaussian joint noise, meters")
    outlier_rate: float = Field(default=0.0, ge=0, le=1, description="fraction of frames spiked per segment")
    outlier_angle_deg: float = Field(default=170.0, ge=-180, le=180)

    @classmethod
    def from_profile(cls, name: str) -> "TrackingNoise":
        return cls(**TRACKING_PROFILES[name])

    def outlier_frames(self, n_frames: int, rng: np.random.Generator) -> np.ndarray:
        """Frame positions to spike, a fixed count of round(rate * n) drawn without replacement"""
        count = int(round(self.outlier_rate * n_frames))
        if count == 0:
            return np.zeros(0, dtype=np.int64)
        return np.sort(rng.choice(n_frames, size=count, replace=False))

    def jitter(self, positions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.position_sd == 0.0:
            return np.array(positions, dtype=float)
        return positions + rng.normal(0.0, self.position_sd, size=positions.shape)


TRACKING_PROFILES: Dict[str, Dict[str, float]] = {
    'clean': {'position_sd': 0.0, 'outlier_rate': 0.0},
    'realistic': {'position_sd': 0.005, 'outlier_rate': 0.01},
    'noisy': {'position_sd': 0.015, 'outlier_rate': 0.02},
}
