from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PllConfig(BaseModel):
    """Phase-lock loop twin parameters

    Gains act on the power error in watts and return a control phase increment
    in radians. The default kp gives a loop gain
    kp * tap_ratio * max_power / 2 = 0.8 per sample.
    """
    kp: float = 1.45e4
    ki: float = 0.0
    kd: float = 0.0
    sample_interval: float = Field(0.1, gt=0.0)        # s
    drift_diffusion: float = Field(0.015, ge=0.0)      # rad^2 / s
    tap_ratio: float = Field(0.11, gt=0.0, lt=1.0)
    max_power: float = Field(1.0e-3, gt=0.0)           # W, interference maximum before the tap
    setpoint_fraction: float = Field(0.5, gt=0.0, lt=1.0)
    integrator_clamp: float = Field(1.0e-3, ge=0.0)    # bound on the integrated error, W*s
    lock_band: float = Field(0.15, gt=0.0, lt=1.0)
    relock_timeout: float = Field(2.0, gt=0.0)         # s
    power_noise_std: float = Field(0.0, ge=0.0)        # W, additive monitor noise

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def monitor_max(self) -> float:
        return self.tap_ratio * self.max_power

    @property
    def setpoint(self) -> float:
        return self.setpoint_fraction * self.monitor_max


class PidState(BaseModel):
    integral: float = 0.0
    previous_error: float = 0.0
    primed: bool = False  # True once previous_error holds a real sample

    model_config = ConfigDict(frozen=True)


class PllTrace(BaseModel):
    """Columnar per-sample record of a lock simulation"""
    t: List[float]
    drift_phase: List[float]
    control_phase: List[float]
    monitor_power: List[float]
    locked: List[bool]

    @model_validator(mode='after')
    def check_columns(self) -> "PllTrace":
        n = len(self.t)
        for name in ("drift_phase", "control_phase", "monitor_power", "locked"):
            if len(getattr(self, name)) != n:
                raise ValueError(f'Column {name} has {len(getattr(self, name))} samples, expected {n}')
        return self

    def __len__(self) -> int:
        return len(self.t)


class LockReport(BaseModel):
    relative_power_std: float
    mean_power: float
    setpoint: float
    locked_fraction: float
    relock_events: int
    max_unlock_duration: float
    relocks_within_timeout: bool
    seed: int
