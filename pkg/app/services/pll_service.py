import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from ..models.pll import LockReport, PidState, PllConfig, PllTrace

logger = logging.getLogger(__name__)

# Lock point on the rising slope of the interference fringe.
LOCK_PHASE = -math.pi / 2


class PllService:
    """Digital twin of the fiber phase lock: Wiener drift, tap monitor, discrete PID"""

    def monitor_power(self, phi_net: float, config: PllConfig) -> float:
        """Tapped interference power tap * Pmax * (1 + cos(phi)) / 2"""
        if not math.isfinite(phi_net):
            raise ValueError('Phase must be finite')
        return config.monitor_max * (1 + math.cos(phi_net)) / 2

    def drift_step(
        self, dt: float, diffusion: float, rng: np.random.Generator, size: Optional[int] = None
    ) -> Union[float, np.ndarray]:
        """Gaussian phase increment with variance diffusion * dt, or `size` independent ones"""
        if dt <= 0:
            raise ValueError(f'Time step must be positive, got {dt}')
        if size is not None:
            if diffusion == 0.0:
                return np.zeros(size)
            return rng.normal(0.0, math.sqrt(diffusion * dt), size)
        if diffusion == 0.0:
            return 0.0
        return float(rng.normal(0.0, math.sqrt(diffusion * dt)))

    def pid_update(self, error: float, state: PidState, config: PllConfig) -> Tuple[float, PidState]:
        """Control phase increment for one sample and the updated controller state

        error = setpoint - monitor_power, in watts. The integrator is clamped to
        +-integrator_clamp; the derivative term starts after the first sample.
        """
        dt = config.sample_interval
        integral = min(max(state.integral + error * dt, -config.integrator_clamp), config.integrator_clamp)
        derivative = (error - state.previous_error) / dt if state.primed else 0.0
        output = config.kp * error + config.ki * integral + config.kd * derivative
        return output, PidState.model_construct(integral=integral, previous_error=error, primed=True)

    def run_lock(
        self, config: PllConfig, duration: float, seed: int, initial_offset: float = 0.0
    ) -> Tuple[PllTrace, LockReport]:
        """Closed-loop simulation sampled every config.sample_interval

        The loop starts at the lock point, displaced by initial_offset radians.
        """
        if duration <= 0:
            raise ValueError(f'Duration must be positive, got {duration}')
        dt = config.sample_interval
        if duration < dt:
            raise ValueError(f'Duration {duration} s is shorter than one sample interval ({dt} s)')
        n = int(round(duration / dt))
        rng = np.random.default_rng(seed)

        setpoint = config.setpoint
        band = config.lock_band * setpoint
        top = config.monitor_max
        drift, control = 0.0, LOCK_PHASE + initial_offset
        state = PidState()

        t, drifts, controls, powers, locked = [], [], [], [], []
        for k in range(n):
            drift += self.drift_step(dt, config.drift_diffusion, rng)
            power = self.monitor_power(drift + control, config)
            if config.power_noise_std > 0:
                power += float(rng.normal(0.0, config.power_noise_std))
            power = min(max(power, 0.0), top)
            t.append(k * dt)
            drifts.append(drift)
            controls.append(control)
            powers.append(power)
            locked.append(abs(power - setpoint) <= band)
            u, state = self.pid_update(setpoint - power, state, config)
            control += u

        trace = PllTrace(t=t, drift_phase=drifts, control_phase=controls, monitor_power=powers, locked=locked)
        report = self.lock_report(trace, config, seed)
        logger.info(
            "PLL run seed=%d: relative std %.4f, %d relocks, locked %.3f",
            seed, report.relative_power_std, report.relock_events, report.locked_fraction,
        )
        return trace, report

    def lock_report(self, trace: PllTrace, config: PllConfig, seed: int) -> LockReport:
        power = np.array(trace.monitor_power)
        locked = np.array(trace.locked, dtype=bool)
        mean = float(power.mean())
        relative_std = float(power.std() / mean) if mean > 0 else float("inf")

        relocks = int(np.count_nonzero(~locked[:-1] & locked[1:]))
        longest, run = 0, 0
        for flag in locked:
            run = 0 if flag else run + 1
            longest = max(longest, run)
        max_unlock = longest * config.sample_interval
        return LockReport(
            relative_power_std=relative_std,
            mean_power=mean,
            setpoint=config.setpoint,
            locked_fraction=float(locked.mean()),
            relock_events=relocks,
            max_unlock_duration=max_unlock,
            relocks_within_timeout=max_unlock <= config.relock_timeout,
            seed=seed,
        )

    def unlocked_exit_time(
        self,
        config: PllConfig,
        band: float = 0.4,
        trials: int = 400,
        seed: int = 0,
        max_time: Optional[float] = None,
    ) -> float:
        """Mean time for the free-running power to leave +-band around the setpoint"""
        if not 0.0 < band < 1.0:
            raise ValueError(f'Band must be in (0, 1), got {band}')
        if config.drift_diffusion == 0.0:
            return float("inf")
        dt = config.sample_interval
        steps = int(round((max_time or 100 * band ** 2 / config.drift_diffusion) / dt))
        rng = np.random.default_rng(seed)
        phase = np.zeros(trials)
        exit_step = np.full(trials, steps, dtype=float)
        active = np.ones(trials, dtype=bool)
        for k in range(1, steps + 1):
            phase[active] += self.drift_step(dt, config.drift_diffusion, rng, int(active.sum()))
            # relative deviation of (1 + cos(LOCK_PHASE + phase)) from 1 is sin(phase)
            left = active & (np.abs(np.sin(phase)) > band)
            exit_step[left] = k
            active &= ~left
            if not active.any():
                break
        return float(exit_step.mean() * dt)
