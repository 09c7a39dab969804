"""Longitudinal kinematics, the scripted braking law and the range estimator."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from vae_conformal.errors import ContractViolation

A_MAX = 8.0
MIN_GAP = 0.1


@dataclass(frozen=True)
class VehicleState:
    distance: float
    velocity: float
    time_step: int = 0

    def __post_init__(self) -> None:
        if self.distance < 0 or self.velocity < 0:
            raise ContractViolation("distance and velocity must be non-negative")


@dataclass(frozen=True)
class ControllerConfig:
    l_min: float = 1.0
    l_max: float = 3.0
    a_max: float = A_MAX

    def __post_init__(self) -> None:
        if not 0 <= self.l_min < self.l_max:
            raise ContractViolation("stopping zone needs 0 <= l_min < l_max")
        if self.a_max <= 0:
            raise ContractViolation("a_max must be positive")

    @property
    def l_target(self) -> float:
        return 0.5 * (self.l_min + self.l_max)


def step_vehicle(
    s: VehicleState, brake_decel: float, dt: float, a_max: float = A_MAX
) -> VehicleState:
    if not 0.0 <= brake_decel <= a_max:
        raise ContractViolation(f"brake deceleration {brake_decel} outside [0, {a_max}]")
    return VehicleState(
        distance=max(0.0, s.distance - s.velocity * dt),
        velocity=max(0.0, s.velocity - brake_decel * dt),
        time_step=s.time_step + 1,
    )


def controller(d_est: float, v: float, cfg: ControllerConfig) -> float:
    """Constant-deceleration law v^2 / (2 (d_est - l_target)), clamped to [0, a_max].

    At or inside the target gap the controller holds full braking.
    """
    if v <= 0:
        return 0.0
    gap = d_est - cfg.l_target
    if gap <= 0:
        return cfg.a_max
    required = v * v / (2.0 * max(gap, MIN_GAP))
    return min(max(required, 0.0), cfg.a_max)


class RangeEstimator:
    """Median-filtered perception range, latched to odometry near the obstacle.

    Each reading is carried forward to the current step by the distance travelled since
    it was taken, and the estimate is the median over the last ``window`` of them. Once the
    estimate drops below ``handoff_distance`` it is frozen and dead-reckoned, since the
    renderer saturates below k / 0.95 m. ``handoff_distance=None`` keeps perception
    throughout and ``window=1`` uses the raw reading.
    """

    def __init__(self, handoff_distance: float | None, window: int = 1) -> None:
        if window < 1:
            raise ContractViolation(f"estimator window must be at least 1, got {window}")
        self.handoff_distance = handoff_distance
        self.window = window
        self._readings: deque[tuple[float, float]] = deque(maxlen=window)
        self._anchor: float | None = None
        self._odometer_at_anchor = 0.0

    @property
    def latched(self) -> bool:
        return self._anchor is not None

    def update(self, perceived: float, odometer: float) -> float:
        if self._anchor is not None:
            return max(0.0, self._anchor - (odometer - self._odometer_at_anchor))
        self._readings.append((perceived, odometer))
        estimate = float(np.median([d - (odometer - o) for d, o in self._readings]))
        if self.handoff_distance is not None and estimate < self.handoff_distance:
            self._anchor = estimate
            self._odometer_at_anchor = odometer
        return estimate
