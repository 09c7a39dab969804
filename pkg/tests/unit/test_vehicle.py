"""Tests for kinematics, the braking law and the range estimator."""

import pytest

from vae_conformal.errors import ContractViolation
from vae_conformal.sim import (
    ControllerConfig,
    RangeEstimator,
    VehicleState,
    controller,
    step_vehicle,
)


class TestStepVehicle:
    def test_standstill(self):
        s = step_vehicle(VehicleState(distance=10.0, velocity=0.0, time_step=3), 8.0, 0.05)
        assert (s.distance, s.velocity, s.time_step) == (10.0, 0.0, 4)

    def test_braking_arithmetic(self):
        s = step_vehicle(VehicleState(distance=50.0, velocity=20.0), 8.0, 0.05)
        assert s.velocity == pytest.approx(19.6)
        assert s.distance == pytest.approx(49.0)

    def test_velocity_clamped(self):
        assert step_vehicle(VehicleState(50.0, 0.3), 8.0, 0.05).velocity == 0.0

    def test_distance_clamped(self):
        assert step_vehicle(VehicleState(0.5, 20.0), 0.0, 0.05).distance == 0.0

    @pytest.mark.parametrize("brake", [-0.1, 8.5])
    def test_brake_range(self, brake: float):
        with pytest.raises(ContractViolation):
            step_vehicle(VehicleState(10.0, 5.0), brake, 0.05)

    def test_negative_state_rejected(self):
        with pytest.raises(ContractViolation):
            VehicleState(distance=-1.0, velocity=0.0)


class TestController:
    def test_standstill_needs_no_brake(self):
        assert controller(50.0, 0.0, ControllerConfig()) == 0.0

    def test_clamped_to_max(self):
        assert controller(27.0, 20.0, ControllerConfig()) == pytest.approx(8.0)

    def test_required_deceleration(self):
        assert controller(52.0, 10.0, ControllerConfig()) == pytest.approx(1.0)

    def test_far_estimate_barely_brakes(self):
        assert controller(1e6, 20.0, ControllerConfig()) < 1e-3

    def test_holds_inside_target_gap(self):
        assert controller(1.5, 0.5, ControllerConfig()) == 8.0

    def test_overshoot_at_low_speed_comes_to_rest(self):
        cfg = ControllerConfig()
        state = VehicleState(distance=1.95, velocity=0.5)
        for _ in range(3):
            state = step_vehicle(state, controller(state.distance, state.velocity, cfg), 0.05)
        assert state.velocity == 0.0
        assert state.distance > cfg.l_min

    def test_zone_validation(self):
        with pytest.raises(ContractViolation):
            ControllerConfig(l_min=3.0, l_max=1.0)


class TestRangeEstimator:
    def test_perception_above_handoff(self):
        estimator = RangeEstimator(12.0)
        assert estimator.update(40.0, odometer=0.0) == 40.0
        assert not estimator.latched

    def test_odometry_after_handoff(self):
        estimator = RangeEstimator(12.0)
        assert estimator.update(11.0, odometer=60.0) == 11.0
        assert estimator.latched
        assert estimator.update(30.0, odometer=63.0) == pytest.approx(8.0)
        assert estimator.update(30.0, odometer=80.0) == 0.0

    def test_disabled(self):
        estimator = RangeEstimator(None)
        assert estimator.update(2.0, odometer=0.0) == 2.0
        assert not estimator.latched

    @pytest.mark.parametrize(("window", "error"), [(1, -2.0), (15, 0.0)])
    def test_latch_error_under_reading_noise(self, window: int, error: float):
        noise = [-2.0, -1.0, 0.0, 1.0, 2.0]
        estimator = RangeEstimator(12.0, window=window)
        for i in range(60):
            true = 30.0 - 0.5 * i
            estimate = estimator.update(true + noise[i % 5], odometer=0.5 * i)
            if estimator.latched:
                break
        assert estimator.latched
        assert estimate - true == pytest.approx(error, abs=1e-9)

    def test_readings_carried_forward_by_odometry(self):
        estimator = RangeEstimator(None, window=3)
        estimator.update(50.0, odometer=0.0)
        estimator.update(49.0, odometer=1.0)
        assert estimator.update(40.0, odometer=2.0) == pytest.approx(48.0)

    def test_window_validation(self):
        with pytest.raises(ContractViolation):
            RangeEstimator(12.0, window=0)
