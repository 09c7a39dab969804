"""Tests for the CUSUM detector state."""

import pytest

from vae_conformal.errors import ContractViolation
from vae_conformal.icp import DetectorConfig, DetectorState, alarm, cusum_update, reset

TABLE_ROWS = [(5, 6, 6), (5, 7, 23), (10, 10, 62), (10, 12, 80), (20, 18, 120), (20, 20, 280)]


class TestDetectorConfig:
    @pytest.mark.parametrize(("n", "delta", "tau"), TABLE_ROWS)
    def test_published_settings_accepted(self, n: int, delta: float, tau: float):
        config = DetectorConfig(n=n, delta=delta, tau=tau)
        assert (config.n, config.delta, config.tau) == (n, delta, tau)

    @pytest.mark.parametrize(
        "kwargs",
        [{"n": 0}, {"delta": 0.0}, {"tau": -1.0}, {"p_floor": 0.0}, {"quadrature_nodes": 4}],
    )
    def test_invalid_settings(self, kwargs: dict):
        with pytest.raises(ContractViolation):
            DetectorConfig(**kwargs)


class TestCusum:
    def test_accumulates_above_drift(self):
        state = cusum_update(DetectorState(DetectorConfig(delta=12.0)), 20.0)
        assert state.s == pytest.approx(8.0)

    def test_clamped_at_zero(self):
        state = cusum_update(DetectorState(DetectorConfig(delta=12.0), s=3.0), -4.0)
        assert state.s == 0.0

    def test_alarm_is_strict(self):
        config = DetectorConfig(tau=80.0)
        assert not alarm(DetectorState(config, s=80.0))
        assert alarm(DetectorState(config, s=80.5))

    def test_reset(self):
        state = reset(DetectorState(DetectorConfig(), s=99.0))
        assert state.s == 0.0

    def test_input_state_unchanged(self):
        state = DetectorState(DetectorConfig(delta=1.0), s=2.0)
        cusum_update(state, 5.0)
        assert state.s == 2.0

    def test_raw_statistic(self):
        config = DetectorConfig(delta=1.0, statistic="raw")
        state = cusum_update(DetectorState(config), 0.0)
        assert state.s == 0.0
        state = cusum_update(DetectorState(config), 2.0)
        assert state.s == pytest.approx(2.718281828459045**2 - 1.0)

    def test_sustained_evidence_raises_alarm(self):
        state = DetectorState(DetectorConfig(n=10, delta=12.0, tau=80.0))
        steps = 0
        while not alarm(state):
            state = cusum_update(state, 30.0)
            steps += 1
        assert steps == 5
