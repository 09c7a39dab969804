"""Tests for the log-domain mixture martingale."""

import math

import numpy as np
import pytest
from scipy import integrate

from vae_conformal.errors import ContractViolation
from vae_conformal.icp import (
    log_martingale,
    martingale_from_log,
    power_martingale,
    single_pvalue_martingale,
)


class TestSinglePValue:
    @pytest.mark.parametrize("p", [0.01, 0.1, 0.5, 0.9, 1.0])
    def test_quadrature_matches_closed_form(self, p: float):
        expected = math.log(single_pvalue_martingale(p))
        assert log_martingale(np.array([p])) == pytest.approx(expected, rel=1e-6)

    def test_p_one_is_half(self):
        assert single_pvalue_martingale(1.0) == 0.5

    def test_out_of_range(self):
        with pytest.raises(ContractViolation):
            single_pvalue_martingale(0.0)


class TestLogMartingale:
    @pytest.mark.parametrize("n", [5, 10, 20])
    def test_converged_in_node_count(self, n: int):
        rng = np.random.default_rng(n)
        for _ in range(5):
            p = rng.uniform(0.05, 1.0, n)
            assert log_martingale(p, 1001) == pytest.approx(log_martingale(p, 10001), rel=1e-6)

    @pytest.mark.parametrize("n", [1, 5, 20])
    def test_all_ones(self, n: int):
        assert log_martingale(np.ones(n)) == pytest.approx(-math.log(n + 1), rel=1e-9)

    def test_smaller_p_values_raise_the_martingale(self):
        p = np.full(10, 0.4)
        assert log_martingale(p / 4) > log_martingale(p)

    def test_tiny_p_values_do_not_overflow(self):
        value = log_martingale(np.full(20, 1e-300))
        assert math.isfinite(value)
        assert value > 1000

    def test_uniform_p_values_stay_small(self):
        rng = np.random.default_rng(0)
        values = [log_martingale(rng.uniform(size=10)) for _ in range(500)]
        assert np.median(values) < 1.0

    @pytest.mark.parametrize("bad", [[0.0], [1.5], [0.5, -0.1], []])
    def test_invalid_inputs(self, bad: list[float]):
        with pytest.raises(ContractViolation):
            log_martingale(np.array(bad))

    def test_even_node_count_rejected(self):
        with pytest.raises(ContractViolation, match="odd"):
            log_martingale(np.array([0.5]), nodes=1000)


class TestMartingaleFromLog:
    def test_exp(self):
        assert martingale_from_log(math.log(3.0)) == pytest.approx(3.0)

    def test_overflow_is_inf(self):
        assert martingale_from_log(1000.0) == math.inf


class TestPowerMartingale:
    @pytest.mark.parametrize("epsilon", [0.6, 0.8, 1.0])
    def test_mean_one_under_uniform_p(self, epsilon: float):
        p = np.random.default_rng(11).uniform(size=100_000)
        p = np.clip(p, 1e-300, 1.0)
        assert power_martingale(p, epsilon).mean() == pytest.approx(1.0, abs=0.05)

    def test_epsilon_one_is_flat(self):
        np.testing.assert_allclose(power_martingale(np.array([0.1, 0.7]), 1.0), [1.0, 1.0])

    def test_integrates_to_closed_form(self):
        value, _ = integrate.quad(lambda e: power_martingale(np.array([0.2]), e)[0], 0.0, 1.0)
        assert value == pytest.approx(single_pvalue_martingale(0.2), rel=1e-6)

    @pytest.mark.parametrize(("p", "epsilon"), [(0.5, 0.0), (0.5, 1.2), (0.0, 0.8)])
    def test_out_of_range(self, p: float, epsilon: float):
        with pytest.raises(ContractViolation):
            power_martingale(np.array([p]), epsilon)
