"""Tests for the offline calibration and the online detection step."""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from tests.helpers import TINY_SIDE
from vae_conformal.errors import ConfigError
from vae_conformal.icp import (
    CalibrationSet,
    StratifiedCalibration,
    DetectorConfig,
    DetectorState,
    alarm,
    cusum_update,
    log_martingale,
    nonconformity,
    p_values,
)
from vae_conformal.model import (
    ModelArchitecture,
    TrainingPhase,
    TrainingSchedule,
    predict_distance,
    sample_reconstructions,
)
from vae_conformal.pipeline import (
    TIMING_COLUMNS,
    DetectionStream,
    OfflineArtifacts,
    SplitSpec,
    measure_detection_time,
    offline,
    online_step,
)
from vae_conformal.sim import Dataset, generate_dataset

ONE_EPOCH = TrainingSchedule(phase1=TrainingPhase(1e-3, 1), phase2=TrainingPhase(1e-4, 0))


class TestSplitSpec:
    @pytest.mark.parametrize(("total", "proper"), [(10, 0), (10, 10), (10, 12)])
    def test_invalid(self, total: int, proper: int):
        with pytest.raises(ConfigError, match="split"):
            SplitSpec(total=total, proper=proper)

    def test_indices_partition(self):
        proper, calib = SplitSpec(total=20, proper=15, seed=3).indices()
        assert len(proper) == 15 and len(calib) == 5
        assert sorted(np.concatenate([proper, calib])) == list(range(20))

    def test_indices_seeded(self):
        a = SplitSpec(total=20, proper=15, seed=3).indices()
        b = SplitSpec(total=20, proper=15, seed=3).indices()
        np.testing.assert_array_equal(a[1], b[1])


class TestOffline:
    def test_calibration_size(self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture):
        artifacts = offline(
            tiny_dataset.images,
            tiny_dataset.labels,
            SplitSpec(60, 45),
            ONE_EPOCH,
            tiny_arch,
            seed=1,
        )
        assert artifacts.calibration.count == 15
        assert artifacts.calibration.p_floor == pytest.approx(1 / 15)
        assert len(artifacts.history) == 1

    def test_single_calibration_example(self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture):
        artifacts = offline(
            tiny_dataset.images, tiny_dataset.labels, SplitSpec(60, 59), ONE_EPOCH, tiny_arch
        )
        assert artifacts.calibration.count == 1
        p = p_values(np.array([0.0, 1e9]), artifacts.calibration)
        assert set(p) <= {1.0}

    def test_stratified_calibration_inputs(
        self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture
    ):
        frames = generate_dataset(30, image_side=TINY_SIDE, seed=9)
        artifacts = offline(
            tiny_dataset.images,
            tiny_dataset.labels,
            SplitSpec(60, 45),
            ONE_EPOCH,
            tiny_arch,
            strata=3,
            calibration_inputs=frames.images,
        )
        assert artifacts.calibration.count == 30
        assert artifacts.strata is not None
        assert [s.count for s in artifacts.strata.strata] == [10, 10, 10]

    def test_calibration_inputs_must_match_width(
        self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture
    ):
        with pytest.raises(ConfigError, match="calibration inputs"):
            offline(
                tiny_dataset.images,
                tiny_dataset.labels,
                SplitSpec(60, 45),
                ONE_EPOCH,
                tiny_arch,
                calibration_inputs=np.zeros((4, 3)),
            )

    def test_reproducible(self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture):
        split = SplitSpec(60, 45, seed=2)
        runs = [
            offline(tiny_dataset.images, tiny_dataset.labels, split, ONE_EPOCH, tiny_arch, seed=9)
            for _ in range(2)
        ]
        np.testing.assert_array_equal(runs[0].calibration.scores, runs[1].calibration.scores)

    def test_dataset_size_must_match(self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture):
        with pytest.raises(ConfigError, match="split expects"):
            offline(
                tiny_dataset.images, tiny_dataset.labels, SplitSpec(80, 60), ONE_EPOCH, tiny_arch
            )

    def test_custom_floor(self, tiny_dataset: Dataset, tiny_arch: ModelArchitecture):
        artifacts = offline(
            tiny_dataset.images,
            tiny_dataset.labels,
            SplitSpec(60, 45),
            ONE_EPOCH,
            tiny_arch,
            p_floor=0.001,
        )
        assert artifacts.calibration.p_floor == 0.001


class TestArtifactFiles:
    def test_save_and_load(self, tmp_path: Path, tiny_artifacts: OfflineArtifacts):
        artifacts = replace(tiny_artifacts, config={"seed": 3})
        artifacts.save(tmp_path)
        loaded = OfflineArtifacts.load(tmp_path)
        np.testing.assert_array_equal(loaded.calibration.scores, artifacts.calibration.scores)
        x = np.full(artifacts.model.input_dim, 0.3)
        assert predict_distance(loaded.model, x) == predict_distance(artifacts.model, x)
        assert loaded.config == {"seed": 3}

    def test_weights_are_byte_stable(self, tmp_path: Path, tiny_artifacts: OfflineArtifacts):
        tiny_artifacts.save(tmp_path / "a")
        tiny_artifacts.save(tmp_path / "b")
        a = (tmp_path / "a" / "weights.bin").read_bytes()
        assert a == (tmp_path / "b" / "weights.bin").read_bytes()

    def test_missing_artifacts(self, tmp_path: Path):
        with pytest.raises(FileNotFoundError, match="missing artifact"):
            OfflineArtifacts.load(tmp_path)

    def test_strata_round_trip(self, tmp_path: Path, tiny_artifacts: OfflineArtifacts):
        strata = StratifiedCalibration.from_predictions(
            np.arange(12.0), np.linspace(5.0, 100.0, 12), count=3
        )
        replace(tiny_artifacts, strata=strata).save(tmp_path)
        loaded = OfflineArtifacts.load(tmp_path, p_floor=0.01)
        assert loaded.strata is not None
        np.testing.assert_array_equal(loaded.strata.edges, strata.edges)
        for ours, theirs in zip(loaded.strata.strata, strata.strata):
            np.testing.assert_array_equal(ours.scores, theirs.scores)
            assert ours.p_floor == 0.01

    def test_pooled_artifacts_have_no_strata(
        self, tmp_path: Path, tiny_artifacts: OfflineArtifacts
    ):
        tiny_artifacts.save(tmp_path)
        assert not (tmp_path / "strata.bin").exists()
        assert OfflineArtifacts.load(tmp_path).strata is None


class TestOnlineStep:
    def test_first_step_has_no_alarm(self, tiny_artifacts: OfflineArtifacts):
        x = np.full(tiny_artifacts.model.input_dim, 0.2)
        state = DetectorState(DetectorConfig())
        result = online_step(x, tiny_artifacts, state, np.random.default_rng(0))
        assert not result.anomaly
        assert result.p_values.shape == (10,)
        assert result.distance == pytest.approx(predict_distance(tiny_artifacts.model, x))

    def test_deterministic(self, tiny_artifacts: OfflineArtifacts):
        x = np.full(tiny_artifacts.model.input_dim, 0.4)
        state = DetectorState(DetectorConfig(n=5), s=3.0)
        a = online_step(x, tiny_artifacts, state, np.random.default_rng(4))
        b = online_step(x, tiny_artifacts, state, np.random.default_rng(4))
        assert (a.anomaly, a.distance, a.state) == (b.anomaly, b.distance, b.state)
        assert a.log_m == b.log_m

    def test_matches_reference_composition(self, tiny_artifacts: OfflineArtifacts):
        x = np.random.default_rng(1).uniform(size=tiny_artifacts.model.input_dim)
        state = DetectorState(DetectorConfig(n=6, delta=2.0, tau=50.0), s=1.5)
        result = online_step(x, tiny_artifacts, state, np.random.default_rng(8))

        recon = sample_reconstructions(tiny_artifacts.model, x, 6, np.random.default_rng(8))
        p = p_values(np.array([nonconformity(x, r) for r in recon]), tiny_artifacts.calibration)
        expected = cusum_update(state, log_martingale(p))
        np.testing.assert_array_equal(result.p_values, p)
        assert result.state.s == expected.s
        assert result.anomaly == alarm(expected)

    def test_alarm_resets_statistic(self, tiny_artifacts: OfflineArtifacts):
        strict = OfflineArtifacts(
            model=tiny_artifacts.model, calibration=CalibrationSet.from_scores(np.zeros(40))
        )
        config = DetectorConfig(n=5, delta=0.5, tau=0.1)
        x = np.full(strict.model.input_dim, 0.5)
        result = online_step(x, strict, DetectorState(config), np.random.default_rng(0))
        assert result.anomaly
        assert result.s > config.tau
        assert result.state.s == 0.0

    def test_floor_override(self, tiny_artifacts: OfflineArtifacts):
        x = np.full(tiny_artifacts.model.input_dim, 1.0)
        config = DetectorConfig(n=4, p_floor=1e-4)
        strict = replace(tiny_artifacts, calibration=CalibrationSet.from_scores(np.zeros(40)))
        result = online_step(x, strict, DetectorState(config), np.random.default_rng(0))
        assert np.all(result.p_values == 1e-4)

    def test_uses_stratum_of_prediction(self, tiny_artifacts: OfflineArtifacts):
        x = np.full(tiny_artifacts.model.input_dim, 0.3)
        c = predict_distance(tiny_artifacts.model, x)
        tight = CalibrationSet.from_scores(np.zeros(20))
        loose = CalibrationSet.from_scores(np.full(20, 1e6))
        state = DetectorState(DetectorConfig(n=4))

        below = StratifiedCalibration(np.array([c + 1.0]), (tight, loose))
        artifacts = replace(tiny_artifacts, strata=below)
        result = online_step(x, artifacts, state, np.random.default_rng(0))
        assert np.all(result.p_values == 1 / 20)

        above = StratifiedCalibration(np.array([c - 1.0]), (tight, loose))
        artifacts = replace(tiny_artifacts, strata=above)
        result = online_step(x, artifacts, state, np.random.default_rng(0))
        assert np.all(result.p_values == 1.0)


class TestDetectionStream:
    def test_counts_alarms_and_keeps_state(self, tiny_artifacts: OfflineArtifacts):
        config = DetectorConfig(n=3, delta=0.01, tau=1e6)
        stream = DetectionStream(tiny_artifacts, config, np.random.default_rng(0))
        x = np.full(tiny_artifacts.model.input_dim, 0.5)
        first = stream.step(x)
        second = stream.step(x)
        assert stream.state == second.state
        assert stream.alarms == 0
        assert second.state.s >= 0.0
        assert first.state.config == stream.state.config


class TestDetectionTiming:
    def test_table(self, tiny_artifacts: OfflineArtifacts):
        inputs = np.random.default_rng(0).uniform(size=(3, tiny_artifacts.model.input_dim))
        frame = measure_detection_time(tiny_artifacts, inputs, [1, 4], repeats=2)
        assert list(frame.columns) == TIMING_COLUMNS
        assert list(frame["N"]) == [1, 4]
        assert np.all(frame["min_ms"] <= frame["median_ms"])
        assert np.all(frame["median_ms"] <= frame["max_ms"])
