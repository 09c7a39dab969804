"""Offline phase: split, train on the proper set, score the calibration set."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import structlog

from vae_conformal.errors import ConfigError, FormatError
from vae_conformal.icp import (
    CalibrationSet,
    StratifiedCalibration,
    load_calibration,
    load_strata,
    nonconformity,
    save_calibration,
    save_strata,
)
from vae_conformal.model import (
    EpochRecord,
    ModelArchitecture,
    TrainingResult,
    TrainingSchedule,
    VaeRegressionModel,
    build_model,
    predict_distance,
    sample_reconstructions,
    train,
)
from vae_conformal.nn import load_tensors, save_tensors

log = structlog.get_logger()

WEIGHTS_FILE = "weights.bin"
CALIBRATION_FILE = "calibration.txt"
ECHO_FILE = "artifacts.json"
STRATA_FILE = "strata.bin"


@dataclass(frozen=True)
class SplitSpec:
    total: int
    proper: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.proper < self.total:
            raise ConfigError(
                f"split needs 0 < proper < total, got proper={self.proper} total={self.total}"
            )

    @property
    def calibration(self) -> int:
        return self.total - self.proper

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(proper, calibration) index arrays of one seeded shuffle."""
        order = np.random.default_rng(self.seed).permutation(self.total)
        return order[: self.proper], order[self.proper :]


@dataclass(frozen=True)
class OfflineArtifacts:
    model: VaeRegressionModel
    calibration: CalibrationSet
    config: dict[str, Any] = field(default_factory=dict)
    history: tuple[EpochRecord, ...] = ()
    strata: StratifiedCalibration | None = None

    def calibration_for(self, prediction: float, p_floor: float | None = None) -> CalibrationSet:
        """Scores to compare against: the stratum of ``prediction`` when stratified."""
        calib = self.calibration if self.strata is None else self.strata.select(prediction)
        if p_floor is None or p_floor == calib.p_floor:
            return calib
        return replace(calib, p_floor=p_floor)

    def save(self, directory: Path) -> None:
        directory.mkdir(parents=True, exist_ok=True)
        save_tensors(directory / WEIGHTS_FILE, self.model.to_tensors())
        save_calibration(directory / CALIBRATION_FILE, self.calibration)
        if self.strata is not None:
            save_strata(directory / STRATA_FILE, self.strata)
        (directory / ECHO_FILE).write_text(json.dumps(self.config, indent=2, sort_keys=True) + "\n")
        log.info("artifacts saved", directory=str(directory), calibration=self.calibration.count)

    @classmethod
    def load(cls, directory: Path, p_floor: float | None = None) -> OfflineArtifacts:
        for name in (WEIGHTS_FILE, CALIBRATION_FILE):
            if not (directory / name).exists():
                raise FileNotFoundError(f"missing artifact {name} in {directory}")
        model = VaeRegressionModel.from_tensors(load_tensors(directory / WEIGHTS_FILE))
        calibration = load_calibration(directory / CALIBRATION_FILE, p_floor)
        strata_path = directory / STRATA_FILE
        strata = load_strata(strata_path, p_floor) if strata_path.exists() else None
        echo: dict[str, Any] = {}
        echo_path = directory / ECHO_FILE
        if echo_path.exists():
            try:
                echo = json.loads(echo_path.read_text())
            except json.JSONDecodeError as e:
                raise FormatError(echo_path, e.msg, line=e.lineno) from e
        return cls(model=model, calibration=calibration, config=echo, strata=strata)

    def history_frame(self) -> pd.DataFrame:
        return TrainingResult(self.model, list(self.history)).history_frame()


def calibration_scores(
    model: VaeRegressionModel, x: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One sampled reconstruction per calibration example, scored by squared error."""
    return np.array(
        [nonconformity(xj, sample_reconstructions(model, xj, 1, rng)[0]) for xj in x]
    )


def offline(
    x: np.ndarray,
    y: np.ndarray,
    split: SplitSpec,
    schedule: TrainingSchedule,
    architecture: ModelArchitecture,
    seed: int = 0,
    p_floor: float | None = None,
    config: dict[str, Any] | None = None,
    strata: int = 1,
    calibration_inputs: np.ndarray | None = None,
) -> OfflineArtifacts:
    """Train on the proper split, then score the calibration inputs.

    ``calibration_inputs`` replaces the held-out split as the calibration source.
    With ``strata > 1`` the scores are also banded by predicted distance.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] != split.total or y.shape[0] != split.total:
        raise ConfigError(f"dataset has {x.shape[0]} examples but the split expects {split.total}")
    if x.shape[1] != architecture.input_dim:
        raise ConfigError(
            f"input dimension {x.shape[1]} != model input_dim {architecture.input_dim}"
        )

    if calibration_inputs is not None and np.atleast_2d(calibration_inputs).shape[1] != x.shape[1]:
        raise ConfigError("calibration inputs do not match the dataset input dimension")

    init_rng, calib_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    proper, held_out = split.indices()
    log.info("offline phase started", proper=split.proper, calibration=split.calibration, seed=seed)

    result = train(build_model(architecture, init_rng), x[proper], y[proper], schedule)
    calib_x = x[held_out] if calibration_inputs is None else np.atleast_2d(calibration_inputs)
    scores = calibration_scores(result.model, calib_x, calib_rng)
    calibration = CalibrationSet.from_scores(scores, p_floor)
    banded = None
    if strata > 1:
        predictions = np.atleast_1d(predict_distance(result.model, calib_x))
        banded = StratifiedCalibration.from_predictions(scores, predictions, strata, p_floor)
    log.info(
        "calibration computed",
        count=calibration.count,
        strata=strata,
        median_score=float(np.median(calibration.scores)),
    )
    return OfflineArtifacts(
        model=result.model,
        calibration=calibration,
        config=dict(config or {}),
        history=tuple(result.history),
        strata=banded,
    )
