"""Closed-loop braking episodes with the detector in the loop."""

from __future__ import annotations

import json
import re
import time
from dataclasses import asdict, dataclass, field, replace
import sys
if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # Python 3.10 fallback equivalent to enum.StrEnum for explicit string values
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ValidationError

from vae_conformal.attack import AttackConfig, fgsm
from vae_conformal.errors import ConfigError, ContractViolation, FormatError
from vae_conformal.icp import DetectorConfig
from vae_conformal.pipeline import DetectionStream, OfflineArtifacts
from vae_conformal.sim.dataset import NuisanceRanges
from vae_conformal.sim.scene import MAX_RANGE_M, SceneParams, render_scene
from vae_conformal.sim.vehicle import (
    ControllerConfig,
    RangeEstimator,
    VehicleState,
    controller,
    step_vehicle,
)

log = structlog.get_logger()

BASE_COLUMNS = ["t", "d_true", "d_pred", "v", "brake"]
TAIL_COLUMNS = ["log_m", "s", "alarm"]


class Outcome(StrEnum):
    STOPPED_IN_ZONE = "stopped_in_zone"
    STOPPED_SHORT = "stopped_short"
    STOPPED_PAST_ZONE = "stopped_past_zone"
    COLLISION = "collision"
    TIMEOUT = "timeout"
    HALTED_ON_ALARM = "halted_on_alarm"


@dataclass(frozen=True)
class EpisodeConfig:
    """One closed-loop run. ``v0``, ``brightness`` and ``noise_level`` are sampled when None."""

    d0: float = 100.0
    v0: float | None = None
    v0_range: tuple[float, float] = (25.0, 27.8)
    dt: float = 0.05
    max_steps: int = 400
    handoff_distance: float | None = 12.0
    estimator_window: int = 15
    image_side: int = 16
    brightness: float | None = None
    noise_level: float | None = None
    nuisance: NuisanceRanges = NuisanceRanges()
    control: ControllerConfig = ControllerConfig()
    attack: AttackConfig | None = None
    stop_on_alarm: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.control.l_max < self.d0 <= MAX_RANGE_M:
            raise ContractViolation(f"d0 must lie in (l_max, {MAX_RANGE_M}], got {self.d0}")
        if self.dt <= 0:
            raise ContractViolation("dt must be positive")
        if self.max_steps < 1:
            raise ContractViolation("max_steps must be at least 1")
        if self.estimator_window < 1:
            raise ContractViolation("estimator_window must be at least 1")
        if self.v0 is not None and self.v0 < 0:
            raise ContractViolation("v0 must be non-negative")
        low, high = self.v0_range
        if not 0 <= low <= high:
            raise ContractViolation(f"invalid v0_range {self.v0_range}")


@dataclass(frozen=True)
class StepRecord:
    t: int
    d_true: float
    d_pred: float
    d_est: float
    v: float
    brake: float
    p_values: tuple[float, ...]
    log_m: float
    s: float
    alarm: bool
    attacked: bool
    detect_ms: float


class EpisodeSummary(BaseModel):
    """Per-episode summary written next to the step CSV."""

    outcome: Outcome
    steps: int
    n: int
    tau: float
    first_alarm_step: int | None = None
    attack_start_step: int | None = None
    detection_delay: int | None = None
    alarm_count: int = 0
    final_distance: float
    final_velocity: float
    config: dict[str, Any] = {}


@dataclass
class EpisodeRecord:
    config: EpisodeConfig
    detector: DetectorConfig
    steps: list[StepRecord] = field(default_factory=list)
    outcome: Outcome = Outcome.TIMEOUT
    final_state: VehicleState | None = None

    @property
    def attack_start_step(self) -> int | None:
        return self.config.attack.start_step if self.config.attack is not None else None

    @property
    def alarm_steps(self) -> list[int]:
        return [r.t for r in self.steps if r.alarm]

    @property
    def first_alarm_step(self) -> int | None:
        alarms = self.alarm_steps
        return alarms[0] if alarms else None

    def first_alarm_after_onset(self) -> int | None:
        start = self.attack_start_step
        if start is None:
            return None
        return next((t for t in self.alarm_steps if t >= start), None)

    @property
    def detection_delay(self) -> int | None:
        hit = self.first_alarm_after_onset()
        return None if hit is None else hit - (self.attack_start_step or 0)

    def to_frame(self) -> pd.DataFrame:
        n = self.detector.n
        columns = BASE_COLUMNS + [f"p_{k}" for k in range(1, n + 1)] + TAIL_COLUMNS
        rows = [
            [r.t, r.d_true, r.d_pred, r.v, r.brake, *r.p_values, r.log_m, r.s, int(r.alarm)]
            for r in self.steps
        ]
        return pd.DataFrame(rows, columns=columns)

    def summary(self) -> EpisodeSummary:
        final = self.final_state
        return EpisodeSummary(
            outcome=self.outcome,
            steps=len(self.steps),
            n=self.detector.n,
            tau=self.detector.tau,
            first_alarm_step=self.first_alarm_step,
            attack_start_step=self.attack_start_step,
            detection_delay=self.detection_delay,
            alarm_count=len(self.alarm_steps),
            final_distance=final.distance if final else float("nan"),
            final_velocity=final.velocity if final else float("nan"),
            config={"episode": _jsonable(asdict(self.config)), "detector": asdict(self.detector)},
        )


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return value


def classify_stop(distance: float, cfg: ControllerConfig) -> Outcome:
    if distance > cfg.l_max:
        return Outcome.STOPPED_SHORT
    if distance < cfg.l_min:
        return Outcome.STOPPED_PAST_ZONE
    return Outcome.STOPPED_IN_ZONE


def episode_setup(cfg: EpisodeConfig, rng: np.random.Generator) -> tuple[float, SceneParams]:
    """Initial speed and scene nuisance of one episode; fixed values in ``cfg`` win."""
    v0 = cfg.v0 if cfg.v0 is not None else float(rng.uniform(*cfg.v0_range))
    sampled_noise, sampled_brightness = cfg.nuisance.sample(rng)
    scene = SceneParams(
        image_side=cfg.image_side,
        noise_level=cfg.noise_level if cfg.noise_level is not None else sampled_noise,
        brightness=cfg.brightness if cfg.brightness is not None else sampled_brightness,
    )
    return v0, scene


def run_episode(
    cfg: EpisodeConfig,
    artifacts: OfflineArtifacts | None,
    detector: DetectorConfig,
) -> EpisodeRecord:
    """Render, attack, detect, estimate, brake, integrate until stop, collision or timeout."""
    if artifacts is None:
        raise ConfigError("episode needs a trained model and calibration set")
    if artifacts.model.input_dim != cfg.image_side**2:
        raise ConfigError(
            f"model input_dim {artifacts.model.input_dim} "
            f"does not match image_side {cfg.image_side}"
        )

    setup_seq, frame_seq, detect_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    v0, scene = episode_setup(cfg, np.random.default_rng(setup_seq))
    frame_seeds = np.random.default_rng(frame_seq).integers(0, 2**63 - 1, size=cfg.max_steps)
    stream = DetectionStream(artifacts, detector, np.random.default_rng(detect_seq))
    estimator = RangeEstimator(cfg.handoff_distance, cfg.estimator_window)

    record = EpisodeRecord(config=cfg, detector=detector)
    state = VehicleState(distance=cfg.d0, velocity=v0)
    odometer = 0.0
    attack = cfg.attack
    log.debug("episode started", seed=cfg.seed, v0=v0, attack_start=record.attack_start_step)

    for t in range(cfg.max_steps):
        x = render_scene(state.distance, replace(scene, seed=int(frame_seeds[t])))
        attacked = attack is not None and t >= attack.start_step
        if attacked:
            x = fgsm(artifacts.model, x, attack).adversarial

        started = time.perf_counter()
        result = stream.step(x)
        detect_ms = (time.perf_counter() - started) * 1e3

        d_est = estimator.update(result.distance, odometer)
        brake = controller(d_est, state.velocity, cfg.control)
        record.steps.append(
            StepRecord(
                t=t,
                d_true=state.distance,
                d_pred=result.distance,
                d_est=d_est,
                v=state.velocity,
                brake=brake,
                p_values=tuple(float(p) for p in result.p_values),
                log_m=result.log_m,
                s=result.s,
                alarm=result.anomaly,
                attacked=attacked,
                detect_ms=detect_ms,
            )
        )
        if result.anomaly:
            log.debug("alarm raised", seed=cfg.seed, t=t, s=result.s)
            if cfg.stop_on_alarm:
                record.outcome = Outcome.HALTED_ON_ALARM
                break

        moved = step_vehicle(state, brake, cfg.dt, cfg.control.a_max)
        odometer += state.distance - moved.distance
        if moved.distance == 0.0 and state.velocity > 0.0:
            state = moved
            record.outcome = Outcome.COLLISION
            break
        state = moved
        if state.velocity == 0.0:
            record.outcome = classify_stop(state.distance, cfg.control)
            break

    record.final_state = state
    log.debug(
        "episode finished",
        seed=cfg.seed,
        outcome=str(record.outcome),
        steps=len(record.steps),
        first_alarm=record.first_alarm_step,
    )
    return record


def save_episode(record: EpisodeRecord, directory: Path, stem: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{stem}.csv"
    record.to_frame().to_csv(path, index=False, float_format="%.10g")
    (directory / f"{stem}.json").write_text(record.summary().model_dump_json(indent=2) + "\n")
    return path


_LINE = re.compile(r"line (\d+)")


def load_episode(csv_path: Path) -> tuple[pd.DataFrame, EpisodeSummary]:
    """Read a step CSV and its JSON summary; problems are reported with the offending line."""
    try:
        frame = pd.read_csv(csv_path)
    except pd.errors.EmptyDataError as e:
        raise FormatError(csv_path, "record file is empty", line=1) from e
    except pd.errors.ParserError as e:
        match = _LINE.search(str(e))
        raise FormatError(csv_path, str(e), line=int(match.group(1)) if match else None) from e

    columns = list(frame.columns)
    head, tail = columns[: len(BASE_COLUMNS)], columns[-len(TAIL_COLUMNS) :]
    if head != BASE_COLUMNS or tail != TAIL_COLUMNS:
        raise FormatError(csv_path, f"unexpected header {','.join(columns)}", line=1)
    for column in columns:
        numeric = pd.to_numeric(frame[column], errors="coerce")
        bad = numeric.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise FormatError(csv_path, f"bad value in column {column!r}", line=row + 2)
        frame[column] = numeric

    summary_path = csv_path.with_suffix(".json")
    try:
        summary = EpisodeSummary.model_validate(json.loads(summary_path.read_text()))
    except json.JSONDecodeError as e:
        raise FormatError(summary_path, e.msg, line=e.lineno) from e
    except ValidationError as e:
        raise FormatError(summary_path, str(e)) from e
    return frame, summary
