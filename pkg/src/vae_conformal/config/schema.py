from __future__ import annotations

from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from vae_conformal.attack import AttackConfig
from vae_conformal.icp import DEFAULT_NODES, DetectorConfig
from vae_conformal.model import ModelArchitecture, TrainingPhase, TrainingSchedule
from vae_conformal.sim import ControllerConfig, EpisodeConfig, NuisanceRanges
from vae_conformal.sim.scene import MAX_RANGE_M

SEED_STREAMS = ("data", "train", "episodes", "attack", "validation", "calibration")


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSection(Section):
    count: int = 2000
    label_low: float = 2.0
    label_high: float = 110.0

    @field_validator("count")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("'count' must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_range(self) -> DatasetSection:
        if not 0.0 <= self.label_low < self.label_high <= MAX_RANGE_M:
            raise ValueError(f"label range must satisfy 0 <= low < high <= {MAX_RANGE_M}")
        return self


class SceneSection(Section):
    image_side: int = 16
    noise_level: tuple[float, float] = (0.0, 0.3)
    brightness: tuple[float, float] = (0.5, 1.0)

    @field_validator("image_side")
    @classmethod
    def validate_side(cls, v: int) -> int:
        if v < 8:
            raise ValueError("'image_side' must be at least 8")
        return v

    @field_validator("noise_level")
    @classmethod
    def validate_noise(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not 0.0 <= v[0] <= v[1] <= 1.0:
            raise ValueError("'noise_level' must be an ordered range within [0, 1]")
        return v

    @field_validator("brightness")
    @classmethod
    def validate_brightness(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not 0.5 <= v[0] <= v[1] <= 1.0:
            raise ValueError("'brightness' must be an ordered range within [0.5, 1]")
        return v

    def to_nuisance(self) -> NuisanceRanges:
        return NuisanceRanges(noise_level=self.noise_level, brightness=self.brightness)


class SplitSection(Section):
    proper: int = 1600
    seed: int = 0

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError("'seed' must be non-negative")
        return v


class CalibrationSection(Section):
    """Where calibration scores come from and how they are banded.

    ``split`` scores the held-out part of the dataset. ``trajectories`` scores frames
    sampled along nominal braking runs instead.
    """

    source: Literal["split", "trajectories"] = "split"
    trajectories: int = 240
    frames_per_trajectory: int = 10
    strata: int = 1

    @field_validator("trajectories", "frames_per_trajectory", "strata")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v


class ModelSection(Section):
    latent_dim: int = 4
    hidden_dim: int = 64
    head_dim: int = 32
    anchored: bool = True

    @field_validator("latent_dim", "hidden_dim", "head_dim")
    @classmethod
    def validate_width(cls, v: int) -> int:
        if v < 1:
            raise ValueError("layer widths must be positive")
        return v


class PhaseSection(Section):
    learning_rate: float
    epochs: int

    @model_validator(mode="after")
    def validate_phase(self) -> PhaseSection:
        TrainingPhase(self.learning_rate, self.epochs)
        return self


class ScheduleSection(Section):
    phase1: PhaseSection = PhaseSection(learning_rate=1e-3, epochs=60)
    phase2: PhaseSection = PhaseSection(learning_rate=1e-4, epochs=20)
    batch_size: int = 64
    label_prior_std: float = 0.05

    @model_validator(mode="after")
    def validate_schedule(self) -> ScheduleSection:
        self.to_schedule(seed=0)
        return self

    def to_schedule(self, seed: int) -> TrainingSchedule:
        return TrainingSchedule(
            phase1=TrainingPhase(self.phase1.learning_rate, self.phase1.epochs),
            phase2=TrainingPhase(self.phase2.learning_rate, self.phase2.epochs),
            batch_size=self.batch_size,
            seed=seed,
            label_prior_std=self.label_prior_std,
        )


class DetectorSection(Section):
    n: int = 10
    delta: float = 12.0
    tau: float = 80.0
    p_floor: float | None = None
    quadrature_nodes: int = DEFAULT_NODES
    statistic: Literal["log", "raw"] = "log"

    @model_validator(mode="after")
    def validate_detector(self) -> DetectorSection:
        self.to_detector()
        return self

    def to_detector(self) -> DetectorConfig:
        return DetectorConfig(**self.model_dump())


class AttackSection(Section):
    fgsm_epsilon: float = 0.02
    y_target: float | None = None
    iterations: int = 1
    start_range: tuple[int, int] = (20, 60)

    @model_validator(mode="after")
    def validate_attack(self) -> AttackSection:
        low, high = self.start_range
        if not 0 <= low <= high:
            raise ValueError("'start_range' must be an ordered range of non-negative steps")
        self.to_attack(start_step=low, default_target=0.0)
        return self

    def to_attack(self, start_step: int, default_target: float) -> AttackConfig:
        return AttackConfig(
            fgsm_epsilon=self.fgsm_epsilon,
            y_target=self.y_target if self.y_target is not None else default_target,
            start_step=start_step,
            iterations=self.iterations,
        )


class EpisodeSection(Section):
    d0: float = 100.0
    v0_range: tuple[float, float] = (25.0, 27.8)
    dt: float = 0.05
    l_min: float = 1.0
    l_max: float = 3.0
    a_max: float = 8.0
    max_steps: int = 400
    handoff_distance: float | None = 12.0
    estimator_window: int = 15

    @model_validator(mode="after")
    def validate_episode(self) -> EpisodeSection:
        self.to_episode(SceneSection())
        return self

    def to_episode(
        self,
        scene: SceneSection,
        seed: int = 0,
        attack: AttackConfig | None = None,
        stop_on_alarm: bool = False,
    ) -> EpisodeConfig:
        return EpisodeConfig(
            d0=self.d0,
            v0_range=self.v0_range,
            dt=self.dt,
            max_steps=self.max_steps,
            handoff_distance=self.handoff_distance,
            estimator_window=self.estimator_window,
            image_side=scene.image_side,
            nuisance=scene.to_nuisance(),
            control=ControllerConfig(l_min=self.l_min, l_max=self.l_max, a_max=self.a_max),
            attack=attack,
            stop_on_alarm=stop_on_alarm,
            seed=seed,
        )


class ExperimentSection(Section):
    episodes: int = 100
    workers: int = 4
    stop_on_alarm: bool = True
    save_records: bool = True
    timing_n: list[int] = [5, 10, 20]
    timing_frames: int = 40
    timing_repeats: int = 1
    attack_eval_count: int = 200
    detectors: Literal["grid", "tuned"] = "grid"

    @field_validator("episodes", "attack_eval_count")
    @classmethod
    def validate_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("counts must be non-negative")
        return v

    @field_validator("workers", "timing_frames", "timing_repeats")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("timing_n")
    @classmethod
    def validate_timing_n(cls, v: list[int]) -> list[int]:
        if any(n < 1 for n in v):
            raise ValueError("every timing N must be at least 1")
        return v


class TuningSection(Section):
    """Validation episodes for choosing (delta, tau) per N."""

    validation_episodes: int = 20
    n_values: list[int] = [5, 10, 20]
    delta_fractions: list[float] = [0.3, 0.4, 0.5, 0.6, 0.7]
    tau_margin: float = 1.5

    @field_validator("validation_episodes")
    @classmethod
    def validate_episodes(cls, v: int) -> int:
        if v < 1:
            raise ValueError("'validation_episodes' must be at least 1")
        return v

    @field_validator("n_values")
    @classmethod
    def validate_n_values(cls, v: list[int]) -> list[int]:
        if not v or any(n < 1 for n in v):
            raise ValueError("'n_values' must list at least one N, each at least 1")
        return v

    @field_validator("delta_fractions")
    @classmethod
    def validate_fractions(cls, v: list[float]) -> list[float]:
        if not v or any(f <= 0 for f in v):
            raise ValueError("'delta_fractions' must be positive")
        return v

    @field_validator("tau_margin")
    @classmethod
    def validate_margin(cls, v: float) -> float:
        if v < 1.0:
            raise ValueError("'tau_margin' must be at least 1")
        return v


class RunConfig(Section):
    """Top-level configuration for every command."""

    seed: int = 0
    output_dir: Path = Path("runs/desk")
    dataset: DatasetSection = DatasetSection()
    scene: SceneSection = SceneSection()
    split: SplitSection = SplitSection()
    calibration: CalibrationSection = CalibrationSection()
    model: ModelSection = ModelSection()
    schedule: ScheduleSection = ScheduleSection()
    detector: DetectorSection = DetectorSection()
    detector_grid: list[DetectorSection] = Field(default_factory=list)
    attack: AttackSection = AttackSection()
    episode: EpisodeSection = EpisodeSection()
    experiment: ExperimentSection = ExperimentSection()
    tuning: TuningSection = TuningSection()

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError("'seed' must be non-negative")
        return v

    @model_validator(mode="after")
    def validate_cross_section(self) -> RunConfig:
        if not 0 < self.split.proper < self.dataset.count:
            raise ValueError(
                f"'split.proper' must lie strictly between 0 and dataset.count={self.dataset.count}"
            )
        if self.attack.start_range[1] >= self.episode.max_steps:
            raise ValueError("attack start range must end before episode.max_steps")
        return self

    def detector_rows(self) -> list[DetectorConfig]:
        """Experiment rows: ``detector_grid`` when given, otherwise the single ``detector``."""
        sections = self.detector_grid or [self.detector]
        return [s.to_detector() for s in sections]

    def architecture(self) -> ModelArchitecture:
        return ModelArchitecture(
            input_dim=self.scene.image_side**2,
            latent_dim=self.model.latent_dim,
            hidden_dim=self.model.hidden_dim,
            head_dim=self.model.head_dim,
            label_low=self.dataset.label_low,
            label_high=self.dataset.label_high,
            anchored=self.model.anchored,
        )

    def attack_target(self) -> float:
        return self.attack.y_target if self.attack.y_target is not None else self.dataset.label_high

    def seed_streams(self) -> dict[str, int]:
        """Independent per-subsystem seeds spawned from the master seed."""
        children = np.random.SeedSequence(self.seed).spawn(len(SEED_STREAMS))
        return {
            name: int(child.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
            for name, child in zip(SEED_STREAMS, children)
        }

    def echo(self) -> dict:
        return self.model_dump(mode="json")
