"""Synthetic braking simulator: renderer, kinematics, datasets and episodes."""

from vae_conformal.sim.dataset import (
    Dataset,
    NuisanceRanges,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from vae_conformal.sim.episode import (
    EpisodeConfig,
    EpisodeRecord,
    EpisodeSummary,
    Outcome,
    StepRecord,
    classify_stop,
    episode_setup,
    load_episode,
    run_episode,
    save_episode,
)
from vae_conformal.sim.scene import SceneParams, apparent_size, render_scene
from vae_conformal.sim.trajectory import nominal_trajectory, trajectory_dataset
from vae_conformal.sim.vehicle import (
    A_MAX,
    ControllerConfig,
    RangeEstimator,
    VehicleState,
    controller,
    step_vehicle,
)

__all__ = [
    "A_MAX",
    "ControllerConfig",
    "Dataset",
    "EpisodeConfig",
    "EpisodeRecord",
    "EpisodeSummary",
    "NuisanceRanges",
    "Outcome",
    "RangeEstimator",
    "SceneParams",
    "StepRecord",
    "VehicleState",
    "apparent_size",
    "classify_stop",
    "controller",
    "episode_setup",
    "generate_dataset",
    "load_dataset",
    "nominal_trajectory",
    "render_scene",
    "run_episode",
    "save_episode",
    "step_vehicle",
    "trajectory_dataset",
]
