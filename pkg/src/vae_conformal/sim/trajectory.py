"""Frames sampled along nominal braking runs, for calibrating on what episodes show."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import structlog

from vae_conformal.errors import ContractViolation
from vae_conformal.sim.dataset import Dataset
from vae_conformal.sim.episode import EpisodeConfig, episode_setup
from vae_conformal.sim.scene import render_scene
from vae_conformal.sim.vehicle import VehicleState, controller, step_vehicle

log = structlog.get_logger()


def nominal_trajectory(cfg: EpisodeConfig, v0: float) -> np.ndarray:
    """True distance at every step of a run that brakes on the exact range."""
    state = VehicleState(distance=cfg.d0, velocity=v0)
    distances = []
    for _ in range(cfg.max_steps):
        distances.append(state.distance)
        brake = controller(state.distance, state.velocity, cfg.control)
        state = step_vehicle(state, brake, cfg.dt, cfg.control.a_max)
        if state.velocity == 0.0 or state.distance == 0.0:
            break
    return np.array(distances)


def trajectory_dataset(
    base: EpisodeConfig,
    trajectories: int,
    frames_per_trajectory: int,
    seed: int = 0,
) -> Dataset:
    """Frames drawn uniformly in time from ``trajectories`` nominal runs.

    Speed and nuisance are sampled once per run, as in an episode.
    """
    if trajectories < 1 or frames_per_trajectory < 1:
        raise ContractViolation("need at least one trajectory and one frame per trajectory")
    images, labels, brightness, noise = [], [], [], []
    for child in np.random.SeedSequence(seed).spawn(trajectories):
        setup_seq, pick_seq = child.spawn(2)
        cfg = replace(base, attack=None)
        v0, scene = episode_setup(cfg, np.random.default_rng(setup_seq))
        distances = nominal_trajectory(cfg, v0)
        pick = np.random.default_rng(pick_seq)
        count = min(frames_per_trajectory, distances.size)
        for t in np.sort(pick.choice(distances.size, size=count, replace=False)):
            frame = replace(scene, seed=int(pick.integers(0, 2**63 - 1)))
            images.append(render_scene(float(distances[t]), frame))
            labels.append(distances[t])
            brightness.append(scene.brightness)
            noise.append(scene.noise_level)
    log.info(
        "trajectory frames generated",
        trajectories=trajectories,
        frames=len(labels),
        seed=seed,
    )
    return Dataset(
        images=np.array(images),
        labels=np.array(labels),
        brightness=np.array(brightness),
        noise_level=np.array(noise),
    )
