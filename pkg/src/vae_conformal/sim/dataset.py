"""Labeled synthetic datasets and their on-disk form."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from vae_conformal.errors import ContractViolation, FormatError
from vae_conformal.nn import load_tensors, save_tensors
from vae_conformal.sim.scene import MAX_RANGE_M, SceneParams, render_scene

log = structlog.get_logger()

DATASET_FILE = "dataset.bin"
LABELS_FILE = "labels.csv"


@dataclass(frozen=True)
class NuisanceRanges:
    noise_level: tuple[float, float] = (0.0, 0.3)
    brightness: tuple[float, float] = (0.5, 1.0)

    def sample(self, rng: np.random.Generator) -> tuple[float, float]:
        """(noise_level, brightness) drawn uniformly from the ranges."""
        return float(rng.uniform(*self.noise_level)), float(rng.uniform(*self.brightness))


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    brightness: np.ndarray
    noise_level: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, idx: np.ndarray) -> Dataset:
        return Dataset(
            self.images[idx], self.labels[idx], self.brightness[idx], self.noise_level[idx]
        )

    def label_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "index": np.arange(len(self)),
                "distance": self.labels,
                "brightness": self.brightness,
                "noise_level": self.noise_level,
            }
        )


def generate_dataset(
    count: int,
    label_range: tuple[float, float] = (2.0, 110.0),
    nuisance: NuisanceRanges = NuisanceRanges(),
    image_side: int = 16,
    seed: int = 0,
) -> Dataset:
    """Distances uniform over ``label_range``, nuisance sampled per example."""
    if count < 1:
        raise ContractViolation(f"dataset count must be >= 1, got {count}")
    low, high = label_range
    if not 0.0 <= low < high <= MAX_RANGE_M:
        raise ContractViolation(f"label range {label_range} outside the renderer's range")

    rng = np.random.default_rng(seed)
    distances = rng.uniform(low, high, size=count)
    images = np.empty((count, image_side * image_side))
    brightness = np.empty(count)
    noise = np.empty(count)
    for i, d in enumerate(distances):
        noise[i], brightness[i] = nuisance.sample(rng)
        scene = SceneParams(
            image_side=image_side,
            noise_level=noise[i],
            brightness=brightness[i],
            seed=int(rng.integers(0, 2**63 - 1)),
        )
        images[i] = render_scene(float(d), scene)
    log.info("dataset generated", count=count, image_side=image_side, seed=seed)
    return Dataset(images=images, labels=distances, brightness=brightness, noise_level=noise)


def save_dataset(directory: Path, dataset: Dataset) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / DATASET_FILE
    save_tensors(
        path,
        {
            "images": dataset.images,
            "labels": dataset.labels,
            "brightness": dataset.brightness,
            "noise_level": dataset.noise_level,
        },
    )
    dataset.label_frame().to_csv(directory / LABELS_FILE, index=False)
    return path


def load_dataset(directory: Path) -> Dataset:
    path = directory / DATASET_FILE
    tensors = load_tensors(path)
    missing = {"images", "labels", "brightness", "noise_level"} - tensors.keys()
    if missing:
        raise FormatError(path, f"missing tensors: {sorted(missing)}")
    dataset = Dataset(
        images=tensors["images"],
        labels=tensors["labels"],
        brightness=tensors["brightness"],
        noise_level=tensors["noise_level"],
    )
    if dataset.images.ndim != 2 or dataset.images.shape[0] != len(dataset):
        raise FormatError(path, "image table does not match label count")
    return dataset
