from pathlib import Path

import numpy as np
import pytest

from tests.helpers import TINY_SIDE
from vae_conformal.icp import CalibrationSet
from vae_conformal.model import ModelArchitecture, VaeRegressionModel, build_model
from vae_conformal.pipeline import OfflineArtifacts
from vae_conformal.sim import Dataset, generate_dataset

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def tiny_arch() -> ModelArchitecture:
    return ModelArchitecture(
        input_dim=TINY_SIDE * TINY_SIDE,
        latent_dim=2,
        hidden_dim=8,
        head_dim=6,
        label_low=2.0,
        label_high=110.0,
    )


@pytest.fixture
def tiny_model(tiny_arch: ModelArchitecture) -> VaeRegressionModel:
    return build_model(tiny_arch, np.random.default_rng(7))


@pytest.fixture
def tiny_dataset() -> Dataset:
    return generate_dataset(60, image_side=TINY_SIDE, seed=3)


@pytest.fixture
def small_calibration() -> CalibrationSet:
    return CalibrationSet.from_scores(np.linspace(0.1, 4.0, 40))


@pytest.fixture
def tiny_artifacts(
    tiny_model: VaeRegressionModel, small_calibration: CalibrationSet
) -> OfflineArtifacts:
    return OfflineArtifacts(model=tiny_model, calibration=small_calibration)

