"""Contract a regression model must satisfy to be attacked.

Implement both methods (no base class required); ``VaeRegressionModel`` is
adapted through ``VaeRegressor`` and tests plug in plain linear regressors.
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from vae_conformal.model.vae import VaeRegressionModel, distance_input_gradient, predict_distance


@runtime_checkable
class DifferentiableRegressor(Protocol):
    def predict_distance(self, x: np.ndarray) -> float:
        """Scalar regression output f(x) for a single input vector."""
        ...

    def distance_input_gradient(self, x: np.ndarray) -> np.ndarray:
        """df/dx for a single input vector."""
        ...


class VaeRegressor:
    """Exposes the regressor branch of a frozen VAE-regression model."""

    def __init__(self, model: VaeRegressionModel) -> None:
        self.model = model

    def predict_distance(self, x: np.ndarray) -> float:
        return float(predict_distance(self.model, x))

    def distance_input_gradient(self, x: np.ndarray) -> np.ndarray:
        return distance_input_gradient(self.model, x)
