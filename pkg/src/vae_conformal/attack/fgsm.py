"""Targeted fast gradient sign method for a regression output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import structlog

from vae_conformal.attack.protocols import DifferentiableRegressor, VaeRegressor
from vae_conformal.errors import ContractViolation
from vae_conformal.model.vae import VaeRegressionModel, reconstruction_error

log = structlog.get_logger()


@dataclass(frozen=True)
class AttackConfig:
    fgsm_epsilon: float = 0.02
    y_target: float = 110.0
    start_step: int = 20
    iterations: int = 1

    def __post_init__(self) -> None:
        if self.fgsm_epsilon <= 0:
            raise ContractViolation("fgsm_epsilon must be positive")
        if self.iterations < 1:
            raise ContractViolation("iterations must be at least 1")
        if self.start_step < 0:
            raise ContractViolation("start_step must be non-negative")


@dataclass(frozen=True)
class FgsmResult:
    adversarial: np.ndarray
    clean_prediction: float
    adversarial_prediction: float
    zero_gradient: bool


def _as_regressor(model: DifferentiableRegressor | VaeRegressionModel) -> DifferentiableRegressor:
    if isinstance(model, VaeRegressionModel):
        return VaeRegressor(model)
    return model


def fgsm(
    model: DifferentiableRegressor | VaeRegressionModel,
    x: np.ndarray,
    cfg: AttackConfig,
) -> FgsmResult:
    """x <- clamp(x - eps * sign(dJ/dx)) with J = (f(x) - y_target)^2, ``iterations`` times."""
    regressor = _as_regressor(model)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ContractViolation("attack input must lie in [0, 1]")

    clean = regressor.predict_distance(x)
    current = x.copy()
    zero_gradient = False
    prediction = clean
    for _ in range(cfg.iterations):
        grad_j = 2.0 * (prediction - cfg.y_target) * regressor.distance_input_gradient(current)
        step = np.sign(grad_j)
        if not np.any(step):
            zero_gradient = True
            break
        current = np.clip(current - cfg.fgsm_epsilon * step, 0.0, 1.0)
        prediction = regressor.predict_distance(current)

    return FgsmResult(
        adversarial=current,
        clean_prediction=clean,
        adversarial_prediction=prediction,
        zero_gradient=zero_gradient,
    )


def attack_evaluation(
    model: VaeRegressionModel,
    x: np.ndarray,
    y: np.ndarray,
    cfg: AttackConfig,
) -> pd.DataFrame:
    """Clean vs attacked prediction and reconstruction error, one row per example."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    rows = []
    for xi, yi in zip(x, y):
        result = fgsm(model, xi, cfg)
        rows.append(
            {
                "y_true": yi,
                "clean_pred": result.clean_prediction,
                "attacked_pred": result.adversarial_prediction,
                "clean_abs_error": abs(result.clean_prediction - yi),
                "attacked_abs_error": abs(result.adversarial_prediction - yi),
                "clean_recon_error": reconstruction_error(model, xi),
                "attacked_recon_error": reconstruction_error(model, result.adversarial),
                "zero_gradient": result.zero_gradient,
            }
        )
    frame = pd.DataFrame(rows)
    if len(frame):
        log.info(
            "attack evaluated",
            examples=len(frame),
            clean_mae=float(frame["clean_abs_error"].mean()),
            attacked_median_error=float(frame["attacked_abs_error"].median()),
        )
    return frame


def summarize_attack(frame: pd.DataFrame) -> dict[str, float]:
    """Clean MAE, attacked median error and their ratio."""
    clean_mae = float(frame["clean_abs_error"].mean())
    attacked_median = float(frame["attacked_abs_error"].median())
    return {
        "examples": float(len(frame)),
        "clean_mae": clean_mae,
        "attacked_median_error": attacked_median,
        "error_ratio": attacked_median / clean_mae if clean_mae > 0 else float("inf"),
        "clean_recon_error": float(frame["clean_recon_error"].mean()),
        "attacked_recon_error": float(frame["attacked_recon_error"].mean()),
    }
