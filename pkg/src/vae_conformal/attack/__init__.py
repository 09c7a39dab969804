"""FGSM adversarial examples against the regression output."""

from vae_conformal.attack.fgsm import (
    AttackConfig,
    FgsmResult,
    attack_evaluation,
    fgsm,
    summarize_attack,
)
from vae_conformal.attack.protocols import DifferentiableRegressor, VaeRegressor

__all__ = [
    "AttackConfig",
    "DifferentiableRegressor",
    "FgsmResult",
    "VaeRegressor",
    "attack_evaluation",
    "fgsm",
    "summarize_attack",
]
