"""VAE-based regression model, its loss and training."""

from vae_conformal.model.loss import (
    DEFAULT_LABEL_PRIOR_STD,
    LossBreakdown,
    LossNoise,
    loss,
    loss_and_gradients,
)
from vae_conformal.model.training import (
    EpochRecord,
    TrainingPhase,
    TrainingResult,
    TrainingSchedule,
    train,
)
from vae_conformal.model.vae import (
    PARAMETER_GROUPS,
    ModelArchitecture,
    VaeRegressionModel,
    build_model,
    distance_input_gradient,
    export_latent,
    predict_distance,
    reconstruction_error,
    sample_reconstructions,
)

__all__ = [
    "DEFAULT_LABEL_PRIOR_STD",
    "PARAMETER_GROUPS",
    "EpochRecord",
    "LossBreakdown",
    "LossNoise",
    "ModelArchitecture",
    "TrainingPhase",
    "TrainingResult",
    "TrainingSchedule",
    "VaeRegressionModel",
    "build_model",
    "distance_input_gradient",
    "export_latent",
    "loss",
    "loss_and_gradients",
    "predict_distance",
    "reconstruction_error",
    "sample_reconstructions",
    "train",
]
