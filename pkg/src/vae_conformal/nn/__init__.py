"""Minimal dense neural-network engine."""

from vae_conformal.nn.gaussian import (
    GaussianParams,
    gaussian_kl,
    gaussian_kl_grad,
    reparameterize,
    reparameterize_logvar_grad,
)
from vae_conformal.nn.layers import (
    Activation,
    DenseLayer,
    ForwardTrace,
    Network,
    NetworkGradients,
    elu,
    elu_derivative,
)
from vae_conformal.nn.optim import OptimizerState, adam_step
from vae_conformal.nn.persistence import MAGIC, encode_tensors, load_tensors, save_tensors

__all__ = [
    "MAGIC",
    "Activation",
    "DenseLayer",
    "ForwardTrace",
    "GaussianParams",
    "Network",
    "NetworkGradients",
    "OptimizerState",
    "adam_step",
    "elu",
    "elu_derivative",
    "encode_tensors",
    "gaussian_kl",
    "gaussian_kl_grad",
    "load_tensors",
    "reparameterize",
    "reparameterize_logvar_grad",
    "save_tensors",
]
