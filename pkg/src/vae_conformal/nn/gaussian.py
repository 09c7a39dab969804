"""Closed-form utilities for diagonal Gaussians parameterized by (mean, log-variance)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vae_conformal.errors import StructuralError


@dataclass(frozen=True)
class GaussianParams:
    mean: np.ndarray
    log_variance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        log_variance = np.asarray(self.log_variance, dtype=np.float64)
        if mean.shape != log_variance.shape:
            raise StructuralError(
                f"mean shape {mean.shape} != log-variance shape {log_variance.shape}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "log_variance", log_variance)

    @classmethod
    def from_stacked(cls, stacked: np.ndarray) -> GaussianParams:
        """Split ``[mean | log_variance]`` along the last axis."""
        stacked = np.asarray(stacked, dtype=np.float64)
        if stacked.shape[-1] % 2:
            raise StructuralError(f"stacked width {stacked.shape[-1]} is odd")
        half = stacked.shape[-1] // 2
        return cls(mean=stacked[..., :half], log_variance=stacked[..., half:])

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.mean, self.log_variance], axis=-1)

    @property
    def variance(self) -> np.ndarray:
        return np.exp(self.log_variance)


def _check_pair(q: GaussianParams, p: GaussianParams) -> None:
    if q.mean.shape != p.mean.shape:
        raise StructuralError(f"distribution shapes differ: {q.mean.shape} vs {p.mean.shape}")


def gaussian_kl(q: GaussianParams, p: GaussianParams) -> np.ndarray | float:
    """KL(q || p) summed over the last axis (a float for 1-D inputs, per row otherwise)."""
    _check_pair(q, p)
    lq, lp = q.log_variance, p.log_variance
    terms = 0.5 * (np.exp(lq - lp) + (q.mean - p.mean) ** 2 * np.exp(-lp) - 1.0 + lp - lq)
    total = terms.sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def gaussian_kl_grad(
    q: GaussianParams, p: GaussianParams
) -> tuple[GaussianParams, GaussianParams]:
    """Elementwise gradients of ``gaussian_kl`` w.r.t. both distributions."""
    _check_pair(q, p)
    inv_var_p = np.exp(-p.log_variance)
    ratio = np.exp(q.log_variance - p.log_variance)
    diff = q.mean - p.mean
    grad_q = GaussianParams(mean=diff * inv_var_p, log_variance=0.5 * (ratio - 1.0))
    grad_p = GaussianParams(
        mean=-diff * inv_var_p,
        log_variance=0.5 * (1.0 - ratio - diff**2 * inv_var_p),
    )
    return grad_q, grad_p


def reparameterize(g: GaussianParams, noise: np.ndarray) -> np.ndarray:
    """mean + exp(log_variance / 2) * noise."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != g.mean.shape:
        raise StructuralError(f"noise shape {noise.shape} != mean shape {g.mean.shape}")
    return g.mean + np.exp(0.5 * g.log_variance) * noise


def reparameterize_logvar_grad(g: GaussianParams, noise: np.ndarray) -> np.ndarray:
    """d sample / d log_variance for ``reparameterize``."""
    return 0.5 * np.exp(0.5 * g.log_variance) * np.asarray(noise, dtype=np.float64)
