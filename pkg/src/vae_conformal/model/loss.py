"""Three-term training objective and its hand-derived gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vae_conformal.errors import NumericError, StructuralError
from vae_conformal.model.vae import VaeRegressionModel
from vae_conformal.nn import (
    GaussianParams,
    gaussian_kl,
    gaussian_kl_grad,
    reparameterize,
    reparameterize_logvar_grad,
)

DEFAULT_LABEL_PRIOR_STD = 0.05


@dataclass(frozen=True)
class LossBreakdown:
    """total == -label_kl + reconstruction - latent_kl. Training minimizes -total."""

    total: float
    label_kl: float
    reconstruction: float
    latent_kl: float


@dataclass(frozen=True)
class LossNoise:
    """Frozen standard-normal draws for the two reparameterized samples."""

    latent: np.ndarray
    label: np.ndarray

    @classmethod
    def draw(cls, rng: np.random.Generator, batch: int, latent_dim: int) -> LossNoise:
        return cls(
            latent=rng.standard_normal((batch, latent_dim)),
            label=rng.standard_normal((batch, 1)),
        )

    @classmethod
    def zeros(cls, batch: int, latent_dim: int) -> LossNoise:
        return cls(latent=np.zeros((batch, latent_dim)), label=np.zeros((batch, 1)))


@dataclass
class _Forward:
    x: np.ndarray
    label_prior: GaussianParams
    q_c: GaussianParams
    q_z: GaussianParams
    p_z: GaussianParams
    x_hat: np.ndarray
    label_kl: np.ndarray
    reconstruction: np.ndarray
    latent_kl: np.ndarray
    traces: dict


def _prepare(
    model: VaeRegressionModel, x: np.ndarray, y: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64)).reshape(-1, 1)
    if x.shape[1] != model.input_dim:
        raise StructuralError(f"input width {x.shape[1]} != model input_dim {model.input_dim}")
    if y.shape[0] != x.shape[0]:
        raise StructuralError(f"{x.shape[0]} inputs but {y.shape[0]} labels")
    return x, model.normalize_label(y)


def _check_finite(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite loss term", term=name)


def _forward(
    model: VaeRegressionModel,
    x: np.ndarray,
    y: np.ndarray | float,
    noise: LossNoise,
    label_prior_std: float,
) -> _Forward:
    x, c_true = _prepare(model, x, y)
    batch = x.shape[0]
    if noise.latent.shape != (batch, model.latent_dim) or noise.label.shape != (batch, 1):
        raise StructuralError("loss noise does not match batch and latent sizes")

    h, trunk_trace = model.trunk.forward_trace(x)
    enc_out, enc_trace = model.encoder_head.forward_trace(h)
    reg_out, reg_trace = model.regressor_head.forward_trace(h)
    q_c = GaussianParams.from_stacked(reg_out)
    q_z = GaussianParams.from_stacked(enc_out)
    anchor_trace = None
    if model.architecture.anchored:
        anchor_out, anchor_trace = model.latent_generator.forward_trace(reg_out[:, :1])
        anchor = GaussianParams.from_stacked(anchor_out).mean
        q_z = GaussianParams(mean=q_z.mean + anchor, log_variance=q_z.log_variance)

    label_prior = GaussianParams(
        mean=c_true, log_variance=np.full_like(c_true, 2.0 * np.log(label_prior_std))
    )
    label_kl = gaussian_kl(q_c, label_prior)
    _check_finite("label_kl", label_kl)

    z = reparameterize(q_z, noise.latent)
    x_hat, dec_trace = model.decoder.forward_trace(z)
    reconstruction = -0.5 * ((x - x_hat) ** 2).sum(axis=1)
    _check_finite("reconstruction", reconstruction)

    c_tilde = reparameterize(q_c, noise.label)
    gen_out, gen_trace = model.latent_generator.forward_trace(c_tilde)
    p_z = GaussianParams.from_stacked(gen_out)
    latent_kl = gaussian_kl(q_z, p_z)
    _check_finite("latent_kl", latent_kl)

    return _Forward(
        x=x,
        label_prior=label_prior,
        q_c=q_c,
        q_z=q_z,
        p_z=p_z,
        x_hat=x_hat,
        label_kl=np.atleast_1d(label_kl),
        reconstruction=reconstruction,
        latent_kl=np.atleast_1d(latent_kl),
        traces={
            "trunk": trunk_trace,
            "encoder_head": enc_trace,
            "regressor_head": reg_trace,
            "decoder": dec_trace,
            "latent_generator": gen_trace,
            "anchor": anchor_trace,
        },
    )


def _breakdown(fwd: _Forward) -> LossBreakdown:
    label_kl = float(fwd.label_kl.mean())
    reconstruction = float(fwd.reconstruction.mean())
    latent_kl = float(fwd.latent_kl.mean())
    return LossBreakdown(
        total=-label_kl + reconstruction - latent_kl,
        label_kl=label_kl,
        reconstruction=reconstruction,
        latent_kl=latent_kl,
    )


def loss(
    model: VaeRegressionModel,
    x: np.ndarray,
    y: np.ndarray | float,
    noise: LossNoise | None = None,
    rng: np.random.Generator | None = None,
    label_prior_std: float = DEFAULT_LABEL_PRIOR_STD,
) -> LossBreakdown:
    """Batch-mean loss terms with one reparameterized sample per expectation."""
    batch = np.atleast_2d(x).shape[0]
    if noise is None:
        noise = LossNoise.draw(rng or np.random.default_rng(), batch, model.latent_dim)
    return _breakdown(_forward(model, x, y, noise, label_prior_std))


def loss_and_gradients(
    model: VaeRegressionModel,
    x: np.ndarray,
    y: np.ndarray | float,
    noise: LossNoise,
    label_prior_std: float = DEFAULT_LABEL_PRIOR_STD,
) -> tuple[LossBreakdown, list[np.ndarray]]:
    """Loss terms plus gradients of the batch mean of ``-total`` in ``model.parameters()`` order."""
    fwd = _forward(model, x, y, noise, label_prior_std)
    tr = fwd.traces
    scale = 1.0 / fwd.x.shape[0]

    # -reconstruction = 0.5 * ||x - x_hat||^2
    dec = model.decoder.backward(tr["decoder"], scale * (fwd.x_hat - fwd.x))
    g_z = dec.input
    g_qz_mean = g_z.copy()
    g_qz_logvar = g_z * reparameterize_logvar_grad(fwd.q_z, noise.latent)

    kl_qz, kl_pz = gaussian_kl_grad(fwd.q_z, fwd.p_z)
    g_qz_mean += scale * kl_qz.mean
    g_qz_logvar += scale * kl_qz.log_variance
    gen = model.latent_generator.backward(
        tr["latent_generator"], scale * kl_pz.stacked()
    )
    g_c_tilde = gen.input

    kl_qc, _ = gaussian_kl_grad(fwd.q_c, fwd.label_prior)
    g_qc_mean = scale * kl_qc.mean + g_c_tilde
    g_qc_logvar = scale * kl_qc.log_variance + g_c_tilde * reparameterize_logvar_grad(
        fwd.q_c, noise.label
    )
    gen_parameters = gen.parameters
    if tr["anchor"] is not None:
        # The anchor only feeds the posterior mean.
        anchor = model.latent_generator.backward(
            tr["anchor"], np.concatenate([g_qz_mean, np.zeros_like(g_qz_mean)], axis=1)
        )
        g_qc_mean = g_qc_mean + anchor.input
        gen_parameters = [a + b for a, b in zip(gen.parameters, anchor.parameters)]

    enc = model.encoder_head.backward(
        tr["encoder_head"], np.concatenate([g_qz_mean, g_qz_logvar], axis=1)
    )
    reg = model.regressor_head.backward(
        tr["regressor_head"], np.concatenate([g_qc_mean, g_qc_logvar], axis=1)
    )
    trunk = model.trunk.backward(tr["trunk"], enc.input + reg.input)

    grads = [
        *trunk.parameters,
        *enc.parameters,
        *reg.parameters,
        *gen_parameters,
        *dec.parameters,
    ]
    return _breakdown(fwd), grads
