"""VAE-based regression model.

Encoder q(z|x), regressor q(c|x), latent generator p(z|c) and decoder p(x|z).
"""

from __future__ import annotations

import copy
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from vae_conformal.errors import ContractViolation, StructuralError
from vae_conformal.nn import GaussianParams, Network, reparameterize
from vae_conformal.nn.layers import Activation

COMPONENTS = ("trunk", "encoder_head", "regressor_head", "latent_generator", "decoder")

# Parameter groups named after the loss terms:
# phi_z (encoder), phi_c (regressor), theta (generative side).
PARAMETER_GROUPS = {
    "phi_z": ("trunk", "encoder_head"),
    "phi_c": ("regressor_head",),
    "theta": ("latent_generator", "decoder"),
}


@dataclass(frozen=True)
class ModelArchitecture:
    input_dim: int
    latent_dim: int
    hidden_dim: int = 64
    head_dim: int = 32
    label_low: float = 0.0
    label_high: float = 1.0
    anchored: bool = True

    def __post_init__(self) -> None:
        if min(self.input_dim, self.latent_dim, self.hidden_dim, self.head_dim) < 1:
            raise ContractViolation("all layer widths must be positive")
        if not self.label_high > self.label_low:
            raise ContractViolation("label_high must exceed label_low")

    @property
    def label_range(self) -> float:
        return self.label_high - self.label_low

    def to_vector(self) -> np.ndarray:
        return np.array(list(asdict(self).values()), dtype=np.float64)

    @classmethod
    def from_vector(cls, values: np.ndarray) -> ModelArchitecture:
        v = [float(x) for x in np.asarray(values).ravel()]
        if len(v) != 7:
            raise StructuralError(f"architecture vector has {len(v)} entries, expected 7")
        return cls(int(v[0]), int(v[1]), int(v[2]), int(v[3]), v[4], v[5], bool(v[6]))


class VaeRegressionModel:
    """Holds the five networks. The regressor branch shares the encoder trunk.

    The regressor works on the normalized label ``(y - label_low) / label_range``.
    """

    def __init__(
        self,
        architecture: ModelArchitecture,
        trunk: Network,
        encoder_head: Network,
        regressor_head: Network,
        latent_generator: Network,
        decoder: Network,
    ) -> None:
        arch = architecture
        checks = [
            (trunk.in_features == arch.input_dim, "trunk input != input_dim"),
            (encoder_head.in_features == trunk.out_features, "encoder head does not fit trunk"),
            (regressor_head.in_features == trunk.out_features, "regressor head does not fit trunk"),
            (encoder_head.out_features == 2 * arch.latent_dim, "encoder output != 2*latent_dim"),
            (regressor_head.out_features == 2, "regressor must output a 1-D Gaussian"),
            (latent_generator.in_features == 1, "latent generator input must be scalar c"),
            (
                latent_generator.out_features == 2 * arch.latent_dim,
                "latent generator output != 2*latent_dim",
            ),
            (decoder.in_features == arch.latent_dim, "decoder input != latent_dim"),
            (decoder.out_features == arch.input_dim, "decoder output != input_dim"),
        ]
        for ok, message in checks:
            if not ok:
                raise StructuralError(message)
        self.architecture = arch
        self.trunk = trunk
        self.encoder_head = encoder_head
        self.regressor_head = regressor_head
        self.latent_generator = latent_generator
        self.decoder = decoder

    @property
    def input_dim(self) -> int:
        return self.architecture.input_dim

    @property
    def latent_dim(self) -> int:
        return self.architecture.latent_dim

    def components(self) -> dict[str, Network]:
        return {name: getattr(self, name) for name in COMPONENTS}

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for net in self.components().values():
            params.extend(net.parameters())
        return params

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        offset = 0
        for net in self.components().values():
            count = len(net.parameters())
            net.set_parameters(params[offset : offset + count])
            offset += count
        if offset != len(params):
            raise StructuralError(f"expected {offset} parameter arrays, got {len(params)}")

    def parameter_slices(self) -> dict[str, list[int]]:
        """Indices into ``parameters()`` for each named parameter group."""
        index: dict[str, list[int]] = {}
        offset = 0
        for name, net in self.components().items():
            count = len(net.parameters())
            index[name] = list(range(offset, offset + count))
            offset += count
        return {
            group: [i for comp in members for i in index[comp]]
            for group, members in PARAMETER_GROUPS.items()
        }

    def copy(self) -> VaeRegressionModel:
        return copy.deepcopy(self)

    def to_tensors(self) -> dict[str, np.ndarray]:
        tensors = {"meta.architecture": self.architecture.to_vector()}
        for name, net in self.components().items():
            tensors.update(net.named_tensors(name))
        return tensors

    @classmethod
    def from_tensors(cls, tensors: Mapping[str, np.ndarray]) -> VaeRegressionModel:
        if "meta.architecture" not in tensors:
            raise StructuralError("weights carry no 'meta.architecture' tensor")
        arch = ModelArchitecture.from_vector(tensors["meta.architecture"])
        model = build_model(arch, np.random.default_rng(0))
        for name, net in model.components().items():
            net.load_tensors(name, tensors)
        return model

    def normalize_label(self, y: np.ndarray | float) -> np.ndarray:
        a = self.architecture
        return (np.asarray(y, dtype=np.float64) - a.label_low) / a.label_range

    def denormalize_label(self, c: np.ndarray | float) -> np.ndarray:
        a = self.architecture
        return a.label_low + a.label_range * np.asarray(c, dtype=np.float64)

    def encode(self, x: np.ndarray) -> GaussianParams:
        """q(z|x). When anchored, the encoder head outputs an offset from the p(z|c) mean
        at the predicted label, so the posterior follows the regressor."""
        h = self.trunk.forward(x)
        posterior = GaussianParams.from_stacked(self.encoder_head.forward(h))
        if not self.architecture.anchored:
            return posterior
        c = self.regressor_head.forward(h)[..., :1]
        anchor = GaussianParams.from_stacked(self.latent_generator.forward(c)).mean
        return GaussianParams(mean=posterior.mean + anchor, log_variance=posterior.log_variance)

    def regress(self, x: np.ndarray) -> GaussianParams:
        return GaussianParams.from_stacked(self.regressor_head.forward(self.trunk.forward(x)))

    def generate_latent(self, c: np.ndarray) -> GaussianParams:
        c = np.asarray(c, dtype=np.float64)
        batch = c.reshape(-1, 1) if c.ndim <= 1 else c
        return GaussianParams.from_stacked(self.latent_generator.forward(batch))

    def decode(self, z: np.ndarray) -> np.ndarray:
        return self.decoder.forward(z)


def build_model(architecture: ModelArchitecture, rng: np.random.Generator) -> VaeRegressionModel:
    """Desk-scale dense architecture: one shared ELU block, two-layer heads, mirrored decoder.

    p(z|c) is a single linear layer, so its mean moves along one latent direction with c.
    """
    a = architecture
    trunk = Network.build([a.input_dim, a.hidden_dim], rng, output=Activation.ELU)
    encoder_head = Network.build([a.hidden_dim, a.head_dim, 2 * a.latent_dim], rng)
    regressor_head = Network.build([a.hidden_dim, a.head_dim, 2], rng)
    latent_generator = Network.build([1, 2 * a.latent_dim], rng)
    decoder = Network.build([a.latent_dim, a.head_dim, a.hidden_dim, a.input_dim], rng)
    return VaeRegressionModel(a, trunk, encoder_head, regressor_head, latent_generator, decoder)


def predict_distance(model: VaeRegressionModel, x: np.ndarray) -> float | np.ndarray:
    """Mean of q(c|x) in label units. A single input gives a float."""
    mean = model.regress(x).mean[..., 0]
    value = model.denormalize_label(mean)
    return float(value) if np.ndim(value) == 0 else value


def distance_input_gradient(model: VaeRegressionModel, x: np.ndarray) -> np.ndarray:
    """d predict_distance / dx, same shape as ``x``."""
    h, trunk_trace = model.trunk.forward_trace(x)
    out, reg_trace = model.regressor_head.forward_trace(h)
    upstream = np.zeros_like(out)
    upstream[..., 0] = model.architecture.label_range
    reg_grads = model.regressor_head.backward(reg_trace, upstream)
    return model.trunk.backward(trunk_trace, reg_grads.input).input


def sample_reconstructions(
    model: VaeRegressionModel,
    x: np.ndarray,
    n: int,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Decode ``n`` independent draws z_k ~ q(z|x), each clamped to [0, 1].

    ``noise`` of shape (n, latent_dim) overrides ``rng``. One decode per draw.
    """
    if n < 1:
        raise ContractViolation(f"need at least one reconstruction, got n={n}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise StructuralError(f"expected a single input vector, got shape {x.shape}")
    if noise is None:
        if rng is None:
            raise ContractViolation("either rng or noise must be provided")
        noise = rng.standard_normal((n, model.latent_dim))
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != (n, model.latent_dim):
        raise StructuralError(f"noise shape {noise.shape} != {(n, model.latent_dim)}")

    posterior = model.encode(x)
    samples = []
    for eta in noise:
        z = reparameterize(posterior, eta)
        samples.append(np.clip(model.decode(z), 0.0, 1.0))
    return samples


def reconstruction_error(model: VaeRegressionModel, x: np.ndarray) -> float | np.ndarray:
    """Squared error between ``x`` and the clamped decode of the posterior mean."""
    x_hat = np.clip(model.decode(model.encode(x).mean), 0.0, 1.0)
    err = ((np.asarray(x) - x_hat) ** 2).sum(axis=-1)
    return float(err) if np.ndim(err) == 0 else err


def export_latent(model: VaeRegressionModel, x: np.ndarray, y: np.ndarray) -> pd.DataFrame:
    """One row per example: posterior latent mean, true label, predicted label."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise ContractViolation("cannot export the latent space of an empty dataset")
    if y.shape[0] != x.shape[0]:
        raise StructuralError(f"{x.shape[0]} inputs but {y.shape[0]} labels")
    means = model.encode(x).mean
    frame = pd.DataFrame(means, columns=[f"z{i}" for i in range(model.latent_dim)])
    frame["y_true"] = y
    frame["y_pred"] = np.atleast_1d(predict_distance(model, x))
    return frame
