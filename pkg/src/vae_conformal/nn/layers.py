"""Dense layers, ELU activation and a sequential network with explicit traces.

Forward passes never mutate the network: ``forward_trace`` hands back a
``ForwardTrace`` that ``backward`` consumes, so independent evaluations can
run on separate threads against the same weights.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
import sys
if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # Python 3.10 fallback equivalent to enum.StrEnum for explicit string values
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

import numpy as np

from vae_conformal.errors import StructuralError, UsageError


class Activation(StrEnum):
    ELU = "elu"
    IDENTITY = "identity"


def elu(u: np.ndarray) -> np.ndarray:
    """e(u) = u for u >= 0, exp(u) - 1 for u < 0."""
    return np.where(u >= 0.0, u, np.expm1(np.minimum(u, 0.0)))


def elu_derivative(u: np.ndarray) -> np.ndarray:
    return np.where(u >= 0.0, 1.0, np.exp(np.minimum(u, 0.0)))


@dataclass
class DenseLayer:
    """Fully connected layer ``a = act(W x + b)`` with ``W`` of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.IDENTITY

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise StructuralError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise StructuralError(
                f"bias shape {self.bias.shape} does not match weights {self.weights.shape}"
            )
        self.activation = Activation(self.activation)

    @property
    def in_features(self) -> int:
        return self.weights.shape[1]

    @property
    def out_features(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def initialized(
        cls,
        in_features: int,
        out_features: int,
        activation: Activation,
        rng: np.random.Generator,
    ) -> DenseLayer:
        """Uniform init in ±sqrt(6 / (fan_in + fan_out)), zero bias."""
        limit = np.sqrt(6.0 / (in_features + out_features))
        weights = rng.uniform(-limit, limit, size=(out_features, in_features))
        return cls(weights=weights, bias=np.zeros(out_features), activation=activation)

    def preactivation(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights.T + self.bias

    def activate(self, u: np.ndarray) -> np.ndarray:
        if self.activation is Activation.ELU:
            return elu(u)
        return u

    def activation_derivative(self, u: np.ndarray) -> np.ndarray:
        if self.activation is Activation.ELU:
            return elu_derivative(u)
        return np.ones_like(u)


@dataclass(frozen=True)
class ForwardTrace:
    """Everything ``Network.backward`` needs from one forward pass."""

    network_id: int
    inputs: tuple[np.ndarray, ...]
    preactivations: tuple[np.ndarray, ...]
    output: np.ndarray
    squeezed: bool


@dataclass(frozen=True)
class NetworkGradients:
    """Gradients in ``Network.parameters()`` order plus the input gradient."""

    parameters: list[np.ndarray]
    input: np.ndarray = field(repr=False)


class Network:
    """Sequence of dense layers evaluated on (batch, features) arrays."""

    def __init__(self, layers: Sequence[DenseLayer]) -> None:
        if not layers:
            raise StructuralError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_features != nxt.in_features:
                raise StructuralError(
                    f"layer output {prev.out_features} does not feed input {nxt.in_features}"
                )
        self.layers = list(layers)

    @classmethod
    def build(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        hidden: Activation = Activation.ELU,
        output: Activation = Activation.IDENTITY,
    ) -> Network:
        """Build ``len(sizes) - 1`` layers; hidden layers use ``hidden``, the last ``output``."""
        if len(sizes) < 2:
            raise StructuralError("sizes must name at least input and output width")
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            act = output if i == len(sizes) - 2 else hidden
            layers.append(DenseLayer.initialized(fan_in, fan_out, act, rng))
        return cls(layers)

    @property
    def in_features(self) -> int:
        return self.layers[0].in_features

    @property
    def out_features(self) -> int:
        return self.layers[-1].out_features

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for layer in self.layers:
            params.extend((layer.weights, layer.bias))
        return params

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        if len(params) != 2 * len(self.layers):
            raise StructuralError(f"expected {2 * len(self.layers)} arrays, got {len(params)}")
        for i, layer in enumerate(self.layers):
            weights, bias = params[2 * i], params[2 * i + 1]
            if weights.shape != layer.weights.shape or bias.shape != layer.bias.shape:
                raise StructuralError(f"parameter shape mismatch in layer {i}")
            layer.weights = np.asarray(weights, dtype=np.float64)
            layer.bias = np.asarray(bias, dtype=np.float64)

    def named_tensors(self, prefix: str) -> dict[str, np.ndarray]:
        tensors: dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.layers):
            tensors[f"{prefix}.{i}.weight"] = layer.weights
            tensors[f"{prefix}.{i}.bias"] = layer.bias
        return tensors

    def load_tensors(self, prefix: str, tensors: Mapping[str, np.ndarray]) -> None:
        params = []
        for i in range(len(self.layers)):
            for suffix in ("weight", "bias"):
                name = f"{prefix}.{i}.{suffix}"
                if name not in tensors:
                    raise StructuralError(f"missing tensor '{name}'")
                params.append(tensors[name])
        self.set_parameters(params)

    def _as_batch(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        squeezed = x.ndim == 1
        batch = x[np.newaxis, :] if squeezed else x
        if batch.ndim != 2 or batch.shape[1] != self.in_features:
            raise StructuralError(
                f"input shape {x.shape} does not match network input width {self.in_features}"
            )
        return batch, squeezed

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Activations of the final layer. 1-D input gives 1-D output."""
        out, _ = self.forward_trace(x)
        return out

    def forward_trace(self, x: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
        a, squeezed = self._as_batch(x)
        inputs = []
        pres = []
        for layer in self.layers:
            inputs.append(a)
            u = layer.preactivation(a)
            pres.append(u)
            a = layer.activate(u)
        trace = ForwardTrace(
            network_id=id(self),
            inputs=tuple(inputs),
            preactivations=tuple(pres),
            output=a,
            squeezed=squeezed,
        )
        return (a[0] if squeezed else a), trace

    def backward(
        self,
        trace: ForwardTrace | None,
        upstream: np.ndarray,
        x: np.ndarray | None = None,
    ) -> NetworkGradients:
        """Reverse-mode pass for ``sum(upstream * output)``.

        Parameter gradients are summed over the batch.
        """
        if trace is None or trace.network_id != id(self):
            raise UsageError("backward called without a forward trace from this network")
        if x is not None:
            batch, _ = self._as_batch(x)
            if batch.shape != trace.inputs[0].shape or not np.array_equal(batch, trace.inputs[0]):
                raise UsageError("backward input does not match the traced forward input")

        grad = np.asarray(upstream, dtype=np.float64)
        if trace.squeezed and grad.ndim == 1:
            grad = grad[np.newaxis, :]
        if grad.shape != trace.output.shape:
            raise StructuralError(
                f"upstream gradient shape {grad.shape} does not match output {trace.output.shape}"
            )

        param_grads: list[np.ndarray] = [np.empty(0)] * (2 * len(self.layers))
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            du = grad * layer.activation_derivative(trace.preactivations[i])
            param_grads[2 * i] = du.T @ trace.inputs[i]
            param_grads[2 * i + 1] = du.sum(axis=0)
            grad = du @ layer.weights

        input_grad = grad[0] if trace.squeezed else grad
        return NetworkGradients(parameters=param_grads, input=input_grad)
