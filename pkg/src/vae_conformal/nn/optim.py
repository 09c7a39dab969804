"""Adam optimizer over explicit, immutable state."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from vae_conformal.errors import NumericError, StructuralError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass(frozen=True)
class OptimizerState:
    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]
    step: int
    learning_rate: float

    @classmethod
    def for_parameters(cls, params: Sequence[np.ndarray], learning_rate: float) -> OptimizerState:
        zeros = tuple(np.zeros_like(p, dtype=np.float64) for p in params)
        return cls(
            first_moment=zeros,
            second_moment=tuple(np.zeros_like(z) for z in zeros),
            step=0,
            learning_rate=learning_rate,
        )

    def with_learning_rate(self, learning_rate: float) -> OptimizerState:
        return replace(self, learning_rate=learning_rate)


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: OptimizerState,
) -> tuple[list[np.ndarray], OptimizerState]:
    """One bias-corrected Adam update. Returns new arrays; inputs are left untouched."""
    if not (len(params) == len(grads) == len(state.first_moment)):
        raise StructuralError("params, grads and optimizer moments differ in length")
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.first_moment[i].shape:
            raise StructuralError(f"shape mismatch for parameter {i}: {p.shape} vs {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {i}")

    step = state.step + 1
    correction1 = 1.0 - BETA1**step
    correction2 = 1.0 - BETA2**step
    new_params: list[np.ndarray] = []
    new_m: list[np.ndarray] = []
    new_v: list[np.ndarray] = []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m = BETA1 * m + (1.0 - BETA1) * g
        v = BETA2 * v + (1.0 - BETA2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + EPSILON))
        new_m.append(m)
        new_v.append(v)

    new_state = OptimizerState(
        first_moment=tuple(new_m),
        second_moment=tuple(new_v),
        step=step,
        learning_rate=state.learning_rate,
    )
    return new_params, new_state
