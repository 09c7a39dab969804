"""Two-phase minibatch training with Adam."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import structlog

from vae_conformal.errors import ContractViolation, NumericError, StructuralError
from vae_conformal.model.loss import DEFAULT_LABEL_PRIOR_STD, LossNoise, loss_and_gradients
from vae_conformal.model.vae import VaeRegressionModel
from vae_conformal.nn import OptimizerState, adam_step

log = structlog.get_logger()


@dataclass(frozen=True)
class TrainingPhase:
    learning_rate: float
    epochs: int

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ContractViolation("learning rate must be positive")
        if self.epochs < 0:
            raise ContractViolation("epoch count must be non-negative")


@dataclass(frozen=True)
class TrainingSchedule:
    """Search phase then fine-tuning phase. ``label_prior_std`` is in normalized label units."""

    phase1: TrainingPhase = TrainingPhase(1e-3, 60)
    phase2: TrainingPhase = TrainingPhase(1e-4, 20)
    batch_size: int = 64
    seed: int = 0
    label_prior_std: float = DEFAULT_LABEL_PRIOR_STD

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ContractViolation("batch size must be at least 1")
        if self.label_prior_std <= 0:
            raise ContractViolation("label prior std must be positive")

    @property
    def total_epochs(self) -> int:
        return self.phase1.epochs + self.phase2.epochs


@dataclass(frozen=True)
class EpochRecord:
    phase: int
    epoch: int
    total: float
    label_kl: float
    reconstruction: float
    latent_kl: float


@dataclass
class TrainingResult:
    model: VaeRegressionModel
    history: list[EpochRecord] = field(default_factory=list)

    def history_frame(self) -> pd.DataFrame:
        columns = ["phase", "epoch", "total", "label_kl", "reconstruction", "latent_kl"]
        return pd.DataFrame([vars(r) for r in self.history], columns=columns)


def train(
    model: VaeRegressionModel,
    x: np.ndarray,
    y: np.ndarray,
    schedule: TrainingSchedule,
) -> TrainingResult:
    """Train a copy of ``model`` on the proper training set; the input model is left untouched."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise ContractViolation("proper training set is empty")
    if y.shape[0] != x.shape[0]:
        raise StructuralError(f"{x.shape[0]} inputs but {y.shape[0]} labels")

    trained = model.copy()
    rng = np.random.default_rng(schedule.seed)
    params = trained.parameters()
    state = OptimizerState.for_parameters(params, schedule.phase1.learning_rate)
    result = TrainingResult(model=trained)
    n = x.shape[0]

    epoch_index = 0
    for phase_number, phase in ((1, schedule.phase1), (2, schedule.phase2)):
        state = state.with_learning_rate(phase.learning_rate)
        for _ in range(phase.epochs):
            epoch_index += 1
            order = rng.permutation(n)
            sums = np.zeros(4)
            for start in range(0, n, schedule.batch_size):
                idx = order[start : start + schedule.batch_size]
                noise = LossNoise.draw(rng, len(idx), trained.latent_dim)
                try:
                    breakdown, grads = loss_and_gradients(
                        trained, x[idx], y[idx], noise, schedule.label_prior_std
                    )
                    params, state = adam_step(params, grads, state)
                except NumericError as e:
                    raise NumericError("training diverged", term=e.term, epoch=epoch_index) from e
                trained.set_parameters(params)
                b = breakdown
                sums += len(idx) * np.array([b.total, b.label_kl, b.reconstruction, b.latent_kl])

            means = sums / n
            if not np.all(np.isfinite(means)):
                raise NumericError("training diverged", term="total", epoch=epoch_index)
            record = EpochRecord(phase_number, epoch_index, *(float(m) for m in means))
            result.history.append(record)
            log.info(
                "epoch finished",
                phase=phase_number,
                epoch=epoch_index,
                objective=-record.total,
                label_kl=record.label_kl,
                latent_kl=record.latent_kl,
            )
    return result
