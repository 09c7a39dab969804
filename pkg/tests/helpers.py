"""Hand-built records and models shared by several test modules."""

from vae_conformal.attack import AttackConfig
from vae_conformal.icp import DetectorConfig
from vae_conformal.model import VaeRegressionModel
from vae_conformal.sim import EpisodeConfig, EpisodeRecord, Outcome, StepRecord, VehicleState

TINY_SIDE = 8


def make_record(
    alarms: list[int],
    steps: int = 30,
    attack_start: int | None = None,
    tau: float = 5.0,
    n: int = 3,
) -> EpisodeRecord:
    """Episode record with alarms at the given frames."""
    attack = AttackConfig(start_step=attack_start) if attack_start is not None else None
    record = EpisodeRecord(
        config=EpisodeConfig(image_side=TINY_SIDE, attack=attack),
        detector=DetectorConfig(n=n, delta=1.0, tau=tau),
    )
    for t in range(steps):
        alarm = t in alarms
        record.steps.append(
            StepRecord(
                t=t,
                d_true=100.0 - t,
                d_pred=100.0 - t + 0.5,
                d_est=100.0 - t + 0.5,
                v=20.0,
                brake=1.0,
                p_values=tuple(0.5 for _ in range(n)),
                log_m=-1.0,
                s=tau + 1.0 if alarm else 0.0,
                alarm=alarm,
                attacked=attack_start is not None and t >= attack_start,
                detect_ms=0.1,
            )
        )
    record.outcome = Outcome.TIMEOUT
    record.final_state = VehicleState(distance=100.0 - steps, velocity=20.0, time_step=steps)
    return record


def constant_distance_model(model: VaeRegressionModel, distance: float) -> VaeRegressionModel:
    """Copy of ``model`` whose regressor ignores its input and reports ``distance``."""
    fixed = model.copy()
    last = fixed.regressor_head.layers[-1]
    last.weights[0, :] = 0.0
    last.bias[0] = float(fixed.normalize_label(distance))
    return fixed
