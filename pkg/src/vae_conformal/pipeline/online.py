"""Online phase: per-input detection over frozen artifacts."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pandas as pd
import structlog

from vae_conformal.errors import ContractViolation
from vae_conformal.icp import (
    DetectorConfig,
    DetectorState,
    alarm,
    cusum_update,
    log_martingale,
    nonconformity,
    p_value,
    reset,
)
from vae_conformal.model import predict_distance, sample_reconstructions
from vae_conformal.pipeline.offline import OfflineArtifacts

log = structlog.get_logger()

TIMING_COLUMNS = ["N", "min_ms", "q1_ms", "median_ms", "q3_ms", "max_ms", "mean_ms"]


@dataclass(frozen=True)
class DetectionResult:
    anomaly: bool
    distance: float
    state: DetectorState
    p_values: np.ndarray
    log_m: float
    s: float


def online_step(
    x_prime: np.ndarray,
    artifacts: OfflineArtifacts,
    state: DetectorState,
    rng: np.random.Generator,
) -> DetectionResult:
    """Predict, score N reconstructions, fold log M into CUSUM. An alarm resets S to 0.

    Every draw is its own pass through the VAE (encode, sample, decode) followed by
    its score and p-value, so the cost grows linearly with N.

    ``DetectionResult.s`` is the statistic before the reset, so it crosses tau on alarm steps.
    """
    config = state.config
    model = artifacts.model
    c = float(predict_distance(model, x_prime))
    calib = artifacts.calibration_for(c, config.p_floor)
    p = np.empty(config.n)
    for k in range(config.n):
        (x_hat,) = sample_reconstructions(model, x_prime, 1, rng)
        p[k] = p_value(nonconformity(x_prime, x_hat), calib)
    log_m = log_martingale(p, config.quadrature_nodes)
    updated = cusum_update(state, log_m)
    anomaly = alarm(updated)
    return DetectionResult(
        anomaly=anomaly,
        distance=c,
        state=reset(updated) if anomaly else updated,
        p_values=p,
        log_m=log_m,
        s=updated.s,
    )


class DetectionStream:
    """One detector state and rng stream over shared, read-only artifacts."""

    def __init__(
        self,
        artifacts: OfflineArtifacts,
        config: DetectorConfig,
        rng: np.random.Generator,
    ) -> None:
        self.artifacts = artifacts
        self.rng = rng
        self.state = DetectorState(config)
        self.alarms = 0

    def step(self, x_prime: np.ndarray) -> DetectionResult:
        result = online_step(x_prime, self.artifacts, self.state, self.rng)
        self.state = result.state
        if result.anomaly:
            self.alarms += 1
        return result


def measure_detection_time(
    artifacts: OfflineArtifacts,
    inputs: np.ndarray,
    n_values: list[int],
    repeats: int = 1,
    seed: int = 0,
) -> pd.DataFrame:
    """Wall time per online_step in milliseconds, one quartile row per N."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[0] == 0:
        raise ContractViolation("timing needs at least one input")
    if repeats < 1:
        raise ContractViolation("repeats must be at least 1")

    rows = []
    for n in n_values:
        stream = DetectionStream(artifacts, DetectorConfig(n=n), np.random.default_rng(seed))
        samples = []
        for _ in range(repeats):
            for x in inputs:
                started = time.perf_counter()
                stream.step(x)
                samples.append((time.perf_counter() - started) * 1e3)
        ms = np.array(samples)
        q1, median, q3 = np.percentile(ms, [25, 50, 75])
        rows.append([n, ms.min(), q1, median, q3, ms.max(), ms.mean()])
        log.info("detection timed", n=n, mean_ms=float(ms.mean()), samples=ms.size)
    return pd.DataFrame(rows, columns=TIMING_COLUMNS)
