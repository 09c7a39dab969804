"""Detector settings chosen on validation episodes.

Validation runs record log M at every frame with no detector feedback on the vehicle. A
halting run only stops early, so replaying the CUSUM over those records gives the alarms
an experiment with the same seeds would raise for any (delta, tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from vae_conformal.errors import ContractViolation, FormatError
from vae_conformal.experiment.runner import ExperimentPlan, run_batch
from vae_conformal.icp import DetectorConfig, DetectorState, alarm, cusum_update, reset
from vae_conformal.pipeline import OfflineArtifacts

log = structlog.get_logger()

TUNED_COLUMNS = ["N", "delta", "tau", "val_fp", "val_fn", "val_delay"]
DEFAULT_DELTA_FRACTIONS = (0.3, 0.4, 0.5, 0.6, 0.7)


@dataclass(frozen=True)
class ValidationTrace:
    log_m: np.ndarray
    attack_start: int | None = None

    @property
    def nominal_part(self) -> np.ndarray:
        return self.log_m if self.attack_start is None else self.log_m[: self.attack_start]

    @property
    def attacked_part(self) -> np.ndarray:
        return self.log_m[self.attack_start :] if self.attack_start is not None else self.log_m[:0]


@dataclass(frozen=True)
class TunedRow:
    detector: DetectorConfig
    fp: int
    fn: int
    mean_delay: float

    def row(self) -> dict[str, float | int]:
        return {
            "N": self.detector.n,
            "delta": self.detector.delta,
            "tau": self.detector.tau,
            "val_fp": self.fp,
            "val_fn": self.fn,
            "val_delay": self.mean_delay,
        }


def replay_alarms(log_m: np.ndarray, config: DetectorConfig) -> list[int]:
    """Alarm steps of the reset-on-alarm CUSUM over a recorded log M sequence."""
    state = DetectorState(config)
    steps = []
    for t, value in enumerate(log_m):
        state = cusum_update(state, float(value))
        if alarm(state):
            steps.append(t)
            state = reset(state)
    return steps


def peak_statistic(log_m: np.ndarray, config: DetectorConfig) -> float:
    """Largest CUSUM value reached when no alarm ever resets it."""
    state = DetectorState(replace(config, tau=math.inf))
    peak = 0.0
    for value in log_m:
        state = cusum_update(state, float(value))
        peak = max(peak, state.s)
    return peak


def validation_traces(
    artifacts: OfflineArtifacts, plan: ExperimentPlan, n: int, base: DetectorConfig
) -> list[ValidationTrace]:
    """Nominal then attacked validation runs of ``plan`` with an N-sample detector."""
    recorder = replace(base, n=n, tau=math.inf)
    nominal, attacked = plan.episode_configs()
    configs = [replace(c, stop_on_alarm=False) for c in nominal + attacked]
    records = run_batch(configs, artifacts, recorder, plan.workers)
    return [
        ValidationTrace(
            log_m=np.array([step.log_m for step in record.steps]),
            attack_start=record.attack_start_step,
        )
        for record in records
    ]


def evaluate(traces: list[ValidationTrace], config: DetectorConfig) -> TunedRow:
    """Count results the way an experiment row does, for halting runs."""
    fp = fn = 0
    delays = []
    for trace in traces:
        alarms = replay_alarms(trace.log_m, config)
        if trace.attack_start is None:
            fp += bool(alarms)
            continue
        if not alarms or alarms[0] < trace.attack_start:
            fn += 1
            continue
        delays.append(alarms[0] - trace.attack_start)
    return TunedRow(config, fp, fn, float(np.mean(delays)) if delays else math.nan)


def tune_detector(
    traces: list[ValidationTrace],
    base: DetectorConfig,
    delta_fractions: tuple[float, ...] = DEFAULT_DELTA_FRACTIONS,
    tau_margin: float = 1.5,
) -> TunedRow:
    """Pick (delta, tau) for ``base.n`` from the validation traces.

    Candidate drifts are fractions of the median attacked log M. Each gets the smallest
    threshold that clears every nominal frame by ``tau_margin``. Among candidates with the
    fewest misses and a mean delay within one frame of the best, the largest drift wins.
    """
    attacked = [t.attacked_part for t in traces if t.attack_start is not None]
    if not attacked or not any(a.size for a in attacked):
        raise ContractViolation("tuning needs attacked validation frames")
    nominal = [t.nominal_part for t in traces if t.nominal_part.size]
    level = float(np.median(np.concatenate(attacked)))
    if level <= 0:
        raise ContractViolation(
            f"attacked frames do not raise the martingale (median log M {level:.3g})"
        )

    candidates = []
    for fraction in delta_fractions:
        config = replace(base, delta=fraction * level, tau=math.inf)
        peak = max((peak_statistic(part, config) for part in nominal), default=0.0)
        config = replace(config, tau=tau_margin * peak + 1.0)
        candidates.append(evaluate(traces, config))
        log.debug("tuning candidate", n=base.n, **candidates[-1].row())

    fewest = min(c.fn for c in candidates)
    viable = [c for c in candidates if c.fn == fewest]
    delays = [c.mean_delay for c in viable if not math.isnan(c.mean_delay)]
    if delays:
        viable = [c for c in viable if c.mean_delay <= min(delays) + 1.0]
    chosen = max(viable, key=lambda c: c.detector.delta)
    log.info("detector tuned", **chosen.row())
    return chosen


def tune_grid(
    artifacts: OfflineArtifacts,
    plan: ExperimentPlan,
    n_values: list[int],
    delta_fractions: tuple[float, ...] = DEFAULT_DELTA_FRACTIONS,
    tau_margin: float = 1.5,
) -> list[TunedRow]:
    """One tuned row per N, all on the same validation episodes."""
    if not n_values:
        raise ContractViolation("tuning needs at least one N")
    base = plan.detectors[0]
    rows = []
    for n in n_values:
        traces = validation_traces(artifacts, plan, n, base)
        rows.append(tune_detector(traces, replace(base, n=n), delta_fractions, tau_margin))
    return rows


def tuned_frame(rows: list[TunedRow]) -> pd.DataFrame:
    return pd.DataFrame([r.row() for r in rows], columns=TUNED_COLUMNS)


def load_tuned(path: Path, base: DetectorConfig | None = None) -> list[DetectorConfig]:
    """Detector rows from a ``tuned.csv``; other settings come from ``base``."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError as e:
        raise FormatError(path, "tuned table is empty", line=1) from e
    missing = {"N", "delta", "tau"} - set(frame.columns)
    if missing:
        raise FormatError(path, f"missing columns: {sorted(missing)}", line=1)
    base = base or DetectorConfig()
    rows = []
    for i, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            rows.append(replace(base, n=int(row.N), delta=float(row.delta), tau=float(row.tau)))
        except ValueError as e:
            raise FormatError(path, str(e), line=i) from e
    if not rows:
        raise FormatError(path, "no tuned rows")
    return rows
