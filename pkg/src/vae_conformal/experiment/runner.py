"""Batch episode experiments: nominal vs attacked runs per detector setting."""

from __future__ import annotations

import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
import structlog
from scipy import stats

from vae_conformal.attack import AttackConfig
from vae_conformal.errors import ContractViolation
from vae_conformal.icp import DetectorConfig
from vae_conformal.pipeline import OfflineArtifacts
from vae_conformal.sim import EpisodeConfig, EpisodeRecord, run_episode, save_episode

log = structlog.get_logger()

RESULT_COLUMNS = ["N", "delta", "tau", "fp", "fn", "avg_delay_frames", "episodes"]
UNIFORMITY_COLUMNS = ["N", "p_count", "ks_distance", "ks_pvalue"]


@dataclass(frozen=True)
class ExperimentPlan:
    """K nominal plus K attacked episodes for every detector row.

    Every row replays the same episode seeds and attack onsets.
    """

    base: EpisodeConfig
    attack: AttackConfig
    detectors: list[DetectorConfig]
    episodes: int = 100
    attack_start_range: tuple[int, int] = (20, 60)
    workers: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ContractViolation("episode count must be non-negative")
        if self.workers < 1:
            raise ContractViolation("workers must be at least 1")
        if not self.detectors:
            raise ContractViolation("an experiment needs at least one detector row")

    def episode_configs(self) -> tuple[list[EpisodeConfig], list[EpisodeConfig]]:
        """Seeded (nominal, attacked) configs, onsets uniform over ``attack_start_range``."""
        root = np.random.SeedSequence(self.seed)
        nominal_seq, attacked_seq, onset_seq = root.spawn(3)
        low, high = self.attack_start_range
        onsets = np.random.default_rng(onset_seq).integers(low, high + 1, size=self.episodes)
        nominal = [
            replace(self.base, attack=None, seed=_seed_of(s))
            for s in nominal_seq.spawn(self.episodes)
        ]
        attacked = [
            replace(self.base, attack=replace(self.attack, start_step=int(t)), seed=_seed_of(s))
            for s, t in zip(attacked_seq.spawn(self.episodes), onsets)
        ]
        return nominal, attacked


def _seed_of(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class RowResult:
    detector: DetectorConfig
    nominal: list[EpisodeRecord] = field(default_factory=list)
    attacked: list[EpisodeRecord] = field(default_factory=list)

    def row(self) -> dict[str, float | int]:
        """Table row: fp counts nominal runs with any alarm, fn counts attacks never alarmed on."""
        fp = sum(1 for r in self.nominal if r.first_alarm_step is not None)
        delays = [r.detection_delay for r in self.attacked]
        detected = [d for d in delays if d is not None]
        return {
            "N": self.detector.n,
            "delta": self.detector.delta,
            "tau": self.detector.tau,
            "fp": fp,
            "fn": len(delays) - len(detected),
            "avg_delay_frames": float(np.mean(detected)) if detected else float("nan"),
            "episodes": len(self.nominal),
        }


def nominal_p_values(records: list[EpisodeRecord]) -> np.ndarray:
    """Every p-value of every step, pooled over the given episodes."""
    pooled = [p for record in records for step in record.steps for p in step.p_values]
    return np.array(pooled, dtype=np.float64)


def uniformity(result: RowResult) -> dict[str, float | int]:
    """Kolmogorov-Smirnov distance of the pooled nominal p-values from Uniform[0, 1]."""
    p = nominal_p_values(result.nominal)
    if p.size == 0:
        distance = pvalue = math.nan
    else:
        test = stats.kstest(p, "uniform")
        distance, pvalue = float(test.statistic), float(test.pvalue)
    return {
        "N": result.detector.n,
        "p_count": int(p.size),
        "ks_distance": distance,
        "ks_pvalue": pvalue,
    }


def run_batch(
    configs: list[EpisodeConfig],
    artifacts: OfflineArtifacts,
    detector: DetectorConfig,
    workers: int = 1,
) -> list[EpisodeRecord]:
    """Run independent episodes concurrently; results keep the order of ``configs``."""
    if not configs:
        return []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda cfg: run_episode(cfg, artifacts, detector), configs))


def run_experiment(
    artifacts: OfflineArtifacts,
    plan: ExperimentPlan,
    on_row: Callable[[RowResult], None] | None = None,
) -> tuple[pd.DataFrame, list[RowResult]]:
    nominal, attacked = plan.episode_configs()
    results = []
    for detector in plan.detectors:
        log.info("experiment row started", n=detector.n, delta=detector.delta, tau=detector.tau)
        result = RowResult(
            detector=detector,
            nominal=run_batch(nominal, artifacts, detector, plan.workers),
            attacked=run_batch(attacked, artifacts, detector, plan.workers),
        )
        row = result.row()
        log.info("experiment row finished", **row)
        if on_row is not None:
            on_row(result)
        results.append(result)
    rows = [r.row() for r in results] if plan.episodes > 0 else []
    table = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    return table, results


def save_records(result: RowResult, directory: Path) -> Path:
    """Write every episode of one row under ``n{N}_d{delta}_t{tau}/``."""
    d = result.detector
    row_dir = directory / f"n{d.n}_d{d.delta:g}_t{d.tau:g}"
    for i, record in enumerate(result.nominal):
        save_episode(record, row_dir, f"nominal_{i:03d}")
    for i, record in enumerate(result.attacked):
        save_episode(record, row_dir, f"attacked_{i:03d}")
    return row_dir
