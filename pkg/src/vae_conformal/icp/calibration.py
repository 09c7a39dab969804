"""Nonconformity scores, calibration sets and conformal p-values."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from vae_conformal.errors import ContractViolation, FormatError, StructuralError


def nonconformity(x: np.ndarray, x_hat: np.ndarray) -> float | np.ndarray:
    """Squared reconstruction error ||x - x_hat||^2 over the last axis."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape[-1:] != x_hat.shape[-1:]:
        raise StructuralError(f"dimension mismatch: {x.shape} vs {x_hat.shape}")
    score = ((x - x_hat) ** 2).sum(axis=-1)
    return float(score) if np.ndim(score) == 0 else score


@dataclass(frozen=True)
class CalibrationSet:
    """Ascending calibration scores. Immutable and shareable across detection streams."""

    scores: np.ndarray
    p_floor: float

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.size < 1:
            raise ContractViolation("calibration set needs at least one score")
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise ContractViolation("calibration scores must be finite and non-negative")
        if np.any(np.diff(scores) < 0):
            raise ContractViolation("calibration scores must be sorted ascending")
        if not 0.0 < self.p_floor <= 1.0:
            raise ContractViolation(f"p_floor must lie in (0, 1], got {self.p_floor}")
        scores = scores.copy()
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    @classmethod
    def from_scores(cls, scores: np.ndarray, p_floor: float | None = None) -> CalibrationSet:
        """Sort raw scores. ``p_floor`` defaults to the calibration resolution 1/(l-m)."""
        ordered = np.sort(np.asarray(scores, dtype=np.float64).ravel())
        if ordered.size < 1:
            raise ContractViolation("calibration set needs at least one score")
        return cls(ordered, p_floor if p_floor is not None else 1.0 / ordered.size)

    @property
    def count(self) -> int:
        return int(self.scores.size)


def p_values(alphas: np.ndarray, calib: CalibrationSet) -> np.ndarray:
    """Fraction of calibration scores >= each test score, floored at ``calib.p_floor``."""
    alphas = np.asarray(alphas, dtype=np.float64)
    at_least = calib.count - np.searchsorted(calib.scores, alphas, side="left")
    return np.maximum(at_least / calib.count, calib.p_floor)


def p_value(alpha_prime: float, calib: CalibrationSet) -> float:
    return float(p_values(np.asarray(alpha_prime), calib))


def threshold_detect(p: float, epsilon_thr: float) -> bool:
    """Single p-value test: flag a conformal anomaly when p < epsilon_thr."""
    if not 0.0 < epsilon_thr < 1.0:
        raise ContractViolation(f"threshold must lie in (0, 1), got {epsilon_thr}")
    return p < epsilon_thr


def save_calibration(path: Path, calib: CalibrationSet) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{s:.17g}\n" for s in calib.scores))


def load_calibration(path: Path, p_floor: float | None = None) -> CalibrationSet:
    scores: list[float] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = float(text)
        except ValueError as e:
            raise FormatError(path, f"not a number: {text!r}", line=lineno) from e
        if scores and value < scores[-1]:
            raise FormatError(path, "scores are not in ascending order", line=lineno)
        scores.append(value)
    if not scores:
        raise FormatError(path, "calibration file is empty")
    try:
        return CalibrationSet.from_scores(np.array(scores), p_floor)
    except ContractViolation as e:
        raise FormatError(path, str(e)) from e
