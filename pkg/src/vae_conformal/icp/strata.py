"""Calibration split by predicted distance.

Each stratum keeps its own calibration scores, and a test input is compared only
against calibration examples whose prediction fell in the same band. Far frames
show a one or two pixel obstacle and near frames a large one, so their score
distributions differ by orders of magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from vae_conformal.errors import ContractViolation, FormatError, StructuralError
from vae_conformal.icp.calibration import CalibrationSet
from vae_conformal.nn import load_tensors, save_tensors


@dataclass(frozen=True)
class StratifiedCalibration:
    """``edges`` are the interior band limits in label units, ascending.

    Stratum k covers predictions in [edges[k-1], edges[k]), the outer strata are open.
    """

    edges: np.ndarray
    strata: tuple[CalibrationSet, ...]

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=np.float64).ravel()
        if len(self.strata) != edges.size + 1:
            raise StructuralError(f"{edges.size} edges need {edges.size + 1} strata")
        if np.any(np.diff(edges) <= 0):
            raise ContractViolation("stratum edges must be strictly ascending")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "strata", tuple(self.strata))

    @classmethod
    def from_predictions(
        cls,
        scores: np.ndarray,
        predictions: np.ndarray,
        count: int,
        p_floor: float | None = None,
    ) -> StratifiedCalibration:
        """Equal-count bands over the calibration predictions."""
        scores = np.asarray(scores, dtype=np.float64).ravel()
        predictions = np.asarray(predictions, dtype=np.float64).ravel()
        if scores.shape != predictions.shape:
            raise StructuralError(f"{scores.size} scores but {predictions.size} predictions")
        if count < 1:
            raise ContractViolation(f"need at least one stratum, got {count}")
        if scores.size < count:
            raise ContractViolation(f"{scores.size} calibration scores cannot fill {count} strata")
        edges = np.quantile(predictions, np.arange(1, count) / count)
        if np.any(np.diff(edges) <= 0):
            raise ContractViolation("calibration predictions are too concentrated for the strata")
        band = np.searchsorted(edges, predictions, side="right")
        strata = []
        for k in range(count):
            members = scores[band == k]
            if members.size == 0:
                raise ContractViolation(f"stratum {k} received no calibration scores")
            strata.append(CalibrationSet.from_scores(members, p_floor))
        return cls(edges, tuple(strata))

    @property
    def count(self) -> int:
        return len(self.strata)

    def index(self, prediction: float) -> int:
        return int(np.searchsorted(self.edges, prediction, side="right"))

    def select(self, prediction: float) -> CalibrationSet:
        return self.strata[self.index(prediction)]

    def with_floor(self, p_floor: float) -> StratifiedCalibration:
        return replace(self, strata=tuple(replace(s, p_floor=p_floor) for s in self.strata))


def save_strata(path: Path, strata: StratifiedCalibration) -> None:
    tensors = {"edges": strata.edges}
    for k, stratum in enumerate(strata.strata):
        tensors[f"stratum.{k}.scores"] = stratum.scores
        tensors[f"stratum.{k}.p_floor"] = np.array([stratum.p_floor])
    path.parent.mkdir(parents=True, exist_ok=True)
    save_tensors(path, tensors)


def load_strata(path: Path, p_floor: float | None = None) -> StratifiedCalibration:
    tensors = load_tensors(path)
    if "edges" not in tensors:
        raise FormatError(path, "no 'edges' tensor")
    edges = tensors["edges"].ravel()
    strata = []
    for k in range(edges.size + 1):
        scores = tensors.get(f"stratum.{k}.scores")
        floor = tensors.get(f"stratum.{k}.p_floor")
        if scores is None or floor is None:
            raise FormatError(path, f"stratum {k} is missing")
        try:
            strata.append(CalibrationSet(scores.ravel(), p_floor or float(floor.ravel()[0])))
        except ContractViolation as e:
            raise FormatError(path, f"stratum {k}: {e}") from e
    try:
        return StratifiedCalibration(edges, tuple(strata))
    except (ContractViolation, StructuralError) as e:
        raise FormatError(path, str(e)) from e
