"""Offline calibration and online detection over a trained model."""

from vae_conformal.pipeline.offline import OfflineArtifacts, SplitSpec, calibration_scores, offline
from vae_conformal.pipeline.online import (
    TIMING_COLUMNS,
    DetectionResult,
    DetectionStream,
    measure_detection_time,
    online_step,
)

__all__ = [
    "TIMING_COLUMNS",
    "DetectionResult",
    "DetectionStream",
    "OfflineArtifacts",
    "SplitSpec",
    "calibration_scores",
    "measure_detection_time",
    "offline",
    "online_step",
]
