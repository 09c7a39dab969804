"""Experiment batches over the simulator and reports from their records."""

from vae_conformal.experiment.report import (
    PANELS,
    LoadedRecord,
    load_records,
    panel_frames,
    s_crossing_step,
    write_report,
)
from vae_conformal.experiment.runner import (
    RESULT_COLUMNS,
    UNIFORMITY_COLUMNS,
    ExperimentPlan,
    RowResult,
    nominal_p_values,
    run_batch,
    run_experiment,
    save_records,
    uniformity,
)
from vae_conformal.experiment.tuning import (
    TUNED_COLUMNS,
    TunedRow,
    ValidationTrace,
    load_tuned,
    replay_alarms,
    tune_detector,
    tune_grid,
    tuned_frame,
)

__all__ = [
    "PANELS",
    "RESULT_COLUMNS",
    "TUNED_COLUMNS",
    "UNIFORMITY_COLUMNS",
    "ExperimentPlan",
    "LoadedRecord",
    "RowResult",
    "TunedRow",
    "ValidationTrace",
    "load_records",
    "load_tuned",
    "nominal_p_values",
    "panel_frames",
    "replay_alarms",
    "run_batch",
    "run_experiment",
    "s_crossing_step",
    "save_records",
    "tune_detector",
    "tune_grid",
    "tuned_frame",
    "uniformity",
    "write_report",
]
