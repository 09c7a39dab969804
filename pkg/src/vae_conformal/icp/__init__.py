"""Inductive conformal prediction: scores, p-values, martingale and CUSUM."""

from vae_conformal.icp.calibration import (
    CalibrationSet,
    load_calibration,
    nonconformity,
    p_value,
    p_values,
    save_calibration,
    threshold_detect,
)
from vae_conformal.icp.detector import DetectorConfig, DetectorState, alarm, cusum_update, reset
from vae_conformal.icp.martingale import (
    DEFAULT_NODES,
    log_martingale,
    martingale_from_log,
    power_martingale,
    single_pvalue_martingale,
)
from vae_conformal.icp.strata import StratifiedCalibration, load_strata, save_strata

__all__ = [
    "DEFAULT_NODES",
    "CalibrationSet",
    "DetectorConfig",
    "DetectorState",
    "StratifiedCalibration",
    "alarm",
    "cusum_update",
    "load_calibration",
    "load_strata",
    "log_martingale",
    "martingale_from_log",
    "nonconformity",
    "p_value",
    "p_values",
    "power_martingale",
    "reset",
    "save_calibration",
    "save_strata",
    "single_pvalue_martingale",
    "threshold_detect",
]
