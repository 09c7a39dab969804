"""Stateful CUSUM detector over martingale values."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

from vae_conformal.errors import ContractViolation
from vae_conformal.icp.martingale import DEFAULT_NODES, martingale_from_log


@dataclass(frozen=True)
class DetectorConfig:
    """N reconstructions per input, CUSUM drift ``delta`` and threshold ``tau``.

    ``statistic`` selects what the recurrence accumulates: ``log`` (log M, default) or ``raw`` (M).
    """

    n: int = 10
    delta: float = 12.0
    tau: float = 80.0
    p_floor: float | None = None
    quadrature_nodes: int = DEFAULT_NODES
    statistic: Literal["log", "raw"] = "log"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ContractViolation("N must be at least 1")
        if self.delta <= 0:
            raise ContractViolation("delta must be positive")
        if self.tau <= 0:
            raise ContractViolation("tau must be positive")
        if self.p_floor is not None and not 0.0 < self.p_floor <= 1.0:
            raise ContractViolation("p_floor must lie in (0, 1]")
        if self.quadrature_nodes < 3 or self.quadrature_nodes % 2 == 0:
            raise ContractViolation("quadrature_nodes must be odd and >= 3")
        if self.statistic not in ("log", "raw"):
            raise ContractViolation(f"unknown CUSUM statistic {self.statistic!r}")


@dataclass(frozen=True)
class DetectorState:
    config: DetectorConfig
    s: float = 0.0

    def __post_init__(self) -> None:
        if self.s < 0:
            raise ContractViolation("CUSUM statistic cannot be negative")


def cusum_update(state: DetectorState, log_m: float) -> DetectorState:
    """S' = max(0, S + stat - delta), with stat = log M (or M in ``raw`` mode)."""
    stat = log_m if state.config.statistic == "log" else martingale_from_log(log_m)
    return replace(state, s=max(0.0, state.s + stat - state.config.delta))


def alarm(state: DetectorState) -> bool:
    return state.s > state.config.tau


def reset(state: DetectorState) -> DetectorState:
    return replace(state, s=0.0)
