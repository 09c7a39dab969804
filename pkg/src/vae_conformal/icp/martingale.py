"""Simple mixture martingale, evaluated in the log domain.

log M = log ∫_0^1 exp(N ln e + (e - 1) S) de with S = Σ ln p_i, integrated
with composite Simpson weights and combined by log-sum-exp, so products of
many tiny p-values never underflow.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from vae_conformal.errors import ContractViolation

DEFAULT_NODES = 1001


@lru_cache(maxsize=16)
def _simpson_grid(nodes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if nodes < 3 or nodes % 2 == 0:
        raise ContractViolation(f"Simpson needs an odd node count >= 3, got {nodes}")
    grid = np.linspace(0.0, 1.0, nodes)
    weights = np.full(nodes, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    weights *= (grid[1] - grid[0]) / 3.0
    with np.errstate(divide="ignore"):
        log_grid = np.log(grid)
    grid.flags.writeable = False
    log_grid.flags.writeable = False
    log_weights = np.log(weights)
    log_weights.flags.writeable = False
    return grid, log_grid, log_weights


def log_martingale(p: np.ndarray, nodes: int = DEFAULT_NODES) -> float:
    """Natural log of the simple mixture martingale of the p-value batch ``p``."""
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    n = p.size
    if n == 0:
        raise ContractViolation("martingale needs at least one p-value")
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ContractViolation("p-values must lie in (0, 1]")
    grid, log_grid, log_weights = _simpson_grid(nodes)
    s = float(np.log(p).sum())
    terms = n * log_grid + (grid - 1.0) * s + log_weights
    peak = terms.max()
    return float(peak + np.log(np.exp(terms - peak).sum()))


def power_martingale(p: np.ndarray, epsilon: float) -> np.ndarray:
    """Mixture integrand at one node: e p^(e-1) per p-value."""
    if not 0.0 < epsilon <= 1.0:
        raise ContractViolation(f"epsilon must lie in (0, 1], got {epsilon}")
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise ContractViolation("p-values must lie in (0, 1]")
    return epsilon * p ** (epsilon - 1.0)


def single_pvalue_martingale(p: float) -> float:
    """Closed form of ∫_0^1 e p^(e-1) de: (p (ln p - 1) + 1) / (p ln^2 p), 1/2 at p = 1."""
    if not 0.0 < p <= 1.0:
        raise ContractViolation(f"p must lie in (0, 1], got {p}")
    if p == 1.0:
        return 0.5
    a = math.log(p)
    return (p * (a - 1.0) + 1.0) / (p * a * a)


def martingale_from_log(log_m: float) -> float:
    """exp(log_m), ``inf`` past the float range."""
    return math.exp(log_m) if log_m < 709.0 else math.inf
