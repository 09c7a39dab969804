"""Procedural scene renderer: obstacle distance to a flattened grayscale image."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vae_conformal.errors import ContractViolation

SIZE_CONSTANT_M = 8.0
MAX_RANGE_M = 120.0
MIN_FRACTION = 0.05
MAX_FRACTION = 0.95
NOISE_SCALE = 0.1


@dataclass(frozen=True)
class SceneParams:
    image_side: int = 16
    noise_level: float = 0.0
    brightness: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.image_side < 8:
            raise ContractViolation(f"image_side must be >= 8, got {self.image_side}")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ContractViolation(f"noise_level must lie in [0, 1], got {self.noise_level}")
        if not 0.5 <= self.brightness <= 1.0:
            raise ContractViolation(f"brightness must lie in [0.5, 1], got {self.brightness}")

    @property
    def input_dim(self) -> int:
        return self.image_side * self.image_side


def apparent_size(d: float, image_side: int) -> float:
    """Pinhole size law in pixels: image_side * clamp(k / d, 0.05, 0.95)."""
    fraction = MAX_FRACTION if d <= 0 else min(max(SIZE_CONSTANT_M / d, MIN_FRACTION), MAX_FRACTION)
    return image_side * fraction


def _coverage(n: int, side: int, remainder: float) -> np.ndarray:
    """Per-pixel coverage along one axis of an interval of length side + remainder."""
    cov = np.zeros(n)
    start = (n - side) // 2
    cov[start : start + side] = 1.0
    if remainder > 0:
        for idx in (start - 1, start + side):
            if 0 <= idx < n:
                cov[idx] = 0.5 * remainder
    elif remainder < 0:
        if side == 1:
            cov[start] = 1.0 + remainder
        else:
            cov[start] = cov[start + side - 1] = 1.0 + 0.5 * remainder
    return cov


def render_scene(d: float, p: SceneParams) -> np.ndarray:
    """Centered square obstacle with area-weighted edges plus uniform pixel noise.

    The full-brightness core is round(s) pixels wide; edge pixels carry the
    remainder s - round(s) as partial coverage, so total intensity is
    brightness * s^2 inside the frame. Pure in (d, p).
    """
    if not 0.0 <= d <= MAX_RANGE_M:
        raise ContractViolation(f"distance {d} outside [0, {MAX_RANGE_M}]")
    n = p.image_side
    s = apparent_size(d, n)
    side = int(np.floor(s + 0.5))
    cov = _coverage(n, side, s - side)
    image = p.brightness * np.outer(cov, cov)

    if p.noise_level > 0:
        amplitude = p.noise_level * NOISE_SCALE
        image += np.random.default_rng(p.seed).uniform(-amplitude, amplitude, size=image.shape)
    return np.clip(image, 0.0, 1.0).ravel()
