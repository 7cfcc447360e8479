"""Depth-map data model and synthetic scene generation.

Depth convention: lower value = closer. Locations are 0-based (row, col)
tuples. Values are stored as float32 (the precision of the PFM interchange
format) with a boolean validity mask of the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DepthMap", "SceneSpec", "SCENE_KINDS", "generate_scene"]

SCENE_KINDS = ("ramp-h", "ramp-v", "bowl", "steps", "smooth")


@dataclass(frozen=True)
class DepthMap:
    """H x W grid of nonnegative depths plus a validity mask (True = valid)."""

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float32)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ValueError(f"mask shape {mask.shape} != values shape {values.shape}")
        valid = values[mask]
        if valid.size and not np.all(np.isfinite(valid)):
            raise ValueError("depth values must be finite at valid locations")
        if valid.size and valid.min() < 0:
            raise ValueError("depth values must be nonnegative at valid locations")
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def full_valid(cls, values) -> "DepthMap":
        values = np.asarray(values, dtype=np.float32)
        return cls(values, np.ones(values.shape, dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a deterministic synthetic scene."""

    kind: str
    height: int
    width: int
    depth_range: tuple[float, float] = (0.0, 10.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"kind must be one of {SCENE_KINDS}, got {self.kind!r}")
        if self.height < 4 or self.width < 4:
            raise ValueError(f"scene dimensions must be at least 4x4, got {self.height}x{self.width}")
        lo, hi = self.depth_range
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError("depth_range must be finite")
        if lo < 0 or hi <= lo:
            raise ValueError(f"depth_range must satisfy 0 <= min < max, got {self.depth_range}")


def _mask_discontinuity_borders(values: np.ndarray) -> np.ndarray:
    # Invalidate the 1-pixel border on both sides of any value jump between
    # 4-neighbors, mimicking the consistency masks of real depth datasets.
    mask = np.ones(values.shape, dtype=bool)
    jump_h = values[:, 1:] != values[:, :-1]
    mask[:, 1:][jump_h] = False
    mask[:, :-1][jump_h] = False
    jump_v = values[1:, :] != values[:-1, :]
    mask[1:, :][jump_v] = False
    mask[:-1, :][jump_v] = False
    return mask


def generate_scene(spec: SceneSpec) -> DepthMap:
    """Deterministic synthetic depth map for the given spec."""
    lo, hi = spec.depth_range
    H, W = spec.height, spec.width
    if spec.kind == "ramp-h":
        values = np.tile(np.linspace(lo, hi, W, dtype=np.float32), (H, 1))
    elif spec.kind == "ramp-v":
        values = np.tile(np.linspace(lo, hi, H, dtype=np.float32)[:, None], (1, W))
    elif spec.kind == "bowl":
        rows = np.arange(H, dtype=np.float64)[:, None] - (H - 1) / 2
        cols = np.arange(W, dtype=np.float64)[None, :] - (W - 1) / 2
        dist = np.hypot(rows, cols)
        profile = (dist / dist.max()) ** 2
        values = (lo + (hi - lo) * profile).astype(np.float32)
    elif spec.kind == "steps":
        # Few enough bands that the masked discontinuity borders always leave
        # valid columns, even at the minimum 4-pixel width.
        bands = max(2, min(4, W // 2))
        levels = np.linspace(lo, hi, bands, dtype=np.float32)
        band_of_col = (np.arange(W) * bands) // W
        values = np.tile(levels[band_of_col], (H, 1))
        return DepthMap(values, _mask_discontinuity_borders(values))
    else:  # smooth
        rng = np.random.default_rng(spec.seed)
        rows = np.arange(H, dtype=np.float64)[:, None] / H
        cols = np.arange(W, dtype=np.float64)[None, :] / W
        field = np.zeros((H, W))
        for _ in range(4):
            amp = rng.uniform(0.5, 1.5)
            freq_r, freq_c = rng.uniform(0.25, 2.5, size=2)
            phase = rng.uniform(0.0, 2 * np.pi)
            field += amp * np.cos(2 * np.pi * (freq_r * rows + freq_c * cols) + phase)
        span = field.max() - field.min()
        values = (lo + (hi - lo) * (field - field.min()) / span).astype(np.float32)
    return DepthMap.full_valid(values)
