"""Minimal gym-style Box space."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with per-dimension bounds, gym-style."""

    low: np.ndarray
    high: np.ndarray
    dtype: np.dtype = field(default=np.dtype(np.float64))

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.float64)
        high = np.asarray(self.high, dtype=np.float64)
        if low.shape != high.shape:
            raise ValueError("low and high must share a shape")
        if np.any(low > high):
            raise ValueError("low must not exceed high")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "dtype", np.dtype(self.dtype))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.low.shape

    def contains(self, x) -> bool:
        arr = np.asarray(x, dtype=np.float64)
        return arr.shape == self.shape and bool(
            np.all(arr >= self.low) and np.all(arr <= self.high)
        )

    def sample(self, rng: np.random.Generator | None = None) -> np.ndarray:
        rng = rng or np.random.default_rng()
        high = np.where(np.isinf(self.high), np.finfo(np.float64).max / 4, self.high)
        value = rng.uniform(self.low, high)
        if np.issubdtype(self.dtype, np.integer):
            return np.floor(value).astype(self.dtype)
        return value.astype(self.dtype)
