"""Integer-indexed sampled sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def total_variation(values) -> float:
    """Sum of absolute consecutive differences."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.abs(np.diff(values)).sum())


@dataclass(frozen=True)
class Profile:
    """Values ``values[i]`` sampled at the integers ``j_min + i``."""

    j_min: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "j_min", int(self.j_min))

    @property
    def j_max(self) -> int:
        return self.j_min + len(self.values) - 1

    @property
    def j(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j: int) -> float:
        i = j - self.j_min
        if i < 0 or i >= len(self.values):
            raise IndexError(f"j={j} outside [{self.j_min}, {self.j_max}]")
        return float(self.values[i])

    def window(self, j_lo: int, j_hi: int) -> np.ndarray:
        if j_lo > j_hi or j_lo < self.j_min or j_hi > self.j_max:
            raise IndexError(
                f"window [{j_lo}, {j_hi}] not inside [{self.j_min}, {self.j_max}]"
            )
        return self.values[j_lo - self.j_min : j_hi - self.j_min + 1]

    def tv(self, j_lo: int, j_hi: int) -> float:
        """Total variation sum_{j_lo < j <= j_hi} |V(j) - V(j-1)|."""
        if j_lo >= j_hi:
            raise ValueError("need j_lo < j_hi")
        return total_variation(self.window(j_lo, j_hi))

    def shifted(self, k: int) -> "Profile":
        """The profile translated right by k cells."""
        return Profile(self.j_min + k, self.values)
