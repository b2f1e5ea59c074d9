"""SplitMix64 generator for reproducible sample points.

Chosen over numpy's generators so that the stream is trivially portable:
the same seed gives the same points in any implementation.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        # top 53 bits give a double in [0, 1)
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0**-53)

    def points(self, count: int, bounds: Sequence[tuple[float, float]]) -> np.ndarray:
        """``count`` points drawn coordinate by coordinate inside ``bounds``."""
        return np.array([[self.uniform(lo, hi) for lo, hi in bounds] for _ in range(count)])
