"""Price grids for discrete best-response and deviation searches."""

import math
from dataclasses import dataclass

import numpy as np

from icnlab.errors import InvalidParameterError

DEFAULT_GRID_INTERVALS = 1000


@dataclass(frozen=True)
class PriceGrid:
    """Uniform price grid [low, high] with spacing step, plus optional anchor prices.

    Anchors let a search include exact prices (e.g. a closed-form equilibrium)
    that the uniform spacing would miss.
    """

    low: float
    high: float
    step: float
    anchors: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidParameterError("step", "must be > 0")
        if not self.low >= 0:
            raise InvalidParameterError("low", "must be >= 0")
        if not self.high >= self.low:
            raise InvalidParameterError("high", "must be >= low")
        if any(not a >= 0 for a in self.anchors):
            raise InvalidParameterError("anchors", "must be >= 0")

    def points(self) -> np.ndarray:
        """Sorted, de-duplicated candidate prices."""
        count = math.floor((self.high - self.low) / self.step + 1e-9) + 1
        uniform = self.low + self.step * np.arange(count, dtype=np.float64)
        return np.unique(np.concatenate([uniform, np.asarray(self.anchors, dtype=np.float64)]))

    def with_anchors(self, *prices: float) -> "PriceGrid":
        return PriceGrid(self.low, self.high, self.step, self.anchors + tuple(prices))


def uniform_grid(high: float, intervals: int = DEFAULT_GRID_INTERVALS) -> PriceGrid:
    """Grid [0, high] split into `intervals` equal steps."""
    if intervals < 1:
        raise InvalidParameterError("intervals", "must be >= 1")
    if not high > 0:
        raise InvalidParameterError("high", "must be > 0")
    return PriceGrid(low=0.0, high=float(high), step=float(high) / intervals)
