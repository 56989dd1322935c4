"""Content Popularity Module

Generalized Zipf popularity law over M ranked content types, with the
boundary convention q(0) = q(M+1) = 0 used by every threshold formula.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from icnlab.errors import IndexOutOfRangeError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PopularityModel:
    """Zipf request distribution q(m) = omega / m^gamma for m = 1..num_contents."""

    num_contents: int
    gamma: float
    omega: float = field(init=False)
    _masses: np.ndarray = field(init=False, repr=False, compare=False)
    _tails: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.num_contents, bool) or int(self.num_contents) != self.num_contents:
            raise InvalidParameterError("m", "must be an integer")
        if self.num_contents < 1:
            raise InvalidParameterError("m", "must be >= 1")
        if not (0.0 <= self.gamma <= 1.0):
            raise InvalidParameterError("gamma", "out of [0,1]")

        ranks = np.arange(1, self.num_contents + 1, dtype=np.float64)
        powers = np.exp(self.gamma * np.log(ranks))
        omega = 1.0 / float(np.sum(1.0 / powers))
        masses = omega / powers
        # index k holds sum_{i=k}^{M+1} q(i); accumulated from the least popular item upward
        tails = np.zeros(self.num_contents + 2, dtype=np.float64)
        tails[1 : self.num_contents + 1] = np.cumsum(masses[::-1])[::-1]
        tails[0] = tails[1]
        masses.setflags(write=False)
        tails.setflags(write=False)

        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "_masses", masses)
        object.__setattr__(self, "_tails", tails)

    @property
    def masses(self) -> np.ndarray:
        """Read-only array of q(1..M)."""
        return self._masses

    @property
    def tails(self) -> np.ndarray:
        """Read-only array t with t[k] = sum_{i=k}^{M+1} q(i) for k in [0, M+1]."""
        return self._tails

    def mass(self, m: int) -> float:
        """Return q(m); exactly 0 at the boundary indices 0 and M+1."""
        self._check_index("m", m)
        if m in (0, self.num_contents + 1):
            return 0.0
        return float(self._masses[m - 1])

    def tail_mass(self, start: int) -> float:
        """Return sum_{i=start}^{M+1} q(i)."""
        self._check_index("start", start)
        return float(self._tails[start])

    def _check_index(self, name: str, index: int):
        if not (0 <= index <= self.num_contents + 1):
            raise IndexOutOfRangeError(name, index, 0, self.num_contents + 1)


def new_popularity(num_contents: int, gamma: float) -> PopularityModel:
    """Build a popularity model, validating M >= 1 and gamma in [0, 1]."""
    model = PopularityModel(num_contents=num_contents, gamma=float(gamma))
    logger.debug(
        "Built Zipf model M=%d gamma=%.4f omega=%.6g",
        model.num_contents,
        model.gamma,
        model.omega,
    )
    return model
