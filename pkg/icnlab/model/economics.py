"""Economics Module

Popularity-scaled caching costs and the linear user-demand functions shared
by the symmetric and asymmetric games.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from icnlab.errors import IndexOutOfRangeError, InvalidParameterError
from icnlab.model.popularity import PopularityModel

logger = logging.getLogger(__name__)


class Source(IntEnum):
    """Where one stream's demand for one content type is served from.

    The integer values index the last axis of caching (alpha) matrices.
    """

    SELF = 0
    PEER = 1
    TRANSIT = 2
    PROVIDER = 3


@dataclass(frozen=True)
class CostModel:
    """Base caching costs for access ICNs, the transit ICN and the content provider."""

    access_base: float
    transit_base: float
    provider_unit_cost: float
    cost_ratio: float

    def __post_init__(self):
        for name, value in (
            ("c0", self.access_base),
            ("c_c0", self.transit_base),
            ("co", self.provider_unit_cost),
            ("r", self.cost_ratio),
        ):
            if not value >= 0:
                raise InvalidParameterError(name, "must be >= 0")

    @classmethod
    def from_ratio(
        cls,
        access_base: float,
        cost_ratio: float,
        provider_unit_cost: float,
    ) -> "CostModel":
        """Build a cost model where the transit base cost is R times the access base cost."""
        return cls(
            access_base=float(access_base),
            transit_base=float(cost_ratio) * float(access_base),
            provider_unit_cost=float(provider_unit_cost),
            cost_ratio=float(cost_ratio),
        )


@dataclass(frozen=True)
class DemandParams:
    """Price sensitivities of user demand for a market of K identical access ICNs."""

    rho: float
    rho0: float
    beta: float
    num_access: int

    def __post_init__(self):
        if not self.rho > 0:
            raise InvalidParameterError("rho", "must be > 0")
        if not self.rho0 > 0:
            raise InvalidParameterError("rho0", "must be > 0")
        if not self.beta > 1:
            raise InvalidParameterError("beta", "must be > 1")
        if isinstance(self.num_access, bool) or int(self.num_access) != self.num_access:
            raise InvalidParameterError("k", "must be an integer")
        if self.num_access < 1:
            raise InvalidParameterError("k", "must be >= 1")


def caching_cost(base: float, pm: PopularityModel, i: int) -> float:
    """Cost of caching content i: base / q(i)."""
    if not (1 <= i <= pm.num_contents):
        raise IndexOutOfRangeError("i", i, 1, pm.num_contents)
    return base / pm.mass(i)


def caching_costs(base: float, pm: PopularityModel) -> np.ndarray:
    """Vector of caching costs for contents 1..M (index 0 is content 1)."""
    return base / pm.masses


def demand_two(
    rho_a: float,
    rho_b: float,
    rho0: float,
    pa: float,
    pb: float,
    poc: float,
) -> tuple[float, float]:
    """Linear demands (sigma_A, sigma_B) of two competing access ICNs.

    Values are returned raw; a negative demand is the caller's to report.
    The competitor term is formed first so that equal prices cancel exactly.
    """
    spread = rho_b * pb - rho_a * pa
    sigma_a = 1.0 + spread - rho0 * poc
    sigma_b = 1.0 - spread - rho0 * poc
    return sigma_a, sigma_b


def demand_k(dp: DemandParams, prices: Sequence[float], poc: float, j: int) -> float:
    """Demand received by access ICN j (1-based) among K symmetric ICNs.

    With K = 1 there are no competitors and the averaged competitor term is 0.
    The price terms are accumulated as differences to the own price so that
    equal prices cancel exactly.
    """
    if len(prices) != dp.num_access:
        msg = f"has length {len(prices)}, expected {dp.num_access}"
        raise InvalidParameterError("prices", msg)
    if not (1 <= j <= dp.num_access):
        raise IndexOutOfRangeError("j", j, 1, dp.num_access)

    own = prices[j - 1]
    if dp.num_access == 1:
        return 1.0 - dp.rho * own - dp.rho0 * poc
    if dp.num_access == 2:
        sigmas = demand_two(dp.rho, dp.rho, dp.rho0, prices[0], prices[1], poc)
        return sigmas[j - 1]

    spread = sum(p - own for k, p in enumerate(prices, start=1) if k != j)
    return 1.0 + dp.rho * spread / (dp.num_access - 1) - dp.rho0 * poc
