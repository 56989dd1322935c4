"""Symmetric Equilibrium Solver

Closed-form Nash equilibrium of the joint caching and pricing game with K
identical access ICNs, one transit ICN and one content provider.

The caching game is solved first (transit threshold/price and provider
threshold/storage price from the induced-price sequences f and g), then the
two concave pricing problems give the access price and the content price.
All equilibrium arithmetic uses the epsilon -> 0 limit of the induced prices;
`reported_*` helpers apply the display offset.
"""

import logging
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from icnlab.errors import IndexOutOfRangeError, InvalidParameterError
from icnlab.model.economics import CostModel, DemandParams, Source, caching_costs
from icnlab.model.popularity import PopularityModel

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class SymmetricConfig:
    """Full parameterization of the symmetric game."""

    pm: PopularityModel
    cm: CostModel
    dp: DemandParams
    epsilon_report: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon_report > 0:
            raise InvalidParameterError("epsilon", "must be > 0")

    @property
    def num_contents(self) -> int:
        return self.pm.num_contents

    @cached_property
    def access_costs(self) -> np.ndarray:
        """c_A(i) for i = 1..M."""
        return caching_costs(self.cm.access_base, self.pm)

    @cached_property
    def transit_costs(self) -> np.ndarray:
        """c_C(i) for i = 1..M."""
        return caching_costs(self.cm.transit_base, self.pm)


class CachingOutcome(NamedTuple):
    th: int
    thc: int
    pc: float
    pos: float


class PricingOutcome(NamedTuple):
    pa: float
    poc: float


@dataclass(frozen=True)
class SymmetricEquilibrium:
    """The unique symmetric NE plus the equilibrium utilities."""

    th: int
    thc: int
    pc: float
    pos: float
    pa: float
    poc: float
    sigma: float
    ua: float
    uc: float
    uo: float
    reported_pc: float
    reported_pos: float
    warnings: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        data = asdict(self)
        data["warnings"] = list(self.warnings)
        return data


def _check_threshold(name: str, value: int, num_contents: int):
    if not (0 <= value <= num_contents):
        raise IndexOutOfRangeError(name, value, 0, num_contents)


def _induced_index(threshold: int, num_contents: int) -> int:
    """0-based cost index priced by a threshold: content th+1, or M at the top."""
    return min(threshold, num_contents - 1)


def induced_transit_price(cfg: SymmetricConfig, th: int) -> float:
    """Largest transit price keeping the access ICNs at threshold th (epsilon -> 0)."""
    _check_threshold("th", th, cfg.num_contents)
    return float(cfg.access_costs[_induced_index(th, cfg.num_contents)])


def induced_storage_price(cfg: SymmetricConfig, thc: int) -> float:
    """Largest provider storage price keeping the transit ICN at threshold thc (epsilon -> 0)."""
    _check_threshold("thc", thc, cfg.num_contents)
    return float(cfg.transit_costs[_induced_index(thc, cfg.num_contents)])


def reported_transit_price(cfg: SymmetricConfig, th: int) -> float:
    """Induced transit price with the display offset: -eps below M, +eps at M."""
    price = induced_transit_price(cfg, th)
    if th < cfg.num_contents:
        return price - cfg.epsilon_report
    return price + cfg.epsilon_report


def reported_storage_price(cfg: SymmetricConfig, thc: int) -> float:
    """Induced storage price with the display offset, never below c_O at thc = M."""
    price = induced_storage_price(cfg, thc)
    if thc < cfg.num_contents:
        return price - cfg.epsilon_report
    return max(price + cfg.epsilon_report, cfg.cm.provider_unit_cost)


def access_seq(cfg: SymmetricConfig, th: int) -> float:
    """f(th) = P_C(th) * sum_{i>th} q(i) + th * c_C0."""
    tail = cfg.pm.tail_mass(th + 1)
    return induced_transit_price(cfg, th) * tail + th * cfg.cm.transit_base


def provider_seq(cfg: SymmetricConfig, thc: int) -> float:
    """g(thc) = (P_O^(s)(thc) - c_O) * sum_{i>thc} q(i)."""
    tail = cfg.pm.tail_mass(thc + 1)
    return (induced_storage_price(cfg, thc) - cfg.cm.provider_unit_cost) * tail


def access_sequence(cfg: SymmetricConfig) -> np.ndarray:
    """f over th = 0..M."""
    thresholds = np.arange(cfg.num_contents + 1)
    prices = cfg.access_costs[np.minimum(thresholds, cfg.num_contents - 1)]
    return prices * cfg.pm.tails[thresholds + 1] + thresholds * cfg.cm.transit_base


def provider_sequence(cfg: SymmetricConfig) -> np.ndarray:
    """g over thc = 0..M."""
    thresholds = np.arange(cfg.num_contents + 1)
    prices = cfg.transit_costs[np.minimum(thresholds, cfg.num_contents - 1)]
    return (prices - cfg.cm.provider_unit_cost) * cfg.pm.tails[thresholds + 1]


def storage_prices(cfg: SymmetricConfig) -> np.ndarray:
    """Induced storage price for every thc = 0..M."""
    thresholds = np.arange(cfg.num_contents + 1)
    return cfg.transit_costs[np.minimum(thresholds, cfg.num_contents - 1)]


def access_best_threshold(cfg: SymmetricConfig, pc: float) -> int:
    """Largest i with c_A(i) <= pc, or 0 when nothing is worth caching."""
    if not pc >= 0:
        raise InvalidParameterError("pc", "must be >= 0")
    return int(np.searchsorted(cfg.access_costs, pc, side="right"))


def transit_best_threshold(cfg: SymmetricConfig, pos: float, th_floor: int) -> int:
    """Transit threshold answering storage price pos, never below the access threshold."""
    if not pos >= 0:
        raise InvalidParameterError("pos", "must be >= 0")
    _check_threshold("th_floor", th_floor, cfg.num_contents)
    return max(th_floor, int(np.searchsorted(cfg.transit_costs, pos, side="right")))


def provider_feasible(cfg: SymmetricConfig, th: int) -> np.ndarray:
    """Mask over thc = 0..M of provider actions: thc >= th, induced price >= c_O, or thc = M."""
    thresholds = np.arange(cfg.num_contents + 1)
    mask = (thresholds >= th) & (storage_prices(cfg) >= cfg.cm.provider_unit_cost)
    mask[cfg.num_contents] = True
    return mask


def solve_caching_game(cfg: SymmetricConfig) -> CachingOutcome:
    """Solve the transit/provider matrix game for (Th*, Th_C*, P_C*, P_O^(s)*).

    Ties in either argmax go to the smallest threshold.
    """
    f = access_sequence(cfg)
    th = int(np.argmax(f))

    g = np.where(provider_feasible(cfg, th), provider_sequence(cfg), -np.inf)
    thc_max = int(np.argmax(g))
    thc = max(th, thc_max)

    pc = induced_transit_price(cfg, th)
    pos = max(induced_storage_price(cfg, thc), cfg.cm.provider_unit_cost)
    logger.debug("Caching game: th=%d thc=%d pc=%.6g pos=%.6g", th, thc, pc, pos)
    return CachingOutcome(th=th, thc=thc, pc=pc, pos=pos)


def solve_pricing(cfg: SymmetricConfig, outcome: CachingOutcome) -> PricingOutcome:
    """Closed-form access and content prices given the caching outcome."""
    th, thc, pc, pos = outcome
    _check_threshold("th", th, cfg.num_contents)
    _check_threshold("thc", thc, cfg.num_contents)
    rho, rho0 = cfg.dp.rho, cfg.dp.rho0

    provider_tail = cfg.pm.tail_mass(thc + 1)
    poc = max(0.0, (1.0 - rho0 * (pos - cfg.cm.provider_unit_cost) * provider_tail) / (2.0 * rho0))

    access_cost = th * cfg.cm.access_base + pc * cfg.pm.tail_mass(th + 1)
    pa = (rho * access_cost + 1.0 - rho0 * poc) / rho
    return PricingOutcome(pa=pa, poc=poc)


def _epsilon_warnings(cfg: SymmetricConfig, th: int, thc: int) -> list[str]:
    """Check the display offset stays inside the cost gaps it is subtracted from."""
    found = []
    for name, costs, threshold in (
        ("transit", cfg.access_costs, th),
        ("storage", cfg.transit_costs, thc),
    ):
        if threshold >= cfg.num_contents:
            continue
        upper = float(costs[threshold])
        lower = float(costs[threshold - 1]) if threshold > 0 else 0.0
        gap = upper - lower
        if gap <= 0:
            found.append(f"degenerate {name} price boundary at threshold {threshold}")
        elif cfg.epsilon_report >= gap:
            msg = f"must be below the {name} cost gap {gap:.3g} at threshold {threshold}"
            raise InvalidParameterError("epsilon", msg)
    return found


def solve_equilibrium(cfg: SymmetricConfig) -> SymmetricEquilibrium:
    """Solve caching then pricing and evaluate the equilibrium utilities."""
    outcome = solve_caching_game(cfg)
    pricing = solve_pricing(cfg, outcome)
    th, thc, pc, pos = outcome
    warnings = _epsilon_warnings(cfg, th, thc)

    sigma = 1.0 - cfg.dp.rho0 * pricing.poc
    if sigma < 0:
        warnings.append(f"negative demand sigma={sigma:.6g}")
    market = cfg.dp.num_access * sigma
    access_tail = cfg.pm.tail_mass(th + 1)
    provider_tail = cfg.pm.tail_mass(thc + 1)

    ua = sigma * (pricing.pa - th * cfg.cm.access_base - pc * access_tail)
    uc = market * (pc * access_tail - (thc - th) * cfg.cm.transit_base - pos * provider_tail)
    uo = market * (pricing.poc + (pos - cfg.cm.provider_unit_cost) * provider_tail)

    for warning in warnings:
        logger.warning("Equilibrium warning: %s", warning)

    return SymmetricEquilibrium(
        th=th,
        thc=thc,
        pc=pc,
        pos=pos,
        pa=pricing.pa,
        poc=pricing.poc,
        sigma=sigma,
        ua=ua,
        uc=uc,
        uo=uo,
        reported_pc=reported_transit_price(cfg, th),
        reported_pos=reported_storage_price(cfg, thc),
        warnings=tuple(warnings),
    )


def content_sources(th: int, thc: int, num_contents: int) -> tuple[Source, ...]:
    """Per-content serving source implied by the two thresholds."""
    if not (0 <= th <= thc <= num_contents):
        msg = f"needs 0 <= th <= thc <= M, got th={th} thc={thc} M={num_contents}"
        raise InvalidParameterError("thresholds", msg)
    sources = []
    for i in range(1, num_contents + 1):
        if i <= th:
            sources.append(Source.SELF)
        elif i <= thc:
            sources.append(Source.TRANSIT)
        else:
            sources.append(Source.PROVIDER)
    return tuple(sources)


def build_config(
    *,
    m: int,
    gamma: float,
    r: float,
    co: float,
    c0: float = 1.0,
    k: int = 2,
    rho: float = 0.1,
    rho0: float = 0.1,
    beta: float = 10.0,
    epsilon: float = DEFAULT_EPSILON,
) -> SymmetricConfig:
    """Assemble a config from the flat parameter names used by files and flags."""
    return SymmetricConfig(
        pm=PopularityModel(num_contents=m, gamma=float(gamma)),
        cm=CostModel.from_ratio(c0, r, co),
        dp=DemandParams(rho=float(rho), rho0=float(rho0), beta=float(beta), num_access=k),
        epsilon_report=float(epsilon),
    )
