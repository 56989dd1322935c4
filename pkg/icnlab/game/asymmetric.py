"""Asymmetric Two-ICN Game

General game between two access ICNs (A, B) with their own sensitivities,
scalings and caching costs, the transit ICN C and the content provider O.

Caching for one content type is a 0-1 choice of source per demand stream
(see `Source`); utilities are linear in those choices, so every evaluation
here accepts alpha matrices of shape (..., M, 4) and price arrays of shape
(...,) and broadcasts over the leading axes. Best responses use that to score
a whole price grid in one pass.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property

import numpy as np

from icnlab.errors import IndexOutOfRangeError, InvalidParameterError
from icnlab.game.grid import DEFAULT_GRID_INTERVALS, PriceGrid, uniform_grid
from icnlab.game.symmetric import SymmetricConfig, SymmetricEquilibrium
from icnlab.model.economics import Source, caching_costs, demand_two
from icnlab.model.popularity import PopularityModel

logger = logging.getLogger(__name__)

NUM_SOURCES = len(Source)
VERTEX_TOLERANCE = 1e-12


class Player(StrEnum):
    A = "A"
    B = "B"
    C = "C"
    O = "O"  # noqa: E741


class AccessObjective(StrEnum):
    """How an access ICN's own-stream revenue is written.

    FORWARDING_MARGIN charges every request P_A and credits P_C on the cached
    share; AVERAGE splits requests into cached and forwarded shares. Both give
    the same value on any alpha row that sums to 1.
    """

    FORWARDING_MARGIN = "forwarding_margin"
    AVERAGE = "average"


class ConvergenceStatus(StrEnum):
    FIXED_POINT = "FixedPoint"
    CYCLE = "Cycle"
    MAX_ITER = "MaxIter"


PLAYER_ORDER = (Player.A, Player.B, Player.C, Player.O)


@dataclass(frozen=True)
class AsymmetricConfig:
    """Parameters of the two-access-ICN game."""

    pm: PopularityModel
    rho_a: float
    rho_b: float
    rho0: float
    beta_a: float
    beta_b: float
    c_a0: float
    c_b0: float
    c_c0: float
    co: float

    def __post_init__(self):
        for name in ("rho_a", "rho_b", "rho0"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(name, "must be > 0")
        for name in ("beta_a", "beta_b"):
            if not getattr(self, name) > 1:
                raise InvalidParameterError(name, "must be > 1")
        for name in ("c_a0", "c_b0", "c_c0", "co"):
            if not getattr(self, name) >= 0:
                raise InvalidParameterError(name, "must be >= 0")

    @classmethod
    def symmetric(cls, cfg: SymmetricConfig) -> "AsymmetricConfig":
        """Two identical access ICNs with the parameters of a symmetric config."""
        return cls(
            pm=cfg.pm,
            rho_a=cfg.dp.rho,
            rho_b=cfg.dp.rho,
            rho0=cfg.dp.rho0,
            beta_a=cfg.dp.beta,
            beta_b=cfg.dp.beta,
            c_a0=cfg.cm.access_base,
            c_b0=cfg.cm.access_base,
            c_c0=cfg.cm.transit_base,
            co=cfg.cm.provider_unit_cost,
        )

    @property
    def num_contents(self) -> int:
        return self.pm.num_contents

    @cached_property
    def costs_a(self) -> np.ndarray:
        return caching_costs(self.c_a0, self.pm)

    @cached_property
    def costs_b(self) -> np.ndarray:
        return caching_costs(self.c_b0, self.pm)

    @cached_property
    def costs_c(self) -> np.ndarray:
        return caching_costs(self.c_c0, self.pm)


@dataclass(frozen=True)
class Prices:
    pa: float
    pb: float
    pc: float
    pos: float
    poc: float

    def __post_init__(self):
        for name in ("pa", "pb", "pc", "pos", "poc"):
            if not getattr(self, name) >= 0:
                raise InvalidParameterError(name, "must be >= 0")

    def max_change(self, other: "Prices") -> float:
        return max(
            abs(self.pa - other.pa),
            abs(self.pb - other.pb),
            abs(self.pc - other.pc),
            abs(self.pos - other.pos),
            abs(self.poc - other.poc),
        )


@dataclass(frozen=True)
class CachingAssignment:
    """Serving source of every content type for A's and B's demand streams."""

    stream_a: tuple[Source, ...]
    stream_b: tuple[Source, ...]

    def __post_init__(self):
        if len(self.stream_a) != len(self.stream_b):
            raise InvalidParameterError("caching", "streams differ in length")

    def alpha(self, stream: Player) -> np.ndarray:
        """0-1 alpha matrix (M, 4) for one stream; columns follow `Source`."""
        sources = self.stream_a if stream is Player.A else self.stream_b
        return _one_hot(np.asarray(sources, dtype=np.intp))

    def count(self, source: Source) -> tuple[int, int]:
        return self.stream_a.count(source), self.stream_b.count(source)


@dataclass(frozen=True)
class StrategyProfile:
    prices: Prices
    caching: CachingAssignment

    def as_dict(self) -> dict:
        return {
            "pa": self.prices.pa,
            "pb": self.prices.pb,
            "pc": self.prices.pc,
            "pos": self.prices.pos,
            "poc": self.prices.poc,
            "stream_a": [s.name for s in self.caching.stream_a],
            "stream_b": [s.name for s in self.caching.stream_b],
        }


@dataclass(frozen=True)
class TraceStep:
    sweep: int
    player: Player
    profile: StrategyProfile


@dataclass(frozen=True)
class BestResponseRun:
    status: ConvergenceStatus
    sweeps: int
    final: StrategyProfile
    trace: tuple[TraceStep, ...] = field(default=(), repr=False)


def _one_hot(sources: np.ndarray) -> np.ndarray:
    return (sources[..., None] == np.arange(NUM_SOURCES)).astype(np.float64)


def _as_prices(*values) -> list[np.ndarray]:
    return np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in values))


def _stream_sources(
    own_costs: np.ndarray,
    peer_costs: np.ndarray,
    transit_costs: np.ndarray,
    pc: np.ndarray,
    pos: np.ndarray,
    peer_storage: np.ndarray,
) -> np.ndarray:
    """Source index per content for one stream; price arguments carry a trailing axis."""
    self_cached = pc > own_costs
    peer_accepts = (pc > peer_costs) & (peer_storage >= peer_costs)
    peer_price = np.where(peer_accepts, peer_storage, np.inf)

    # ties: transit, then provider, then peer
    use_transit = (transit_costs <= pos) & (transit_costs <= peer_price)
    use_provider = ~use_transit & (pos <= peer_price)
    forwarded = np.where(
        use_transit,
        Source.TRANSIT,
        np.where(use_provider, Source.PROVIDER, Source.PEER),
    )
    return np.where(self_cached, Source.SELF, forwarded).astype(np.intp)


def resolve_sources(
    cfg: AsymmetricConfig,
    pa,
    pb,
    pc,
    pos,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized caching resolution: source indices of shape (..., M) for both streams."""
    pa, pb, pc, pos = (p[..., None] for p in _as_prices(pa, pb, pc, pos))
    storage_a = pa / (1.0 + cfg.beta_a)
    storage_b = pb / (1.0 + cfg.beta_b)
    sources_a = _stream_sources(cfg.costs_a, cfg.costs_b, cfg.costs_c, pc, pos, storage_b)
    sources_b = _stream_sources(cfg.costs_b, cfg.costs_a, cfg.costs_c, pc, pos, storage_a)
    return sources_a, sources_b


def resolve_caching(cfg: AsymmetricConfig, prices: Prices, i: int) -> tuple[Source, Source]:
    """Sources serving content i for A's and B's streams at the given prices."""
    if not (1 <= i <= cfg.num_contents):
        raise IndexOutOfRangeError("i", i, 1, cfg.num_contents)
    sources_a, sources_b = resolve_sources(cfg, prices.pa, prices.pb, prices.pc, prices.pos)
    return Source(int(sources_a[i - 1])), Source(int(sources_b[i - 1]))


def resolve_all(cfg: AsymmetricConfig, prices: Prices) -> CachingAssignment:
    sources_a, sources_b = resolve_sources(cfg, prices.pa, prices.pb, prices.pc, prices.pos)
    return CachingAssignment(
        stream_a=tuple(Source(int(s)) for s in sources_a),
        stream_b=tuple(Source(int(s)) for s in sources_b),
    )


def resolve_profile(cfg: AsymmetricConfig, prices: Prices) -> StrategyProfile:
    return StrategyProfile(prices=prices, caching=resolve_all(cfg, prices))


def peer_undercuts(cfg: AsymmetricConfig, prices: Prices) -> tuple[np.ndarray, np.ndarray]:
    """Per-stream masks of forwarded contents a peer would take over on price alone.

    A content is flagged when the peer's storage price is at least the peer's own
    caching cost and strictly below both transit caching and the provider. Whether
    the peer actually holds the content is not checked.
    """
    storage_a = prices.pa / (1.0 + cfg.beta_a)
    storage_b = prices.pb / (1.0 + cfg.beta_b)
    upstream = np.minimum(cfg.costs_c, prices.pos)

    def flagged(own_costs: np.ndarray, peer_costs: np.ndarray, storage: float) -> np.ndarray:
        forwarded = ~(prices.pc > own_costs)
        return forwarded & (storage >= peer_costs) & (storage < upstream)

    return (
        flagged(cfg.costs_a, cfg.costs_b, storage_b),
        flagged(cfg.costs_b, cfg.costs_a, storage_a),
    )


def demands(cfg: AsymmetricConfig, prices: Prices) -> tuple[float, float]:
    """(sigma_A, sigma_B) at the given prices."""
    return demand_two(cfg.rho_a, cfg.rho_b, cfg.rho0, prices.pa, prices.pb, prices.poc)


def _access_value(
    q: np.ndarray,
    own_price: np.ndarray,
    pc: np.ndarray,
    own_costs: np.ndarray,
    own_beta: float,
    own_demand: np.ndarray,
    peer_demand: np.ndarray,
    own_alpha: np.ndarray,
    peer_alpha: np.ndarray,
    objective: AccessObjective,
) -> np.ndarray:
    cached = own_alpha[..., Source.SELF]
    served_for_peer = peer_alpha[..., Source.PEER]
    storage = own_price[..., None] / (1.0 + own_beta)
    peer_term = np.sum(q * served_for_peer * (storage - own_costs), axis=-1)

    if objective is AccessObjective.FORWARDING_MARGIN:
        own_term = np.sum(q * cached * (pc[..., None] - own_costs), axis=-1)
        own_term = own_term + (own_price - pc) * np.sum(q)
    else:
        own_term = np.sum(q * cached * (own_price[..., None] - own_costs), axis=-1)
        own_term = own_term + np.sum(q * (1.0 - cached), axis=-1) * (own_price - pc)
    return own_demand * own_term + peer_demand * peer_term


def _transit_value(
    q: np.ndarray,
    pc: np.ndarray,
    pos: np.ndarray,
    transit_costs: np.ndarray,
    demand: np.ndarray,
    alpha: np.ndarray,
    peer_storage: np.ndarray,
) -> np.ndarray:
    pc_ = pc[..., None]
    margin = (
        alpha[..., Source.TRANSIT] * (pc_ - transit_costs)
        + alpha[..., Source.PEER] * (pc_ - peer_storage[..., None])
        + alpha[..., Source.PROVIDER] * (pc_ - pos[..., None])
    )
    return demand * np.sum(q * margin, axis=-1)


def _provider_value(served_a, served_b, sigma_a, sigma_b, pos, poc, co: float):
    """Provider utility from the popularity mass each stream fetches from it."""
    return (sigma_a * served_a + sigma_b * served_b) * (pos - co) + (sigma_a + sigma_b) * poc


def evaluate_utilities(
    cfg: AsymmetricConfig,
    pa,
    pb,
    pc,
    pos,
    poc,
    alpha_a: np.ndarray,
    alpha_b: np.ndarray,
    objective: AccessObjective = AccessObjective.FORWARDING_MARGIN,
) -> dict[Player, np.ndarray]:
    """Utilities of all four players for (possibly batched, possibly fractional) profiles."""
    pa, pb, pc, pos, poc = _as_prices(pa, pb, pc, pos, poc)
    q = cfg.pm.masses
    sigma_a, sigma_b = demand_two(cfg.rho_a, cfg.rho_b, cfg.rho0, pa, pb, poc)
    storage_a = pa / (1.0 + cfg.beta_a)
    storage_b = pb / (1.0 + cfg.beta_b)

    ua = _access_value(
        q, pa, pc, cfg.costs_a, cfg.beta_a, sigma_a, sigma_b, alpha_a, alpha_b, objective
    )
    ub = _access_value(
        q, pb, pc, cfg.costs_b, cfg.beta_b, sigma_b, sigma_a, alpha_b, alpha_a, objective
    )
    uc = _transit_value(q, pc, pos, cfg.costs_c, sigma_a, alpha_a, storage_b) + _transit_value(
        q, pc, pos, cfg.costs_c, sigma_b, alpha_b, storage_a
    )
    served_a = np.sum(q * alpha_a[..., Source.PROVIDER], axis=-1)
    served_b = np.sum(q * alpha_b[..., Source.PROVIDER], axis=-1)
    uo = _provider_value(served_a, served_b, sigma_a, sigma_b, pos, poc, cfg.co)
    return {Player.A: ua, Player.B: ub, Player.C: uc, Player.O: uo}


def _profile_utility(
    cfg: AsymmetricConfig,
    profile: StrategyProfile,
    player: Player,
    objective: AccessObjective,
) -> float:
    p = profile.prices
    values = evaluate_utilities(
        cfg,
        p.pa,
        p.pb,
        p.pc,
        p.pos,
        p.poc,
        profile.caching.alpha(Player.A),
        profile.caching.alpha(Player.B),
        objective,
    )
    return float(values[player])


def utility_a(
    cfg: AsymmetricConfig,
    profile: StrategyProfile,
    objective: AccessObjective = AccessObjective.FORWARDING_MARGIN,
) -> float:
    return _profile_utility(cfg, profile, Player.A, objective)


def utility_b(
    cfg: AsymmetricConfig,
    profile: StrategyProfile,
    objective: AccessObjective = AccessObjective.FORWARDING_MARGIN,
) -> float:
    return _profile_utility(cfg, profile, Player.B, objective)


def utility_c(cfg: AsymmetricConfig, profile: StrategyProfile) -> float:
    return _profile_utility(cfg, profile, Player.C, AccessObjective.FORWARDING_MARGIN)


def utility_o(cfg: AsymmetricConfig, profile: StrategyProfile) -> float:
    return _profile_utility(cfg, profile, Player.O, AccessObjective.FORWARDING_MARGIN)


_PRICE_FIELD = {Player.A: "pa", Player.B: "pb", Player.C: "pc"}


def _grid_scores(
    cfg: AsymmetricConfig,
    player: Player,
    prices: Prices,
    price_field: str,
    candidates: np.ndarray,
    objective: AccessObjective,
) -> np.ndarray:
    """Utility of `player` for every candidate value of one price, caching re-resolved."""
    values = {name: getattr(prices, name) for name in ("pa", "pb", "pc", "pos", "poc")}
    values[price_field] = candidates
    pa, pb, pc, pos, poc = _as_prices(*values.values())
    sources_a, sources_b = resolve_sources(cfg, pa, pb, pc, pos)
    utilities = evaluate_utilities(
        cfg, pa, pb, pc, pos, poc, _one_hot(sources_a), _one_hot(sources_b), objective
    )
    return utilities[player]


def _best_price(
    cfg: AsymmetricConfig,
    player: Player,
    prices: Prices,
    price_field: str,
    candidates: np.ndarray,
    objective: AccessObjective,
) -> Prices:
    scores = _grid_scores(cfg, player, prices, price_field, candidates, objective)
    best = int(np.argmax(scores))
    # an incumbent price that ties the maximum is kept; otherwise the lowest maximizer wins
    incumbent = np.flatnonzero(candidates == getattr(prices, price_field))
    if incumbent.size and scores[incumbent[0]] >= scores[best]:
        return prices
    return replace(prices, **{price_field: float(candidates[best])})


def _provider_scores(cfg: AsymmetricConfig, prices: Prices, candidates: np.ndarray) -> np.ndarray:
    """Provider utility on the joint grid: rows are storage prices, columns content prices.

    Caching only reacts to the storage price and demand only to the content
    price, so one resolution per row and one demand per column cover the grid.
    """
    sources_a, sources_b = resolve_sources(cfg, prices.pa, prices.pb, prices.pc, candidates)
    q = cfg.pm.masses
    served_a = np.sum(q * (sources_a == Source.PROVIDER), axis=-1)
    served_b = np.sum(q * (sources_b == Source.PROVIDER), axis=-1)
    sigma_a, sigma_b = demand_two(cfg.rho_a, cfg.rho_b, cfg.rho0, prices.pa, prices.pb, candidates)
    return _provider_value(
        served_a[:, None],
        served_b[:, None],
        sigma_a[None, :],
        sigma_b[None, :],
        candidates[:, None],
        candidates[None, :],
        cfg.co,
    )


def _best_provider_prices(
    cfg: AsymmetricConfig,
    prices: Prices,
    candidates: np.ndarray,
) -> Prices:
    scores = _provider_scores(cfg, prices, candidates)
    top = scores >= np.max(scores)
    rows = np.flatnonzero(candidates == prices.pos)
    cols = np.flatnonzero(candidates == prices.poc)
    # keep as much of the incumbent pair as ties allow, then the lowest maximizer
    if rows.size and cols.size and top[rows[0], cols[0]]:
        return prices
    if rows.size and top[rows[0]].any():
        return replace(prices, poc=float(candidates[np.argmax(top[rows[0]])]))
    if cols.size and top[:, cols[0]].any():
        return replace(prices, pos=float(candidates[np.argmax(top[:, cols[0]])]))
    row, col = np.unravel_index(int(np.argmax(top)), top.shape)
    return replace(prices, pos=float(candidates[row]), poc=float(candidates[col]))


def best_response(
    cfg: AsymmetricConfig,
    player: Player,
    profile: StrategyProfile,
    grid: PriceGrid,
    objective: AccessObjective = AccessObjective.FORWARDING_MARGIN,
) -> StrategyProfile:
    """Move one player's price to its grid argmax, with caching re-resolved at each candidate.

    The provider controls two prices and takes the argmax over every
    (storage, content) pair of the grid.
    """
    candidates = grid.points()
    if candidates.size == 0:
        raise InvalidParameterError("grid", "has no points")

    prices = profile.prices
    if player is Player.O:
        prices = _best_provider_prices(cfg, prices, candidates)
    else:
        prices = _best_price(cfg, player, prices, _PRICE_FIELD[player], candidates, objective)
    return resolve_profile(cfg, prices)


def iterate_best_response(
    cfg: AsymmetricConfig,
    init: StrategyProfile,
    grid: PriceGrid,
    max_iter: int,
    tol: float,
    *,
    seed: int | None = None,
    objective: AccessObjective = AccessObjective.FORWARDING_MARGIN,
) -> BestResponseRun:
    """Round-robin best-response dynamics.

    Each sweep lets A, B, C and O respond once (in a seeded random order when
    `seed` is given). Stops at a fixed point (no price moved more than `tol`
    and caching unchanged over a sweep), at an exact repeat of an earlier
    end-of-sweep profile, or after `max_iter` sweeps.
    """
    if isinstance(max_iter, bool) or int(max_iter) != max_iter or max_iter < 1:
        raise InvalidParameterError("max_iter", "must be an integer >= 1")
    if not tol >= 0:
        raise InvalidParameterError("tol", "must be >= 0")

    rng = np.random.default_rng(seed) if seed is not None else None
    profile = init
    seen = {init}
    trace: list[TraceStep] = []
    status = ConvergenceStatus.MAX_ITER
    sweep = 0

    for sweep in range(1, int(max_iter) + 1):
        start = profile
        order = list(PLAYER_ORDER)
        if rng is not None:
            order = [order[k] for k in rng.permutation(len(order))]
        for player in order:
            profile = best_response(cfg, player, profile, grid, objective)
            trace.append(TraceStep(sweep=sweep, player=player, profile=profile))

        moved = profile.prices.max_change(start.prices)
        logger.debug("Sweep %d: max price change %.3g", sweep, moved)
        if moved <= tol and profile.caching == start.caching:
            status = ConvergenceStatus.FIXED_POINT
            break
        if profile in seen:
            status = ConvergenceStatus.CYCLE
            break
        seen.add(profile)

    logger.info("Best-response run finished: %s after %d sweeps", status.value, sweep)
    return BestResponseRun(status=status, sweeps=sweep, final=profile, trace=tuple(trace))


def utilities_over_rows(
    cfg: AsymmetricConfig,
    profile: StrategyProfile,
    stream: Player,
    i: int,
    rows: np.ndarray,
    objective: AccessObjective = AccessObjective.FORWARDING_MARGIN,
) -> dict[Player, np.ndarray]:
    """Utilities when content i of one stream takes each alpha row in `rows` (n, 4)."""
    if stream not in (Player.A, Player.B):
        raise InvalidParameterError("stream", "must be A or B")
    if not (1 <= i <= cfg.num_contents):
        raise IndexOutOfRangeError("i", i, 1, cfg.num_contents)
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))

    base = {s: profile.caching.alpha(s) for s in (Player.A, Player.B)}
    varied = np.repeat(base[stream][None, :, :], len(rows), axis=0)
    varied[:, i - 1, :] = rows
    fixed = base[Player.B if stream is Player.A else Player.A]
    alpha_a, alpha_b = (varied, fixed) if stream is Player.A else (fixed, varied)

    p = profile.prices
    return evaluate_utilities(cfg, p.pa, p.pb, p.pc, p.pos, p.poc, alpha_a, alpha_b, objective)


def verify_vertex_optimality(
    cfg: AsymmetricConfig,
    profile: StrategyProfile,
    i: int,
    samples: int,
    *,
    seed: int | None = None,
) -> bool:
    """Check that no fractional caching of content i beats the best 0-1 caching.

    For each stream, `samples` interior points of the alpha simplex are drawn
    and every player's utility is compared with its best vertex utility.
    """
    if samples < 1:
        raise InvalidParameterError("samples", "must be >= 1")
    rng = np.random.default_rng(seed)
    vertices = np.eye(NUM_SOURCES)

    for stream in (Player.A, Player.B):
        fractional = rng.dirichlet(np.ones(NUM_SOURCES), size=samples)
        at_vertices = utilities_over_rows(cfg, profile, stream, i, vertices)
        at_samples = utilities_over_rows(cfg, profile, stream, i, fractional)
        for player in PLAYER_ORDER:
            best = float(np.max(at_vertices[player]))
            slack = VERTEX_TOLERANCE * (1.0 + abs(best))
            if float(np.max(at_samples[player])) > best + slack:
                logger.warning(
                    "Fractional caching beats vertices: stream=%s player=%s i=%d",
                    stream.value,
                    player.value,
                    i,
                )
                return False
    return True


def default_price_grid(
    cfg: AsymmetricConfig,
    intervals: int = DEFAULT_GRID_INTERVALS,
) -> PriceGrid:
    """[0, c_M + c_O] with the largest access caching cost c_M."""
    high = max(float(cfg.costs_a[-1]), float(cfg.costs_b[-1])) + cfg.co
    if not high > 0:
        high = 1.0
    return uniform_grid(high, intervals)


def equilibrium_profile(
    cfg: SymmetricConfig,
    eq: SymmetricEquilibrium,
) -> tuple[AsymmetricConfig, StrategyProfile]:
    """Lift a symmetric equilibrium into the two-ICN game at its reported prices."""
    asym = AsymmetricConfig.symmetric(cfg)
    # zero-cost boundaries can push a reported price just below 0
    prices = Prices(
        pa=eq.pa,
        pb=eq.pa,
        pc=max(eq.reported_pc, 0.0),
        pos=max(eq.reported_pos, 0.0),
        poc=eq.poc,
    )
    return asym, resolve_profile(asym, prices)


def anchored_grid(grid: PriceGrid, profile: StrategyProfile) -> PriceGrid:
    """Grid that also contains every price of `profile`."""
    p = profile.prices
    return grid.with_anchors(p.pa, p.pb, p.pc, p.pos, p.poc)
