"""Equilibrium Oracle

Brute-force checks that do not share intermediates with the solver:
popularity, costs and tails are rebuilt here from scalar arithmetic, and the
caching game is settled by evaluating the transit and provider objectives
directly rather than through the f/g shortcuts.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from icnlab.errors import EnumerationBudgetError, EquilibriumViolationError, InvalidParameterError
from icnlab.game.grid import PriceGrid, uniform_grid
from icnlab.game.symmetric import SymmetricConfig, SymmetricEquilibrium

logger = logging.getLogger(__name__)

ENUMERATION_BUDGET = 10_000
CONCAVITY_TOLERANCE = 1e-12
DEVIATION_TOLERANCE = 1e-9


class OracleOutcome(NamedTuple):
    th: int
    thc: int
    f_value: float
    g_value: float
    pc: float
    pos: float


@dataclass(frozen=True)
class DeviationReport:
    """Largest unilateral gain found for one player (0 when none exists)."""

    player: str
    best_gain: float
    at_action: str | None = None

    @property
    def profitable(self) -> bool:
        return self.best_gain > DEVIATION_TOLERANCE


@dataclass(frozen=True)
class _Tables:
    masses: list[float]
    tails: list[float]
    access_costs: list[float]
    transit_costs: list[float]


def _tables(cfg: SymmetricConfig) -> _Tables:
    m, gamma = cfg.pm.num_contents, cfg.pm.gamma
    if m > ENUMERATION_BUDGET:
        msg = f"M={m} exceeds the enumeration budget {ENUMERATION_BUDGET}"
        raise EnumerationBudgetError(msg)

    weights = [i**-gamma for i in range(1, m + 1)]
    omega = 1.0 / math.fsum(weights)
    masses = [omega * w for w in weights]

    tails = [0.0] * (m + 2)
    running = 0.0
    for k in range(m, 0, -1):
        running += masses[k - 1]
        tails[k] = running
    tails[0] = tails[1]

    return _Tables(
        masses=masses,
        tails=tails,
        access_costs=[cfg.cm.access_base / q for q in masses],
        transit_costs=[cfg.cm.transit_base / q for q in masses],
    )


def _induced(costs: list[float], threshold: int) -> float:
    return costs[min(threshold, len(costs) - 1)]


def _transit_objective(cfg: SymmetricConfig, t: _Tables, th: int, thc: int) -> float:
    """Transit profit per unit of access demand for thresholds (th, thc) at induced prices."""
    m = cfg.pm.num_contents
    pc = _induced(t.access_costs, th)
    pos = _induced(t.transit_costs, thc)
    if thc == m:
        pos = max(pos, cfg.cm.provider_unit_cost)
    return pc * t.tails[th + 1] - (thc - th) * cfg.cm.transit_base - pos * t.tails[thc + 1]


def _provider_objective(cfg: SymmetricConfig, t: _Tables, thc: int) -> float:
    """Provider storage profit per unit of access demand at induced storage price."""
    pos = _induced(t.transit_costs, thc)
    return (pos - cfg.cm.provider_unit_cost) * t.tails[thc + 1]


def brute_force_caching_game(cfg: SymmetricConfig) -> OracleOutcome:
    """Settle the transit/provider caching game by enumeration.

    The transit threshold maximizes the transit objective with everything it
    does not leave to the access ICNs cached at its own cost; the provider
    then picks the best feasible storage price. The returned point is audited
    for profitable unilateral deviations of either player.

    Raises:
        EnumerationBudgetError: If M exceeds the enumeration budget
        EquilibriumViolationError: If a profitable deviation exists
    """
    m = cfg.pm.num_contents
    t = _tables(cfg)
    co = cfg.cm.provider_unit_cost

    shift = m * cfg.cm.transit_base
    f_values = [_transit_objective(cfg, t, th, m) + shift for th in range(m + 1)]
    th = max(range(m + 1), key=lambda k: (f_values[k], -k))

    feasible = [j for j in range(th, m + 1) if j == m or _induced(t.transit_costs, j) >= co]
    g_values = {j: _provider_objective(cfg, t, j) for j in feasible}
    thc = max(feasible, key=lambda j: (g_values[j], -j))

    pc = _induced(t.access_costs, th)
    pos = max(_induced(t.transit_costs, thc), co)
    outcome = OracleOutcome(
        th=th,
        thc=thc,
        f_value=f_values[th],
        g_value=g_values[thc],
        pc=pc,
        pos=pos,
    )

    _assert_no_caching_deviation(cfg, t, outcome)
    return outcome


def _assert_no_caching_deviation(cfg: SymmetricConfig, t: _Tables, outcome: OracleOutcome):
    m = cfg.pm.num_contents
    c_c0 = cfg.cm.transit_base

    # transit: every (th', thc') with th' <= thc', provider's storage price held fixed
    current = (
        outcome.pc * t.tails[outcome.th + 1]
        - (outcome.thc - outcome.th) * c_c0
        - outcome.pos * t.tails[outcome.thc + 1]
    )
    holding = [j * c_c0 + outcome.pos * t.tails[j + 1] for j in range(m + 1)]
    cheapest_from = holding[:]
    for j in range(m - 1, -1, -1):
        cheapest_from[j] = min(cheapest_from[j], cheapest_from[j + 1])
    best = max(
        _induced(t.access_costs, k) * t.tails[k + 1] + k * c_c0 - cheapest_from[k]
        for k in range(m + 1)
    )
    if best - current > DEVIATION_TOLERANCE:
        msg = f"transit gains {best - current:.3g} at th={outcome.th} thc={outcome.thc}"
        raise EquilibriumViolationError(msg)

    # provider: every storage price inducing a feasible transit threshold
    feasible = [
        j
        for j in range(outcome.th, m + 1)
        if j == m or _induced(t.transit_costs, j) >= cfg.cm.provider_unit_cost
    ]
    best = max(_provider_objective(cfg, t, j) for j in feasible)
    if best - outcome.g_value > DEVIATION_TOLERANCE:
        msg = f"provider gains {best - outcome.g_value:.3g} by deviating from thc={outcome.thc}"
        raise EquilibriumViolationError(msg)


def check_concavity(seq: Sequence[float], tol: float = CONCAVITY_TOLERANCE) -> list[int]:
    """Indices n where seq[n+1] + seq[n-1] - 2*seq[n] >= tol."""
    if len(seq) < 3:
        msg = f"has length {len(seq)}, need at least 3"
        raise InvalidParameterError("seq", msg)
    values = np.asarray(seq, dtype=np.float64)
    second = values[2:] + values[:-2] - 2.0 * values[1:-1]
    return [int(n) + 1 for n in np.flatnonzero(second >= tol)]


def power_midpoint_gap(th: int, gamma: float) -> float:
    """(th/(th+1))^gamma + ((th+2)/(th+1))^gamma - 2, negative for th >= 1 and 0 < gamma < 1."""
    if th < 1:
        raise InvalidParameterError("th", "must be >= 1")
    return (th / (th + 1)) ** gamma + ((th + 2) / (th + 1)) ** gamma - 2.0


def check_power_concavity(
    thresholds: Sequence[int],
    gammas: Sequence[float],
) -> list[tuple[int, float]]:
    """(th, gamma) pairs on the grid where the midpoint gap is not negative."""
    return [(th, g) for th in thresholds for g in gammas if not power_midpoint_gap(th, g) < 0]


def default_deviation_grid(cfg: SymmetricConfig, eq: SymmetricEquilibrium) -> PriceGrid:
    """Uniform grid up to max(c_M + c_O, twice the largest equilibrium price)."""
    t = _tables(cfg)
    high = max(
        t.access_costs[-1] + cfg.cm.provider_unit_cost,
        2.0 * max(eq.pa, eq.pc, eq.pos, eq.poc),
        1.0,
    )
    return uniform_grid(high).with_anchors(eq.pa, eq.poc)


def _report(player: str, gain: float, action: str) -> DeviationReport:
    gain = max(0.0, gain)
    return DeviationReport(player=player, best_gain=gain, at_action=action if gain > 0 else None)


def deviation_check_symmetric(
    cfg: SymmetricConfig,
    eq: SymmetricEquilibrium,
    grid: PriceGrid | None = None,
) -> list[DeviationReport]:
    """Search each player's unilateral alternatives around a symmetric equilibrium.

    Access ICN: own price over the grid jointly with every caching threshold,
    the other K-1 access ICNs staying at eq.pa. Transit ICN: every (th, thc)
    pair its price can induce, storage price fixed. Provider: every storage
    price that induces a feasible transit threshold jointly with the content
    price over the grid.

    Candidate demand is floored at 0: pricing every user out earns nothing.
    """
    m = cfg.pm.num_contents
    t = _tables(cfg)
    grid = grid if grid is not None else default_deviation_grid(cfg, eq)
    prices = grid.points()
    rho, rho0, k = cfg.dp.rho, cfg.dp.rho0, cfg.dp.num_access
    c0, c_c0, co = cfg.cm.access_base, cfg.cm.transit_base, cfg.cm.provider_unit_cost
    tails = np.asarray(t.tails)
    thresholds = np.arange(m + 1)
    reports = []

    # access ICN
    def access_utility(own_price, th):
        if k == 1:
            demand = 1.0 - rho * own_price - rho0 * eq.poc
        else:
            demand = 1.0 + rho * (eq.pa - own_price) - rho0 * eq.poc
        return np.maximum(demand, 0.0) * (own_price - th * c0 - eq.pc * tails[th + 1])

    current = float(access_utility(eq.pa, eq.th))
    table = access_utility(prices[:, None], thresholds[None, :])
    row, col = np.unravel_index(int(np.argmax(table)), table.shape)
    reports.append(
        _report("A", float(table[row, col]) - current, f"pa={prices[row]:.6g} th={col}"),
    )

    # transit ICN
    market = k * (1.0 - rho0 * eq.poc)
    induced_pc = np.asarray([_induced(t.access_costs, j) for j in range(m + 1)])
    gain_side = induced_pc * tails[1:] + thresholds * c_c0
    holding = thresholds * c_c0 + eq.pos * tails[1:]
    cheapest_from = np.minimum.accumulate(holding[::-1])[::-1]
    current = eq.pc * tails[eq.th + 1] - (eq.thc - eq.th) * c_c0 - eq.pos * tails[eq.thc + 1]
    values = gain_side - cheapest_from
    best_th = int(np.argmax(values))
    best_thc = best_th + int(np.argmin(holding[best_th:]))
    reports.append(
        _report(
            "C",
            market * (float(values[best_th]) - current),
            f"th={best_th} thc={best_thc}",
        ),
    )

    # content provider
    induced_pos = np.asarray([_induced(t.transit_costs, j) for j in range(m + 1)])
    feasible = (thresholds >= eq.th) & (induced_pos >= co)
    feasible[m] = True
    margins = (np.maximum(induced_pos, co) - co) * tails[1:]

    def provider_utility(poc, margin):
        return k * np.maximum(1.0 - rho0 * poc, 0.0) * (poc + margin)

    current = float(provider_utility(eq.poc, (eq.pos - co) * t.tails[eq.thc + 1]))
    table = np.where(feasible, provider_utility(prices[:, None], margins[None, :]), -np.inf)
    row, col = np.unravel_index(int(np.argmax(table)), table.shape)
    reports.append(
        _report("O", float(table[row, col]) - current, f"poc={prices[row]:.6g} thc={col}"),
    )

    for report in reports:
        if report.profitable:
            logger.warning(
                "Profitable deviation for %s: gain=%.3g at %s",
                report.player,
                report.best_gain,
                report.at_action,
            )
    return reports
