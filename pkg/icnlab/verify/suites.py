"""Verification Suites

Named property runs behind `icnlab verify`. Each suite stops at the first
failing configuration and returns it in full so it can be replayed.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from icnlab.errors import EquilibriumViolationError, InvalidParameterError
from icnlab.experiments.gates import check_figure_gates
from icnlab.experiments.sweep import SweepSpec, run_sweep
from icnlab.game.asymmetric import (
    NUM_SOURCES,
    PLAYER_ORDER,
    AsymmetricConfig,
    CachingAssignment,
    Player,
    Prices,
    StrategyProfile,
    anchored_grid,
    default_price_grid,
    equilibrium_profile,
    iterate_best_response,
    peer_undercuts,
    resolve_all,
    utilities_over_rows,
    verify_vertex_optimality,
)
from icnlab.game.symmetric import (
    access_sequence,
    build_config,
    provider_sequence,
    solve_caching_game,
    solve_equilibrium,
)
from icnlab.model.economics import Source
from icnlab.model.popularity import PopularityModel, new_popularity
from icnlab.verify.oracle import (
    brute_force_caching_game,
    check_concavity,
    check_power_concavity,
    deviation_check_symmetric,
)

logger = logging.getLogger(__name__)

PRICE_TOLERANCE = 1e-12
LINEARITY_TOLERANCE = 1e-12


@dataclass
class SuiteResult:
    name: str
    passed: bool
    checked: int
    failure: dict[str, Any] | None = None
    messages: list[str] = field(default_factory=list)


def _fail(name: str, checked: int, failure: dict[str, Any], message: str) -> SuiteResult:
    logger.error("Suite %s failed after %d checks: %s", name, checked, message)
    return SuiteResult(
        name=name,
        passed=False,
        checked=checked,
        failure=failure,
        messages=[message],
    )


def _random_symmetric(
    rng: np.random.Generator,
    m_low: int = 2,
    m_high: int = 50,
) -> dict[str, Any]:
    """M in [m_low, m_high], gamma in [0,1], R in [0.3,1.5], c_O in [0.1, 2 c_M]."""
    m = int(rng.integers(m_low, m_high + 1))
    gamma = float(rng.uniform(0.0, 1.0))
    largest_cost = 1.0 / new_popularity(m, gamma).mass(m)
    return {
        "m": m,
        "gamma": gamma,
        "r": float(rng.uniform(0.3, 1.5)),
        "co": float(rng.uniform(0.1, 2.0 * largest_cost)),
        "c0": 1.0,
        "k": 2,
    }


def _random_asymmetric(rng: np.random.Generator) -> dict[str, Any]:
    return {
        "m": int(rng.integers(2, 31)),
        "gamma": float(rng.uniform(0.0, 1.0)),
        "rho_a": float(rng.uniform(0.05, 0.2)),
        "rho_b": float(rng.uniform(0.05, 0.2)),
        "rho0": float(rng.uniform(0.05, 0.2)),
        "beta_a": float(rng.uniform(2.0, 20.0)),
        "beta_b": float(rng.uniform(2.0, 20.0)),
        "c_a0": float(rng.uniform(0.5, 2.0)),
        "c_b0": float(rng.uniform(0.5, 2.0)),
        "c_c0": float(rng.uniform(0.3, 1.5)),
        "co": float(rng.uniform(1.0, 50.0)),
    }


def _asymmetric_config(params: dict[str, Any]) -> AsymmetricConfig:
    values = dict(params)
    pm = PopularityModel(num_contents=values.pop("m"), gamma=values.pop("gamma"))
    return AsymmetricConfig(pm=pm, **values)


def _random_prices(rng: np.random.Generator, high: float) -> Prices:
    pa, pb, pc, pos, poc = (float(v) for v in rng.uniform(0.0, high, size=5))
    return Prices(pa=pa, pb=pb, pc=pc, pos=pos, poc=poc)


def suite_concavity(_rng: np.random.Generator, _trials: int | None = None) -> SuiteResult:
    """Second differences of f and g, the affine gamma=0 boundary and the power bracket."""
    checked = 0
    for gamma in np.round(np.arange(1, 11) * 0.1, 12):
        for m in (10, 100):
            for r in (0.5, 0.7, 1.2):
                params = {"m": m, "gamma": float(gamma), "r": r, "co": 60.0}
                cfg = build_config(**params)
                for name, seq in (("f", access_sequence(cfg)), ("g", provider_sequence(cfg))):
                    violations = check_concavity(seq)
                    checked += 1
                    if violations:
                        failure = {**params, "sequence": name, "indices": violations}
                        return _fail("concavity", checked, failure, f"{name} not concave")

    for m in (10, 100):
        for r in (0.5, 0.7, 1.2):
            params = {"m": m, "gamma": 0.0, "r": r, "co": 60.0}
            f = access_sequence(build_config(**params))
            second = f[2:] + f[:-2] - 2.0 * f[1:-1]
            checked += 1
            if np.any(np.abs(second) > 1e-12):
                failure = {**params, "max_abs_second_difference": float(np.max(np.abs(second)))}
                return _fail("concavity", checked, failure, "f not affine at gamma=0")

    gammas = [round(0.05 * n, 12) for n in range(1, 20)]
    bad = check_power_concavity(range(1, 201), gammas)
    checked += 1
    if bad:
        return _fail("concavity", checked, {"pairs": bad[:10]}, "power bracket not negative")
    return SuiteResult(name="concavity", passed=True, checked=checked)


def suite_oracle(rng: np.random.Generator, trials: int | None = None) -> SuiteResult:
    """Closed-form caching game against brute-force enumeration on random configs."""
    trials = 200 if trials is None else trials
    for n in range(trials):
        params = _random_symmetric(rng)
        cfg = build_config(**params)
        solved = solve_caching_game(cfg)
        try:
            brute = brute_force_caching_game(cfg)
        except EquilibriumViolationError as e:
            return _fail("oracle", n + 1, params, str(e))

        mismatch = (solved.th, solved.thc) != (brute.th, brute.thc) or any(
            abs(a - b) > PRICE_TOLERANCE * max(1.0, abs(b))
            for a, b in ((solved.pc, brute.pc), (solved.pos, brute.pos))
        )
        if mismatch:
            failure = {**params, "solver": solved._asdict(), "oracle": brute._asdict()}
            return _fail("oracle", n + 1, failure, "solver and oracle disagree")
    return SuiteResult(name="oracle", passed=True, checked=trials)


def suite_theorem1(rng: np.random.Generator, trials: int | None = None) -> SuiteResult:
    """Vertex optimality and midpoint linearity of caching on random asymmetric profiles."""
    trials = 100 if trials is None else trials
    checked = 0
    for _ in range(trials):
        params = _random_asymmetric(rng)
        cfg = _asymmetric_config(params)
        prices = _random_prices(rng, float(default_price_grid(cfg).high))
        sources = rng.integers(0, NUM_SOURCES, size=(2, cfg.num_contents))
        caching = CachingAssignment(
            stream_a=tuple(Source(int(s)) for s in sources[0]),
            stream_b=tuple(Source(int(s)) for s in sources[1]),
        )
        profile = StrategyProfile(prices=prices, caching=caching)

        for i in rng.integers(1, cfg.num_contents + 1, size=5):
            i = int(i)
            checked += 1
            seed = int(rng.integers(0, 2**31))
            if not verify_vertex_optimality(cfg, profile, i, samples=16, seed=seed):
                failure = {**params, **profile.as_dict(), "i": i}
                return _fail("theorem1", checked, failure, "fractional caching beats vertices")

            stream = Player.A if rng.random() < 0.5 else Player.B
            first, second = rng.choice(NUM_SOURCES, size=2, replace=False)
            vertices = np.eye(NUM_SOURCES)[[first, second]]
            at_vertices = utilities_over_rows(cfg, profile, stream, i, vertices)
            at_midpoint = utilities_over_rows(cfg, profile, stream, i, vertices.mean(axis=0))
            for player in PLAYER_ORDER:
                average = float(np.mean(at_vertices[player]))
                midpoint = float(at_midpoint[player][0])
                if abs(midpoint - average) > LINEARITY_TOLERANCE * (1.0 + abs(average)):
                    failure = {**params, **profile.as_dict(), "i": i, "player": player.value}
                    return _fail("theorem1", checked, failure, "utility not linear in caching")
    return SuiteResult(name="theorem1", passed=True, checked=checked)


def suite_theorem2(rng: np.random.Generator, trials: int | None = None) -> SuiteResult:
    """No peer serving under identical access ICNs.

    Resolution is checked at random prices and along best responses. At the lifted
    equilibrium the peer must also fail to undercut transit and provider on price,
    with or without a copy of the content.
    """
    trials = 50 if trials is None else trials
    checked = 0
    for _ in range(trials):
        params = _random_symmetric(rng, m_high=30)
        cfg = build_config(**params)
        asym, start = equilibrium_profile(cfg, solve_equilibrium(cfg))
        checked += 1
        if any(np.any(mask) for mask in peer_undercuts(asym, start.prices)):
            failure = {**params, **start.as_dict()}
            message = "peer storage undercuts transit and provider"
            return _fail("theorem2", checked, failure, message)
        grid = default_price_grid(asym, intervals=200)

        profiles = [start]
        profiles += [
            StrategyProfile(prices=p, caching=resolve_all(asym, p))
            for p in (_random_prices(rng, grid.high) for _ in range(10))
        ]
        run = iterate_best_response(asym, profiles[-1], anchored_grid(grid, start), 2, 1e-9)
        profiles += [step.profile for step in run.trace]

        for profile in profiles:
            checked += 1
            if Source.PEER in profile.caching.stream_a + profile.caching.stream_b:
                failure = {**params, **profile.as_dict()}
                return _fail("theorem2", checked, failure, "peer serving under symmetric costs")
    return SuiteResult(name="theorem2", passed=True, checked=checked)


def suite_deviation(_rng: np.random.Generator, _trials: int | None = None) -> SuiteResult:
    """Unilateral deviation audit at the reference grid points (M=100, K=2)."""
    checked = 0
    for gamma in (0.1, 0.5, 0.9):
        for co in (40.0, 60.0, 100.0):
            for r in (0.5, 0.7):
                params = {"m": 100, "gamma": gamma, "r": r, "co": co}
                cfg = build_config(**params)
                reports = deviation_check_symmetric(cfg, solve_equilibrium(cfg))
                checked += 1
                for report in reports:
                    if report.profitable:
                        failure = {
                            **params,
                            "player": report.player,
                            "gain": report.best_gain,
                            "action": report.at_action,
                        }
                        return _fail("deviation", checked, failure, "profitable deviation")
    return SuiteResult(name="deviation", passed=True, checked=checked)


def suite_k_invariance(rng: np.random.Generator, trials: int | None = None) -> SuiteResult:
    """Thresholds and prices identical across K, utilities of C and O linear in K."""
    trials = 50 if trials is None else trials
    for n in range(trials):
        params = _random_symmetric(rng)
        base = solve_equilibrium(build_config(**{**params, "k": 1}))
        for k in (2, 5, 10):
            eq = solve_equilibrium(build_config(**{**params, "k": k}))
            same = (eq.th, eq.thc, eq.pc, eq.pos, eq.pa, eq.poc) == (
                base.th,
                base.thc,
                base.pc,
                base.pos,
                base.pa,
                base.poc,
            )
            scaled = all(
                abs(value / k - ref) <= PRICE_TOLERANCE * max(1.0, abs(ref))
                for value, ref in ((eq.uc, base.uc), (eq.uo, base.uo))
            )
            if not (same and scaled):
                failure = {**params, "k": k, "k1": base.as_dict(), "kn": eq.as_dict()}
                return _fail("k-invariance", n + 1, failure, "equilibrium depends on K")
    return SuiteResult(name="k-invariance", passed=True, checked=trials)


def suite_figures(_rng: np.random.Generator, _trials: int | None = None) -> SuiteResult:
    """Qualitative threshold and price claims on the reference sweep (R=0.7)."""
    spec = SweepSpec(
        gamma_from=0.01,
        gamma_to=1.0,
        gamma_step=0.01,
        co_list=(40.0, 60.0, 100.0),
        r_list=(0.7,),
    )
    rows = [row.as_record() for row in run_sweep(spec)]
    passed, failures = check_figure_gates(rows)
    if not passed:
        return _fail("figures", len(rows), {"failures": failures}, failures[0])
    return SuiteResult(name="figures", passed=True, checked=len(rows))


SUITES: dict[str, Callable[[np.random.Generator, int | None], SuiteResult]] = {
    "concavity": suite_concavity,
    "oracle": suite_oracle,
    "theorem1": suite_theorem1,
    "theorem2": suite_theorem2,
    "deviation": suite_deviation,
    "k-invariance": suite_k_invariance,
    "figures": suite_figures,
}


def run_suite(name: str, seed: int = 0, trials: int | None = None) -> SuiteResult:
    if name not in SUITES:
        msg = f"unknown suite, expected one of {', '.join(SUITES)}"
        raise InvalidParameterError("suite", msg)
    if trials is not None and trials < 1:
        raise InvalidParameterError("trials", "must be >= 1")
    logger.info("Running suite %s (seed=%d)", name, seed)
    return SUITES[name](np.random.default_rng(seed), trials)
