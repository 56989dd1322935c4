"""Tests for the two-access-ICN game: caching resolution, utilities and best responses."""

from dataclasses import replace

import numpy as np
import pytest

from icnlab.errors import IndexOutOfRangeError, InvalidParameterError
from icnlab.game.asymmetric import (
    AccessObjective,
    AsymmetricConfig,
    CachingAssignment,
    ConvergenceStatus,
    Player,
    Prices,
    StrategyProfile,
    anchored_grid,
    best_response,
    default_price_grid,
    equilibrium_profile,
    evaluate_utilities,
    iterate_best_response,
    peer_undercuts,
    resolve_all,
    resolve_caching,
    resolve_profile,
    utility_a,
    utility_b,
    utility_c,
    utility_o,
    verify_vertex_optimality,
)
from icnlab.game.grid import uniform_grid
from icnlab.game.symmetric import build_config, content_sources, solve_equilibrium
from icnlab.model.economics import Source
from icnlab.model.popularity import new_popularity


def make_config(m=2, gamma=0.0, c_a0=0.5, c_b0=2.0, c_c0=1.5, co=2.0, **overrides):
    params = {
        "pm": new_popularity(m, gamma),
        "rho_a": 0.1,
        "rho_b": 0.1,
        "rho0": 0.1,
        "beta_a": 10.0,
        "beta_b": 10.0,
        "c_a0": c_a0,
        "c_b0": c_b0,
        "c_c0": c_c0,
        "co": co,
    }
    params.update(overrides)
    return AsymmetricConfig(**params)


class TestCachingResolution:
    """Test per-content source selection.

    The default config has q = (0.5, 0.5), so A's costs are 1, B's are 4 and
    the transit ICN's are 3 for both contents.
    """

    def test_everyone_caches(self):
        """Test that a transit price above both costs makes both ICNs cache."""
        cfg = make_config()
        prices = Prices(pa=5.0, pb=5.0, pc=10.0, pos=5.0, poc=1.0)

        assert resolve_caching(cfg, prices, 1) == (Source.SELF, Source.SELF)

    def test_transit_serves_when_cheapest(self):
        """Test that the transit ICN caches when its cost beats the provider and peer."""
        cfg = make_config()
        prices = Prices(pa=5.0, pb=5.0, pc=0.5, pos=5.0, poc=1.0)

        assert resolve_caching(cfg, prices, 2) == (Source.TRANSIT, Source.TRANSIT)

    def test_peer_serves_when_cheapest(self):
        """Test that B fetches from A when A caches and sells storage cheaply."""
        cfg = make_config()
        prices = Prices(pa=22.0, pb=5.0, pc=2.0, pos=5.0, poc=1.0)

        assert resolve_caching(cfg, prices, 1) == (Source.SELF, Source.PEER)

    def test_peer_rejected_below_own_cost(self):
        """Test that A does not sell storage below its own caching cost."""
        cfg = make_config()
        prices = Prices(pa=5.5, pb=5.0, pc=2.0, pos=5.0, poc=1.0)

        assert resolve_caching(cfg, prices, 1) == (Source.SELF, Source.TRANSIT)

    def test_provider_serves_when_cheapest(self):
        """Test that a cheap storage price routes to the provider."""
        cfg = make_config()
        prices = Prices(pa=5.0, pb=5.0, pc=0.5, pos=2.5, poc=1.0)

        assert resolve_caching(cfg, prices, 1) == (Source.PROVIDER, Source.PROVIDER)

    def test_tie_priority(self):
        """Test that transit wins a tie with the provider, and the provider one with the peer."""
        cfg = make_config()

        transit_tie = Prices(pa=5.0, pb=5.0, pc=0.5, pos=3.0, poc=1.0)
        assert resolve_caching(cfg, transit_tie, 1) == (Source.TRANSIT, Source.TRANSIT)

        provider_tie = Prices(pa=22.0, pb=5.0, pc=2.0, pos=2.0, poc=1.0)
        assert resolve_caching(cfg, provider_tie, 1)[1] == Source.PROVIDER

    def test_matches_thresholds_at_equilibrium(self, worked_config, worked_equilibrium):
        """Test that resolution at reported prices reproduces the threshold routing."""
        asym, profile = equilibrium_profile(worked_config, worked_equilibrium)
        expected = content_sources(worked_equilibrium.th, worked_equilibrium.thc, 2)

        assert profile.caching.stream_a == expected
        assert profile.caching.stream_b == expected
        assert resolve_all(asym, profile.prices) == profile.caching

    def test_free_transit_stops_all_caching(self):
        """Test that a transit price below every caching cost leaves both ICNs caching nothing."""
        cfg = make_config(m=8, gamma=0.9)
        assignment = resolve_all(cfg, Prices(pa=5.0, pb=5.0, pc=0.0, pos=4.0, poc=1.0))

        assert assignment.count(Source.SELF) == (0, 0)
        assert assignment.count(Source.PEER) == (0, 0)

    @pytest.mark.parametrize(
        ("m", "gamma", "r", "co"),
        [(10, 0.8, 0.7, 40.0), (30, 1.2, 0.7, 60.0), (20, 0.5, 1.2, 5.0), (50, 1.0, 0.4, 100.0)],
    )
    def test_equilibrium_routing_per_content(self, m, gamma, r, co):
        """Test that every content is served by the source its thresholds assign it."""
        cfg = build_config(m=m, gamma=gamma, r=r, co=co)
        eq = solve_equilibrium(cfg)
        _, profile = equilibrium_profile(cfg, eq)
        expected = content_sources(eq.th, eq.thc, m)

        assert profile.caching.stream_a == expected
        assert profile.caching.stream_b == expected

    def test_undercutting_peer_flagged_without_a_copy(self):
        """Test that a peer priced between its cost and the upstream options is flagged."""
        cfg = make_config()
        prices = Prices(pa=22.0, pb=5.0, pc=0.5, pos=5.0, poc=1.0)

        under_a, under_b = peer_undercuts(cfg, prices)

        assert under_a.tolist() == [False, False]
        assert under_b.tolist() == [True, True]
        assert resolve_all(cfg, prices).count(Source.PEER) == (0, 0)

    @pytest.mark.parametrize(
        ("m", "gamma", "r", "co"),
        [(2, 1.0, 0.7, 2.0), (25, 0.6, 1.4, 30.0), (40, 0.9, 1.2, 200.0)],
    )
    def test_no_undercut_at_symmetric_equilibrium(self, m, gamma, r, co):
        """Test that identical ICNs' storage prices never undercut transit and provider."""
        cfg = build_config(m=m, gamma=gamma, r=r, co=co)
        asym, profile = equilibrium_profile(cfg, solve_equilibrium(cfg))

        under_a, under_b = peer_undercuts(asym, profile.prices)

        assert not under_a.any()
        assert not under_b.any()

    def test_index_out_of_range(self):
        """Test that content indices are 1-based."""
        cfg = make_config()
        prices = Prices(pa=1.0, pb=1.0, pc=1.0, pos=1.0, poc=1.0)

        with pytest.raises(IndexOutOfRangeError):
            resolve_caching(cfg, prices, 0)

    def test_negative_price_rejected(self):
        """Test that price profiles must be nonnegative."""
        with pytest.raises(InvalidParameterError, match="pc"):
            Prices(pa=1.0, pb=1.0, pc=-1.0, pos=1.0, poc=1.0)


class TestUtilities:
    """Test utility evaluation."""

    def test_provider_earns_nothing_at_zero_prices(self):
        """Test that a free provider with zero unit cost has zero utility."""
        cfg = make_config(co=0.0)
        profile = resolve_profile(cfg, Prices(pa=0.0, pb=0.0, pc=0.0, pos=0.0, poc=0.0))

        assert utility_o(cfg, profile) == 0.0

    def test_full_self_caching_telescopes(self):
        """Test that caching everything at P_A = P_C leaves P_A minus M * c_A0."""
        cfg = make_config(m=3, gamma=0.7, c_a0=1.0)
        caching = CachingAssignment(
            stream_a=(Source.SELF,) * 3,
            stream_b=(Source.TRANSIT,) * 3,
        )
        profile = StrategyProfile(
            prices=Prices(pa=5.0, pb=5.0, pc=5.0, pos=3.0, poc=1.0),
            caching=caching,
        )

        assert utility_a(cfg, profile) == pytest.approx(0.9 * (5.0 - 3.0), abs=1e-12)

    def test_identical_icns_earn_the_same(self):
        """Test that swapping two identical access ICNs swaps nothing."""
        cfg = make_config(m=20, gamma=0.6, c_a0=1.0, c_b0=1.0, c_c0=0.7, co=10.0)
        profile = resolve_profile(cfg, Prices(pa=8.0, pb=8.0, pc=6.0, pos=12.0, poc=3.0))

        assert utility_a(cfg, profile) == pytest.approx(utility_b(cfg, profile), abs=1e-12)

    def test_transit_margin_by_hand(self):
        """Test the transit utility on a profile mixing peer, provider and self serving."""
        cfg = make_config()
        caching = CachingAssignment(
            stream_a=(Source.SELF, Source.PROVIDER),
            stream_b=(Source.PEER, Source.PROVIDER),
        )
        profile = StrategyProfile(
            prices=Prices(pa=5.0, pb=5.0, pc=2.0, pos=2.5, poc=1.0),
            caching=caching,
        )

        # sigma = 0.9 per stream, A sells storage at 5/11
        expected = 0.9 * (0.5 * (2.0 - 2.5)) + 0.9 * (0.5 * (2.0 - 5.0 / 11.0) + 0.5 * (2.0 - 2.5))
        assert utility_c(cfg, profile) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(27.0 / 110.0, abs=1e-12)

    def test_objective_forms_agree(self):
        """Test that both access objective forms agree on 0-1 caching."""
        cfg = make_config(m=15, gamma=0.8, c_a0=0.5, c_b0=2.0, c_c0=1.0, co=20.0)
        rng = np.random.default_rng(7)

        for _ in range(25):
            values = rng.uniform(0.0, 40.0, size=5)
            profile = resolve_profile(cfg, Prices(*values))
            for utility in (utility_a, utility_b):
                margin = utility(cfg, profile, AccessObjective.FORWARDING_MARGIN)
                average = utility(cfg, profile, AccessObjective.AVERAGE)
                assert margin == pytest.approx(average, abs=1e-9)

    def test_batched_evaluation(self):
        """Test that a batch of profiles scores like one-by-one evaluation."""
        cfg = make_config(m=5, gamma=0.5)
        profile = resolve_profile(cfg, Prices(pa=6.0, pb=7.0, pc=4.0, pos=5.0, poc=2.0))
        alpha_a = profile.caching.alpha(Player.A)
        alpha_b = profile.caching.alpha(Player.B)
        poc = np.array([1.0, 2.0, 3.0])

        batch = evaluate_utilities(cfg, 6.0, 7.0, 4.0, 5.0, poc, alpha_a, alpha_b)
        single = evaluate_utilities(cfg, 6.0, 7.0, 4.0, 5.0, 2.0, alpha_a, alpha_b)

        assert batch[Player.O].shape == (3,)
        assert float(batch[Player.O][1]) == pytest.approx(float(single[Player.O]))

    def test_vertex_optimality(self, worked_config, worked_equilibrium):
        """Test that fractional caching never beats the best 0-1 caching."""
        asym, profile = equilibrium_profile(worked_config, worked_equilibrium)

        for i in (1, 2):
            assert verify_vertex_optimality(asym, profile, i, 200, seed=3)

    def test_vertex_optimality_asymmetric(self):
        """Test vertex optimality at an arbitrary asymmetric profile."""
        cfg = make_config(m=8, gamma=0.9)
        profile = resolve_profile(cfg, Prices(pa=30.0, pb=9.0, pc=6.0, pos=4.0, poc=2.0))

        assert verify_vertex_optimality(cfg, profile, 3, 100, seed=11)


class TestBestResponse:
    """Test single best responses and the round-robin dynamics."""

    def test_provider_content_price(self):
        """Test that with no provider traffic the content price lands at 1/(2 rho0)."""
        cfg = make_config(m=3, gamma=0.5)
        profile = resolve_profile(cfg, Prices(pa=10.0, pb=10.0, pc=100.0, pos=4.0, poc=0.0))
        grid = uniform_grid(20.0, 1000)

        moved = best_response(cfg, Player.O, profile, grid)

        assert moved.prices.poc == pytest.approx(5.0, abs=grid.step)
        assert moved.caching.count(Source.SELF) == (3, 3)

    def test_provider_takes_joint_argmax(self):
        """Test that the provider's two prices match an exhaustive scan of price pairs."""
        cfg = make_config(m=6, gamma=0.8, c_a0=0.5, c_b0=2.0, c_c0=0.7, co=1.0)
        prices = Prices(pa=10.83, pb=0.513, pc=0.339, pos=5.13, poc=8.19)
        profile = resolve_profile(cfg, prices)
        grid = uniform_grid(12.0, 60)

        moved = best_response(cfg, Player.O, profile, grid)

        scanned = [
            utility_o(cfg, resolve_profile(cfg, replace(prices, pos=float(pos), poc=float(poc))))
            for pos in grid.points()
            for poc in grid.points()
        ]
        assert utility_o(cfg, moved) == pytest.approx(max(scanned), abs=1e-9)
        assert (moved.prices.pa, moved.prices.pb, moved.prices.pc) == (10.83, 0.513, 0.339)

    def test_provider_keeps_tied_incumbent(self):
        """Test that an irrelevant storage price stays put when nothing is fetched upstream."""
        cfg = make_config(m=3, gamma=0.5)
        profile = resolve_profile(cfg, Prices(pa=10.0, pb=10.0, pc=100.0, pos=4.0, poc=0.0))

        moved = best_response(cfg, Player.O, profile, uniform_grid(20.0, 1000).with_anchors(4.0))

        assert moved.prices.pos == 4.0
        assert moved.prices.poc == pytest.approx(5.0, abs=0.02)

    def test_only_price_moves(self):
        """Test that an access ICN's response changes only its own price."""
        cfg = make_config(m=4, gamma=0.5)
        profile = resolve_profile(cfg, Prices(pa=3.0, pb=9.0, pc=2.0, pos=4.0, poc=2.0))

        moved = best_response(cfg, Player.A, profile, uniform_grid(50.0, 500))

        assert moved.prices.pb == 9.0
        assert moved.prices.pc == 2.0
        assert moved.prices.poc == 2.0

    def test_equilibrium_is_fixed_point(self, worked_config, worked_equilibrium):
        """Test that the lifted symmetric equilibrium survives one sweep unchanged."""
        asym, profile = equilibrium_profile(worked_config, worked_equilibrium)
        grid = anchored_grid(default_price_grid(asym), profile)

        run = iterate_best_response(asym, profile, grid, 10, 1e-6)

        assert run.status is ConvergenceStatus.FIXED_POINT
        assert run.sweeps == 1
        assert run.final.prices.max_change(profile.prices) <= 1e-6
        assert run.final.caching == profile.caching

    def test_trace_records_every_move(self):
        """Test that each sweep contributes one step per player."""
        cfg = make_config(m=20, gamma=0.8, c_a0=0.5, c_b0=2.0, c_c0=0.7, co=60.0)
        init = resolve_profile(cfg, Prices(pa=10.0, pb=10.0, pc=5.0, pos=20.0, poc=4.0))

        run = iterate_best_response(cfg, init, default_price_grid(cfg, 400), 5, 1e-6, seed=1)

        assert run.status in set(ConvergenceStatus)
        assert 1 <= run.sweeps <= 5
        assert len(run.trace) == 4 * run.sweeps
        assert {step.player for step in run.trace[:4]} == set(Player)

    def test_cheaper_icn_caches_more(self):
        """Test that the ICN with the lower caching cost self-caches a superset."""
        cfg = make_config(m=20, gamma=0.8, c_a0=0.5, c_b0=2.0, c_c0=0.7, co=60.0)
        init = resolve_profile(cfg, Prices(pa=10.0, pb=10.0, pc=5.0, pos=20.0, poc=4.0))

        run = iterate_best_response(cfg, init, default_price_grid(cfg, 400), 20, 1e-6)
        final = run.final.caching

        for source_a, source_b in zip(final.stream_a, final.stream_b, strict=True):
            if source_b is Source.SELF:
                assert source_a is Source.SELF

    def test_max_iter_must_be_positive(self, worked_config, worked_equilibrium):
        """Test that zero sweeps are rejected."""
        asym, profile = equilibrium_profile(worked_config, worked_equilibrium)

        with pytest.raises(InvalidParameterError, match="max_iter"):
            iterate_best_response(asym, profile, default_price_grid(asym), 0, 1e-6)


class TestConfig:
    """Test asymmetric config validation and derived costs."""

    def test_costs(self):
        """Test per-player caching costs for uniform popularity."""
        cfg = make_config()

        assert cfg.costs_a.tolist() == pytest.approx([1.0, 1.0])
        assert cfg.costs_b.tolist() == pytest.approx([4.0, 4.0])
        assert cfg.costs_c.tolist() == pytest.approx([3.0, 3.0])

    def test_beta_must_exceed_one(self):
        """Test that a storage price scaling of 1 is rejected."""
        with pytest.raises(InvalidParameterError, match="beta_b"):
            make_config(beta_b=1.0)

    def test_symmetric_lift(self, worked_config):
        """Test that the symmetric lift copies the shared parameters to both ICNs."""
        cfg = AsymmetricConfig.symmetric(worked_config)

        assert cfg.c_a0 == cfg.c_b0 == 1.0
        assert cfg.c_c0 == pytest.approx(0.7)
        assert cfg.co == 2.0
