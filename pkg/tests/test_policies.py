"""Query policies: bisection, discretized bisection, sequential cycles,
joint gains, cost-aware selection, and unknown-error queries."""

import numpy as np
import pytest

from bisectquest.infotheory import LN2, binary_entropy, bsc_capacity, grid_entropy
from bisectquest.players import PlayerModel
from bisectquest.policies import (
    BzState,
    CostLedger,
    bisect_query,
    bz_alpha,
    bz_step,
    clamp_alpha,
    construct_joint_queries_1d,
    gain_with_cost,
    joint_gain,
    select_player_cost,
    sequential_cycle,
    sequential_expected_entropy_loss,
    unknown_eps_gain_curve,
    unknown_eps_query,
    unknown_eps_select_player,
)
from bisectquest.posterior import (
    GridPosterior,
    JointGridPosterior,
    QueryRegion,
    bayes_update,
    joint_bayes_update,
    mass,
    median,
    verify_equalization,
)

C_03 = 0.0822828785050518
C_04 = 0.0201355135506889
CAP_SUM = C_03 + C_04  # 0.1024183920557407


def truthful_oracle(x_star):
    return lambda query: int(query.contains(x_star))


class TestBisectQuery:
    def test_uniform(self):
        (a, b), = bisect_query(GridPosterior.uniform(100)).intervals_1d()
        assert a == 0.0
        assert b == pytest.approx(0.5, abs=1e-12)

    def test_skewed_posterior_has_half_mass(self):
        rng = np.random.default_rng(1)
        masses = np.concatenate([np.full(50, 0.1), np.full(50, 0.9)])
        post = GridPosterior(masses / masses.sum())
        q = bisect_query(post)
        assert q.intervals_1d()[0][1] > 0.5
        assert mass(post, q) == pytest.approx(0.5, abs=post.delta)

    def test_rebisection_shifts_toward_favored_side(self):
        post = GridPosterior.uniform(4)
        q = bisect_query(post)
        post = bayes_update(post, q, 1, 0.1)  # confident "yes, below 0.5"
        assert median(post) < 0.5
        q2 = bisect_query(post)
        assert q2.intervals_1d()[0][1] < 0.5


class TestBzStep:
    def test_true_cell_mass_nondecreasing_with_truthful_oracle(self):
        rng = np.random.default_rng(5)
        x_star = 0.62
        state = BzState(GridPosterior.uniform(64), alpha=clamp_alpha(1e-9))
        player = PlayerModel.machine(1e-6)
        k_star = int(np.ceil(x_star * 64) - 1)
        prev = state.posterior.masses[k_star]
        for _ in range(30):
            state = bz_step(state, player, truthful_oracle(x_star), rng)
            cur = state.posterior.masses[k_star]
            assert cur >= prev - 1e-15
            prev = cur
        assert prev > 0.9

    def test_deterministic_threshold_when_boundary_hits_half(self):
        # uniform 4-cell grid: cumulative hits exactly 1/2 at the boundary
        state = BzState(GridPosterior.uniform(4), alpha=0.3)
        player = PlayerModel.machine(0.3)
        for seed in range(10):
            out = bz_step(state, player, truthful_oracle(0.8), np.random.default_rng(seed))
            assert out.last_query == pytest.approx(0.5, abs=1e-15)

    def test_normalization_exact(self):
        rng = np.random.default_rng(9)
        state = BzState(GridPosterior.uniform(500), alpha=bz_alpha(0.4))
        player = PlayerModel.machine(0.4)
        oracle = lambda q: int(rng.random() < 0.5)
        for _ in range(100):
            state = bz_step(state, player, oracle, rng)
            assert abs(state.posterior.masses.sum() - 1.0) <= 1e-12

    def test_default_alpha_requires_machine(self):
        state = BzState(GridPosterior.uniform(8))
        human = PlayerModel.human(delta0=0.4, mu=0.45, kappa=1.1)
        with pytest.raises(ValueError):
            bz_step(state, human, truthful_oracle(0.5), np.random.default_rng(0))

    def test_oracle_failure_propagates(self):
        state = BzState(GridPosterior.uniform(8), alpha=0.3)

        def broken(query):
            raise RuntimeError("oracle went away")

        with pytest.raises(RuntimeError):
            bz_step(state, PlayerModel.machine(0.3), broken, np.random.default_rng(0))

    def test_improvement_ratio_bound(self):
        # appendix bound: E[M(j+1)/M(j)] <= 1 - cbar(eps) at the optimal alpha
        from bisectquest.infotheory import bz_exponent
        from bisectquest.players import respond

        eps = 0.4
        assert bz_alpha(eps) == pytest.approx(0.449489742783178, abs=1e-12)
        rng = np.random.default_rng(77)
        player = PlayerModel.machine(eps)
        ratios = []
        while len(ratios) < 4000:
            x_star = rng.random()
            k_star = int(np.ceil(x_star * 200) - 1)
            state = BzState(GridPosterior.uniform(200), alpha=bz_alpha(eps))
            oracle = lambda q: respond(player, int(q.contains(x_star)), 0.0, rng)
            for _ in range(40):
                m0 = 1.0 / state.posterior.masses[k_star] - 1.0
                state = bz_step(state, player, oracle, rng)
                m1 = 1.0 / state.posterior.masses[k_star] - 1.0
                if m0 > 0.0:
                    ratios.append(m1 / m0)
        r = np.asarray(ratios[:4000])
        sem = r.std(ddof=1) / np.sqrt(r.size)
        assert r.mean() <= 1.0 - bz_exponent(eps) + 3.0 * sem


class TestSequentialCycle:
    def test_single_player_reduces_to_bz_step(self):
        player = PlayerModel.machine(0.35)
        post = GridPosterior.uniform(128)
        x_star = 0.42

        out_cycle = sequential_cycle(post, [player], x_star, np.random.default_rng(4), "bz")

        from bisectquest.players import respond

        rng = np.random.default_rng(4)
        state = BzState(post, alpha=clamp_alpha(bz_alpha(0.35)))
        oracle = lambda q: respond(player, int(q.contains(x_star)), abs(x_star - median(post)), rng)
        out_step = bz_step(state, player, oracle, rng).posterior
        np.testing.assert_allclose(out_cycle.masses, out_step.masses, atol=1e-15)

    def test_expected_entropy_loss_matches_capacity_sum(self):
        post = GridPosterior.uniform(1024)
        loss = sequential_expected_entropy_loss(post, (0.3, 0.4))
        assert loss == pytest.approx(CAP_SUM, abs=1e-3)

    def test_expected_loss_order_free(self):
        # order-free up to the grid tolerance; boundary-straddling cells
        # differ between the two orders
        post = GridPosterior.uniform(1024)
        a = sequential_expected_entropy_loss(post, (0.3, 0.4))
        b = sequential_expected_entropy_loss(post, (0.4, 0.3))
        assert a == pytest.approx(b, abs=1e-3)

    def test_rejects_empty_players_and_bad_backend(self):
        post = GridPosterior.uniform(8)
        with pytest.raises(ValueError):
            sequential_cycle(post, [], 0.5, np.random.default_rng(0))
        with pytest.raises(ValueError):
            sequential_cycle(post, [PlayerModel.machine(0.3)], 0.5, np.random.default_rng(0), "x")


class TestJointGain:
    def test_single_player_bisection_achieves_capacity(self):
        u = GridPosterior.uniform(1000)
        g = joint_gain(u, [QueryRegion.interval(0.0, 0.5)], [0.4])
        assert g == pytest.approx(C_04, abs=1e-12)

    def test_equalized_two_player_queries_achieve_capacity_sum(self):
        u = GridPosterior.uniform(1024)
        regions = [QueryRegion.interval(0.125, 0.625), QueryRegion.interval(0.375, 0.875)]
        g = joint_gain(u, regions, [0.4, 0.4])
        assert g == pytest.approx(2 * C_04, abs=1e-9)

    def test_identical_queries_strictly_suboptimal(self):
        u = GridPosterior.uniform(1024)
        same = [QueryRegion.interval(0.25, 0.75), QueryRegion.interval(0.25, 0.75)]
        g = joint_gain(u, same, [0.4, 0.4])
        assert g < 2 * C_04 - 1e-4

    def test_dominated_by_capacity_sum_on_random_regions(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            post = GridPosterior(rng.dirichlet(np.ones(64)))
            regions = []
            for _ in range(2):
                a, b = np.sort(rng.random(2))
                regions.append(QueryRegion.interval(a, b))
            eps = rng.uniform(0.05, 0.45, size=2)
            g = joint_gain(post, regions, eps)
            cap = sum(bsc_capacity(e) for e in eps)
            assert g <= cap + 1e-9

    def test_equality_iff_equalized(self):
        rng = np.random.default_rng(19)
        for _ in range(25):
            post = GridPosterior(rng.dirichlet(np.ones(256)))
            regions = construct_joint_queries_1d(post, 2)
            eps = rng.uniform(0.05, 0.45, size=2)
            g = joint_gain(post, regions, eps)
            cap = sum(bsc_capacity(e) for e in eps)
            ok, dev = verify_equalization(post, regions, tol=1e-9)
            if ok:
                assert g == pytest.approx(cap, abs=1e-8)

    def test_rejects_too_many_players(self):
        u = GridPosterior.uniform(16)
        regions = [QueryRegion.interval(0.0, 0.5)] * 9
        with pytest.raises(ValueError):
            joint_gain(u, regions, [0.3] * 9)


class TestConstructJointQueries:
    def test_uniform_two_player_matches_worked_example(self):
        u = GridPosterior.uniform(1024)
        q1, q2 = construct_joint_queries_1d(u, 2)
        assert q1.intervals_1d() == [(0.125, 0.625)]
        assert q2.intervals_1d() == [(0.375, 0.875)]

    def test_uniform_single_player(self):
        (q,) = construct_joint_queries_1d(GridPosterior.uniform(64), 1)
        assert q.intervals_1d() == [(0.0, 0.5)]

    def test_triangular_posterior_equalizes_within_grid_tolerance(self):
        n = 512
        dens = np.arange(1, n + 1, dtype=float)
        post = GridPosterior(dens / dens.sum())
        regions = construct_joint_queries_1d(post, 2)
        ok, dev = verify_equalization(post, regions, tol=2 * post.delta)
        assert ok, f"max deviation {dev}"

    def test_rejects_more_than_two(self):
        with pytest.raises(ValueError):
            construct_joint_queries_1d(GridPosterior.uniform(8), 3)


class TestCostSelection:
    def test_gain_reduces_to_phi_when_free(self):
        post = GridPosterior.uniform(100)
        players = [PlayerModel.machine(0.4, cost=0.01)]
        q = bisect_query(post)
        assert gain_with_cost(0, q, post, 0.0, players) == pytest.approx(C_04, abs=1e-12)

    def test_gain_subtracts_cost(self):
        post = GridPosterior.uniform(100)
        players = [PlayerModel.machine(0.4, cost=0.01)]
        q = bisect_query(post)
        # capacity minus cost: 0.0201355 - 0.01
        assert gain_with_cost(0, q, post, 1.0, players) == pytest.approx(
            0.0101355135506889, abs=1e-12
        )

    def test_gain_negative_when_cost_dominates(self):
        post = GridPosterior.uniform(100)
        players = [PlayerModel.machine(0.4, cost=10.0)]
        assert gain_with_cost(0, bisect_query(post), post, 1.0, players) < 0.0

    def test_selects_higher_capacity_when_free(self):
        players = [PlayerModel.machine(0.3, cost=0.08), PlayerModel.machine(0.4, cost=0.001)]
        assert select_player_cost(players, 0.0) == 0

    def test_selects_cheaper_player_under_cost_pressure(self):
        # scores: 0.0822829 - 0.08 = 0.0022829 vs 0.0201355 - 0.001 = 0.0191355
        players = [PlayerModel.machine(0.3, cost=0.08), PlayerModel.machine(0.4, cost=0.001)]
        assert select_player_cost(players, 1.0) == 1

    def test_tie_breaks_to_lowest_index(self):
        players = [PlayerModel.machine(0.3, cost=0.01), PlayerModel.machine(0.3, cost=0.01)]
        assert select_player_cost(players, 1.0) == 0

    def test_invariant_to_common_cost_shift(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            eps = rng.uniform(0.05, 0.45, size=3)
            costs = rng.uniform(0.0, 0.1, size=3)
            gamma = float(rng.uniform(0.0, 2.0))
            players = [PlayerModel.machine(e, cost=c) for e, c in zip(eps, costs)]
            shifted = [PlayerModel.machine(e, cost=c + 0.37) for e, c in zip(eps, costs)]
            assert select_player_cost(players, gamma) == select_player_cost(shifted, gamma)

    def test_ledger_total(self):
        ledger = CostLedger()
        ledger.charge(0, 0.1)
        ledger.charge(1, 0.25)
        ledger.charge(0, 0.1)
        assert ledger.total == pytest.approx(0.45, abs=1e-15)
        assert ledger.per_step == [(0, 0.1), (1, 0.25), (0, 0.1)]
        with pytest.raises(ValueError):
            ledger.charge(0, -1.0)


class TestUnknownEps:
    def test_gain_curve_endpoints(self):
        rng = np.random.default_rng(3)
        p = rng.random((32, 16))
        jp = JointGridPosterior(p / p.sum())
        xs, gains = unknown_eps_gain_curve(jp, 0)
        eps_mean = float(
            (jp.masses.sum(axis=0) * jp.eps_midpoints(0)).sum()
        )
        c_n = float(
            (jp.masses.sum(axis=0) * np.vectorize(binary_entropy)(jp.eps_midpoints(0))).sum()
        )
        assert gains[0] == pytest.approx(binary_entropy(1.0 - eps_mean) - c_n, abs=1e-12)
        assert gains[-1] == pytest.approx(binary_entropy(eps_mean) - c_n, abs=1e-12)
        assert xs[0] == 0.0 and xs[-1] == 1.0

    def test_uniform_prior_maximizer_at_half(self):
        jp = JointGridPosterior.uniform(64, [64])
        x_star, gain = unknown_eps_query(jp, 0)
        assert x_star == pytest.approx(0.5, abs=1e-12)
        assert 0.0 <= gain <= LN2

    def test_gain_matches_expected_capacity_at_uniform_prior(self):
        # independent quadrature oracle for E[C(eps)], eps ~ U[0, 1/2)
        from scipy.integrate import quad

        expected, _ = quad(lambda e: (LN2 - binary_entropy(e)) * 2.0, 0.0, 0.5)
        jp = JointGridPosterior.uniform(64, [64])
        _, gain = unknown_eps_query(jp, 0)
        assert gain == pytest.approx(expected, abs=1e-2)
        jp2 = JointGridPosterior.uniform(128, [128])
        _, gain2 = unknown_eps_query(jp2, 0)
        assert gain2 == pytest.approx(expected, abs=5e-3)
        assert abs(gain2 - expected) < abs(gain - expected)

    def test_collapsed_eps_grid_recovers_bisection(self):
        rng = np.random.default_rng(11)
        px = rng.dirichlet(np.ones(64))
        eps0 = 0.3
        jp = JointGridPosterior(px.reshape(-1, 1), eps_ranges=((eps0 - 0.01, eps0 + 0.01),))
        x_star, gain = unknown_eps_query(jp, 0)
        post = GridPosterior(px)
        assert abs(x_star - median(post)) <= post.delta
        assert gain == pytest.approx(bsc_capacity(eps0), abs=1e-4)

    def test_skewed_prior_maximizer_differs_from_median(self):
        # correlated (x, eps) belief: the optimal query is no longer the
        # posterior-median bisection
        n_x, n_e = 64, 32
        x = np.linspace(0, 1, n_x)[:, None]
        e = np.linspace(0, 0.5, n_e)[None, :]
        p = 0.05 + np.exp(-((x - 0.7) ** 2) / 0.02) * np.exp(-((e - 0.1) ** 2) / 0.005) + (
            np.exp(-((x - 0.2) ** 2) / 0.01) * np.exp(-((e - 0.45) ** 2) / 0.002)
        )
        jp = JointGridPosterior(p / p.sum())
        x_star, _ = unknown_eps_query(jp, 0)
        from bisectquest.posterior import x_marginal

        med = median(x_marginal(jp))
        assert abs(x_star - med) > 2.0 / n_x

    def test_select_player_ties_to_first(self):
        jp = JointGridPosterior.uniform(32, [16, 16])
        assert unknown_eps_select_player(jp) == 0

    def test_select_player_prefers_low_eps_marginal(self):
        # player 0's eps concentrated near 0 (reliable), player 1 near 1/2
        n_x, n_e = 16, 32
        p = np.ones((n_x, n_e, n_e))
        weights0 = np.exp(-np.arange(n_e) / 3.0)
        weights1 = np.exp(-(n_e - 1 - np.arange(n_e)) / 3.0)
        p *= weights0[None, :, None] * weights1[None, None, :]
        jp = JointGridPosterior(p / p.sum())
        assert unknown_eps_select_player(jp) == 0

    def test_selection_switches_after_contradictory_answers(self):
        # conflicting answers from player 0 tilt its error belief toward 1/2,
        # so the other player becomes the better choice
        jp = JointGridPosterior.uniform(32, [16, 16])
        q = QueryRegion.interval(0.0, 0.5)
        assert unknown_eps_select_player(jp) == 0
        for _ in range(4):
            jp = joint_bayes_update(jp, 0, q, 1)
            jp = joint_bayes_update(jp, 0, q, 0)
        assert unknown_eps_select_player(jp) == 1

    def test_rejects_invalid_player(self):
        jp = JointGridPosterior.uniform(8, [4])
        with pytest.raises(ValueError):
            unknown_eps_query(jp, 3)
