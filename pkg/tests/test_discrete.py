import numpy as np
import pytest

from evostack.discrete import (
    FEASIBLE,
    INFEASIBLE,
    compute_discrete_osess,
    enumerate_supports,
    solve_se_support,
    verify_stackelberg_consistency,
)
from evostack.games import DiscreteSEG, SimplexVector, ToleranceSet, leader_payoff

from oracles import discrete_osess_oracle

HAWK_DOVE = np.array([[-1.0, 2.0], [0.0, 1.0]])
RPS = np.array([[2.0 / 3.0, 0.0, 1.0], [1.0, 2.0 / 3.0, 0.0], [0.0, 1.0, 2.0 / 3.0]])
TOL = ToleranceSet()


def hawk_dove_game(leader_row=(5.0, 1.0)):
    return DiscreteSEG(np.asarray([leader_row], float), HAWK_DOVE[None, :, :])


def switching_dominance_game():
    # action 0 makes phenotype 0 strictly dominant, action 1 flips it;
    # the leader earns most from phenotype 0 under action 0
    slice0 = np.array([[3.0, 2.0], [1.0, 0.0]])
    slice1 = np.array([[0.0, 1.0], [2.0, 3.0]])
    lead = np.array([[5.0, 0.0], [0.0, 1.0]])
    return DiscreteSEG(lead, np.stack([slice0, slice1]))


class TestEnumerateSupports:
    def test_n2(self):
        assert enumerate_supports(2) == [(0,), (1,), (0, 1)]

    def test_n3_count(self):
        assert len(enumerate_supports(3)) == 7

    def test_n1(self):
        assert enumerate_supports(1) == [(0,)]

    def test_budget(self):
        with pytest.raises(ValueError):
            enumerate_supports(21)


class TestSolveSupport:
    def test_hawk_dove_full_support(self):
        res = solve_se_support(hawk_dove_game(), (0, 1), TOL, starts=4, seed=0)
        assert res.status == FEASIBLE
        assert np.allclose(res.sigma.weights, [1.0])
        assert np.allclose(res.x.weights, [0.5, 0.5], atol=1e-9)
        assert res.follower_value == pytest.approx(0.5, abs=1e-9)

    def test_dominated_support_infeasible(self):
        # phenotype 1 strictly dominated in every slice
        slice0 = np.array([[2.0, 3.0], [0.0, 2.0]])
        slice1 = np.array([[3.0, 2.0], [0.5, 0.0]])
        game = DiscreteSEG(np.zeros((2, 2)), np.stack([slice0, slice1]))
        assert solve_se_support(game, (1,), TOL, starts=4, seed=0).status == INFEASIBLE
        assert solve_se_support(game, (0, 1), TOL, starts=4, seed=0).status == INFEASIBLE

    def test_switching_dominance_prefers_pure_leader(self):
        game = switching_dominance_game()
        res = solve_se_support(game, (0,), TOL, starts=8, seed=0)
        assert res.status == FEASIBLE
        assert np.allclose(res.sigma.weights, [1.0, 0.0], atol=1e-7)
        assert np.allclose(res.x.weights, [1.0, 0.0])
        assert res.leader_value == pytest.approx(5.0, abs=1e-7)


class TestComputeOsess:
    def test_hawk_dove_single_leader(self):
        out = compute_discrete_osess(hawk_dove_game(), TOL, starts=4, seed=0)
        assert out.best is not None
        assert np.allclose(out.best.x.weights, [0.5, 0.5], atol=1e-9)
        assert out.best.leader_value == pytest.approx(3.0, abs=1e-9)
        assert out.best.leader_value == pytest.approx(
            leader_payoff(out.best.sigma, out.best.x, hawk_dove_game()), abs=0.0
        )

    def test_rps_everywhere_has_no_stable_point(self):
        game = DiscreteSEG(np.array([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]), np.stack([RPS, RPS]))
        out = compute_discrete_osess(game, TOL, starts=4, seed=0)
        assert out.best is None
        assert out.all_sess == ()

    def test_switching_dominance_game(self):
        game = switching_dominance_game()
        out = compute_discrete_osess(game, TOL, starts=8, seed=0)
        assert out.best is not None
        assert out.best.support == (0,)
        assert out.best.leader_value == pytest.approx(5.0, abs=1e-6)
        oracle = discrete_osess_oracle(game, TOL)
        assert oracle is not None
        assert abs(out.best.leader_value - oracle) <= 1e-3

    def test_first_mode_stops_early(self):
        game = switching_dominance_game()
        out = compute_discrete_osess(game, TOL, starts=8, seed=0, mode="first")
        assert out.best is not None
        assert out.supports_searched <= 3

    def test_optimistic_selection(self):
        game = switching_dominance_game()
        out = compute_discrete_osess(game, TOL, starts=8, seed=0, mode="all")
        for rec in out.all_sess:
            assert out.best.leader_value >= rec.leader_value

    def test_every_record_is_consistent(self):
        game = switching_dominance_game()
        out = compute_discrete_osess(game, TOL, starts=8, seed=0, mode="all")
        assert out.all_sess
        for rec in out.all_sess:
            assert verify_stackelberg_consistency(game, rec.sigma, rec.x, TOL)
            assert rec.verdict.is_ess

    def test_monotone_restriction_to_pure_leader(self):
        rng = np.random.default_rng(77)
        for _ in range(5):
            lead = rng.uniform(size=(2, 2))
            tensor = rng.uniform(size=(2, 2, 2))
            game = DiscreteSEG(lead, tensor)
            full = compute_discrete_osess(game, TOL, starts=16, seed=1)
            for ell in range(2):
                sub = DiscreteSEG(lead[ell][None, :], tensor[ell][None, :, :])
                restricted = compute_discrete_osess(sub, TOL, starts=8, seed=1)
                if restricted.best is not None:
                    assert full.best is not None
                    assert full.best.leader_value >= restricted.best.leader_value - 1e-7

    def test_matches_grid_oracle_on_random_games(self):
        rng = np.random.default_rng(123)
        for _ in range(8):
            game = DiscreteSEG(rng.uniform(size=(2, 2)), rng.uniform(size=(2, 2, 2)))
            out = compute_discrete_osess(game, TOL, starts=24, seed=2)
            oracle = discrete_osess_oracle(game, TOL)
            if out.best is None:
                assert oracle is None
            else:
                assert oracle is not None
                assert abs(out.best.leader_value - oracle) <= 1e-3


class TestConsistency:
    def test_hawk_dove_pure_population_inconsistent(self):
        game = hawk_dove_game()
        assert not verify_stackelberg_consistency(
            game, SimplexVector([1.0]), SimplexVector([1.0, 0.0]), TOL
        )

    def test_hawk_dove_interior_consistent(self):
        game = hawk_dove_game()
        assert verify_stackelberg_consistency(
            game, SimplexVector([1.0]), SimplexVector([0.5, 0.5]), TOL
        )
