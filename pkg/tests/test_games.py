import numpy as np
import pytest

from evostack.games import (
    DiscreteSEG,
    InducedMatrix,
    SimplexVector,
    ToleranceSet,
    follower_payoff,
    induce_matrix,
    leader_payoff,
    validate_game,
)

HAWK_DOVE = np.array([[-1.0, 2.0], [0.0, 1.0]])  # V=2, C=4
RPS = np.array([[2.0 / 3.0, 0.0, 1.0], [1.0, 2.0 / 3.0, 0.0], [0.0, 1.0, 2.0 / 3.0]])


def single_leader_game(slice_, leader_row=None):
    slice_ = np.asarray(slice_, dtype=float)
    n = slice_.shape[0]
    if leader_row is None:
        leader_row = np.zeros(n)
    return DiscreteSEG(np.asarray([leader_row], dtype=float), slice_[None, :, :])


class TestSimplexVector:
    def test_normalizes(self):
        v = SimplexVector([2.0, 2.0])
        assert np.allclose(v.weights, [0.5, 0.5])
        assert abs(v.weights.sum() - 1.0) <= 1e-12

    def test_clamps_tiny_negative(self):
        v = SimplexVector([1.0, -1e-13])
        assert v.weights[1] == 0.0

    def test_rejects_real_negative(self):
        with pytest.raises(ValueError):
            SimplexVector([1.0, -1e-6])

    def test_rejects_zero_mass(self):
        with pytest.raises(ValueError):
            SimplexVector([0.0, 0.0])

    def test_pure_and_uniform(self):
        assert np.array_equal(SimplexVector.pure(1, 3).weights, [0.0, 1.0, 0.0])
        assert np.allclose(SimplexVector.uniform(4).weights, 0.25)

    def test_immutable(self):
        v = SimplexVector([0.5, 0.5])
        with pytest.raises(ValueError):
            v.weights[0] = 1.0


class TestToleranceSet:
    def test_defaults(self):
        tol = ToleranceSet()
        assert tol.eps_s == 1e-4
        assert tol.eps_p == 1e-5
        assert tol.delta == 1e-2
        assert tol.eps_inv == 1e-3

    def test_positivity(self):
        with pytest.raises(ValueError):
            ToleranceSet(eps_p=0.0)


class TestValidateGame:
    def test_well_formed(self):
        game = DiscreteSEG(np.zeros((2, 2)), np.zeros((2, 2, 2)))
        findings = validate_game(game)
        assert not any(f.fatal for f in findings)

    def test_shape_mismatch(self):
        game = DiscreteSEG(np.zeros((2, 3)), np.zeros((2, 2, 2)))
        findings = validate_game(game)
        assert any(f.fatal for f in findings)

    def test_transpose_note_is_not_fatal(self):
        game = single_leader_game([[0.0, 3.0], [1.0, 2.0]])
        findings = validate_game(game)
        assert any(not f.fatal for f in findings)
        assert not any(f.fatal for f in findings)

    def test_non_finite_is_fatal(self):
        game = DiscreteSEG(np.array([[np.nan, 0.0]]), np.zeros((1, 2, 2)))
        assert any(f.fatal for f in validate_game(game))


class TestInduceMatrix:
    def test_single_slice_identity(self):
        game = single_leader_game(HAWK_DOVE)
        B = induce_matrix(SimplexVector([1.0]), game)
        assert np.array_equal(B.entries, HAWK_DOVE)

    def test_average_of_two_slices(self):
        s0 = np.array([[1.0, 2.0], [3.0, 4.0]])
        s1 = np.array([[5.0, 6.0], [7.0, 8.0]])
        game = DiscreteSEG(np.zeros((2, 2)), np.stack([s0, s1]))
        B = induce_matrix(SimplexVector([0.5, 0.5]), game)
        assert np.allclose(B.entries, (s0 + s1) / 2.0)

    def test_pure_sigma_selects_slice(self):
        rng = np.random.default_rng(7)
        tensor = rng.normal(size=(3, 2, 2))
        game = DiscreteSEG(np.zeros((3, 2)), tensor)
        for ell in range(3):
            B = induce_matrix(SimplexVector.pure(ell, 3), game)
            assert np.allclose(B.entries, tensor[ell])

    def test_linearity(self):
        rng = np.random.default_rng(11)
        tensor = rng.normal(size=(3, 4, 4))
        game = DiscreteSEG(np.zeros((3, 4)), tensor)
        for _ in range(50):
            s1 = SimplexVector(rng.dirichlet(np.ones(3)))
            s2 = SimplexVector(rng.dirichlet(np.ones(3)))
            alpha = rng.uniform()
            blend = SimplexVector(alpha * s1.weights + (1 - alpha) * s2.weights)
            lhs = induce_matrix(blend, game).entries
            rhs = alpha * induce_matrix(s1, game).entries + (1 - alpha) * induce_matrix(s2, game).entries
            assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_dimension_mismatch(self):
        game = single_leader_game(HAWK_DOVE)
        with pytest.raises(ValueError):
            induce_matrix(SimplexVector([0.5, 0.5]), game)


class TestLeaderPayoff:
    def test_pure_pure(self):
        lead = np.array([[1.0, 2.0], [3.0, 4.0]])
        game = DiscreteSEG(lead, np.zeros((2, 2, 2)))
        for ell in range(2):
            for i in range(2):
                val = leader_payoff(SimplexVector.pure(ell, 2), SimplexVector.pure(i, 2), game)
                assert val == lead[ell, i]

    def test_constant_matrix(self):
        game = DiscreteSEG(np.ones((3, 2)), np.zeros((3, 2, 2)))
        assert leader_payoff(SimplexVector.uniform(3), SimplexVector.uniform(2), game) == pytest.approx(1.0)

    def test_matches_double_sum_oracle(self):
        rng = np.random.default_rng(23)
        lead = rng.normal(size=(2, 2))
        game = DiscreteSEG(lead, np.zeros((2, 2, 2)))
        for _ in range(25):
            sigma = SimplexVector(rng.dirichlet([1.0, 1.0]))
            x = SimplexVector(rng.dirichlet([1.0, 1.0]))
            direct = sum(
                sigma.weights[l] * x.weights[i] * lead[l, i] for l in range(2) for i in range(2)
            )
            assert abs(leader_payoff(sigma, x, game) - direct) <= 1e-12

    def test_bounded_by_entries(self):
        rng = np.random.default_rng(3)
        lead = rng.normal(size=(3, 4))
        game = DiscreteSEG(lead, np.zeros((3, 4, 4)))
        for _ in range(50):
            sigma = SimplexVector(rng.dirichlet(np.ones(3)))
            x = SimplexVector(rng.dirichlet(np.ones(4)))
            val = leader_payoff(sigma, x, game)
            assert lead.min() - 1e-12 <= val <= lead.max() + 1e-12


class TestFollowerPayoff:
    def _induced(self, matrix):
        return InducedMatrix(entries=np.asarray(matrix, float), source_sigma=SimplexVector([1.0]))

    def test_pure_pure_recovers_entry(self):
        B = self._induced(HAWK_DOVE)
        for i in range(2):
            for j in range(2):
                val = follower_payoff(B, SimplexVector.pure(i, 2), SimplexVector.pure(j, 2))
                assert val == HAWK_DOVE[i, j]

    def test_rps_uniform_value(self):
        B = self._induced(RPS)
        u = SimplexVector.uniform(3)
        assert follower_payoff(B, u, u) == pytest.approx(5.0 / 9.0, abs=1e-12)

    def test_zero_matrix(self):
        B = self._induced(np.zeros((3, 3)))
        rng = np.random.default_rng(5)
        for _ in range(10):
            y = SimplexVector(rng.dirichlet(np.ones(3)))
            x = SimplexVector(rng.dirichlet(np.ones(3)))
            assert follower_payoff(B, y, x) == 0.0
