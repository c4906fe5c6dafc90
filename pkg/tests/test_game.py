import numpy as np
import pytest

from duogame.errors import IncompleteGameError, ParameterError
from duogame.game import EmpiricalGame, StrategySpace, symmetric_profile_count

# 2x2 symmetric game in prisoner's-dilemma shape: rows/cols are (C, D),
# row payoffs u1 = [[3, 0], [5, 1]]
PD_U1 = np.array([[3.0, 0.0], [5.0, 1.0]])

# matching pennies, not symmetric: u2 = -u1
MP_U1 = np.array([[1.0, -1.0], [-1.0, 1.0]])


def brute_force_nash(u1, u2, epsilon=0.0):
    """Independent oracle: direct inequality check over the full matrix."""
    n = u1.shape[0]
    result = []
    for a in range(n):
        for b in range(n):
            ok = all(u1[s, b] <= u1[a, b] + epsilon for s in range(n))
            ok = ok and all(u2[a, s] <= u2[a, b] + epsilon for s in range(n))
            if ok:
                result.append((a, b))
    return result


def random_symmetric_game(rng, n):
    u1 = rng.integers(-20, 21, size=(n, n)).astype(float)
    return EmpiricalGame.from_payoff_matrices(u1), u1


class TestProfileCount:
    def test_experiment_scale(self):
        assert symmetric_profile_count(16) == 136

    def test_small_sizes(self):
        assert symmetric_profile_count(1) == 1
        assert symmetric_profile_count(2) == 3
        assert symmetric_profile_count(4) == 10
        assert symmetric_profile_count(8) == 36

    def test_storage_matches_count(self):
        game, _ = random_symmetric_game(np.random.default_rng(0), 5)
        assert len(game.profiles()) == symmetric_profile_count(5)


class TestRegret:
    def test_prisoners_dilemma_cooperate(self):
        game = EmpiricalGame.from_payoff_matrices(PD_U1)
        assert game.regret((0, 0)) == pytest.approx(2.0)  # defect gains 5 - 3

    def test_strict_equilibrium_negative_regret(self):
        game = EmpiricalGame.from_payoff_matrices(PD_U1)
        assert game.regret((1, 1)) < 0

    def test_single_strategy_rejected(self):
        game = EmpiricalGame.from_payoff_matrices(np.array([[1.0]]))
        with pytest.raises(ParameterError):
            game.regret((0, 0))

    def test_incomplete_game_rejected(self):
        space = StrategySpace([{"x": 0}, {"x": 1}])
        game = EmpiricalGame(space)
        game.set_samples((0, 0), [1.0], [1.0])
        with pytest.raises(IncompleteGameError) as err:
            game.regret((0, 0))
        assert err.value.missing


class TestDeviationSet:
    def test_cardinality(self):
        game, _ = random_symmetric_game(np.random.default_rng(1), 16)
        assert len(game.deviation_set((3, 7), 0)) == 16

    def test_contains_itself(self):
        game, _ = random_symmetric_game(np.random.default_rng(1), 4)
        assert (2, 3) in game.deviation_set((2, 3), 0)

    def test_player_one_varies_first_coordinate(self):
        game, _ = random_symmetric_game(np.random.default_rng(1), 4)
        devs = game.deviation_set((1, 2), 0)
        assert all(b == 2 for _, b in devs)
        devs2 = game.deviation_set((1, 2), 1)
        assert all(a == 1 for a, _ in devs2)


class TestPureNash:
    def test_prisoners_dilemma(self):
        game = EmpiricalGame.from_payoff_matrices(PD_U1)
        assert game.pure_nash(0.0) == [(1, 1)]

    def test_matching_pennies_empty(self):
        game = EmpiricalGame.from_payoff_matrices(MP_U1, -MP_U1)
        assert game.pure_nash(0.0) == []

    def test_epsilon_relaxation_is_monotone(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            game, _ = random_symmetric_game(rng, int(rng.integers(2, 7)))
            tight = set(game.pure_nash(0.0))
            loose = set(game.pure_nash(1500.0))
            assert tight <= loose

    def test_oracle_equivalence_random_games(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            game, u1 = random_symmetric_game(rng, n)
            mine = set(game.pure_nash(0.0))
            oracle = {(a, b) for a, b in brute_force_nash(u1, u1.T) if a <= b}
            assert mine == oracle

    def test_regret_characterizes_equilibria(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            n = int(rng.integers(2, 7))
            game, _ = random_symmetric_game(rng, n)
            eps = float(rng.uniform(0, 10))
            eq = set(game.pure_nash(eps))
            for profile in game.profiles():
                assert (game.regret(profile) <= eps) == (profile in eq)

    def test_positive_affine_invariance(self):
        rng = np.random.default_rng(3)
        game, u1 = random_symmetric_game(rng, 5)
        a, b = 2.5, 17.0
        scaled = EmpiricalGame.from_payoff_matrices(a * u1 + b)
        eps = 4.0
        assert game.pure_nash(eps) == scaled.pure_nash(a * eps)

    def test_incomplete_game_lists_missing(self):
        space = StrategySpace([{"x": 0}, {"x": 1}])
        game = EmpiricalGame(space)
        game.set_samples((0, 0), [1.0], [1.0])
        with pytest.raises(IncompleteGameError) as err:
            game.pure_nash(0.0)
        assert (0, 1) in err.value.missing


class TestStorage:
    def test_symmetric_transposed_query(self):
        space = StrategySpace([{"x": 0}, {"x": 1}])
        game = EmpiricalGame(space)
        game.set_samples((0, 1), [10.0, 12.0], [3.0, 5.0])
        game.set_samples((0, 0), [1.0], [1.0])
        game.set_samples((1, 1), [2.0], [2.0])
        assert game.payoff((0, 1), 0) == pytest.approx(11.0)
        assert game.payoff((1, 0), 1) == pytest.approx(11.0)
        assert game.payoff((1, 0), 0) == pytest.approx(4.0)

    def test_sample_bookkeeping(self):
        space = StrategySpace([{"x": 0}, {"x": 1}])
        game = EmpiricalGame(space)
        game.set_samples((0, 1), [10.0, 12.0, 14.0], [3.0, 5.0, 7.0])
        assert game.sample_count((0, 1), 0) == 3
        assert game.sample_variance((0, 1), 0) == pytest.approx(4.0)

    def test_duplicate_strategies_rejected(self):
        with pytest.raises(ParameterError):
            StrategySpace([{"x": 0}, {"x": 0}])

    def test_min_regret_profile(self):
        game = EmpiricalGame.from_payoff_matrices(PD_U1)
        assert game.min_regret_profile() == (1, 1)
