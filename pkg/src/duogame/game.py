"""Empirical normal-form game over sampled payoffs.

Two players share a strategy list (symmetric game) or carry separate payoff
tables (general game). Symmetric storage keeps one record per unordered
profile, (S^2 - S)/2 + S in total, each holding the raw payoff samples of
the player using the first strategy and of the player using the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteGameError, ParameterError


def symmetric_profile_count(n_strategies: int) -> int:
    """Unordered profile count: off-diagonal pairs halve, diagonal stays."""
    if n_strategies < 1:
        raise ParameterError("strategy count must be >= 1")
    return (n_strategies * n_strategies - n_strategies) // 2 + n_strategies


@dataclass
class StrategySpace:
    """Ordered strategies; each is a mapping of factor name to level value."""

    strategies: list
    labels: list | None = None
    symmetric: bool = True

    def __post_init__(self):
        if self.labels is None:
            self.labels = [f"s{i}" for i in range(len(self.strategies))]
        seen = set()
        for s in self.strategies:
            key = tuple(sorted(s.items())) if isinstance(s, dict) else s
            if key in seen:
                raise ParameterError(f"duplicate strategy {s!r}")
            seen.add(key)

    def __len__(self):
        return len(self.strategies)


class EmpiricalGame:
    """Payoff samples per profile with symmetric or general storage.

    Profiles are ordered pairs ``(row, col)`` of strategy indices. In the
    symmetric case samples are stored once per unordered pair and queries for
    the transposed profile swap the player roles.
    """

    def __init__(self, space: StrategySpace):
        self.space = space
        self.n = len(space)
        self._samples: dict = {}   # canonical profile -> (samples_p1, samples_p2)
        # canonical profile -> ((mean, n, var), (mean, n, var)); set by matrix
        # import so summary statistics survive a round trip bit for bit
        self._stats_override: dict = {}

    # -- construction ------------------------------------------------------

    def _canonical(self, profile):
        a, b = profile
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise ParameterError(f"profile {profile} out of range")
        if self.space.symmetric and a > b:
            return (b, a), True
        return (a, b), False

    def set_samples(self, profile, samples_p1, samples_p2):
        key, swapped = self._canonical(profile)
        p1 = np.asarray(samples_p1, dtype=float)
        p2 = np.asarray(samples_p2, dtype=float)
        if swapped:
            p1, p2 = p2, p1
        if p1.size == 0 or p2.size == 0:
            raise ParameterError("empty sample set")
        self._samples[key] = (p1, p2)

    @classmethod
    def from_payoff_matrices(cls, u1, u2=None, symmetric=None):
        """Build a game from mean payoff matrices (single-sample sets).

        With only ``u1`` given, the game is treated as symmetric with
        ``u2[a, b] = u1[b, a]``.
        """
        u1 = np.asarray(u1, dtype=float)
        n = u1.shape[0]
        if u2 is None:
            symmetric = True if symmetric is None else symmetric
            u2 = u1.T
        else:
            u2 = np.asarray(u2, dtype=float)
            symmetric = False if symmetric is None else symmetric
        space = StrategySpace([{"index": i} for i in range(n)], symmetric=symmetric)
        game = cls(space)
        for a in range(n):
            for b in range(n):
                key, _ = game._canonical((a, b))
                if key in game._samples:
                    continue
                game.set_samples(key, [u1[key[0], key[1]]], [u2[key[0], key[1]]])
        return game

    # -- queries -----------------------------------------------------------

    def profiles(self):
        """Canonical profiles covering the whole game."""
        if self.space.symmetric:
            return [(a, b) for a in range(self.n) for b in range(a, self.n)]
        return [(a, b) for a in range(self.n) for b in range(self.n)]

    def has_profile(self, profile) -> bool:
        key, _ = self._canonical(profile)
        return key in self._samples

    def missing_profiles(self):
        return [p for p in self.profiles() if p not in self._samples]

    def samples(self, profile, player: int) -> np.ndarray:
        key, swapped = self._canonical(profile)
        if key not in self._samples:
            raise IncompleteGameError(f"profile {profile} was never simulated",
                                      missing=[profile])
        pair = self._samples[key]
        idx = player ^ 1 if swapped else player
        return pair[idx]

    def _stat(self, profile, player: int):
        key, swapped = self._canonical(profile)
        if key not in self._stats_override:
            return None
        return self._stats_override[key][player ^ 1 if swapped else player]

    def set_stats_override(self, profile, stats_p1, stats_p2):
        key, swapped = self._canonical(profile)
        pair = (tuple(stats_p2), tuple(stats_p1)) if swapped else \
            (tuple(stats_p1), tuple(stats_p2))
        self._stats_override[key] = pair

    def payoff(self, profile, player: int) -> float:
        stat = self._stat(profile, player)
        if stat is not None:
            return stat[0]
        return float(self.samples(profile, player).mean())

    def sample_count(self, profile, player: int) -> int:
        stat = self._stat(profile, player)
        if stat is not None:
            return int(stat[1])
        return int(self.samples(profile, player).size)

    def sample_variance(self, profile, player: int) -> float:
        stat = self._stat(profile, player)
        if stat is not None:
            return stat[2]
        s = self.samples(profile, player)
        return float(s.var(ddof=1)) if s.size > 1 else 0.0

    def mean_matrices(self):
        u1 = np.full((self.n, self.n), np.nan)
        u2 = np.full((self.n, self.n), np.nan)
        for a in range(self.n):
            for b in range(self.n):
                u1[a, b] = self.payoff((a, b), 0)
                u2[a, b] = self.payoff((a, b), 1)
        return u1, u2

    # -- equilibrium machinery ----------------------------------------------

    def deviation_set(self, profile, player: int):
        """All profiles reachable by the player changing strategy, itself included."""
        a, b = profile
        if player == 0:
            return [(s, b) for s in range(self.n)]
        return [(a, s) for s in range(self.n)]

    def regret(self, profile) -> float:
        """Best unilateral improvement over the profile payoff.

        Positive values mean some player gains by deviating; strict
        equilibria report negative regret because the profile itself is
        excluded from the deviation candidates.
        """
        if self.n < 2:
            raise ParameterError("regret needs at least two strategies")
        self._require_complete()
        a, b = profile
        best = -np.inf
        for player, own in ((0, a), (1, b)):
            here = self.payoff(profile, player)
            for dev in self.deviation_set(profile, player):
                if dev[player] == own:
                    continue
                best = max(best, self.payoff(dev, player) - here)
        return float(best)

    def _require_complete(self):
        missing = self.missing_profiles()
        if missing:
            raise IncompleteGameError(
                f"game is missing {len(missing)} profiles", missing=missing)

    def is_epsilon_equilibrium(self, profile, epsilon: float) -> bool:
        a, b = profile
        for player, here in ((0, self.payoff(profile, 0)),
                             (1, self.payoff(profile, 1))):
            for dev in self.deviation_set(profile, player):
                if self.payoff(dev, player) > here + epsilon:
                    return False
        return True

    def best_response_profiles(self, profile, player: int):
        """Profiles reached by the player's best responses; ties all kept."""
        devs = self.deviation_set(profile, player)
        payoffs = np.array([self.payoff(d, player) for d in devs])
        best = payoffs.max()
        return [d for d, p in zip(devs, payoffs) if p == best]

    def pure_nash(self, epsilon: float = 0.0):
        """All profiles no player can improve on by more than ``epsilon``.

        Every profile gets a full deviation check; iterative best-response
        search can miss equilibria under payoff noise, and at these game
        sizes the complete scan is cheap.
        """
        if epsilon < 0:
            raise ParameterError("epsilon must be >= 0")
        self._require_complete()
        result = []
        for profile in self.profiles():
            if self.is_epsilon_equilibrium(profile, epsilon):
                result.append(profile)
        return result

    def min_regret_profile(self):
        profiles = self.profiles()
        regrets = [self.regret(p) for p in profiles]
        return profiles[int(np.argmin(regrets))]
