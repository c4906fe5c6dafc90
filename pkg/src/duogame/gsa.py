"""Game solving and analysis: the iterative refine-sample-solve-evaluate loop.

Each iteration builds a strategy set from the factor plan, estimates the
symmetric payoff matrix by simulation (with value-of-information top-ups and
tail trimming), solves for pure tolerance equilibria, screens factor
significance, refines the plan (or follows an explicit schedule), and
evaluates equilibrium strictness and stability.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .doe import FactorEffect, doe_significance
from .errors import ParameterError
from .factors import (
    FactorPlan,
    detailed_children,
    materialize,
    refine_plan,
)
from .game import EmpiricalGame, StrategySpace, symmetric_profile_count
from .runner import (
    CostRates,
    SimulationSettings,
    estimate_payoffs,
    replication_seeds,
)
from .stats import confidence_interval, decide_sample_size, t_test, trim_samples


class StabilityClass(Enum):
    ASYMPTOTICALLY_STABLE = "asymptotically_stable"
    MARGINALLY_STABLE = "marginally_stable"
    INSTABLE = "instable"


@dataclass
class SamplingPolicy:
    initial_n: int = 70
    trim_per_tail: int = 10
    cap: int = 500
    ecvi_floor: float = 50.0
    confidence: float = 0.95
    batch: int = 10

    def validate(self):
        if self.initial_n < 1:
            raise ParameterError("initial_n must be >= 1")
        if 2 * self.trim_per_tail >= self.initial_n:
            raise ParameterError("trim must leave samples behind: 2*trim < n")
        if self.cap < self.initial_n:
            raise ParameterError("cap must be >= initial_n")
        if not 0.0 < self.confidence < 1.0:
            raise ParameterError("confidence must be in (0, 1)")
        if self.batch < 1:
            raise ParameterError("batch must be >= 1")
        return self

    @property
    def alpha(self) -> float:
        return 1.0 - self.confidence


@dataclass
class GsaSettings:
    """Loop-level knobs independent of the simulation scenario."""

    epsilon_solve: float = 0.0
    epsilon_stability: float = 1500.0
    stability_steps: int = 2000
    stability_noise: str = "resample"      # "resample" | "none"
    stability_update: str = "alternating"  # "alternating" | "simultaneous"
    neighbor_count: int = 10
    alpha: float = 0.05
    max_iterations: int = 10
    tolerance_grid: tuple = tuple(float(x) for x in np.linspace(0, 3000, 13))
    run_stability: bool = True


@dataclass
class GsaIterationReport:
    index: int
    g: int
    factors: dict                  # name -> list of level labels
    n_strategies: int
    n_profiles: int
    sample_sizes: dict             # profile tag -> total replications
    effects: list                  # per-factor dicts (two-level iterations)
    equilibria: list               # dicts with profile, labels, means, half-widths
    solution: dict                 # the profile used for evaluation
    epsilon: float
    tolerance_curve: list          # (epsilon, fraction, n_symmetric, n_other)
    neighbor_p_values: dict        # player -> list of p-values
    cross_iteration_p: dict        # earlier index -> one-sided p-value
    stability: dict | None
    runtime_seconds: float
    truncated: bool = False


@dataclass
class GsaResult:
    reports: list
    games: list
    plans: list
    baselines: list
    solution_samples: list         # pooled per-iteration solution payoffs


def profile_tag(iteration: int, a: int, b: int) -> int:
    return (iteration << 20) | (a << 10) | b


class SimulationPayoffSource:
    """Default payoff source: the coupled simulator behind a seed protocol."""

    def __init__(self, settings: SimulationSettings, rates: CostRates,
                 master_seed: int, sd_defaults=None, spec_defaults=None):
        self.settings = settings
        self.rates = rates
        self.master_seed = master_seed
        self.sd_defaults = sd_defaults
        self.spec_defaults = spec_defaults

    def specs_for(self, labels_a: dict, labels_b: dict, baseline: dict):
        spec_a = materialize(labels_a, baseline, self.sd_defaults, self.spec_defaults)
        spec_b = materialize(labels_b, baseline, self.sd_defaults, self.spec_defaults)
        return spec_a, spec_b

    def __call__(self, labels_a, labels_b, baseline, n, tag, start=0):
        specs = self.specs_for(labels_a, labels_b, baseline)
        seeds = replication_seeds(self.master_seed, tag, n, start=start)
        sample = estimate_payoffs(specs, self.settings, self.rates, n, seeds)
        return sample.payoffs


def _simulate_profile(source, labels, a, b, baseline, policy, tag):
    """Initial batch plus value-of-information top-up for one profile."""
    payoffs = source(labels[a], labels[b], baseline, policy.initial_n, tag)
    total = payoffs.shape[0]
    if total >= 2 and policy.cap > total:
        spread = float(max(payoffs[:, 0].std(ddof=1), payoffs[:, 1].std(ddof=1)))
        target = decide_sample_size(total, spread, policy.ecvi_floor,
                                    policy.cap, policy.batch, policy.alpha)
        if target > total:
            extra = source(labels[a], labels[b], baseline, target - total,
                           tag, start=total)
            payoffs = np.vstack([payoffs, extra])
    return payoffs


def build_empirical_game(plan: FactorPlan, source, baseline: dict,
                         policy: SamplingPolicy, iteration: int,
                         jobs: int = 1):
    """Simulate every unordered profile of the plan's strategy set."""
    labels = plan.strategy_labels()
    space = StrategySpace(labels, labels=[f"s{i}" for i in range(len(labels))])
    game = EmpiricalGame(space)
    n = len(labels)
    tasks = [(a, b) for a in range(n) for b in range(a, n)]
    tags = {t: profile_tag(iteration, *t) for t in tasks}
    sizes = {}

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {t: pool.submit(_simulate_profile, source, labels, t[0],
                                      t[1], baseline, policy, tags[t])
                       for t in tasks}
            results = {t: f.result() for t, f in futures.items()}
    else:
        results = {t: _simulate_profile(source, labels, t[0], t[1], baseline,
                                        policy, tags[t]) for t in tasks}

    for (a, b), payoffs in results.items():
        sizes[f"{a},{b}"] = int(payoffs.shape[0])
        p1, p2 = payoffs[:, 0], payoffs[:, 1]
        if payoffs.shape[0] > 2 * policy.trim_per_tail:
            p1 = trim_samples(p1, policy.trim_per_tail)
            p2 = trim_samples(p2, policy.trim_per_tail)
        game.set_samples((a, b), p1, p2)
    return game, sizes


def screen_effects(game: EmpiricalGame, plan: FactorPlan, alpha: float):
    """Main-effect significance of each factor on the own payoff.

    One observation per (profile, player role): the player's own factor
    levels against the trimmed mean payoff. Only defined for two-level
    iterations.
    """
    if plan.level_count() != 2:
        return []
    labels = plan.strategy_labels()
    names = plan.names()
    rows = []
    responses = []
    for (a, b) in game.profiles():
        for player, own in ((0, a), (1, b)):
            strat = labels[own]
            rows.append([0 if strat[nm] == "L" else 1 for nm in names])
            responses.append(game.payoff((a, b), player))
    return doe_significance(np.array(rows), np.array(responses), alpha,
                            factor_names=names)


def tolerance_sweep(game: EmpiricalGame, epsilons):
    out = []
    profiles = game.profiles()
    for eps in epsilons:
        eq = game.pure_nash(float(eps))
        sym = sum(1 for a, b in eq if a == b)
        out.append({"epsilon": float(eps),
                    "fraction": len(eq) / len(profiles),
                    "n_symmetric": sym, "n_other": len(eq) - sym})
    return out


def neighbor_strictness_test(game: EmpiricalGame, profile, player: int,
                             k_neighbors: int, alpha: float = 0.05):
    """P-values of the solution payoff against its nearest payoff neighbors."""
    if k_neighbors == 0:
        return []
    here_samples = game.samples(profile, player)
    here_mean = float(here_samples.mean())
    candidates = []
    for other in game.profiles():
        if other == profile:
            continue
        candidates.append((abs(game.payoff(other, player) - here_mean), other))
    candidates.sort(key=lambda t: t[0])
    out = []
    for _, other in candidates[:k_neighbors]:
        out.append(t_test(here_samples, game.samples(other, player)))
    return out


@dataclass
class StabilityReport:
    ratios: dict
    classes: dict = field(repr=False)
    epsilon: float = 0.0
    steps: int = 0

    def as_dict(self):
        return {"ratios": dict(self.ratios), "epsilon": self.epsilon,
                "steps": self.steps}


def stability_analysis(game: EmpiricalGame, solution, epsilon: float,
                       steps: int = 2000, noise: str = "resample",
                       update: str = "alternating", seed: int = 0,
                       as_tol: float | None = None) -> StabilityReport:
    """Classify every initial profile by its noisy best-response trajectory.

    From each ordered initial profile the players repeatedly best-respond,
    re-drawing stored payoff samples each move under the ``resample`` noise
    model. The final tenth of the trajectory decides the class: payoffs
    pinned to the solution payoff are asymptotically stable, payoffs inside
    the tolerance band are marginally stable, anything else is instable.
    """
    if noise not in ("resample", "none"):
        raise ParameterError(f"unknown noise model {noise!r}")
    if update not in ("alternating", "simultaneous"):
        raise ParameterError(f"unknown update rule {update!r}")
    if steps < 10:
        raise ParameterError("steps must be >= 10")
    game._require_complete()
    n = game.n
    u = np.zeros((2, n, n))
    for a in range(n):
        for b in range(n):
            u[0, a, b] = game.payoff((a, b), 0)
            u[1, a, b] = game.payoff((a, b), 1)

    if as_tol is None:
        sol_samples = game.samples(solution, 0)
        if sol_samples.size >= 2 and sol_samples.std(ddof=1) > 0:
            as_tol = max(confidence_interval(sol_samples)[1],
                         confidence_interval(game.samples(solution, 1))[1])
        else:
            as_tol = 1e-9
    sol_pay = np.array([u[0, solution[0], solution[1]],
                        u[1, solution[0], solution[1]]])

    resample = noise == "resample"
    if resample:
        counts = np.zeros((2, n, n), dtype=np.int64)
        maxn = 1
        for a in range(n):
            for b in range(n):
                counts[0, a, b] = game.sample_count((a, b), 0)
                counts[1, a, b] = game.sample_count((a, b), 1)
                maxn = max(maxn, counts[0, a, b], counts[1, a, b])
        bank = np.zeros((2, n, n, maxn))
        for a in range(n):
            for b in range(n):
                for pl in (0, 1):
                    s = game.samples((a, b), pl)
                    bank[pl, a, b, :s.size] = s

    window = max(1, steps // 10)
    classes = {}
    ss = np.random.SeedSequence(seed)
    for (a0, b0), child in zip(
            [(a, b) for a in range(n) for b in range(n)],
            ss.spawn(n * n)):
        rng = np.random.default_rng(child)
        a, b = a0, b0
        deviations = []  # worst payoff distance from the solution, per step
        for step in range(steps):
            movers = ((step % 2,) if update == "alternating" else (0, 1))
            next_a, next_b = a, b
            for player in movers:
                if player == 0:
                    cand_rows, cand_cols = np.arange(n), np.full(n, b)
                else:
                    cand_rows, cand_cols = np.full(n, a), np.arange(n)
                if resample:
                    cnt = counts[player, cand_rows, cand_cols]
                    idx = rng.integers(0, cnt)
                    vals = bank[player, cand_rows, cand_cols, idx]
                else:
                    vals = u[player, cand_rows, cand_cols]
                best = np.flatnonzero(vals == vals.max())
                pick = int(best[0]) if best.size == 1 else int(rng.choice(best))
                if player == 0:
                    next_a = pick
                else:
                    next_b = pick
            a, b = next_a, next_b
            if step >= steps - window:
                pay = u[:, a, b]
                deviations.append(float(np.max(np.abs(pay - sol_pay))))
        worst = max(deviations)
        if worst <= as_tol:
            cls = StabilityClass.ASYMPTOTICALLY_STABLE
        elif worst <= epsilon:
            cls = StabilityClass.MARGINALLY_STABLE
        else:
            cls = StabilityClass.INSTABLE
        classes[(a0, b0)] = cls

    total = len(classes)
    ratios = {c.value: sum(1 for v in classes.values() if v is c) / total
              for c in StabilityClass}
    return StabilityReport(ratios=ratios, classes=classes, epsilon=epsilon,
                           steps=steps)


def _solution_profile(game: EmpiricalGame, equilibria):
    """Evaluation anchor: first symmetric equilibrium, else the best-payoff
    equilibrium, else the minimum-regret profile."""
    if equilibria:
        symmetric = [p for p in equilibria if p[0] == p[1]]
        if symmetric:
            return symmetric[0]
        return max(equilibria,
                   key=lambda p: game.payoff(p, 0) + game.payoff(p, 1))
    return game.min_regret_profile()


def run_gsa(plan: FactorPlan, policy: SamplingPolicy, source,
            gsa: GsaSettings | None = None, schedule=None,
            baseline: dict | None = None, jobs: int = 1,
            stability_seed: int = 1, on_iteration=None,
            checkpoints=None) -> GsaResult:
    """Execute the full loop and return per-iteration reports.

    With ``schedule`` given (a list of factor plans), refinement follows it
    verbatim; otherwise the adaptive rule drives the loop until level
    densification is exhausted. Factors leaving the active set are frozen at
    the latest solution's levels through ``baseline``. A ``checkpoints``
    store resumes interrupted runs iteration by iteration.
    """
    gsa = gsa or GsaSettings()
    policy.validate()
    baseline = dict(baseline or {})
    reports, games, plans, baselines = [], [], [], []
    solution_samples = []

    iteration = 0
    current = plan
    while current is not None and iteration < gsa.max_iterations:
        restored = checkpoints.load(iteration) if checkpoints is not None else None
        if restored is not None:
            game, report_dict, saved_baseline = restored
            report = GsaIterationReport(**report_dict)
            labels = current.strategy_labels()
            solution = tuple(report.solution["profile"])
            effects = [FactorEffect(**e) for e in report.effects]
            reports.append(report)
            games.append(game)
            plans.append(current)
            baselines.append(dict(baseline))
            solution_samples.append(np.concatenate(
                [game.samples(solution, 0), game.samples(solution, 1)]))
            baseline = dict(saved_baseline)
            iteration += 1
            if schedule is not None:
                current = schedule[iteration] if iteration < len(schedule) else None
            else:
                result = refine_plan(current, effects)
                current = None if result.terminated else result.plan
            continue

        t0 = time.perf_counter()
        game, sizes = build_empirical_game(current, source, baseline, policy,
                                           iteration, jobs=jobs)
        labels = current.strategy_labels()
        equilibria = game.pure_nash(gsa.epsilon_solve)
        solution = _solution_profile(game, equilibria)
        effects = screen_effects(game, current, gsa.alpha)

        eq_entries = []
        for p in equilibria:
            entry = {"profile": list(p),
                     "labels": [labels[p[0]], labels[p[1]]],
                     "mean": [game.payoff(p, 0), game.payoff(p, 1)],
                     "half_width": [], "n": [game.sample_count(p, 0),
                                             game.sample_count(p, 1)]}
            for player in (0, 1):
                s = game.samples(p, player)
                entry["half_width"].append(
                    confidence_interval(s, gsa.alpha)[1] if s.size >= 2 else 0.0)
            eq_entries.append(entry)

        neighbor_p = {str(player): neighbor_strictness_test(
            game, solution, player, gsa.neighbor_count, gsa.alpha)
            for player in (0, 1)}

        pooled = np.concatenate([game.samples(solution, 0),
                                 game.samples(solution, 1)])
        cross = {}
        for j, earlier in enumerate(solution_samples):
            if earlier.size >= 2 and pooled.size >= 2:
                cross[str(j)] = t_test(earlier, pooled, alternative="less")
        solution_samples.append(pooled)

        stability = None
        if gsa.run_stability:
            stability = stability_analysis(
                game, solution, gsa.epsilon_stability, gsa.stability_steps,
                noise=gsa.stability_noise, update=gsa.stability_update,
                seed=stability_seed + iteration).as_dict()

        report = GsaIterationReport(
            index=iteration, g=current.g,
            factors={f.name: list(f.levels) for f in current.factors},
            n_strategies=len(labels),
            n_profiles=symmetric_profile_count(len(labels)),
            sample_sizes=sizes,
            effects=[{"name": e.name, "effect": e.effect, "p_value": e.p_value,
                      "significant": e.significant} for e in effects],
            equilibria=eq_entries,
            solution={"profile": list(solution),
                      "labels": [labels[solution[0]], labels[solution[1]]],
                      "mean": [game.payoff(solution, 0),
                               game.payoff(solution, 1)]},
            epsilon=gsa.epsilon_solve,
            tolerance_curve=tolerance_sweep(game, gsa.tolerance_grid),
            neighbor_p_values=neighbor_p,
            cross_iteration_p=cross,
            stability=stability,
            runtime_seconds=time.perf_counter() - t0)
        reports.append(report)
        games.append(game)
        plans.append(current)
        baselines.append(dict(baseline))
        if on_iteration is not None:
            on_iteration(report, game)

        # freeze every active factor at the solution's row-strategy level
        solution_labels = labels[solution[0]]
        for name, label in solution_labels.items():
            for child in detailed_children(name):
                baseline[child] = label

        if checkpoints is not None:
            checkpoints.save(iteration, game, report, baseline)
        iteration += 1
        if schedule is not None:
            current = schedule[iteration] if iteration < len(schedule) else None
        else:
            result = refine_plan(current, effects)
            current = None if result.terminated else result.plan

    if current is not None and reports:
        # the iteration budget ran out before refinement finished
        reports[-1].truncated = True

    return GsaResult(reports=reports, games=games, plans=plans,
                     baselines=baselines, solution_samples=solution_samples)
