"""Command line entry points.

Subcommands: simulate | estimate | solve | gsa | stability | report.
Exit codes: 0 on success, 2 for configuration/validation problems, 3 for
runtime or numeric failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import default_config, load_config, save_config
from .errors import ConfigError, DesignError, DuogameError, ParameterError
from .factors import validate_profile_values
from .game import symmetric_profile_count
from .gsa import (
    SimulationPayoffSource,
    run_gsa,
    stability_analysis,
)
from .reporting import (
    CheckpointStore,
    read_payoff_matrix,
    write_figure_data,
    write_iteration_report,
    write_payoff_matrix,
    write_trace_csv,
)
from .runner import compute_payoff, replication_seeds, run_replication

VALIDATION_ERRORS = (ConfigError, ParameterError, DesignError)


def _config_from_args(args):
    if getattr(args, "config", None):
        config = load_config(args.config)
    else:
        config = default_config()
    if getattr(args, "seed", None) is not None:
        config.master_seed = args.seed
    if getattr(args, "jobs", None) is not None:
        config.jobs = args.jobs
    if getattr(args, "out", None):
        config.out_dir = args.out
    return config


def _load_profile(raw: str | None) -> dict:
    if not raw:
        return {}
    path = Path(raw)
    text = path.read_text() if path.exists() else raw
    try:
        profile = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"profile is not valid JSON: {exc}") from exc
    if not isinstance(profile, dict):
        raise ConfigError("profile must map factor names to level labels")
    validate_profile_values(profile)
    return profile


def _source(config):
    return SimulationPayoffSource(config.settings, config.cost_rates,
                                  config.master_seed,
                                  sd_defaults=config.sd_defaults,
                                  spec_defaults=config.spec_defaults)


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    profile = _load_profile(args.profile) or dict(config.default_profile)
    source = _source(config)
    specs = source.specs_for(profile, profile, baseline={})
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = replication_seeds(config.master_seed, 0, args.n)
    payoffs = []
    for j, seed in enumerate(seeds):
        rep = run_replication(specs, config.settings, seed)
        pay = compute_payoff(rep, config.cost_rates,
                             config.settings.sunk_cost_mode)
        payoffs.append({"seed": seed, "payoff": [float(pay[0]), float(pay[1])]})
        if args.trace:
            write_trace_csv(rep, out_dir / f"trace_{j:03d}.csv")
    means = np.mean([p["payoff"] for p in payoffs], axis=0)
    (out_dir / "payoffs.json").write_text(json.dumps(
        {"profile": profile, "n": args.n, "replications": payoffs,
         "mean": [float(means[0]), float(means[1])]},
        indent=2, sort_keys=True) + "\n")
    print(f"simulated {args.n} replications -> {out_dir / 'payoffs.json'}")
    return 0


def cmd_estimate(args) -> int:
    config = _config_from_args(args)
    plan = config.first_plan()
    from .gsa import build_empirical_game
    game, sizes = build_empirical_game(plan, _source(config), {},
                                       config.sampling, iteration=0,
                                       jobs=config.jobs)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_payoff_matrix(game, out_dir / "payoff_matrix.csv")
    (out_dir / "strategies.json").write_text(json.dumps(
        {"strategies": plan.strategy_labels(), "sample_sizes": sizes},
        indent=2, sort_keys=True) + "\n")
    print(f"estimated {game.n} strategies, "
          f"{symmetric_profile_count(game.n)} profiles -> {out_dir}")
    return 0


def cmd_solve(args) -> int:
    game = read_payoff_matrix(args.game)
    equilibria = game.pure_nash(args.epsilon)
    result = {
        "epsilon": args.epsilon,
        "equilibria": [{"profile": list(p),
                        "payoff": [game.payoff(p, 0), game.payoff(p, 1)],
                        "regret": game.regret(p) if game.n > 1 else None}
                       for p in equilibria],
        "min_regret_profile": list(game.min_regret_profile()),
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_gsa(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, out_dir / "config.json")
    store = CheckpointStore(out_dir, config.fingerprint())
    source = _source(config)

    result = run_gsa(config.first_plan(), config.sampling, source,
                     gsa=config.gsa, schedule=config.schedule,
                     jobs=config.jobs, stability_seed=config.master_seed + 1,
                     checkpoints=store)

    for report, game, plan, baseline in zip(result.reports, result.games,
                                            result.plans, result.baselines):
        write_iteration_report(report, out_dir / f"iteration_{report.index:02d}.json")
        write_payoff_matrix(game, out_dir / f"payoff_matrix_{report.index:02d}.csv")
        solution = dict(report.solution["labels"][0])
        specs = source.specs_for(solution, solution, baseline)
        trace_seed = replication_seeds(config.master_seed,
                                       (1 << 19) + report.index, 1)[0]
        rep = run_replication(specs, config.settings, trace_seed)
        write_trace_csv(rep, out_dir / f"solution_trace_{report.index:02d}.csv")

    write_figure_data(result.reports, out_dir)
    summary = {
        "iterations": len(result.reports),
        "solution_payoffs": [r.solution["mean"] for r in result.reports],
        "equilibrium_counts": [len(r.equilibria) for r in result.reports],
        "stability": [r.stability["ratios"] if r.stability else None
                      for r in result.reports],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2,
                                                     sort_keys=True) + "\n")
    print(f"{len(result.reports)} iterations -> {out_dir}")
    return 0


def cmd_stability(args) -> int:
    game = read_payoff_matrix(args.game)
    if args.solution:
        a, b = (int(x) for x in args.solution.split(","))
        solution = (a, b)
    else:
        solution = game.min_regret_profile()
    report = stability_analysis(game, solution, epsilon=args.epsilon,
                                steps=args.steps, seed=args.seed or 0,
                                noise=args.noise)
    result = {"solution": list(solution), **report.as_dict()}
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_report(args) -> int:
    src = Path(args.dir)
    report_files = sorted(src.glob("iteration_*.json"))
    if not report_files:
        raise ConfigError(f"no iteration reports under {src}")
    rows = [json.loads(f.read_text())["report"] for f in report_files]
    summary = {
        "iterations": len(rows),
        "factors": [list(r["factors"]) for r in rows],
        "solution_payoffs": [r["solution"]["mean"] for r in rows],
        "equilibrium_counts": [len(r["equilibria"]) for r in rows],
        "stability": [r["stability"]["ratios"] if r["stability"] else None
                      for r in rows],
        "payoff_trend_increasing":
            rows[-1]["solution"]["mean"][0] > rows[0]["solution"]["mean"][0],
    }
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duogame",
        description="Duopoly supply-chain market game: simulate, estimate, "
                    "solve and analyze.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON config file (defaults ship built in)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", help="output directory or file")
        p.add_argument("--jobs", type=int, help="parallel worker processes")

    p = sub.add_parser("simulate", help="run replications of one profile")
    common(p)
    p.add_argument("--profile", help="JSON mapping of factor to level label")
    p.add_argument("--n", type=int, default=1, help="replication count")
    p.add_argument("--trace", action="store_true",
                   help="write per-replication daily trace CSVs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the first-iteration payoff matrix")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("solve", help="find pure tolerance equilibria of a matrix")
    p.add_argument("--game", required=True, help="payoff matrix CSV")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gsa", help="run the full solving-and-analysis loop")
    common(p)
    p.set_defaults(func=cmd_gsa)

    p = sub.add_parser("stability", help="best-response stability of a matrix")
    p.add_argument("--game", required=True, help="payoff matrix CSV")
    p.add_argument("--epsilon", type=float, default=1500.0)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", choices=("resample", "none"), default="resample")
    p.add_argument("--solution", help="profile as 'a,b'; defaults to min regret")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DuogameError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
