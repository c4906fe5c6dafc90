"""File formats: payoff matrices, daily traces, iteration reports, figure
data and per-iteration checkpoints.

Payoff matrix CSV: one row per row-player strategy, one column per
column-player strategy, each cell ``mean;n;variance|mean;n;variance`` for
the two players. Floats are written with ``repr`` so a read-back reproduces
them exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .game import EmpiricalGame, StrategySpace

TRACE_HEADER = ["day", "company", "price", "inv", "backlog", "shipR", "MS",
                "labor", "wip"]


def _cell(game: EmpiricalGame, a: int, b: int) -> str:
    parts = []
    for player in (0, 1):
        mean = game.payoff((a, b), player)
        n = game.sample_count((a, b), player)
        var = game.sample_variance((a, b), player)
        parts.append(f"{mean!r};{n};{var!r}")
    return "|".join(parts)


def write_payoff_matrix(game: EmpiricalGame, path) -> None:
    path = Path(path)
    n = game.n
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy"] + [game.space.labels[j] for j in range(n)])
        for a in range(n):
            row = [game.space.labels[a]]
            for b in range(n):
                row.append(_cell(game, a, b))
            writer.writerow(row)


def read_payoff_matrix(path, symmetric: bool = True) -> EmpiricalGame:
    """Rebuild a game from a matrix CSV.

    Only summary statistics survive the round trip; each profile comes back
    as a synthetic sample set with exactly the stored mean, count and
    variance (two-point representation), which keeps solving, confidence
    intervals and resampling workable.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"payoff matrix not found: {path}")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise ConfigError(f"payoff matrix {path} is empty")
    labels = rows[0][1:]
    n = len(labels)
    space = StrategySpace([{"index": i} for i in range(n)], labels=labels,
                          symmetric=symmetric)
    game = EmpiricalGame(space)
    stats = {}
    for a, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise ConfigError(f"malformed payoff row {a} in {path}")
        for b, cell in enumerate(row[1:]):
            per_player = []
            for part in cell.split("|"):
                mean_s, n_s, var_s = part.split(";")
                per_player.append((float(mean_s), int(n_s), float(var_s)))
            stats[(a, b)] = per_player
    for (a, b), per_player in stats.items():
        if symmetric and a > b:
            continue
        samples = []
        for mean, count, var in per_player:
            samples.append(_synthetic_samples(mean, count, var))
        game.set_samples((a, b), samples[0], samples[1])
        game.set_stats_override((a, b), per_player[0], per_player[1])
    return game


def _synthetic_samples(mean: float, count: int, variance: float) -> np.ndarray:
    if count <= 1 or variance <= 0:
        return np.full(max(count, 1), mean)
    # symmetric two-point set reproducing the mean and ddof=1 variance
    spread = np.sqrt(variance * (count - 1) / count)
    out = np.full(count, mean)
    half = count // 2
    out[:half] += spread
    out[count - half:] -= spread
    if count % 2 == 1:
        # odd counts need a correction so the variance matches exactly
        k = half
        spread = np.sqrt(variance * (count - 1) / (2 * k))
        out = np.full(count, mean)
        out[:k] += spread
        out[count - k:] -= spread
    return out


def matrix_roundtrip_stats(game: EmpiricalGame):
    """(mean, n, variance) per profile per player, the round-trip contract."""
    out = {}
    for a in range(game.n):
        for b in range(game.n):
            out[(a, b)] = [(game.payoff((a, b), p),
                            game.sample_count((a, b), p),
                            game.sample_variance((a, b), p))
                           for p in (0, 1)]
    return out


def write_trace_csv(rep, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for day in range(rep.run_length):
            for company in (0, 1):
                writer.writerow([
                    day, company + 1,
                    repr(rep.series["price"][day, company]),
                    repr(rep.series["inv"][day, company]),
                    repr(rep.series["backlog"][day, company]),
                    repr(rep.series["ship_r"][day, company]),
                    repr(rep.series["ms"][day, company]),
                    repr(rep.series["labor"][day, company]),
                    repr(rep.series["wip"][day, company]),
                ])


def report_to_dict(report) -> dict:
    return dataclasses.asdict(report)


def write_iteration_report(report, path) -> None:
    Path(path).write_text(json.dumps(
        {"schema_version": 1, "report": report_to_dict(report)},
        indent=2, sort_keys=True) + "\n")


def write_figure_data(reports, out_dir) -> None:
    """Plot-ready CSVs: tolerance curves, neighbor p-values, cross-iteration
    p-values."""
    out_dir = Path(out_dir)
    with (out_dir / "equilibrium_share_vs_tolerance.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "epsilon", "fraction", "n_symmetric",
                         "n_other"])
        for r in reports:
            for point in r.tolerance_curve:
                writer.writerow([r.index, point["epsilon"], point["fraction"],
                                 point["n_symmetric"], point["n_other"]])
    with (out_dir / "neighbor_p_values.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "player", "p_value"])
        for r in reports:
            for player, ps in r.neighbor_p_values.items():
                for p in ps:
                    writer.writerow([r.index, int(player) + 1, p])
    with (out_dir / "cross_iteration_p_values.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["earlier_iteration", "later_iteration", "p_value"])
        for r in reports:
            for earlier, p in r.cross_iteration_p.items():
                writer.writerow([earlier, r.index, p])


# -- checkpoints -------------------------------------------------------------

def checkpoint_path(out_dir, iteration: int) -> Path:
    return Path(out_dir) / "checkpoints" / f"iteration_{iteration:02d}.json"


def save_checkpoint(out_dir, iteration: int, fingerprint: str, game,
                    report, baseline: dict) -> None:
    path = checkpoint_path(out_dir, iteration)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples = {}
    for (a, b) in game.profiles():
        samples[f"{a},{b}"] = [game.samples((a, b), 0).tolist(),
                               game.samples((a, b), 1).tolist()]
    payload = {
        "schema_version": 1,
        "fingerprint": fingerprint,
        "iteration": iteration,
        "labels": game.space.strategies,
        "baseline": baseline,
        "samples": samples,
        "report": report_to_dict(report),
    }
    path.write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_checkpoint(out_dir, iteration: int, fingerprint: str):
    """Return ``(game, report_dict, baseline)`` or None when absent/stale."""
    path = checkpoint_path(out_dir, iteration)
    if not path.exists():
        return None
    payload = json.loads(path.read_text())
    if payload.get("fingerprint") != fingerprint:
        return None
    labels = payload["labels"]
    space = StrategySpace(labels, labels=[f"s{i}" for i in range(len(labels))])
    game = EmpiricalGame(space)
    for key, (p1, p2) in payload["samples"].items():
        a, b = (int(x) for x in key.split(","))
        game.set_samples((a, b), p1, p2)
    return game, payload["report"], payload["baseline"]


class CheckpointStore:
    """Per-iteration resume files, keyed by the config fingerprint."""

    def __init__(self, out_dir, fingerprint: str):
        self.out_dir = Path(out_dir)
        self.fingerprint = fingerprint

    def load(self, iteration: int):
        return load_checkpoint(self.out_dir, iteration, self.fingerprint)

    def save(self, iteration: int, game, report, baseline: dict) -> None:
        save_checkpoint(self.out_dir, iteration, self.fingerprint, game,
                        report, baseline)
