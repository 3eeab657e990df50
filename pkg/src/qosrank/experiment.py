"""Experiment driver: split, rank, score across users, densities and kinds.

All randomness is derived from the config seed plus trial/user indices, so
reports are reproducible byte for byte; evaluating users in parallel would
produce identical output since every cell owns its seed stream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .allocsim import AllocPolicy, Scenario, load_scenario, scenario_from_dict
from .errors import ConfigError
from .matrix import MetricOrientation, QoSMatrix, SplitSpec, load_matrix, split_train_test
from .metrics import ExperimentReport, ScoreRow, aggregate, kendall_tau_score
from .preference import build_preference_table
from .ranker import RankerKind, Ranking, correct_observed_order, greedy_rank, rank
from .seeding import derive_rng
from .similarity import select_neighbors, similarity_row

_RANDOM_STREAM = 1  # stream tags keep per-purpose RNGs disjoint
_SPLIT_STREAM = 2


@dataclass(frozen=True)
class QoSPerformanceRow:
    """Mean withheld QoS of each user's top-ranked service."""

    density: float
    kind: str
    mean_top1_qos: float
    samples: int


@dataclass(frozen=True)
class ExperimentConfig:
    densities: tuple[float, ...]
    kinds: tuple[RankerKind, ...]
    k_neighbors: int = 10
    active_users: int = 20
    trial_seeds: tuple[int, ...] = tuple(range(100))
    seed: int = 0
    correct_observed: bool = True
    dataset: Path | None = None
    orientation: MetricOrientation = MetricOrientation.LARGER_IS_BETTER
    scenario: Scenario | None = None
    policy: AllocPolicy | None = None  # overrides the scenario's policy

    def __post_init__(self):
        if not self.densities:
            raise ConfigError("at least one density is required")
        for d in self.densities:
            if not 0.0 < d <= 1.0:
                raise ConfigError(f"density {d} outside (0, 1]")
        if not self.kinds:
            raise ConfigError("at least one ranker kind is required")
        if self.k_neighbors < 0:
            raise ConfigError("k_neighbors must be >= 0")
        if self.active_users <= 0:
            raise ConfigError("active_users must be > 0")
        if (self.dataset is None) == (self.scenario is None):
            raise ConfigError("config needs exactly one of dataset or scenario")


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse an experiment config JSON; paths resolve relative to the file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    base_dir = base_dir or Path.cwd()
    try:
        scenario = None
        if "scenario" in raw:
            ref = raw["scenario"]
            scenario = (
                scenario_from_dict(ref)
                if isinstance(ref, dict)
                else load_scenario(base_dir / ref)
            )
        dataset = Path(base_dir / raw["dataset"]) if "dataset" in raw else None
        if "trial_seeds" in raw:
            trial_seeds = tuple(int(s) for s in raw["trial_seeds"])
        else:
            base = int(raw.get("seed", 0))
            trial_seeds = tuple(base + i for i in range(int(raw.get("trials", 100))))
        return ExperimentConfig(
            densities=tuple(float(d) for d in raw["densities"]),
            kinds=tuple(RankerKind.parse(k) for k in raw["kinds"]),
            k_neighbors=int(raw.get("k_neighbors", 10)),
            active_users=int(raw.get("active_users", 20)),
            trial_seeds=trial_seeds,
            seed=int(raw.get("seed", 0)),
            correct_observed=bool(raw.get("correct_observed", True)),
            dataset=dataset,
            orientation=MetricOrientation.parse(
                raw.get("orientation", "larger-is-better")
            ),
            scenario=scenario,
            policy=AllocPolicy.parse(raw["policy"]) if "policy" in raw else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc


def build_matrix(config: ExperimentConfig) -> QoSMatrix:
    if config.dataset is not None:
        return load_matrix(config.dataset, config.orientation)
    matrix, _ = config.scenario.build(policy=config.policy)
    return matrix


def rank_single(config: ExperimentConfig, user: int, kind: RankerKind) -> Ranking:
    """Rank all observed services for one user on the full (unsplit) matrix."""
    matrix = build_matrix(config)
    candidates = matrix.observed_services()
    return rank(
        kind,
        matrix,
        user,
        config.k_neighbors,
        candidates,
        seed=config.seed,
        correct=config.correct_observed,
    )


def run_experiment(
    config: ExperimentConfig,
) -> tuple[ExperimentReport, list[QoSPerformanceRow]]:
    """Score every (density, kind, user, trial) cell of the config.

    The similarity row and preference table of a user are computed once per
    split and shared by both CloudRank variants.
    """
    matrix = build_matrix(config)
    candidates = matrix.observed_services()
    active = tuple(range(min(config.active_users, matrix.num_users)))
    cloudrank_kinds = [k for k in config.kinds if k is not RankerKind.RANDOM_BASELINE]

    rows: list[ScoreRow] = []
    top1: dict[tuple[float, str], list[float]] = {
        (d, k.value): [] for d in config.densities for k in config.kinds
    }

    for density in config.densities:
        dkey = int(round(density * 1000))
        for trial_seed in config.trial_seeds:
            split_seed = int(
                derive_rng(config.seed, _SPLIT_STREAM, trial_seed, dkey).integers(2**63)
            )
            spec = SplitSpec(density=density, seed=split_seed, active_users=active)
            train, truth = split_train_test(matrix, spec)
            for user in active:
                truth_row = truth.row(user)
                rankings: dict[RankerKind, Ranking] = {}
                if cloudrank_kinds:
                    row = similarity_row(train, user)
                    nbrs = select_neighbors(row, config.k_neighbors)
                    table = build_preference_table(train, user, nbrs, candidates)
                    for kind in cloudrank_kinds:
                        r = greedy_rank(table, weighted=kind is RankerKind.CLOUDRANK2)
                        if config.correct_observed:
                            r = correct_observed_order(r, train, user)
                        rankings[kind] = r
                if RankerKind.RANDOM_BASELINE in config.kinds:
                    rankings[RankerKind.RANDOM_BASELINE] = rank(
                        RankerKind.RANDOM_BASELINE,
                        train,
                        user,
                        config.k_neighbors,
                        candidates,
                        seed=int(
                            derive_rng(
                                config.seed, _RANDOM_STREAM, trial_seed, dkey
                            ).integers(2**63)
                        ),
                    )
                for kind in config.kinds:
                    r = rankings[kind]
                    score = kendall_tau_score(r, truth_row)
                    if score is not None:
                        rows.append(
                            ScoreRow(
                                density=density,
                                kind=kind.value,
                                user=user,
                                tau=score.tau,
                                accuracy=score.accuracy,
                                evaluated_pairs=score.evaluated_pairs,
                            )
                        )
                    top = r.order[0]
                    if top in truth_row:
                        top1[(density, kind.value)].append(truth_row[top])

    report = aggregate(rows, trials=len(config.trial_seeds), seeds=config.trial_seeds)
    qos_rows = [
        QoSPerformanceRow(
            density=d,
            kind=k,
            mean_top1_qos=float(np.mean(vals)) if vals else float("nan"),
            samples=len(vals),
        )
        for (d, k), vals in sorted(top1.items())
    ]
    return report, qos_rows


def write_qos_performance_csv(
    qos_rows: Sequence[QoSPerformanceRow], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["density", "kind", "mean_top1_qos", "samples"])
        for r in qos_rows:
            writer.writerow([repr(r.density), r.kind, repr(r.mean_top1_qos), r.samples])
