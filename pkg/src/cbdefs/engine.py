"""Island-model driver: parallel island rounds, migration barrier, test scoring.

One run: initialize the global population (random or chaotic per variant),
evaluate it once on the full training set, shard the training data, then for
each migration round let every island sample a local population, evolve it on
its own shard, and pool the evolved locals with the never-sampled leftovers;
the top ps survive.  All randomness is derived per (island, round) from the
master seed, so results are identical at any thread count.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np

from . import chaos
from .classifier import TrainConfig, auc as auc_score, predict_scores, train_lr
from .data import Dataset, project, shard as make_shards
from .evolution import (
    EvalCounter,
    Individual,
    OperatorParams,
    Population,
    best_member,
    evaluate,
    evolve_island,
    hex_to_mask,
    init_population,
    mask_to_hex,
    rank_key,
)

VARIANTS = ("bde", "cbde-lm", "cbde-tm")

# Seed-derivation domains; fixed values keep derived streams disjoint.
_DOMAIN_INIT = 0
_DOMAIN_SHARD = 1
_DOMAIN_ISLAND = 2


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class EngineConfig:
    ps: int
    lps: int
    k_islands: int
    m_mig: int
    m_gen: int
    mf: float
    cr: float
    variant: str
    master_seed: int
    threads: int | None = None  # None = min(k_islands, cpu count)
    lr: TrainConfig = TrainConfig()
    dedup_masks: bool = False
    retrain_final: bool = False

    def validate(self) -> None:
        if self.lps >= self.ps:
            raise ConfigError(f"lps must be smaller than ps (lps={self.lps}, ps={self.ps})")
        if self.lps < 4:
            raise ConfigError(f"lps must be >= 4, got {self.lps}")
        if self.k_islands < 1:
            raise ConfigError(f"k_islands must be >= 1, got {self.k_islands}")
        if self.m_mig < 1:
            raise ConfigError(f"m_mig must be >= 1, got {self.m_mig}")
        if self.m_gen < 0:
            raise ConfigError(f"m_gen must be >= 0, got {self.m_gen}")
        if not 0.0 < self.mf <= 1.0:
            raise ConfigError(f"mf must lie in (0, 1], got {self.mf}")
        if not 0.0 < self.cr <= 1.0:
            raise ConfigError(f"cr must lie in (0, 1], got {self.cr}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def chaos_map(self) -> chaos.ChaosMap | None:
        if self.variant == "cbde-lm":
            return chaos.logistic_map()
        if self.variant == "cbde-tm":
            return chaos.tent_map()
        return None

    def to_dict(self) -> dict:
        return {
            "ps": self.ps,
            "lps": self.lps,
            "k_islands": self.k_islands,
            "m_mig": self.m_mig,
            "m_gen": self.m_gen,
            "mf": self.mf,
            "cr": self.cr,
            "variant": self.variant,
            "master_seed": self.master_seed,
            "threads": self.threads,
            "lr_learning_rate": self.lr.learning_rate,
            "lr_max_iters": self.lr.max_iters,
            "lr_tolerance": self.lr.tolerance,
            "lr_l2": self.lr.l2,
            "dedup_masks": self.dedup_masks,
            "retrain_final": self.retrain_final,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EngineConfig":
        return cls(
            ps=d["ps"],
            lps=d["lps"],
            k_islands=d["k_islands"],
            m_mig=d["m_mig"],
            m_gen=d["m_gen"],
            mf=d["mf"],
            cr=d["cr"],
            variant=d["variant"],
            master_seed=d["master_seed"],
            threads=d.get("threads"),
            lr=TrainConfig(
                learning_rate=d.get("lr_learning_rate", 0.1),
                max_iters=d.get("lr_max_iters", 100),
                tolerance=d.get("lr_tolerance", 1e-6),
                l2=d.get("lr_l2", 0.0),
            ),
            dedup_masks=d.get("dedup_masks", False),
            retrain_final=d.get("retrain_final", False),
        )


@dataclass
class MigrationRecord:
    migration_index: int
    best_fitness: float
    best_mask_hex: str
    best_popcount: int
    population_size: int


@dataclass
class MemberReport:
    key: int
    mask_hex: str
    popcount: int
    fitness: float
    train_auc: float
    test_auc: float
    coef: list[float]
    intercept: float


@dataclass
class RunReport:
    variant: str
    config: dict
    dataset_info: dict
    n_features: int
    migrations: list[MigrationRecord]
    final_population: list[MemberReport]
    n_trainings: int
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "config": self.config,
            "dataset_info": self.dataset_info,
            "n_features": self.n_features,
            "migrations": [vars(m).copy() for m in self.migrations],
            "final_population": [
                {
                    "key": m.key,
                    "mask_hex": m.mask_hex,
                    "popcount": m.popcount,
                    "fitness": m.fitness,
                    "train_auc": m.train_auc,
                    "test_auc": m.test_auc,
                    "coef": m.coef,
                    "intercept": m.intercept,
                }
                for m in self.final_population
            ],
            "n_trainings": self.n_trainings,
            "timings": self.timings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            variant=d["variant"],
            config=d["config"],
            dataset_info=d["dataset_info"],
            n_features=d["n_features"],
            migrations=[MigrationRecord(**m) for m in d["migrations"]],
            final_population=[MemberReport(**m) for m in d["final_population"]],
            n_trainings=d["n_trainings"],
            timings=d["timings"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "RunReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def comparable_dict(report: RunReport) -> dict:
    """Report content with scheduling-only fields (timings, thread count)
    removed, for equality checks across thread counts."""
    d = report.to_dict()
    d.pop("timings")
    d["config"] = {k: v for k, v in d["config"].items() if k != "threads"}
    return d


def _derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, *key)))


def _derived_seed(master_seed: int, *key: int) -> int:
    return int(np.random.SeedSequence((master_seed, *key)).generate_state(1)[0])


def migrate(island_populations: list[Population], ps: int, dedup_masks: bool = False) -> Population:
    """Pool populations, sort by fitness (ties: fewer features, lower key),
    keep the top ps, and reassign keys 0..ps-1.

    With ``dedup_masks`` the sweep skips repeated masks, falling back to the
    skipped ones in sorted order if fewer than ps distinct masks exist.
    """
    pool: list[Individual] = []
    for pop in island_populations:
        for m in pop.members:
            if not m.evaluated:
                raise ValueError(f"migration requires evaluated members (key {m.key})")
            pool.append(m)
    if len(pool) < ps:
        raise ValueError(f"cannot select {ps} members from a pool of {len(pool)}")
    pool.sort(key=rank_key)
    if dedup_masks:
        seen: set[bytes] = set()
        kept, skipped = [], []
        for m in pool:
            raw = m.mask.tobytes()
            if raw in seen:
                skipped.append(m)
            else:
                seen.add(raw)
                kept.append(m)
        pool = kept + skipped
    survivors = [m.clone(key=i) for i, m in enumerate(pool[:ps])]
    n = island_populations[0].n_features
    return Population(survivors, n)


def evaluate_test(pop: Population, test: Dataset) -> list[tuple[int, float]]:
    """Score every member's stored coefficients on the test set (no retraining)."""
    results = []
    for m in pop.members:
        if m.model is None:
            raise ValueError(f"individual {m.key} has no stored coefficients")
        projected = project(test, m.mask)
        scores = predict_scores(m.model, projected)
        results.append((m.key, auc_score(scores, projected.labels)))
    return results


def _evaluate_chunk(members: list[Individual], data: Dataset, lr_config: TrainConfig) -> int:
    if not members:
        return 0
    counter = EvalCounter()
    evaluate(Population(members, data.n_features), data, lr_config, counter)
    return counter.n


def _island_round(
    island_id: int,
    round_idx: int,
    config: EngineConfig,
    global_pop: Population,
    shard_data: Dataset,
):
    """One island's work inside a migration round; owns all its randomness."""
    rng = _derived_rng(config.master_seed, _DOMAIN_ISLAND, round_idx, island_id)
    picked = rng.choice(config.ps, size=config.lps, replace=False)
    local = Population([global_pop.members[int(i)].clone() for i in picked], global_pop.n_features)
    cmap = config.chaos_map()
    if cmap is None:
        params = OperatorParams(mf=config.mf, cr=config.cr, mode="random")
    else:
        stream = chaos.ChaosStream(chaos.seed_state(cmap, float(rng.random())))
        params = OperatorParams(mf=config.mf, cr=config.cr, mode="chaotic", chaos=stream)
    counter = EvalCounter()
    t0 = time.perf_counter()
    evolved = evolve_island(local, shard_data, config.m_gen, params, config.lr, rng, counter)
    elapsed = time.perf_counter() - t0
    return evolved, set(int(i) for i in picked), counter.n, elapsed


def run(config: EngineConfig, train: Dataset, test: Dataset, dataset_info: dict | None = None) -> RunReport:
    """Execute one full island-model optimization; see the module docstring.

    The report is a pure function of (config, train, test): per-island RNG and
    chaos streams are derived from (master_seed, round, island), and the
    migration barrier is synchronous, so thread count only affects timings.
    """
    config.validate()
    t_start = time.perf_counter()
    n = train.n_features

    init_rng = _derived_rng(config.master_seed, _DOMAIN_INIT)
    cmap = config.chaos_map()
    if cmap is None:
        pop = init_population(config.ps, n, "random", init_rng)
    else:
        stream = chaos.ChaosStream(chaos.seed_state(cmap, float(init_rng.random())))
        pop = init_population(config.ps, n, "chaotic", stream)

    counter = EvalCounter()
    shards = make_shards(train, config.k_islands, _derived_seed(config.master_seed, _DOMAIN_SHARD))

    threads = config.threads or min(config.k_islands, os.cpu_count() or 1)
    migrations: list[MigrationRecord] = []
    per_migration_s: list[float] = []
    per_island_s: list[list[float]] = []

    with ThreadPoolExecutor(max_workers=threads) as pool_exec:
        # Initial evaluation on the full training set; members are independent,
        # so spreading them over the workers cannot change the result.
        init_futures = [
            pool_exec.submit(_evaluate_chunk, pop.members[w::threads], train, config.lr)
            for w in range(threads)
        ]
        counter.n += sum(f.result() for f in init_futures)

        for r in range(config.m_mig):
            t_round = time.perf_counter()
            futures = [
                pool_exec.submit(_island_round, i, r, config, pop, shards[i].subset)
                for i in range(config.k_islands)
            ]
            outcomes = [f.result() for f in futures]
            evolved = [out[0] for out in outcomes]
            sampled: set[int] = set()
            island_times = []
            for out in outcomes:
                sampled |= out[1]
                counter.n += out[2]
                island_times.append(out[3])
            leftovers = [m for i, m in enumerate(pop.members) if i not in sampled]
            pools = list(evolved)
            if leftovers:
                pools.append(Population(leftovers, n))
            pop = migrate(pools, config.ps, config.dedup_masks)
            best = best_member(pop)
            migrations.append(
                MigrationRecord(
                    r, best.fitness, mask_to_hex(best.mask), best.cardinality, len(pop.members)
                )
            )
            per_island_s.append(island_times)
            per_migration_s.append(time.perf_counter() - t_round)

    if config.retrain_final:
        for m in pop.members:
            projected = project(train, m.mask)
            m.model = train_lr(projected, config.lr)
            counter.n += 1

    test_aucs = dict(evaluate_test(pop, test))
    final = [
        MemberReport(
            key=m.key,
            mask_hex=mask_to_hex(m.mask),
            popcount=m.cardinality,
            fitness=m.fitness,
            train_auc=m.auc,
            test_auc=test_aucs[m.key],
            coef=[float(c) for c in m.model.coef],
            intercept=float(m.model.intercept),
        )
        for m in pop.members
    ]
    return RunReport(
        variant=config.variant,
        config=config.to_dict(),
        dataset_info=dataset_info or {},
        n_features=n,
        migrations=migrations,
        final_population=final,
        n_trainings=counter.n,
        timings={
            "total_seconds": time.perf_counter() - t_start,
            "per_migration_seconds": per_migration_s,
            "per_island_seconds": per_island_s,
        },
    )


def best_entry(report: RunReport) -> MemberReport:
    """The report's best final member under the shared ordering."""
    return min(
        report.final_population, key=lambda m: (-m.fitness, m.popcount, m.key)
    )


def final_mask(report: RunReport, member: MemberReport) -> np.ndarray:
    return hex_to_mask(member.mask_hex, report.n_features)
