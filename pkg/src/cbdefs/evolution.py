"""Binary DE/best/1/bin variation operators and the per-island generation loop.

Genomes are fixed-length 0/1 uint8 vectors over the dataset's feature
columns.  Mutation builds a real vector around the population best,
``best + MF * (s1 - s2)``, binarized by thresholding at 0.5; binomial
crossover inherits the mutant bit where the draw falls below CR or at the
forced index; selection keeps the parent only on a strictly better fitness,
so ties go to the trial.  Draws come either from a ``numpy.random.Generator``
or from a chaotic stream, which is the only difference between the plain and
chaotic variants.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .classifier import LRModel, TrainConfig, auc as auc_score, predict_scores, train_lr
from .data import Dataset, project


def make_mask(bits) -> np.ndarray:
    """Normalize to the canonical uint8 0/1 genome array."""
    mask = np.asarray(bits, dtype=np.uint8)
    if mask.ndim != 1:
        raise ValueError("a feature mask must be 1-D")
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("a feature mask holds only 0/1 bits")
    return mask


def popcount(mask: np.ndarray) -> int:
    return int(mask.sum())


def mask_to_hex(mask: np.ndarray) -> str:
    return np.packbits(mask).tobytes().hex()


def hex_to_mask(hex_bits: str, n_features: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(hex_bits), dtype=np.uint8)
    return np.unpackbits(raw)[:n_features]


@dataclass
class Individual:
    """One keyed population record: genome plus its trained-model fields.

    ``model``, ``auc`` and ``fitness`` are set together by evaluation and are
    otherwise all None.
    """

    key: int
    mask: np.ndarray
    model: LRModel | None = None
    auc: float | None = None
    fitness: float | None = None

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None

    @property
    def cardinality(self) -> int:
        return popcount(self.mask)

    def clone(self, key: int | None = None) -> "Individual":
        return replace(self, key=self.key if key is None else key)


@dataclass
class Population:
    members: list[Individual]
    n_features: int

    def __post_init__(self):
        keys = [m.key for m in self.members]
        if len(set(keys)) != len(keys):
            raise ValueError("population keys must be unique")
        for m in self.members:
            if m.mask.shape[0] != self.n_features:
                raise ValueError(f"member {m.key}: mask length != {self.n_features}")

    def __len__(self) -> int:
        return len(self.members)


def rank_key(ind: Individual):
    """Total order used everywhere a best/sort is needed: fitness descending,
    then fewer features, then lower key."""
    return (-ind.fitness, ind.cardinality, ind.key)


def best_member(pop: Population) -> Individual:
    return min(pop.members, key=rank_key)


@dataclass
class OperatorParams:
    """Variation-operator settings; ``chaos`` holds the island's crossover stream."""

    mf: float
    cr: float
    mode: str = "random"  # "random" | "chaotic"
    chaos: object | None = None  # ChaosStream when chaotic

    def __post_init__(self):
        if not 0.0 < self.mf <= 1.0:
            raise ValueError("mf must lie in (0, 1]")
        if not 0.0 < self.cr <= 1.0:
            raise ValueError("cr must lie in (0, 1]")
        if self.mode == "chaotic":
            if self.chaos is None:
                raise ValueError("chaotic mode needs a chaos stream")
        elif self.mode == "random":
            if self.chaos is not None:
                raise ValueError("random mode must not carry a chaos stream")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")


class EvalCounter:
    """Counts classifier trainings; islands each own one, the driver sums them."""

    def __init__(self):
        self.n = 0


def fitness_score(auc: float, cardinality: int, n_features: int) -> float:
    """Multiplicative objective: AUC scaled by the unselected-feature fraction."""
    if not 1 <= cardinality <= n_features:
        raise ValueError(f"cardinality must lie in [1, {n_features}], got {cardinality}")
    return auc * (1.0 - cardinality / n_features)


def repair(mask: np.ndarray, source) -> np.ndarray:
    """Give an all-zero mask exactly one set bit, at floor(draw * N)."""
    if mask.any():
        return mask
    n = mask.shape[0]
    idx = min(int(source.random() * n), n - 1)
    fixed = np.zeros(n, dtype=np.uint8)
    fixed[idx] = 1
    return fixed


def init_population(ps: int, n_features: int, mode: str, source) -> Population:
    """Draw ps*N bits from ``source`` (bit = draw < 0.5), repairing empty masks.

    Draws are consumed individual-major; an individual's repair draw, if any,
    follows its own N bit draws.  ``source`` is a Generator or ChaosStream.
    """
    if ps < 1:
        raise ValueError("ps must be >= 1")
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    if mode not in ("random", "chaotic"):
        raise ValueError(f"unknown mode {mode!r}")
    members = []
    for key in range(ps):
        draws = np.asarray(source.random(n_features))
        mask = (draws < 0.5).astype(np.uint8)
        mask = repair(mask, source)
        members.append(Individual(key=key, mask=mask))
    return Population(members, n_features)


def mutate(
    best: np.ndarray,
    s1: np.ndarray,
    s2: np.ndarray,
    mf: float,
    *,
    binarize: str = "threshold",
    rng=None,
) -> np.ndarray:
    """DE/best/1 mutant: binarized best + mf * (s1 - s2).

    The default binarization thresholds the real vector at 0.5; the opt-in
    "sigmoid" rule instead sets each bit with probability sigmoid(v), which
    needs ``rng``.  The result is not yet repaired.
    """
    if not (best.shape == s1.shape == s2.shape):
        raise ValueError("mask lengths must match")
    v = best.astype(np.float64) + mf * (s1.astype(np.float64) - s2.astype(np.float64))
    if binarize == "threshold":
        return (v >= 0.5).astype(np.uint8)
    if binarize == "sigmoid":
        if rng is None:
            raise ValueError("sigmoid binarization needs an rng")
        probs = 1.0 / (1.0 + np.exp(-v))
        return (np.asarray(rng.random(v.shape[0])) < probs).astype(np.uint8)
    raise ValueError(f"unknown binarization {binarize!r}")


def crossover(
    parent: np.ndarray, mutant: np.ndarray, cr: float, source, forced_index: int
) -> np.ndarray:
    """Binomial crossover: mutant bit where draw_j < cr or j is forced.

    Exactly N draws are consumed from ``source`` in index order regardless of
    the forced index, so a chaotic stream advances by N steps per call.
    """
    if parent.shape != mutant.shape:
        raise ValueError("mask lengths must match")
    n = parent.shape[0]
    if not 0 <= forced_index < n:
        raise ValueError(f"forced_index {forced_index} out of range [0, {n})")
    draws = np.asarray(source.random(n))
    take_mutant = draws < cr
    take_mutant[forced_index] = True
    return np.where(take_mutant, mutant, parent).astype(np.uint8)


def select(parent: Individual, trial: Individual) -> Individual:
    """Keep the parent only when strictly fitter; ties go to the trial."""
    if not (parent.evaluated and trial.evaluated):
        raise ValueError("selection requires evaluated individuals")
    return parent if parent.fitness > trial.fitness else trial


def evaluate(
    pop: Population,
    shard_data: Dataset,
    lr_config: TrainConfig = TrainConfig(),
    counter: EvalCounter | None = None,
) -> Population:
    """Train-and-update: fill model/AUC/fitness for every unevaluated member.

    Members already evaluated are left untouched.  Fitness is always written
    as fitness_score(auc, popcount, N), so it stays recomputable.  Classifier
    errors propagate tagged with the offending key.
    """
    n = pop.n_features
    for member in pop.members:
        if member.evaluated:
            continue
        try:
            projected = project(shard_data, member.mask)
            model = train_lr(projected, lr_config)
            scores = predict_scores(model, projected)
            member_auc = auc_score(scores, projected.labels)
        except (ValueError, RuntimeError) as exc:
            raise type(exc)(f"evaluating individual {member.key}: {exc}") from exc
        if counter is not None:
            counter.n += 1
        member.model = model
        member.auc = member_auc
        member.fitness = fitness_score(member_auc, member.cardinality, n)
    return pop


def evolve_island(
    local_pop: Population,
    shard_data: Dataset | None,
    m_gen: int,
    params: OperatorParams,
    lr_config: TrainConfig,
    rng,
    counter: EvalCounter | None = None,
    evaluate_fn=None,
) -> Population:
    """Run ``m_gen`` synchronous DE generations on one island.

    Per generation: the best member is fixed once; then for each member i, in
    order, the draws are (1) s1 index, redrawn while == i, (2) s2 index,
    redrawn while in {i, s1}, (3) the forced crossover index, (4) N crossover
    draws from the chaos stream in chaotic mode or from ``rng`` otherwise,
    (5) one ``rng`` draw if the trial needs repair.  The offspring population
    is evaluated on the shard, then parent and trial compete pairwise by key.

    ``evaluate_fn(pop)`` replaces the classifier-backed evaluation when given
    (used with stub fitness tables in tests).
    """
    size = len(local_pop)
    if size < 4:
        raise ValueError("an island population needs at least 4 members")

    if evaluate_fn is None:
        def evaluate_fn(p):
            return evaluate(p, shard_data, lr_config, counter)

    pop = evaluate_fn(local_pop)
    n = pop.n_features
    for _ in range(m_gen):
        best = best_member(pop)
        offspring = []
        for i, parent in enumerate(pop.members):
            s1 = int(rng.integers(size))
            while s1 == i:
                s1 = int(rng.integers(size))
            s2 = int(rng.integers(size))
            while s2 == i or s2 == s1:
                s2 = int(rng.integers(size))
            mutant = mutate(best.mask, pop.members[s1].mask, pop.members[s2].mask, params.mf)
            forced = int(rng.integers(n))
            draw_source = params.chaos if params.mode == "chaotic" else rng
            trial_mask = crossover(parent.mask, mutant, params.cr, draw_source, forced)
            trial_mask = repair(trial_mask, rng)
            offspring.append(Individual(key=parent.key, mask=trial_mask))
        trial_pop = evaluate_fn(Population(offspring, n))
        pop = Population(
            [select(p, t) for p, t in zip(pop.members, trial_pop.members)], n
        )
    return pop
