"""Shared test utilities: scripted draw sources, stub fitness evaluators, and an
independent straight-line simulator of one island generation (the trace oracle).
"""
import hashlib

import numpy as np

from cbdefs.chaos import logistic_map, seed_state, sequence
from cbdefs.data import Dataset
from cbdefs.evolution import Population


class ScriptedSource:
    """Draw source returning prerecorded integers/floats, numpy-Generator style."""

    def __init__(self, ints=(), floats=()):
        self._ints = list(ints)
        self._floats = list(floats)

    def integers(self, high):
        value = self._ints.pop(0)
        assert 0 <= value < high, f"scripted integer {value} out of range [0, {high})"
        return value

    def random(self, size=None):
        if size is None:
            return self._floats.pop(0)
        return np.asarray([self._floats.pop(0) for _ in range(size)])

    @property
    def exhausted(self):
        return not self._ints and not self._floats


def hash_fitness(mask_bits) -> float:
    """Deterministic pseudo-random fitness in [0, 1), quantized to force ties."""
    digest = hashlib.sha256(bytes(mask_bits)).digest()
    return (int.from_bytes(digest[:8], "big") % 10) / 10.0


def table_evaluator(fitness_fn):
    """Stub evaluator writing fitness (and a placeholder AUC) from a lookup."""

    def evaluate_stub(pop):
        for m in pop.members:
            if m.fitness is None:
                m.fitness = fitness_fn(tuple(int(b) for b in m.mask))
                m.auc = m.fitness
        return pop

    return evaluate_stub


def simulate_generations(masks, m_gen, mf, cr, fitness_fn, rng, chaos_seed_draw=None):
    """Independent replay of the island generation loop over plain bit lists.

    Mirrors the documented draw protocol: per member, s1 (redrawn while == i),
    s2 (redrawn while in {i, s1}), forced index, N crossover draws (from the
    logistic stream when ``chaos_seed_draw`` is given, else from ``rng``), and
    one rng draw on repair.  Selection keeps the parent only if strictly
    fitter.
    """
    masks = [list(m) for m in masks]
    n = len(masks[0])
    size = len(masks)
    chaos_state = None
    if chaos_seed_draw is not None:
        chaos_state = seed_state(logistic_map(), chaos_seed_draw)

    for _ in range(m_gen):
        fits = [fitness_fn(tuple(m)) for m in masks]
        best_i = min(range(size), key=lambda i: (-fits[i], sum(masks[i]), i))
        best = masks[best_i]
        trials = []
        for i in range(size):
            s1 = int(rng.integers(size))
            while s1 == i:
                s1 = int(rng.integers(size))
            s2 = int(rng.integers(size))
            while s2 == i or s2 == s1:
                s2 = int(rng.integers(size))
            forced = int(rng.integers(n))
            mutant = [
                1 if best[j] + mf * (masks[s1][j] - masks[s2][j]) >= 0.5 else 0
                for j in range(n)
            ]
            if chaos_state is not None:
                draws, chaos_state = sequence(chaos_state, n)
            else:
                draws = [float(rng.random()) for _ in range(n)]
            trial = [
                mutant[j] if (draws[j] < cr or j == forced) else masks[i][j] for j in range(n)
            ]
            if sum(trial) == 0:
                idx = min(int(rng.random() * n), n - 1)
                trial = [0] * n
                trial[idx] = 1
            trials.append(trial)
        new_masks = []
        for i in range(size):
            parent_fit = fitness_fn(tuple(masks[i]))
            trial_fit = fitness_fn(tuple(trials[i]))
            new_masks.append(masks[i] if parent_fit > trial_fit else trials[i])
        masks = new_masks
    return masks


def tiny_dataset(n_rows=12, n_features=4, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_rows, n_features))
    labels = np.zeros(n_rows, dtype=np.int8)
    labels[: n_rows // 2] = 1
    return Dataset(x, labels)


def population_masks(pop: Population):
    return [tuple(int(b) for b in m.mask) for m in pop.members]
