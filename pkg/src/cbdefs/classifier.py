"""Logistic regression training and ROC-AUC scoring: the wrapper's fitness oracle.

Training is deterministic full-batch gradient descent (zero init, step
halving on loss increase), so the same inputs always give the same model.
The hot loops live in the kernel backend.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from ._kernels_py import lr_loss_grad
from .data import Dataset


class TrainingError(RuntimeError):
    """Training could not proceed (single-class data, non-finite loss/gradient)."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_iters: int = 100
    tolerance: float = 1e-6
    l2: float = 0.0  # optional ridge term, off by default

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.tolerance < 0.0:
            raise ValueError("tolerance must be >= 0")
        if self.l2 < 0.0:
            raise ValueError("l2 must be >= 0")


@dataclass(frozen=True)
class LRModel:
    coef: np.ndarray
    intercept: float
    config: TrainConfig
    n_iters: int
    final_loss: float

    def __post_init__(self):
        if not (np.isfinite(self.coef).all() and np.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")


def train_lr(ds: Dataset, config: TrainConfig = TrainConfig()) -> LRModel:
    """Fit a logistic model on ``ds``; raises TrainingError for single-class data."""
    neg, pos = ds.class_counts()
    if neg == 0 or pos == 0:
        raise TrainingError("training data must contain both classes")
    x = ds.dense_features()
    y = ds.labels.astype(np.float64)
    try:
        coef, intercept, n_iters, loss = backend.lr_train(
            x, y, config.learning_rate, config.max_iters, config.tolerance, config.l2
        )
    except ArithmeticError as exc:
        raise TrainingError(str(exc)) from exc
    return LRModel(coef, float(intercept), config, int(n_iters), float(loss))


def loss_and_gradient(
    ds: Dataset, coef: np.ndarray, intercept: float, l2: float = 0.0
) -> tuple[float, np.ndarray, float]:
    """Logistic loss and its analytic gradient at (coef, intercept)."""
    return lr_loss_grad(ds.dense_features(), ds.labels.astype(np.float64), coef, intercept, l2)


def predict_scores(model: LRModel, ds: Dataset) -> np.ndarray:
    """Per-row sigmoid(intercept + x . coef); values clamped into the open (0, 1)."""
    if ds.n_features != model.coef.shape[0]:
        raise ValueError(
            f"dataset has {ds.n_features} columns but model expects {model.coef.shape[0]}"
        )
    z = ds.dense_features() @ model.coef + model.intercept
    scores = 1.0 / (1.0 + np.exp(-z))
    tiny = np.finfo(np.float64).tiny
    return np.clip(scores, tiny, np.nextafter(1.0, 0.0))


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties at half credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must have equal length")
    return float(backend.rank_auc(scores, labels))
