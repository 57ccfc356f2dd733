"""Multinomial logistic regression trained by batch gradient descent.

This is the in-tree stand-in for heavier fault classifiers: deterministic,
dependency-light, and sufficient to drive every downstream selection and
deployment procedure. Anything that can produce a fitted model satisfying
``Trainer`` can substitute for it.

Training minimizes the L2-regularized mean cross-entropy

    J(W) = -(1/n) sum_i log p(y_i | x_i; W) + ||W_no_bias||^2 / (2 C n)

over standardized features with zero-initialized weights, a fixed learning
rate, and a loss-delta stopping rule. The bias column is not regularized.
C is the inverse regularization strength (default 1000). Constant feature
columns get std 1 so standardization never divides by zero.

Prediction standardizes with the training split's statistics and takes the
argmax class score, ties resolving to the lowest class index. ``evaluate``
can mask features at inference time: a masked column is replaced by its
training-split mean, which standardizes to zero, so the model runs with
that input silenced but is not retrained.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .data import SimDataset
from .errors import (
    EmptyDataset,
    MissingFeature,
    SingleClassData,
    TooFewSamples,
    UnknownFeature,
)
from .metrics import ConfusionMatrix, confusion_matrix

#: Cross-validation grid; brackets the default C of 1000.
DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True)
class TrainingConfig:
    inverse_regularization_C: float = 1000.0
    max_iterations: int = 500
    learning_rate: float = 0.1
    convergence_tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not (self.inverse_regularization_C > 0):
            raise ValueError("inverse_regularization_C must be positive")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not (self.learning_rate > 0):
            raise ValueError("learning_rate must be positive")
        if not (self.convergence_tolerance > 0):
            raise ValueError("convergence_tolerance must be positive")


@dataclass(frozen=True)
class Model:
    """Fitted multinomial logistic model over a named feature subset.

    ``weights[k]`` is class ``classes[k]``'s row: bias first, then one
    coefficient per feature_set entry. ``means``/``stds`` are the training
    split's standardization statistics.
    """

    feature_set: tuple[str, ...]
    classes: tuple[int, ...]
    weights: tuple[tuple[float, ...], ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]
    config: TrainingConfig
    loss_history: tuple[float, ...] = ()


class Trainer(Protocol):
    """Anything that fits a model on (dataset, feature subset, config).

    Implementations must be deterministic: identical inputs, including the
    config seed, must yield identical models.
    """

    def fit(
        self, dataset: SimDataset, feature_set: Sequence[str], config: TrainingConfig
    ) -> Model: ...


def _columns(dataset: SimDataset, feature_set: Sequence[str]) -> np.ndarray:
    """Feature matrix restricted to feature_set, in feature_set order."""
    index = {name: i for i, name in enumerate(dataset.feature_names)}
    cols = []
    for name in feature_set:
        if name not in index:
            raise UnknownFeature(f"feature {name!r} not in dataset")
        cols.append(index[name])
    X = dataset.feature_matrix()
    return X[:, cols] if cols else np.zeros((len(dataset), 0))


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _loss_and_grad(
    W: np.ndarray, design: np.ndarray, onehot: np.ndarray, inverse_C: float
) -> tuple[float, np.ndarray]:
    """Regularized mean cross-entropy and its gradient; bias unregularized."""
    n = design.shape[0]
    probs = _softmax(design @ W.T)
    eps = 1e-300  # probabilities only vanish at extreme weights
    loss = -np.sum(onehot * np.log(probs + eps)) / n
    no_bias = W.copy()
    no_bias[:, 0] = 0.0
    loss += (1.0 / inverse_C) * 0.5 * np.sum(no_bias * no_bias) / n
    grad = (probs - onehot).T @ design / n + (1.0 / inverse_C) * no_bias / n
    return float(loss), grad


def train(
    dataset: SimDataset,
    feature_set: Sequence[str],
    config: TrainingConfig = TrainingConfig(),
) -> Model:
    """Fit by full-batch gradient descent from zero weights.

    Stops when the loss delta falls to convergence_tolerance or at
    max_iterations. Deterministic for identical inputs.
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    y = dataset.labels()
    classes = tuple(sorted(set(int(c) for c in y)))
    if len(classes) < 2:
        raise SingleClassData(f"training data has classes {classes}; need at least 2")

    X = _columns(dataset, feature_set)
    means = X.mean(axis=0) if X.shape[1] else np.zeros(0)
    stds = X.std(axis=0) if X.shape[1] else np.zeros(0)
    stds = np.where(stds == 0.0, 1.0, stds)  # constant columns pass through
    Z = (X - means) / stds
    design = np.hstack([np.ones((len(dataset), 1)), Z])

    class_index = {c: k for k, c in enumerate(classes)}
    onehot = np.zeros((len(dataset), len(classes)))
    onehot[np.arange(len(dataset)), [class_index[int(c)] for c in y]] = 1.0

    W = np.zeros((len(classes), design.shape[1]))
    losses = []
    prev = None
    for _ in range(config.max_iterations):
        loss, grad = _loss_and_grad(W, design, onehot, config.inverse_regularization_C)
        losses.append(loss)
        if prev is not None and abs(prev - loss) <= config.convergence_tolerance:
            break
        W = W - config.learning_rate * grad
        prev = loss

    return Model(
        feature_set=tuple(feature_set),
        classes=classes,
        weights=tuple(tuple(float(v) for v in row) for row in W),
        means=tuple(float(v) for v in means),
        stds=tuple(float(v) for v in stds),
        config=config,
        loss_history=tuple(losses),
    )


@dataclass(frozen=True)
class LogisticTrainer:
    """Default Trainer implementation backed by :func:`train`."""

    def fit(
        self, dataset: SimDataset, feature_set: Sequence[str], config: TrainingConfig
    ) -> Model:
        return train(dataset, feature_set, config)


def _scores(model: Model, Z: np.ndarray) -> np.ndarray:
    design = np.hstack([np.ones((Z.shape[0], 1)), Z])
    return design @ np.array(model.weights).T


def _standardize(model: Model, X: np.ndarray) -> np.ndarray:
    if len(model.feature_set) == 0:
        return np.zeros((X.shape[0], 0))
    return (X - np.array(model.means)) / np.array(model.stds)


def predict(model: Model, features: Mapping[str, float]) -> int:
    """Class for one feature-value map; ties go to the lowest class index."""
    row = []
    for name in model.feature_set:
        if name not in features:
            raise MissingFeature(f"input lacks feature {name!r}")
        row.append(float(features[name]))
    Z = _standardize(model, np.array([row]) if row else np.zeros((1, 0)))
    scores = _scores(model, Z)[0]
    return model.classes[int(np.argmax(scores))]


@dataclass(frozen=True)
class EvaluationResult:
    predictions: tuple[int, ...]
    accuracy: float
    matrix: ConfusionMatrix


def evaluate(
    model: Model, dataset: SimDataset, masked_features: Iterable[str] = ()
) -> EvaluationResult:
    """Predictions, accuracy, and confusion matrix on a dataset split.

    ``masked_features`` are silenced at inference time: their columns are
    pinned to the model's training means (standardized zero) without
    retraining.
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot evaluate on an empty dataset")
    masked = set(masked_features)
    unknown = masked - set(model.feature_set)
    if unknown:
        raise UnknownFeature(f"masked features {sorted(unknown)} not in model")
    X = _columns(dataset, model.feature_set)
    Z = _standardize(model, X)
    if masked:
        idx = [i for i, name in enumerate(model.feature_set) if name in masked]
        Z[:, idx] = 0.0
    scores = _scores(model, Z)
    pred_rows = np.argmax(scores, axis=1)
    preds = tuple(model.classes[int(k)] for k in pred_rows)
    y = dataset.labels()
    accuracy = float(np.mean([p == t for p, t in zip(preds, y)]))
    num_classes = int(max(max(model.classes), int(y.max()))) + 1
    matrix = confusion_matrix(list(y), list(preds), num_classes)
    return EvaluationResult(predictions=preds, accuracy=accuracy, matrix=matrix)


@dataclass(frozen=True)
class CrossValidationResult:
    best_C: float
    mean_accuracies: tuple[tuple[float, float], ...]  # (C, mean accuracy) pairs

    def accuracy_for(self, C: float) -> float:
        for c, acc in self.mean_accuracies:
            if c == C:
                return acc
        raise KeyError(f"C {C!r} was not evaluated")


def _subset(dataset: SimDataset, indices: np.ndarray) -> SimDataset:
    return SimDataset(
        feature_names=dataset.feature_names,
        records=tuple(dataset.records[int(i)] for i in indices),
    )


def cross_validate(
    dataset: SimDataset,
    candidate_Cs: Sequence[float] = DEFAULT_C_GRID,
    k: int = 5,
    feature_set: Sequence[str] | None = None,
    config: TrainingConfig = TrainingConfig(),
) -> CrossValidationResult:
    """Pick the inverse regularization strength by k-fold accuracy.

    Folds are contiguous slices of a seeded shuffle, so the partition is
    deterministic for a given config seed. Ties prefer the smaller C.
    """
    if not candidate_Cs:
        raise ValueError("candidate_Cs must be nonempty")
    n = len(dataset)
    if k < 2 or n < k:
        raise TooFewSamples(f"need at least k={k} samples with k >= 2, have {n}")
    if feature_set is None:
        feature_set = dataset.feature_names

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    bounds = [i * n // k for i in range(k + 1)]

    results = []
    for C in candidate_Cs:
        fold_accs = []
        for i in range(k):
            val_idx = perm[bounds[i] : bounds[i + 1]]
            train_idx = np.concatenate([perm[: bounds[i]], perm[bounds[i + 1] :]])
            model = train(
                _subset(dataset, train_idx),
                feature_set,
                replace(config, inverse_regularization_C=float(C)),
            )
            fold_accs.append(evaluate(model, _subset(dataset, val_idx)).accuracy)
        results.append((float(C), float(np.mean(fold_accs))))

    best_C = max(results, key=lambda pair: (pair[1], -pair[0]))[0]
    return CrossValidationResult(best_C=best_C, mean_accuracies=tuple(results))


# ------------------------------------------------------------- serialization


def model_to_doc(model: Model) -> dict:
    """JSON-ready document capturing everything needed to re-run the model."""
    return {
        "feature_set": list(model.feature_set),
        "classes": list(model.classes),
        "weights": [list(row) for row in model.weights],
        "standardization": {"means": list(model.means), "stds": list(model.stds)},
        "config": {
            "inverse_regularization_C": model.config.inverse_regularization_C,
            "max_iterations": model.config.max_iterations,
            "learning_rate": model.config.learning_rate,
            "convergence_tolerance": model.config.convergence_tolerance,
            "seed": model.config.seed,
        },
    }


def model_from_doc(doc: Mapping) -> Model:
    cfg = doc["config"]
    return Model(
        feature_set=tuple(doc["feature_set"]),
        classes=tuple(int(c) for c in doc["classes"]),
        weights=tuple(tuple(float(v) for v in row) for row in doc["weights"]),
        means=tuple(float(v) for v in doc["standardization"]["means"]),
        stds=tuple(float(v) for v in doc["standardization"]["stds"]),
        config=TrainingConfig(
            inverse_regularization_C=cfg["inverse_regularization_C"],
            max_iterations=cfg["max_iterations"],
            learning_rate=cfg["learning_rate"],
            convergence_tolerance=cfg["convergence_tolerance"],
            seed=cfg["seed"],
        ),
    )
