"""Confusion matrices, classification metrics, and the multiclass-to-binary
collapse that turns a fault classifier into a warning-signal channel.

Metric definitions: precision = TP/(TP+FP), recall = TP/(TP+FN),
f1 = TP/(TP + (FP+FN)/2), accuracy = (TP+TN)/total. A metric whose
denominator is zero is defined as 0, which keeps reports total. Multi-class
reports average the one-vs-rest per-class values weighted by true-class
support.

A multi-class matrix collapses to binary counts by treating "predicted
class != normal" as the warning signal and "true class != normal" as the
fault. The collapsed counts then yield a channel estimate

    p(signal | fault)    = (tp + s) / (tp + fn + 2s)
    p(signal | no fault) = (fp + s) / (fp + tn + 2s)

with Laplace smoothing s (default 1), so small validation splits with empty
cells still produce proper probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .decision import BinarySensorChannel, Priors
from .errors import (
    DegenerateCounts,
    EmptyCounts,
    EmptySequence,
    LabelOutOfRange,
    LengthMismatch,
)


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion counts; rows of the 2x2 matrix flattened to fields."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if int(v) != v or int(v) < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count grid; rows index the true class, columns the predicted."""

    num_classes: int
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if int(self.num_classes) != self.num_classes or self.num_classes < 1:
            raise ValueError(f"num_classes must be a positive integer, got {self.num_classes!r}")
        object.__setattr__(self, "num_classes", int(self.num_classes))
        rows = tuple(tuple(int(c) for c in row) for row in self.counts)
        if len(rows) != self.num_classes or any(len(r) != self.num_classes for r in rows):
            raise ValueError(
                f"counts must be a {self.num_classes}x{self.num_classes} grid"
            )
        for row in rows:
            for c in row:
                if c < 0:
                    raise ValueError(f"counts must be nonnegative, got {c}")
        object.__setattr__(self, "counts", rows)

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


@dataclass(frozen=True)
class PerClassMetrics:
    class_index: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    per_class: tuple[PerClassMetrics, ...] | None = None


def _ratio(num: float, den: float) -> float:
    """Zero-denominator convention: an undefined metric is 0."""
    return num / den if den > 0 else 0.0


def confusion_matrix(
    true_labels: Sequence[int], predicted_labels: Sequence[int], num_classes: int
) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a num_classes x num_classes grid."""
    if len(true_labels) != len(predicted_labels):
        raise LengthMismatch(
            f"label sequences differ in length: {len(true_labels)} vs {len(predicted_labels)}"
        )
    if len(true_labels) == 0:
        raise LengthMismatch("label sequences must be nonempty")
    grid = [[0] * num_classes for _ in range(num_classes)]
    for t, p in zip(true_labels, predicted_labels):
        t, p = int(t), int(p)
        if not (0 <= t < num_classes):
            raise LabelOutOfRange(f"true label {t} outside [0, {num_classes})")
        if not (0 <= p < num_classes):
            raise LabelOutOfRange(f"predicted label {p} outside [0, {num_classes})")
        grid[t][p] += 1
    return ConfusionMatrix(num_classes=num_classes, counts=tuple(tuple(r) for r in grid))


def binary_metrics(counts: ConfusionCounts) -> MetricsReport:
    """Precision, recall, f1, accuracy from binary counts."""
    if counts.total == 0:
        raise EmptyCounts("confusion counts are all zero")
    return MetricsReport(
        precision=_ratio(counts.tp, counts.tp + counts.fp),
        recall=_ratio(counts.tp, counts.tp + counts.fn),
        f1=_ratio(counts.tp, counts.tp + 0.5 * (counts.fp + counts.fn)),
        accuracy=_ratio(counts.tp + counts.tn, counts.total),
    )


def weighted_metrics(matrix: ConfusionMatrix) -> MetricsReport:
    """Support-weighted one-vs-rest averages plus overall accuracy."""
    total = matrix.total
    if total == 0:
        raise EmptyCounts("confusion matrix is all zero")
    per_class = []
    w_precision = w_recall = w_f1 = 0.0
    for i in range(matrix.num_classes):
        tp = matrix.counts[i][i]
        support = sum(matrix.counts[i])
        fn = support - tp
        fp = sum(matrix.counts[r][i] for r in range(matrix.num_classes)) - tp
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        f1 = _ratio(tp, tp + 0.5 * (fp + fn))
        per_class.append(
            PerClassMetrics(
                class_index=i, precision=precision, recall=recall, f1=f1, support=support
            )
        )
        w_precision += support * precision
        w_recall += support * recall
        w_f1 += support * f1
    trace = sum(matrix.counts[i][i] for i in range(matrix.num_classes))
    return MetricsReport(
        precision=w_precision / total,
        recall=w_recall / total,
        f1=w_f1 / total,
        accuracy=trace / total,
        per_class=tuple(per_class),
    )


def collapse_to_binary(matrix: ConfusionMatrix, normal_class: int = 0) -> ConfusionCounts:
    """Fold a multi-class matrix into fault-vs-normal signal counts.

    A sample counts as positive truth when its true class differs from
    ``normal_class`` and as a raised signal when its predicted class does.
    """
    if not (0 <= normal_class < matrix.num_classes):
        raise LabelOutOfRange(
            f"normal_class {normal_class} outside [0, {matrix.num_classes})"
        )
    tp = fp = fn = tn = 0
    for i in range(matrix.num_classes):
        for j in range(matrix.num_classes):
            c = matrix.counts[i][j]
            if i == normal_class and j == normal_class:
                tn += c
            elif i == normal_class:
                fp += c
            elif j == normal_class:
                fn += c
            else:
                tp += c
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def channel_from_counts(
    counts: ConfusionCounts, smoothing: float = 1.0, label: str = ""
) -> BinarySensorChannel:
    """Estimate the signal channel from binary counts with Laplace smoothing."""
    s = float(smoothing)
    if s < 0:
        raise ValueError(f"smoothing must be nonnegative, got {smoothing!r}")
    if s == 0.0 and (counts.tp + counts.fn == 0 or counts.fp + counts.tn == 0):
        raise DegenerateCounts(
            "a class has no samples; unsmoothed channel ratios are undefined"
        )
    return BinarySensorChannel(
        p_signal_given_fault=(counts.tp + s) / (counts.tp + counts.fn + 2 * s),
        p_signal_given_no_fault=(counts.fp + s) / (counts.fp + counts.tn + 2 * s),
        label=label,
    )


def empirical_priors(labels: Sequence[int], normal_class: int = 0) -> Priors:
    """Fault prior as the observed fraction of non-normal labels."""
    if len(labels) == 0:
        raise EmptySequence("label sequence must be nonempty")
    n_fault = sum(1 for x in labels if int(x) != normal_class)
    return Priors(p_fault=n_fault / len(labels))


def matrix_to_csv(matrix: ConfusionMatrix) -> str:
    """Render the matrix row-major with a header row of predicted-class indices."""
    lines = [",".join(str(j) for j in range(matrix.num_classes))]
    for row in matrix.counts:
        lines.append(",".join(str(c) for c in row))
    return "\n".join(lines) + "\n"
