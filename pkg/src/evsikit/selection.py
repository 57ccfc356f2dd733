"""Sensor-selection procedures built on a pluggable trainer.

Three procedures, all deterministic given the trainer's config seed:

* ``mask_importance`` trains once on every feature and scores each feature
  by how much validation accuracy drops when that feature is silenced at
  inference time (its column pinned to the training mean, standardized
  zero). ``masking="retrain"`` switches to the costlier interpretation
  that refits the model without the feature.
* ``forward_stepwise`` grows a feature set greedily by validation
  accuracy, retraining per candidate each round.
* ``greedy_evsi_selection`` grows it by expected decision value instead:
  each candidate model is collapsed to a binary warning channel and scored
  by its EVSI against the currently deployed model's channel. Deployment
  stops as soon as the best candidate's EVSI fails to clear the tolerance,
  so sensors that no longer pay for themselves are never added. After each
  deployment the baseline advances to the augmented model, which is why
  the remaining candidates can change rank between rounds.

Traces record the full per-round score maps so rank changes are
observable after the fact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from .classifier import Trainer, TrainingConfig, evaluate
from .data import SimDataset
from .decision import (
    IMPROVEMENT_TOLERANCE,
    BinarySensorChannel,
    CostModel,
    evsi,
    expected_cost_with_sensor,
)
from .errors import DisjointnessViolation
from .metrics import channel_from_counts, collapse_to_binary, empirical_priors

DELTA_TOLERANCE = 1e-12


class SelectionMode(str, enum.Enum):
    FORWARD_ACCURACY = "forward_accuracy"
    GREEDY_EVSI = "greedy_evsi"


class StopReason(str, enum.Enum):
    EXHAUSTED = "exhausted"
    NO_IMPROVEMENT = "no_improvement"
    BUDGET_REACHED = "budget_reached"


@dataclass(frozen=True)
class ImportanceEntry:
    feature: str
    accuracy_delta: float
    masked_accuracy: float


@dataclass(frozen=True)
class ImportanceRanking:
    """Features ordered by how much masking them costs in accuracy."""

    entries: tuple[ImportanceEntry, ...]
    baseline_accuracy: float

    def __post_init__(self):
        order = [(-e.accuracy_delta, e.feature) for e in self.entries]
        if order != sorted(order):
            raise ValueError("entries must be sorted by delta desc, feature asc")
        for e in self.entries:
            if abs(e.accuracy_delta - (self.baseline_accuracy - e.masked_accuracy)) > DELTA_TOLERANCE:
                raise ValueError(f"inconsistent delta for {e.feature!r}")

    def top(self, n: int) -> tuple[str, ...]:
        return tuple(e.feature for e in self.entries[:n])


@dataclass(frozen=True)
class SelectionRound:
    """One evaluation round: every remaining candidate scored, at most one chosen.

    ``chosen`` is None exactly when this round fired the stopping rule.
    ``baseline_score`` is the score of the incumbent feature set: validation
    accuracy in accuracy mode, expected decision cost in EVSI mode.
    """

    round_index: int
    candidate_scores: tuple[tuple[str, float], ...]
    chosen: str | None
    baseline_score: float

    @property
    def scores(self) -> dict[str, float]:
        return dict(self.candidate_scores)


@dataclass(frozen=True)
class SelectionTrace:
    mode: SelectionMode
    base_features: tuple[str, ...]
    rounds: tuple[SelectionRound, ...]
    deployed: tuple[str, ...]
    stop_reason: StopReason

    def __post_init__(self):
        chosen = tuple(r.chosen for r in self.rounds if r.chosen is not None)
        if chosen != tuple(self.deployed):
            raise ValueError("deployed must equal the chosen features in round order")
        if len(set(self.deployed)) != len(self.deployed):
            raise ValueError("a feature cannot be deployed twice")


def _validate_candidates(base_features: Sequence[str], candidates: Sequence[str]):
    overlap = set(base_features) & set(candidates)
    if overlap:
        raise DisjointnessViolation(
            f"candidates overlap base features: {sorted(overlap)}"
        )
    if len(set(candidates)) != len(candidates):
        raise ValueError("candidate features must be distinct")


def _argmax(scores: Mapping[str, float]) -> str:
    """Highest score; ties resolve to the lowest feature id."""
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def mask_importance(
    trainer: Trainer,
    train_split: SimDataset,
    validation_split: SimDataset,
    all_features: Sequence[str],
    config: TrainingConfig = TrainingConfig(),
    masking: str = "mean",
) -> ImportanceRanking:
    """Rank features by the validation-accuracy drop from silencing each one.

    ``masking="mean"`` evaluates the single full model with the feature's
    column pinned to its training mean; ``masking="retrain"`` refits
    without the feature instead.
    """
    if masking not in ("mean", "retrain"):
        raise ValueError(f"masking must be 'mean' or 'retrain', got {masking!r}")
    model = trainer.fit(train_split, tuple(all_features), config)
    baseline = evaluate(model, validation_split).accuracy
    entries = []
    for feature in all_features:
        if masking == "mean":
            masked_acc = evaluate(model, validation_split, masked_features=(feature,)).accuracy
        else:
            rest = tuple(f for f in all_features if f != feature)
            masked_acc = evaluate(trainer.fit(train_split, rest, config), validation_split).accuracy
        entries.append(
            ImportanceEntry(
                feature=feature,
                accuracy_delta=baseline - masked_acc,
                masked_accuracy=masked_acc,
            )
        )
    entries.sort(key=lambda e: (-e.accuracy_delta, e.feature))
    return ImportanceRanking(entries=tuple(entries), baseline_accuracy=baseline)


def forward_stepwise(
    trainer: Trainer,
    train_split: SimDataset,
    validation_split: SimDataset,
    base_features: Sequence[str],
    candidates: Sequence[str],
    budget: int = 10,
    config: TrainingConfig = TrainingConfig(),
) -> SelectionTrace:
    """Greedy accuracy-driven feature growth.

    Every round refits one model per remaining candidate on base +
    deployed + candidate and deploys the argmax of validation accuracy.
    Runs until the budget is spent or no candidates remain; accuracy solely
    ranks candidates, it is not a stopping criterion.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    _validate_candidates(base_features, candidates)

    base_model = trainer.fit(train_split, tuple(base_features), config)
    baseline = evaluate(base_model, validation_split).accuracy

    deployed: list[str] = []
    remaining = list(candidates)
    rounds: list[SelectionRound] = []
    while remaining and len(deployed) < budget:
        scores = {}
        for cand in remaining:
            feats = tuple(base_features) + tuple(deployed) + (cand,)
            model = trainer.fit(train_split, feats, config)
            scores[cand] = evaluate(model, validation_split).accuracy
        chosen = _argmax(scores)
        rounds.append(
            SelectionRound(
                round_index=len(rounds),
                candidate_scores=tuple(sorted(scores.items())),
                chosen=chosen,
                baseline_score=baseline,
            )
        )
        deployed.append(chosen)
        remaining.remove(chosen)
        baseline = scores[chosen]

    stop = StopReason.BUDGET_REACHED if len(deployed) >= budget else StopReason.EXHAUSTED
    return SelectionTrace(
        mode=SelectionMode.FORWARD_ACCURACY,
        base_features=tuple(base_features),
        rounds=tuple(rounds),
        deployed=tuple(deployed),
        stop_reason=stop,
    )


def _model_channel(
    trainer: Trainer,
    train_split: SimDataset,
    validation_split: SimDataset,
    features: tuple[str, ...],
    config: TrainingConfig,
    smoothing: float,
    normal_class: int,
    label: str,
) -> BinarySensorChannel:
    """Fit on ``features`` and distill the validation confusion into a channel."""
    model = trainer.fit(train_split, features, config)
    matrix = evaluate(model, validation_split).matrix
    counts = collapse_to_binary(matrix, normal_class=normal_class)
    return channel_from_counts(counts, smoothing=smoothing, label=label)


def greedy_evsi_selection(
    trainer: Trainer,
    train_split: SimDataset,
    validation_split: SimDataset,
    base_features: Sequence[str],
    candidates: Sequence[str],
    costs: CostModel,
    budget: int = 10,
    config: TrainingConfig = TrainingConfig(),
    smoothing: float = 1.0,
    normal_class: int = 0,
    tolerance: float = IMPROVEMENT_TOLERANCE,
    advance_baseline: bool = True,
) -> SelectionTrace:
    """Deploy sensors in decreasing order of expected decision value.

    Each round refits one model per remaining candidate, collapses its
    validation confusion to a binary channel, and scores the candidate by
    EVSI against the incumbent model's channel. The argmax deploys if its
    EVSI clears ``tolerance``; otherwise the round records chosen = None
    and the run stops with NO_IMPROVEMENT. With ``advance_baseline`` the
    incumbent channel becomes the chosen candidate's after each deployment
    (so remaining candidates are re-ranked against the improved system);
    without it every round scores against the original base channel.
    Priors are taken empirically from the training split.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    _validate_candidates(base_features, candidates)

    priors = empirical_priors(list(train_split.labels()), normal_class=normal_class)
    baseline_channel = _model_channel(
        trainer, train_split, validation_split, tuple(base_features), config,
        smoothing, normal_class, label="base",
    )

    deployed: list[str] = []
    remaining = list(candidates)
    rounds: list[SelectionRound] = []
    stop = None
    while remaining and len(deployed) < budget:
        baseline_cost = expected_cost_with_sensor(baseline_channel, priors, costs).expected_cost
        scores = {}
        channels = {}
        for cand in remaining:
            feats = tuple(base_features) + tuple(deployed) + (cand,)
            channel = _model_channel(
                trainer, train_split, validation_split, feats, config,
                smoothing, normal_class, label=cand,
            )
            channels[cand] = channel
            scores[cand] = evsi(channel, baseline_channel, priors, costs).evsi
        best = _argmax(scores)
        improved = scores[best] > tolerance
        rounds.append(
            SelectionRound(
                round_index=len(rounds),
                candidate_scores=tuple(sorted(scores.items())),
                chosen=best if improved else None,
                baseline_score=baseline_cost,
            )
        )
        if not improved:
            stop = StopReason.NO_IMPROVEMENT
            break
        deployed.append(best)
        remaining.remove(best)
        if advance_baseline:
            baseline_channel = channels[best]

    if stop is None:
        stop = StopReason.BUDGET_REACHED if len(deployed) >= budget else StopReason.EXHAUSTED
    return SelectionTrace(
        mode=SelectionMode.GREEDY_EVSI,
        base_features=tuple(base_features),
        rounds=tuple(rounds),
        deployed=tuple(deployed),
        stop_reason=stop,
    )


def trace_to_doc(trace: SelectionTrace) -> dict:
    """JSON-ready rendering of a selection trace."""
    return {
        "mode": trace.mode.value,
        "base_features": list(trace.base_features),
        "rounds": [
            {
                "round_index": r.round_index,
                "scores": {k: v for k, v in r.candidate_scores},
                "chosen": r.chosen,
                "baseline_score": r.baseline_score,
            }
            for r in trace.rounds
        ],
        "deployed": list(trace.deployed),
        "stop_reason": trace.stop_reason.value,
    }
