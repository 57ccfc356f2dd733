"""Binary fault/no-fault decision analysis for warning-signal channels.

A sensor, or a classifier standing in for one, is reduced to a binary
*channel*: the pair Pr(signal|fault), Pr(signal|no fault). Together with a
fault prior this fixes the signal probability

    Pr(signal) = Pr(signal|fault) Pr(fault) + Pr(signal|no fault) Pr(no fault)

and, via Bayes' rule, the fault posterior in each signal branch. Acting on
the channel costs, in expectation,

    E[cost] = Pr(signal)    * min(fix_cost(signal),    P * Pr(fault|signal))
            + Pr(no signal) * min(fix_cost(no signal), P * Pr(fault|no signal))

where R is the remediation cost, P the plant-damage cost, and the min in
each branch picks the cheaper action: Fix (remediate) or NoFix (risk the
damage). Two conventions for the Fix operand are supported (see
``CostConvention``); the default weights R by the no-fault posterior of the
branch, so that a channel with both branches resolving to Fix costs exactly
R * Pr(no fault) regardless of the channel.

The expected value of sample information (EVSI) of a candidate channel is
the baseline expected cost minus the candidate's expected cost. It may be
negative: a noisy sensor can be worse than the baseline it is compared to.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidRatio

#: Sum tolerances for probability normalization invariants.
PROB_TOLERANCE = 1e-12

#: A candidate "improves EVSI" only if its EVSI exceeds this; guards greedy
#: selection against float noise.
IMPROVEMENT_TOLERANCE = 1e-9


def _require_prob(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0 or x > 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {x!r}")
    return x


def _require_cost(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"{name} must be a nonnegative finite cost, got {x!r}")
    return x


class Action(str, enum.Enum):
    """The two operator actions available in each signal branch."""

    FIX = "fix"
    NO_FIX = "no_fix"


class CostConvention(str, enum.Enum):
    """How the Fix operand of the per-branch min is priced.

    POSTERIOR_WEIGHTED (wire token "eq4"): fixing costs R weighted by the
    branch's no-fault posterior. FLAT_FIX (wire token "flatfix"): fixing
    costs R whenever chosen, regardless of ground truth.
    """

    POSTERIOR_WEIGHTED = "eq4"
    FLAT_FIX = "flatfix"


@dataclass(frozen=True)
class Priors:
    """Fault prior before observing any signal.

    ``p_no_fault`` defaults to the complement of ``p_fault``; if given
    explicitly the pair must sum to 1 within PROB_TOLERANCE.
    """

    p_fault: float
    p_no_fault: float = None  # type: ignore[assignment]

    def __post_init__(self):
        pf = _require_prob(self.p_fault, "p_fault")
        object.__setattr__(self, "p_fault", pf)
        if self.p_no_fault is None:
            object.__setattr__(self, "p_no_fault", 1.0 - pf)
        else:
            pn = _require_prob(self.p_no_fault, "p_no_fault")
            object.__setattr__(self, "p_no_fault", pn)
            if abs(pf + pn - 1.0) > PROB_TOLERANCE:
                raise ValueError(
                    f"priors must sum to 1 within {PROB_TOLERANCE}: "
                    f"{pf} + {pn} = {pf + pn}"
                )


@dataclass(frozen=True)
class BinarySensorChannel:
    """A sensor abstracted to its two conditional signal probabilities."""

    p_signal_given_fault: float
    p_signal_given_no_fault: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(
            self,
            "p_signal_given_fault",
            _require_prob(self.p_signal_given_fault, "p_signal_given_fault"),
        )
        object.__setattr__(
            self,
            "p_signal_given_no_fault",
            _require_prob(self.p_signal_given_no_fault, "p_signal_given_no_fault"),
        )


@dataclass(frozen=True)
class CostModel:
    """Remediation cost R, plant-damage cost P, and the Fix-cost convention."""

    remediation_cost: float
    plant_damage_cost: float
    convention: CostConvention = CostConvention.POSTERIOR_WEIGHTED

    def __post_init__(self):
        object.__setattr__(
            self, "remediation_cost", _require_cost(self.remediation_cost, "remediation_cost")
        )
        object.__setattr__(
            self, "plant_damage_cost", _require_cost(self.plant_damage_cost, "plant_damage_cost")
        )
        object.__setattr__(self, "convention", CostConvention(self.convention))


@dataclass(frozen=True)
class PosteriorReport:
    """Fault posteriors per signal branch.

    A branch whose probability is exactly zero is unreachable; its
    posteriors are defined as the priors and the corresponding degenerate
    flag is set, which keeps the report total and preserves the law of
    total probability.
    """

    p_signal: float
    p_fault_given_signal: float
    p_no_fault_given_signal: float
    p_fault_given_no_signal: float
    p_no_fault_given_no_signal: float
    degenerate_signal_branch: bool = False
    degenerate_no_signal_branch: bool = False


@dataclass(frozen=True)
class CostBreakdown:
    """Result of the per-branch min over Fix / NoFix operands.

    ``signal_operands`` and ``no_signal_operands`` are the (fix, no_fix)
    operand pairs the min was taken over; the chosen action per branch is
    the smaller operand, ties resolving to Fix.
    """

    expected_cost: float
    action_on_signal: Action
    action_on_no_signal: Action
    signal_operands: tuple[float, float]
    no_signal_operands: tuple[float, float]


@dataclass(frozen=True)
class EvsiReport:
    """EVSI of a candidate channel against a baseline, plus the candidate's
    optimal action in each branch."""

    sensor_label: str
    evsi: float
    baseline_cost: float
    candidate_cost: float
    action_on_signal: Action
    action_on_no_signal: Action


@dataclass(frozen=True)
class SweepEntry:
    sensor_label: str
    evsi: float
    action_on_signal: Action
    action_on_no_signal: Action


@dataclass(frozen=True)
class SweepTable:
    """Per-sensor EVSI and branch actions across a grid of P/R ratios.

    ``sections[i]`` holds the rows for ``ratios[i]``, sorted by EVSI
    descending with ties broken by sensor label ascending.
    """

    ratios: tuple[float, ...]
    sections: tuple[tuple[SweepEntry, ...], ...]

    def rows(self, ratio: float) -> tuple[SweepEntry, ...]:
        for r, section in zip(self.ratios, self.sections):
            if r == ratio:
                return section
        raise KeyError(f"ratio {ratio!r} not in sweep")


def signal_probability(channel: BinarySensorChannel, priors: Priors) -> float:
    """Total probability that the channel raises a warning signal."""
    return (
        channel.p_signal_given_fault * priors.p_fault
        + channel.p_signal_given_no_fault * priors.p_no_fault
    )


def no_signal_probability(channel: BinarySensorChannel, priors: Priors) -> float:
    """Total quiet probability, summed directly to avoid cancellation."""
    return (
        (1.0 - channel.p_signal_given_fault) * priors.p_fault
        + (1.0 - channel.p_signal_given_no_fault) * priors.p_no_fault
    )


def posteriors(channel: BinarySensorChannel, priors: Priors) -> PosteriorReport:
    """Fault posteriors for both signal branches via Bayes' rule.

    Each branch normalizes by the sum of its own joint terms rather than
    by 1 - p(other branch); the subtraction cancels catastrophically when
    one branch is nearly certain.
    """
    p_signal = signal_probability(channel, priors)
    joint_f_ns = (1.0 - channel.p_signal_given_fault) * priors.p_fault
    joint_nf_ns = (1.0 - channel.p_signal_given_no_fault) * priors.p_no_fault
    p_no_signal = no_signal_probability(channel, priors)

    if p_signal == 0.0:
        p_f_s, p_nf_s = priors.p_fault, priors.p_no_fault
        degenerate_signal = True
    else:
        p_f_s = channel.p_signal_given_fault * priors.p_fault / p_signal
        p_nf_s = channel.p_signal_given_no_fault * priors.p_no_fault / p_signal
        degenerate_signal = False

    if p_no_signal == 0.0:
        p_f_ns, p_nf_ns = priors.p_fault, priors.p_no_fault
        degenerate_no_signal = True
    else:
        p_f_ns = joint_f_ns / p_no_signal
        p_nf_ns = joint_nf_ns / p_no_signal
        degenerate_no_signal = False

    return PosteriorReport(
        p_signal=p_signal,
        p_fault_given_signal=p_f_s,
        p_no_fault_given_signal=p_nf_s,
        p_fault_given_no_signal=p_f_ns,
        p_no_fault_given_no_signal=p_nf_ns,
        degenerate_signal_branch=degenerate_signal,
        degenerate_no_signal_branch=degenerate_no_signal,
    )


def _branch_min(
    p_fault_branch: float, p_no_fault_branch: float, costs: CostModel
) -> tuple[Action, float, tuple[float, float]]:
    """Resolve one branch: (chosen action, chosen cost, (fix, no_fix) operands)."""
    if costs.convention is CostConvention.FLAT_FIX:
        fix_operand = costs.remediation_cost
    else:
        fix_operand = costs.remediation_cost * p_no_fault_branch
    no_fix_operand = costs.plant_damage_cost * p_fault_branch
    if fix_operand <= no_fix_operand:  # ties resolve to Fix
        return Action.FIX, fix_operand, (fix_operand, no_fix_operand)
    return Action.NO_FIX, no_fix_operand, (fix_operand, no_fix_operand)


def expected_cost_with_sensor(
    channel: BinarySensorChannel, priors: Priors, costs: CostModel
) -> CostBreakdown:
    """Expected decision cost when acting on the channel's signal.

    Each branch contributes its probability times the cheaper of the Fix
    and NoFix operands; an unreachable branch is zero-weighted.
    """
    post = posteriors(channel, priors)
    action_s, cost_s, operands_s = _branch_min(
        post.p_fault_given_signal, post.p_no_fault_given_signal, costs
    )
    action_ns, cost_ns, operands_ns = _branch_min(
        post.p_fault_given_no_signal, post.p_no_fault_given_no_signal, costs
    )
    expected = post.p_signal * cost_s + no_signal_probability(channel, priors) * cost_ns
    return CostBreakdown(
        expected_cost=expected,
        action_on_signal=action_s,
        action_on_no_signal=action_ns,
        signal_operands=operands_s,
        no_signal_operands=operands_ns,
    )


def baseline_cost_no_signal(priors: Priors, costs: CostModel) -> CostBreakdown:
    """Prior-only decision cost, used as the baseline when no channel exists.

    There is a single decision, resolved directly on the priors; the chosen
    action is recorded in both branch fields.
    """
    action, cost, operands = _branch_min(priors.p_fault, priors.p_no_fault, costs)
    return CostBreakdown(
        expected_cost=cost,
        action_on_signal=action,
        action_on_no_signal=action,
        signal_operands=operands,
        no_signal_operands=operands,
    )


def evsi(
    candidate: BinarySensorChannel,
    baseline: BinarySensorChannel | None,
    priors: Priors,
    costs: CostModel,
) -> EvsiReport:
    """EVSI of deploying ``candidate`` relative to ``baseline``.

    With no baseline channel the comparison point is the prior-only
    decision. The value is negative whenever the candidate decides worse
    than the baseline.
    """
    if baseline is None:
        base = baseline_cost_no_signal(priors, costs)
    else:
        base = expected_cost_with_sensor(baseline, priors, costs)
    cand = expected_cost_with_sensor(candidate, priors, costs)
    return EvsiReport(
        sensor_label=candidate.label,
        evsi=base.expected_cost - cand.expected_cost,
        baseline_cost=base.expected_cost,
        candidate_cost=cand.expected_cost,
        action_on_signal=cand.action_on_signal,
        action_on_no_signal=cand.action_on_no_signal,
    )


def rank_by_evsi(
    candidates: Iterable[BinarySensorChannel],
    baseline: BinarySensorChannel | None,
    priors: Priors,
    costs: CostModel,
) -> list[EvsiReport]:
    """EVSI reports for every candidate, sorted descending (ties by label)."""
    reports = [evsi(c, baseline, priors, costs) for c in candidates]
    reports.sort(key=lambda r: (-r.evsi, r.sensor_label))
    return reports


def sensitivity_sweep(
    candidates: Sequence[BinarySensorChannel],
    baseline: BinarySensorChannel | None,
    priors: Priors,
    remediation_cost: float,
    ratios: Sequence[float],
    convention: CostConvention = CostConvention.POSTERIOR_WEIGHTED,
) -> SweepTable:
    """Evaluate every candidate's EVSI across a grid of P/R cost ratios.

    For each ratio the plant-damage cost is set to ratio * R and the full
    ranking is recomputed; each section is sorted by EVSI descending, label
    ascending.
    """
    if not ratios:
        raise InvalidRatio("ratio list must be nonempty")
    for r in ratios:
        if not math.isfinite(float(r)) or float(r) <= 0.0:
            raise InvalidRatio(f"ratios must be positive, got {r!r}")
    labels = [c.label for c in candidates]
    if len(set(labels)) != len(labels):
        raise ValueError(f"candidate labels must be distinct, got {labels}")

    sections = []
    for ratio in ratios:
        costs = CostModel(
            remediation_cost=remediation_cost,
            plant_damage_cost=float(ratio) * float(remediation_cost),
            convention=convention,
        )
        reports = rank_by_evsi(candidates, baseline, priors, costs)
        sections.append(
            tuple(
                SweepEntry(
                    sensor_label=r.sensor_label,
                    evsi=r.evsi,
                    action_on_signal=r.action_on_signal,
                    action_on_no_signal=r.action_on_no_signal,
                )
                for r in reports
            )
        )
    return SweepTable(ratios=tuple(float(r) for r in ratios), sections=tuple(sections))


def combine_or(
    channels: Sequence[BinarySensorChannel], label: str | None = None
) -> BinarySensorChannel:
    """Channel of a sensor network that signals when any member signals.

    Members are assumed conditionally independent given the fault state, so
    each conditional no-signal probability is the product of the members'.
    """
    if not channels:
        raise ValueError("need at least one channel to combine")
    miss_fault = 1.0
    miss_no_fault = 1.0
    for ch in channels:
        miss_fault *= 1.0 - ch.p_signal_given_fault
        miss_no_fault *= 1.0 - ch.p_signal_given_no_fault
    return BinarySensorChannel(
        p_signal_given_fault=1.0 - miss_fault,
        p_signal_given_no_fault=1.0 - miss_no_fault,
        label=label if label is not None else "+".join(ch.label for ch in channels),
    )


def report_doc(report: EvsiReport) -> dict:
    """JSON-ready row for one ranked sensor, lower_snake_case keys."""
    return {
        "sensor": report.sensor_label,
        "evsi": report.evsi,
        "baseline_cost": report.baseline_cost,
        "candidate_cost": report.candidate_cost,
        "action_on_signal": report.action_on_signal.value,
        "action_on_no_signal": report.action_on_no_signal.value,
    }


def sweep_doc(table: SweepTable) -> dict:
    """JSON-ready sweep: one section of rows per cost ratio."""
    return {
        "ratios": list(table.ratios),
        "sections": [
            {
                "ratio": ratio,
                "rows": [
                    {
                        "sensor": entry.sensor_label,
                        "evsi": entry.evsi,
                        "action_on_signal": entry.action_on_signal.value,
                        "action_on_no_signal": entry.action_on_no_signal.value,
                    }
                    for entry in section
                ],
            }
            for ratio, section in zip(table.ratios, table.sections)
        ],
    }
