"""Acceptance gate: one check per shipped guarantee, run in order.

Each check records a single PASS/FAIL verdict line; the conftest summary
hook prints all of them at the end of the run so a full-suite invocation
always shows the eleven verdicts. Checks cover exact closed-form values,
bulk randomized invariants, planted-signal recovery rates, and end-to-end
CLI determinism, each with an explicit wall-clock budget.
"""

import functools
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from evsikit.classifier import LogisticTrainer, _loss_and_grad
from evsikit.data import (
    ChannelStats,
    SplitSpec,
    SynthConfig,
    limit_simulations,
    save_csv,
    simulation_split,
    synth_generate,
)
from evsikit.decision import (
    Action,
    BinarySensorChannel,
    CostModel,
    Priors,
    baseline_cost_no_signal,
    evsi,
    expected_cost_with_sensor,
)
from evsikit.metrics import confusion_matrix, weighted_metrics
from evsikit.selection import (
    StopReason,
    forward_stepwise,
    greedy_evsi_selection,
    mask_importance,
)
from evsikit.session import create_stats_session

_TOTAL = 11
VERDICTS: list[str] = []


def criterion(description, budget_seconds):
    """Wrap a check: enforce its time budget and record one verdict line."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            tag = f"[{len(VERDICTS) + 1:2d}/{_TOTAL}]"
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                assert elapsed < budget_seconds, (
                    f"{description}: took {elapsed:.2f}s, budget {budget_seconds}s"
                )
            except BaseException:
                VERDICTS.append(f"{tag} FAIL  {description}")
                print(VERDICTS[-1])
                raise
            VERDICTS.append(f"{tag} PASS  {description} ({elapsed:.3f}s)")
            print(VERDICTS[-1])

        return wrapper

    return decorate


@criterion("closed-form value of a (0.9, 0.1) sensor at R=1, P=8", 1.0)
def test_closed_form_sensor_value():
    channel = BinarySensorChannel(0.9, 0.1, "S1")
    priors = Priors(0.5)
    costs = CostModel(1.0, 8.0)
    expected_cost_with_sensor(channel, priors, costs)  # warm caches before timing
    tick = time.perf_counter()
    breakdown = expected_cost_with_sensor(channel, priors, costs)
    baseline = baseline_cost_no_signal(priors, costs)
    report = evsi(channel, None, priors, costs)
    compute_time = time.perf_counter() - tick
    assert abs(breakdown.expected_cost - 0.45) <= 1e-12
    assert abs(baseline.expected_cost - 0.5) <= 1e-12
    assert abs(report.evsi - 0.05) <= 1e-12
    assert breakdown.action_on_signal is Action.FIX
    assert breakdown.action_on_no_signal is Action.NO_FIX
    assert compute_time < 1e-3


@criterion("saturated sensors cost exactly R*Pr(no fault) and carry no value", 1.0)
def test_saturation_collapses_to_remediation_cost():
    rng = np.random.default_rng(20260814)
    saturated_costs = 0
    saturated_pairs = 0
    for _ in range(10_000):
        priors = Priors(float(rng.uniform(0.05, 0.95)))
        r = float(rng.uniform(0.1, 2.0))
        costs = CostModel(r, r * float(rng.uniform(4.0, 64.0)))
        channels = [
            BinarySensorChannel(float(rng.uniform()), float(rng.uniform()))
            for _ in range(2)
        ]
        breakdowns = [expected_cost_with_sensor(ch, priors, costs) for ch in channels]
        hits = []
        for ch, bd in zip(channels, breakdowns):
            if bd.action_on_signal is Action.FIX and bd.action_on_no_signal is Action.FIX:
                assert abs(bd.expected_cost - r * priors.p_no_fault) <= 1e-12
                saturated_costs += 1
                hits.append(ch)
        if len(hits) == 2:
            report = evsi(hits[0], hits[1], priors, costs)
            assert abs(report.evsi) <= 1e-12
            saturated_pairs += 1
    assert saturated_costs >= 1_000, "fixture never exercised saturation"
    assert saturated_pairs >= 100


@criterion("acting on a signal never costs more than the prior-only policy", 1.0)
def test_information_never_hurts():
    rng = np.random.default_rng(8141)
    for _ in range(10_000):
        channel = BinarySensorChannel(float(rng.uniform()), float(rng.uniform()))
        priors = Priors(float(rng.uniform()))
        r = float(rng.uniform(0.01, 10.0))
        costs = CostModel(r, r * float(10.0 ** rng.uniform(-1.0, 2.0)))
        with_sensor = expected_cost_with_sensor(channel, priors, costs).expected_cost
        without = baseline_cost_no_signal(priors, costs).expected_cost
        assert with_sensor <= without + 1e-12


@criterion("branch actions flip NoFix to Fix at most once as P/R grows", 1.0)
def test_single_crossing_over_cost_ratio():
    rng = np.random.default_rng(77)
    ratios = np.logspace(-1.5, 2.0, 50)
    for _ in range(100):
        channel = BinarySensorChannel(float(rng.uniform()), float(rng.uniform()))
        priors = Priors(float(rng.uniform(0.01, 0.99)))
        for branch in ("action_on_signal", "action_on_no_signal"):
            fixed = False
            for ratio in ratios:
                action = getattr(
                    expected_cost_with_sensor(channel, priors, CostModel(1.0, float(ratio))),
                    branch,
                )
                if fixed:
                    assert action is Action.FIX, "action reverted after crossing"
                fixed = fixed or action is Action.FIX


@criterion("weighted classification metrics equal brute-force counting", 1.0)
def test_metrics_match_brute_force():
    rng = np.random.default_rng(555)
    for _ in range(1_000):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 30))
        truth = [int(v) for v in rng.integers(0, k, size=n)]
        pred = [int(v) for v in rng.integers(0, k, size=n)]
        report = weighted_metrics(confusion_matrix(truth, pred, k))

        # independent counting straight off the label pairs
        w_precision = w_recall = w_f1 = 0.0
        correct = 0
        for i in range(k):
            tp = sum(1 for t, p in zip(truth, pred) if t == i and p == i)
            fp = sum(1 for t, p in zip(truth, pred) if t != i and p == i)
            fn = sum(1 for t, p in zip(truth, pred) if t == i and p != i)
            support = sum(1 for t in truth if t == i)
            precision = tp / (tp + fp) if tp + fp > 0 else 0.0
            recall = tp / (tp + fn) if tp + fn > 0 else 0.0
            f1 = tp / (tp + 0.5 * (fp + fn)) if tp + 0.5 * (fp + fn) > 0 else 0.0
            w_precision += support * precision
            w_recall += support * recall
            w_f1 += support * f1
            correct += tp
        assert report.precision == w_precision / n
        assert report.recall == w_recall / n
        assert report.f1 == w_f1 / n
        assert report.accuracy == correct / n


@criterion("training loss gradient matches central finite differences", 5.0)
def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(99)
    step = 1e-6
    for _ in range(20):
        k = int(rng.integers(2, 6))
        d = int(rng.integers(1, 9))
        n = int(rng.integers(5, 51))
        design = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d))])
        labels = rng.integers(0, k, size=n)
        onehot = np.zeros((n, k))
        onehot[np.arange(n), labels] = 1.0
        weights = rng.normal(scale=0.5, size=(k, d + 1))
        inverse_c = float(10.0 ** rng.uniform(-1.0, 3.0))

        _, grad = _loss_and_grad(weights, design, onehot, inverse_c)
        fd = np.zeros_like(weights)
        for i in range(k):
            for j in range(d + 1):
                bump = np.zeros_like(weights)
                bump[i, j] = step
                hi, _ = _loss_and_grad(weights + bump, design, onehot, inverse_c)
                lo, _ = _loss_and_grad(weights - bump, design, onehot, inverse_c)
                fd[i, j] = (hi - lo) / (2.0 * step)
        scale = max(float(np.max(np.abs(grad))), 1e-8)
        assert float(np.max(np.abs(fd - grad))) / scale <= 1e-5


@criterion("default split takes 40/25 train and 20/10 validation sims per class", 1.0)
def test_default_split_simulation_counts():
    raw = synth_generate(
        SynthConfig(
            num_features=2,
            num_fault_classes=3,
            sims_per_class=60,
            samples_per_sim=2,
            informative_features=("X1",),
            seed=0,
        )
    )
    source = limit_simulations(raw, {1: 35, 2: 35, 3: 35})
    assert [len(source.simulation_ids(c)) for c in range(4)] == [60, 35, 35, 35]

    result = simulation_split(source, SplitSpec())
    for fault_class in range(4):
        train_ids = set(result.train.simulation_ids(fault_class))
        val_ids = set(result.validation.simulation_ids(fault_class))
        expected_train, expected_val = (40, 20) if fault_class == 0 else (25, 10)
        assert len(train_ids) == expected_train
        assert len(val_ids) == expected_val
        assert not train_ids & val_ids
    assert len(result.test) == 0


@criterion("both planted features recovered by masking and stepwise growth", 60.0)
def test_planted_feature_recovery():
    trainer = LogisticTrainer()
    planted = {"X4", "X7"}
    successes = 0
    for seed in range(10):
        raw = synth_generate(
            SynthConfig(
                num_features=10,
                num_fault_classes=2,
                sims_per_class=10,
                samples_per_sim=10,
                informative_features=("X4", "X7"),
                shift_magnitude=2.5,
                noise_std=1.0,
                seed=seed,
            )
        )
        split = simulation_split(raw, SplitSpec(6, 6, 4, 4, 0, 0))
        ranking = mask_importance(trainer, split.train, split.validation, raw.feature_names)
        trace = forward_stepwise(
            trainer, split.train, split.validation, (), raw.feature_names, budget=2
        )
        if set(ranking.top(2)) == planted and set(trace.deployed) == planted:
            successes += 1
    assert successes >= 9, f"only {successes}/10 seeds recovered the planted features"


def informative_vs_noise_split(seed, num_features=3):
    raw = synth_generate(
        SynthConfig(
            num_features=num_features,
            num_fault_classes=1,
            sims_per_class=10,
            samples_per_sim=20,
            informative_features=("X2",),
            shift_magnitude=5.0,
            noise_std=1.0,
            seed=seed,
        )
    )
    return simulation_split(raw, SplitSpec(6, 6, 4, 4, 0, 0))


@criterion("greedy deployment takes the informative sensor then stops", 60.0)
def test_greedy_stops_before_noise_sensor():
    trainer = LogisticTrainer()
    successes = 0
    for seed in range(10):
        split = informative_vs_noise_split(seed)
        trace = greedy_evsi_selection(
            trainer, split.train, split.validation, ("X1",), ("X2", "X3"), CostModel(1.0, 8.0)
        )
        if trace.deployed == ("X2",) and trace.stop_reason is StopReason.NO_IMPROVEMENT:
            successes += 1
    assert successes >= 9, f"only {successes}/10 seeds stopped cleanly"


@criterion("every round logs full score maps and reranking can invert order", 5.0)
def test_rerank_observability_and_inversion():
    # (a) the greedy trace records a complete candidate->score map per round
    split = informative_vs_noise_split(0, num_features=4)
    trace = greedy_evsi_selection(
        LogisticTrainer(),
        split.train,
        split.validation,
        ("X1",),
        ("X2", "X3", "X4"),
        CostModel(1.0, 8.0),
    )
    remaining = {"X2", "X3", "X4"}
    for round_ in trace.rounds:
        assert set(round_.scores) == remaining
        if round_.chosen is not None:
            remaining.discard(round_.chosen)

    # (b) a live session where the second- and third-ranked sensors swap
    # places once the leader is on the board
    stats = ChannelStats(
        priors=Priors(0.5),
        sensors=(
            BinarySensorChannel(0.90, 0.05, "M10"),
            BinarySensorChannel(0.95, 0.50, "X9"),
            BinarySensorChannel(0.75, 0.05, "M30"),
        ),
    )
    manager = create_stats_session(stats, CostModel(1.0, 4.0))
    before = {r.sensor_label: r.evsi for r in manager.snapshot().latest_rankings}
    assert before["M10"] > before["X9"] > before["M30"]
    after = {r.sensor_label: r.evsi for r in manager.deploy("M10").latest_rankings}
    assert after["M30"] > after["X9"]
    assert abs(before["X9"] - 0.15) <= 1e-9
    assert abs(after["M30"] - 0.12625) <= 1e-9
    assert abs(after["X9"] - (-0.0475)) <= 1e-9


@criterion("repeated seeded CLI selection emits byte-identical JSON", 60.0)
def test_cli_selection_is_byte_deterministic(tmp_path):
    raw = synth_generate(
        SynthConfig(
            num_features=3,
            num_fault_classes=1,
            sims_per_class=8,
            samples_per_sim=6,
            informative_features=("X2",),
            shift_magnitude=4.0,
            seed=0,
        )
    )
    split = simulation_split(raw, SplitSpec(4, 4, 3, 3, 0, 0))
    save_csv(split.train, tmp_path / "train.csv")
    save_csv(split.validation, tmp_path / "validation.csv")

    argv = [
        sys.executable, "-m", "evsikit", "select", "evsi",
        "--data", str(tmp_path), "--base", "X1", "--candidates", "X2,X3",
        "--cost-r", "1", "--cost-p", "8", "--seed", "4", "--output-format", "json",
    ]
    env = {k: v for k, v in os.environ.items() if k != "EVSI_SEED"}
    root = str(Path(__file__).resolve().parent.parent)
    runs = [
        subprocess.run(argv, capture_output=True, cwd=root, env=env, timeout=50)
        for _ in range(2)
    ]
    for run in runs:
        assert run.returncode == 0, run.stderr.decode()
    assert runs[0].stdout == runs[1].stdout
    trace = json.loads(runs[0].stdout)
    assert trace["deployed"] == ["X2"]


def test_acceptance_suite_is_complete():
    assert len(VERDICTS) == _TOTAL
