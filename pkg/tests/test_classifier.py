"""Classifier training, prediction, evaluation, and CV tests."""

import json

import numpy as np
import pytest

from evsikit.classifier import (
    DEFAULT_C_GRID,
    EvaluationResult,
    LogisticTrainer,
    Model,
    TrainingConfig,
    _loss_and_grad,
    cross_validate,
    evaluate,
    model_from_doc,
    model_to_doc,
    predict,
    train,
)
from evsikit.data import SimDataset, SimRecord, SplitSpec, SynthConfig, simulation_split, synth_generate
from evsikit.errors import (
    EmptyDataset,
    MissingFeature,
    SingleClassData,
    TooFewSamples,
    UnknownFeature,
)


def blob_dataset(seed=42, shift=4.0, noise=1.0):
    return synth_generate(
        SynthConfig(
            num_features=2,
            num_fault_classes=1,
            sims_per_class=10,
            samples_per_sim=10,
            informative_features=("X1",),
            shift_magnitude=shift,
            noise_std=noise,
            seed=seed,
        )
    )


def manual_dataset(labels, values):
    return SimDataset(
        feature_names=("X1",),
        records=tuple(
            SimRecord(simulation_id=i, fault_class=c, sample_index=0, values=(v,))
            for i, (c, v) in enumerate(zip(labels, values))
        ),
    )


# ---------------------------------------------------------------- training


def test_separable_blobs_high_training_accuracy():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    assert evaluate(model, ds).accuracy >= 0.95


def test_training_is_deterministic():
    ds = blob_dataset()
    a = train(ds, ("X1", "X2"))
    b = train(ds, ("X1", "X2"))
    assert a.weights == b.weights
    assert a.means == b.means and a.stds == b.stds


def test_bias_only_model_predicts_majority_class():
    ds = manual_dataset([1] * 7 + [0] * 3, range(10))
    model = train(ds, ())
    assert predict(model, {}) == 1
    assert predict(model, {"X1": 123.0}) == 1
    assert evaluate(model, ds).accuracy == pytest.approx(0.7)


def test_bias_only_on_balanced_data_scores_half():
    ds = manual_dataset([0] * 5 + [1] * 5, range(10))
    model = train(ds, ())
    assert evaluate(model, ds).accuracy == pytest.approx(0.5)


def test_train_rejects_single_class():
    ds = manual_dataset([1] * 6, range(6))
    with pytest.raises(SingleClassData):
        train(ds, ("X1",))


def test_train_rejects_unknown_feature():
    ds = blob_dataset()
    with pytest.raises(UnknownFeature):
        train(ds, ("X1", "nope"))


def test_train_rejects_empty_dataset():
    ds = SimDataset(feature_names=("X1",), records=())
    with pytest.raises(EmptyDataset):
        train(ds, ("X1",))


def test_constant_feature_gets_unit_std():
    ds = manual_dataset([0, 0, 1, 1], [5.0, 5.0, 5.0, 5.0])
    model = train(ds, ("X1",))
    assert model.stds == (1.0,)


# -------------------------------------------------------------- prediction


def test_predict_deep_inside_blob():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    assert predict(model, {"X1": 4.0, "X2": 0.0}) == 1
    assert predict(model, {"X1": 0.0, "X2": 0.0}) == 0


def test_predict_tie_breaks_to_lowest_class():
    model = Model(
        feature_set=("X1",),
        classes=(0, 1),
        weights=((0.0, 0.0), (0.0, 0.0)),
        means=(0.0,),
        stds=(1.0,),
        config=TrainingConfig(),
    )
    assert predict(model, {"X1": 3.0}) == 0


def test_predict_rejects_missing_feature():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    with pytest.raises(MissingFeature):
        predict(model, {"X1": 1.0})


# -------------------------------------------------------------- evaluation


def test_perfect_model_gives_diagonal_matrix():
    ds = synth_generate(
        SynthConfig(
            num_features=2,
            num_fault_classes=1,
            sims_per_class=4,
            samples_per_sim=5,
            informative_features=("X1",),
            shift_magnitude=50.0,
            noise_std=0.5,
            seed=9,
        )
    )
    model = train(ds, ("X1", "X2"))
    result = evaluate(model, ds)
    assert result.accuracy == 1.0
    off_diag = sum(
        result.matrix.counts[i][j]
        for i in range(result.matrix.num_classes)
        for j in range(result.matrix.num_classes)
        if i != j
    )
    assert off_diag == 0


def test_evaluation_matrix_total_matches_dataset_size():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    assert evaluate(model, ds).matrix.total == len(ds)


def test_evaluate_rejects_empty_dataset():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    with pytest.raises(EmptyDataset):
        evaluate(model, SimDataset(feature_names=ds.feature_names, records=()))


def test_masking_informative_feature_hurts_accuracy():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    full = evaluate(model, ds).accuracy
    masked = evaluate(model, ds, masked_features=("X1",)).accuracy
    assert masked < full - 0.2
    # masking the pure-noise feature barely matters
    noise_masked = evaluate(model, ds, masked_features=("X2",)).accuracy
    assert noise_masked >= full - 0.05


def test_masking_unknown_feature_rejected():
    ds = blob_dataset()
    model = train(ds, ("X1",))
    with pytest.raises(UnknownFeature):
        evaluate(model, ds, masked_features=("X2",))


# ----------------------------------------------------------------- numerics


def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    n, d, k = 6, 3, 3
    design = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d))])
    onehot = np.zeros((n, k))
    onehot[np.arange(n), rng.integers(0, k, size=n)] = 1.0
    W = rng.normal(scale=0.5, size=(k, d + 1))
    _, grad = _loss_and_grad(W, design, onehot, inverse_C=10.0)
    h = 1e-6
    for i in range(k):
        for j in range(d + 1):
            Wp, Wm = W.copy(), W.copy()
            Wp[i, j] += h
            Wm[i, j] -= h
            lp, _ = _loss_and_grad(Wp, design, onehot, inverse_C=10.0)
            lm, _ = _loss_and_grad(Wm, design, onehot, inverse_C=10.0)
            numeric = (lp - lm) / (2 * h)
            denom = max(1.0, abs(numeric), abs(grad[i, j]))
            assert abs(grad[i, j] - numeric) / denom < 1e-5


def test_loss_history_non_increasing_at_small_rate():
    ds = blob_dataset()
    cfg = TrainingConfig(learning_rate=0.005, max_iterations=200, convergence_tolerance=1e-12)
    model = train(ds, ("X1", "X2"), cfg)
    diffs = np.diff(model.loss_history)
    assert (diffs <= 1e-10).all()


def test_affine_feature_rescaling_leaves_predictions_unchanged():
    ds = blob_dataset()
    scaled_records = tuple(
        SimRecord(
            simulation_id=r.simulation_id,
            fault_class=r.fault_class,
            sample_index=r.sample_index,
            values=(3.7 * r.values[0] - 2.0, r.values[1]),
        )
        for r in ds.records
    )
    scaled = SimDataset(feature_names=ds.feature_names, records=scaled_records)
    preds_a = evaluate(train(ds, ("X1", "X2")), ds).predictions
    preds_b = evaluate(train(scaled, ("X1", "X2")), scaled).predictions
    assert preds_a == preds_b


# ------------------------------------------------------------------- trainer


def test_logistic_trainer_contract():
    ds = blob_dataset()
    trainer = LogisticTrainer()
    model = trainer.fit(ds, ("X1",), TrainingConfig())
    assert model == train(ds, ("X1",), TrainingConfig())


# ------------------------------------------------------------------ CV


def test_default_grid_includes_paperweight_c():
    assert 1000.0 in DEFAULT_C_GRID


def test_cross_validate_single_candidate():
    ds = blob_dataset()
    result = cross_validate(ds, candidate_Cs=(7.0,), k=4)
    assert result.best_C == 7.0
    assert 0.0 <= result.accuracy_for(7.0) <= 1.0


def test_cross_validate_leave_one_out_runs():
    ds = manual_dataset([0] * 6 + [1] * 6, [0, 0.1, -0.1, 0.2, -0.2, 0.05, 5, 5.1, 4.9, 5.2, 4.8, 5.05])
    result = cross_validate(ds, candidate_Cs=(1.0, 10.0), k=len(ds))
    assert result.best_C in (1.0, 10.0)


def test_cross_validate_deterministic():
    ds = blob_dataset()
    a = cross_validate(ds, k=3)
    b = cross_validate(ds, k=3)
    assert a == b


def test_cross_validate_ties_prefer_smaller_c():
    # hugely separated blobs: every C scores 1.0, so the tie rule decides
    ds = synth_generate(
        SynthConfig(
            num_features=1,
            num_fault_classes=1,
            sims_per_class=6,
            samples_per_sim=4,
            informative_features=("X1",),
            shift_magnitude=60.0,
            noise_std=0.5,
            seed=2,
        )
    )
    result = cross_validate(ds, candidate_Cs=(10.0, 100.0, 1000.0), k=3)
    assert result.best_C == 10.0
    assert result.accuracy_for(10.0) == result.accuracy_for(1000.0) == 1.0


def test_cross_validate_rejects_bad_k():
    ds = blob_dataset()
    with pytest.raises(TooFewSamples):
        cross_validate(ds, k=1)
    with pytest.raises(TooFewSamples):
        cross_validate(ds, k=len(ds) + 1)


def test_cross_validate_rejects_empty_grid():
    with pytest.raises(ValueError):
        cross_validate(blob_dataset(), candidate_Cs=())


# ------------------------------------------------------------- serialization


def test_model_doc_round_trip():
    ds = blob_dataset()
    model = train(ds, ("X1", "X2"))
    doc = json.loads(json.dumps(model_to_doc(model)))
    restored = model_from_doc(doc)
    assert restored.weights == model.weights
    assert restored.feature_set == model.feature_set
    assert restored.classes == model.classes
    assert evaluate(restored, ds).predictions == evaluate(model, ds).predictions


# ---------------------------------------------- planted-signal discriminability


def test_informative_feature_model_beats_noise_models():
    for seed in range(5):
        ds = synth_generate(
            SynthConfig(
                num_features=3,
                num_fault_classes=1,
                sims_per_class=10,
                samples_per_sim=10,
                informative_features=("X1",),
                shift_magnitude=3.0,
                noise_std=1.0,
                seed=seed,
            )
        )
        split = simulation_split(ds, SplitSpec(6, 6, 4, 4, 0, 0))
        accs = {}
        for feat in ("X1", "X2", "X3"):
            model = train(split.train, (feat,))
            accs[feat] = evaluate(model, split.validation).accuracy
        assert accs["X1"] > max(accs["X2"], accs["X3"]), f"seed {seed}: {accs}"
