import numpy as np
import pytest

import pwla
import smffnn
from pwla import PwlaModel, ReductionPolicy
from smffnn import SmffnnModel, evaluate, fit_thresholds, predict, predict_many, score, stack_table
from utils import ConfigError


def identity_model(scores, labels, rule="nearest"):
    """One-attribute model whose score equals the raw value"""
    base = PwlaModel(column_averages=np.ones(1), weights=np.ones(1), kept_indices=(0,))
    return SmffnnModel(pwla=base, scores=np.asarray(scores, dtype=float), labels=np.asarray(labels), rule=rule)


@pytest.fixture
def xor_model(xor):
    return fit_thresholds(pwla.fit(xor), xor)


class TestXor:
    def test_scores(self, xor):
        model = pwla.fit(xor)
        assert [score(model, row) for row in xor.features] == [0.0, 1.0, 1.0, 2.0]

    def test_score_table(self, xor_model):
        assert xor_model.score_table == [(0.0, 0), (1.0, 1), (1.0, 1), (2.0, 0)]
        assert xor_model.epochs == 1

    def test_every_row_gets_its_label(self, xor, xor_model):
        assert [predict(xor_model, row) for row in xor.features] == [0, 1, 1, 0]

    def test_self_evaluation(self, xor, xor_model):
        accuracy, predictions = evaluate(xor_model, xor)
        assert accuracy == 1.0
        assert predictions == [0, 1, 1, 0]

    def test_stack_table_descending(self, xor_model):
        assert stack_table(xor_model) == [(2.0, 1.0), (0.0, 1.0)]


class TestNearestRule:
    def test_equal_distance_goes_to_class_one(self):
        assert predict(identity_model([0.0, 2.0], [0, 1]), [1.0]) == 1

    def test_nearest_score_wins(self):
        assert predict(identity_model([0.0, 2.0], [0, 1]), [0.4]) == 0

    def test_majority_at_minimal_distance(self):
        assert predict(identity_model([1.0, 1.0, 3.0], [0, 0, 1]), [1.0]) == 0

    def test_conflicting_equal_scores_go_to_class_one(self):
        assert predict(identity_model([1.0, 1.0, 5.0], [0, 1, 0]), [1.2]) == 1

    def test_outside_the_table(self):
        model = identity_model([1.0, 2.0, 3.0], [1, 0, 0])
        assert predict(model, [-50.0]) == 1
        assert predict(model, [50.0]) == 0


class TestIntervalRule:
    @pytest.fixture
    def model(self):
        return identity_model([0.0, 1.0, 3.0, 4.0, 6.0], [0, 0, 1, 1, 0], rule="interval")

    @pytest.mark.parametrize("value,label", [(-10.0, 0), (1.9, 0), (2.0, 1), (4.9, 1), (5.0, 1), (5.5, 0), (99.0, 0)])
    def test_runs_and_boundaries(self, model, value, label):
        assert predict(model, [value]) == label

    def test_boundaries(self, model):
        boundaries, labels = model.interval_runs
        assert boundaries.tolist() == [2.0, 5.0]
        assert labels.tolist() == [0, 1, 0]

    def test_with_rule_switches(self, model):
        assert predict(model.with_rule("nearest"), [2.0]) == 1
        assert predict(model.with_rule("nearest"), [1.4]) == 0


def test_training_visits_each_instance_once(two_blobs, xor):
    for ds in (two_blobs, xor):
        visits = []
        fit_thresholds(pwla.fit(ds), ds, on_visit=visits.append)
        assert visits == list(range(ds.n_instances))


def test_stacks_partition_the_score_table(two_blobs):
    model = fit_thresholds(pwla.fit(two_blobs), two_blobs)
    assert model.stack0.size + model.stack1.size == two_blobs.n_instances
    assert model.stack0.size == 20
    assert np.all(np.diff(model.scores) >= 0)


def test_predictions_survive_column_rescaling(two_blobs, rng):
    scales = rng.uniform(0.1, 50.0, size=two_blobs.n_attributes)
    scaled = two_blobs.with_features(two_blobs.features * scales)
    plain = fit_thresholds(pwla.fit(two_blobs), two_blobs)
    rescaled = fit_thresholds(pwla.fit(scaled), scaled)
    np.testing.assert_allclose(rescaled.scores, plain.scores, atol=1e-12)
    np.testing.assert_array_equal(predict_many(rescaled, scaled.features), predict_many(plain, two_blobs.features))


def test_dropped_attributes_do_not_affect_scores(two_blobs):
    model = pwla.fit(two_blobs, ReductionPolicy(kind="top-k", k=2))
    dropped = [i for i in range(two_blobs.n_attributes) if i not in model.kept_indices]
    row = two_blobs.features[0].copy()
    changed = row.copy()
    changed[dropped] += 100.0
    assert score(model, changed) == score(model, row)


def test_separable_data_is_learned(two_blobs):
    model = fit_thresholds(pwla.fit(two_blobs), two_blobs)
    accuracy, _ = evaluate(model, two_blobs)
    assert accuracy >= 0.9


def test_serialized_model_predicts_the_same(two_blobs):
    model = fit_thresholds(pwla.fit(two_blobs), two_blobs)
    restored = SmffnnModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(predict_many(restored, two_blobs.features), predict_many(model, two_blobs.features))


def test_wrong_width_rejected(xor_model):
    with pytest.raises(ConfigError):
        predict(xor_model, [1.0, 0.0, 1.0])


def test_unsorted_table_rejected():
    with pytest.raises(ValueError):
        identity_model([2.0, 1.0], [0, 1])


def test_unknown_rule_rejected():
    with pytest.raises(ConfigError):
        identity_model([1.0, 2.0], [0, 1], rule="furthest")


def test_score_rows_matches_single_scores(two_blobs):
    model = pwla.fit(two_blobs)
    expected = [score(model, row) for row in two_blobs.features]
    np.testing.assert_allclose(smffnn.score_rows(model, two_blobs.features), expected, atol=1e-12)


def test_normalized_score_is_additive(two_blobs, rng):
    model = pwla.fit(two_blobs, ReductionPolicy.parse("top-k:3"))
    for _ in range(50):
        c1, c2 = rng.uniform(0.0, 3.0, size=(2, two_blobs.n_attributes))
        total = smffnn.score_normalized(model, c1 + c2)
        parts = smffnn.score_normalized(model, c1) + smffnn.score_normalized(model, c2)
        assert abs(total - parts) <= 1e-12


def test_raw_score_equals_normalized_score(two_blobs):
    model = pwla.fit(two_blobs, ReductionPolicy.parse("above-mean"))
    row = two_blobs.features[3]
    assert score(model, row) == smffnn.score_normalized(model, row / model.column_averages)


def test_normalized_score_rejects_wrong_width(two_blobs):
    model = pwla.fit(two_blobs)
    with pytest.raises(ConfigError):
        smffnn.score_normalized(model, np.ones(two_blobs.n_attributes + 1))
