import logging

import numpy as np
import pytest

import pwla
from pwla import PwlaModel, ReductionPolicy, normalize, potential_weights, reduce_dimensions, row_stats, standardize_rows
from utils import ConfigError


def brute_force_weights(x):
    """Loop-by-loop transcription of normalize -> row standardization -> mean |Z|"""
    n, m = len(x), len(x[0])
    ave = [sum(x[i][j] for i in range(n)) / n for j in range(m)]
    c = [[x[i][j] / (ave[j] if ave[j] != 0 else 1.0) for j in range(m)] for i in range(n)]
    z = []
    for row in c:
        mu = sum(row) / m
        sigma = (sum((v - mu) ** 2 for v in row) / m) ** 0.5
        z.append([0.0 if sigma <= 1e-12 * max(1.0, abs(mu)) else (v - mu) / sigma for v in row])
    return [sum(abs(z[i][j]) for i in range(n)) / n for j in range(m)]


class TestXor:
    def test_normalize(self, xor):
        c = normalize(xor.features)
        np.testing.assert_array_equal(c.column_averages, [0.5, 0.5])
        np.testing.assert_array_equal(c.values[:, 0], [0, 0, 2, 2])

    def test_row_stats(self, xor):
        stats = row_stats(normalize(xor.features))
        np.testing.assert_array_equal(stats.mu, [0, 1, 1, 2])
        np.testing.assert_array_equal(stats.sigma, [0, 1, 1, 0])

    def test_weights_are_one_half(self, xor):
        model = pwla.fit(xor)
        np.testing.assert_allclose(model.weights, [0.5, 0.5], atol=1e-12)
        assert model.kept_indices == (0, 1)


def test_zero_mean_column_passes_through(caplog):
    x = np.array([[1.0, -1.0], [3.0, 1.0]])
    with caplog.at_level(logging.WARNING):
        c = normalize(x)
    assert c.degenerate_columns == (1,)
    np.testing.assert_array_equal(c.values[:, 1], [-1.0, 1.0])
    assert "zero mean" in caplog.text


def test_normalize_rejects_nan():
    with pytest.raises(ConfigError):
        normalize(np.array([[1.0, np.nan]]))


def test_standardized_rows_have_zero_mean_unit_spread(rng):
    z = standardize_rows(normalize(rng.uniform(0.5, 3.0, size=(12, 5))))
    np.testing.assert_allclose(z.mean(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=1), 1.0, atol=1e-12)


def test_constant_row_standardizes_to_zero():
    # Normalized rows are 0.2, 1.8 and 1.0 repeated; 0.2 is not exact in binary
    c = normalize(np.array([[1.0, 1.0, 1.0], [9.0, 9.0, 9.0], [5.0, 5.0, 5.0]]))
    np.testing.assert_array_equal(standardize_rows(c), np.zeros((3, 3)))
    np.testing.assert_array_equal(pwla.fit(c.values).weights, [0.0, 0.0, 0.0])


def test_repeating_value_rows_standardize_to_zero(rng):
    for value in (0.1, 0.3, 1 / 3, 2.7, 1e6 / 7):
        # Every column sums to value + 3, so row 0 stays constant after normalizing
        r = rng.uniform(0.5, 2.0, size=7)
        x = np.vstack([np.full(7, value), r, 3.0 - r])
        z = standardize_rows(normalize(x))
        np.testing.assert_array_equal(z[0], np.zeros(7))
        np.testing.assert_allclose(z[1].std(), 1.0, atol=1e-12)


def test_duplicated_attribute_gives_identical_fits(rng):
    x = rng.uniform(0.1, 10.0, size=(15, 6))
    policy = ReductionPolicy.parse("top-k:4")
    for j in range(x.shape[1]):
        widened = np.column_stack([x, x[:, j]])
        first, second = pwla.fit(widened, policy), pwla.fit(widened.copy(), policy)
        np.testing.assert_array_equal(first.weights, second.weights)
        assert first.kept_indices == second.kept_indices
        assert first.weights.shape == (7,)
        # The copy standardizes exactly like its source column
        assert first.weights[6] == first.weights[j]


def test_matches_brute_force_on_random_matrices(rng):
    for _ in range(100):
        n, m = rng.integers(1, 9), rng.integers(1, 7)
        x = rng.uniform(0.1, 10.0, size=(n, m))
        np.testing.assert_allclose(pwla.fit(x).weights, brute_force_weights(x.tolist()), rtol=0, atol=1e-12)


def test_column_rescaling_leaves_weights_unchanged(rng):
    for _ in range(20):
        x = rng.uniform(0.1, 10.0, size=(8, 5))
        scales = rng.uniform(0.01, 100.0, size=5)
        np.testing.assert_allclose(pwla.fit(x * scales).weights, pwla.fit(x).weights, atol=1e-12)


def test_column_axis_equals_raw_column_standardization(rng):
    x = rng.uniform(0.5, 4.0, size=(10, 4))
    z = standardize_rows(normalize(x), axis="column")
    raw = (x - x.mean(axis=0)) / x.std(axis=0)
    np.testing.assert_allclose(z, raw, atol=1e-12)


def test_unknown_axis():
    with pytest.raises(ConfigError):
        standardize_rows(normalize(np.ones((2, 2))), axis="diagonal")


def test_potential_weights_are_mean_absolute_values():
    np.testing.assert_array_equal(potential_weights([[1.0, -2.0], [-3.0, 0.0]]), [2.0, 1.0])


class TestReduction:
    def test_keep_all(self):
        assert reduce_dimensions([3.0, 1.0, 2.0], ReductionPolicy()) == (0, 1, 2)

    def test_top_k_ties_go_to_lower_index(self):
        assert reduce_dimensions([1.0, 2.0, 2.0, 1.0], ReductionPolicy.parse("top-k:1")) == (1,)
        assert reduce_dimensions([1.0, 2.0, 2.0, 1.0], ReductionPolicy.parse("top-k:3")) == (0, 1, 2)

    def test_top_k_is_monotone(self, rng):
        w = rng.uniform(0, 1, size=9)
        previous = set()
        for k in range(1, 10):
            kept = set(reduce_dimensions(w, ReductionPolicy(kind="top-k", k=k)))
            assert len(kept) == k
            assert previous <= kept
            previous = kept

    def test_top_k_larger_than_width(self):
        with pytest.raises(ConfigError):
            reduce_dimensions([1.0, 2.0], ReductionPolicy(kind="top-k", k=3))

    def test_above_mean(self):
        assert reduce_dimensions([1.0, 4.0, 2.0, 5.0], ReductionPolicy.parse("above-mean")) == (1, 3)

    def test_above_mean_keeps_all_equal_weights(self):
        assert reduce_dimensions([0.5, 0.5], ReductionPolicy.parse("above-mean")) == (0, 1)

    @pytest.mark.parametrize("text", ["top-k:0", "top-k:x", "bottom-k:2", "top-k:-1"])
    def test_invalid_policies(self, text):
        with pytest.raises(ConfigError):
            ReductionPolicy.parse(text)

    def test_policy_text(self):
        assert str(ReductionPolicy.parse("top-k:14")) == "top-k:14"
        assert str(ReductionPolicy.parse("Above-Mean")) == "above-mean"


def test_fit_with_reduction_keeps_largest(rng):
    x = rng.uniform(0.5, 3.0, size=(15, 6))
    model = pwla.fit(x, ReductionPolicy(kind="top-k", k=2))
    top = sorted(np.argsort(-model.weights, kind="stable")[:2].tolist())
    assert list(model.kept_indices) == top
    np.testing.assert_array_equal(model.kept_weights, model.weights[top])


def test_model_rejects_unsorted_kept_indices():
    with pytest.raises(ValueError):
        PwlaModel(column_averages=np.ones(3), weights=np.ones(3), kept_indices=(2, 0))


def test_model_from_dict_restores_weights(xor):
    restored = PwlaModel.from_dict(pwla.fit(xor).to_dict())
    np.testing.assert_array_equal(restored.weights, [0.5, 0.5])
    assert restored.axis == "row"
