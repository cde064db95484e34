import numpy as np
import pytest

from bandlime import (
    CramerResult,
    EmotionAggregate,
    aggregate,
    cramer_statistic,
    cramer_test,
)
from fixtures import make_explanation


class TestAggregate:
    def test_hand_computed_mean_and_std(self):
        exps = [make_explanation([0.1, 0.2]), make_explanation([0.3, 0.6])]
        agg = aggregate(exps, "angry")
        assert agg.emotion == "angry"
        assert agg.n_utterances == 2
        np.testing.assert_allclose(agg.mean_weights, [0.2, 0.4], atol=1e-12)
        np.testing.assert_allclose(
            agg.std_weights, [0.1 * np.sqrt(2), 0.2 * np.sqrt(2)], atol=1e-12
        )
        np.testing.assert_allclose(
            agg.weight_matrix, [[0.1, 0.2], [0.3, 0.6]], atol=1e-15
        )

    def test_random_matrix_matches_column_stats(self):
        rng = np.random.default_rng(12)
        rows = rng.normal(size=(7, 8))
        agg = aggregate([make_explanation(r) for r in rows], "angry")
        np.testing.assert_allclose(agg.mean_weights, rows.mean(axis=0), atol=1e-12)
        np.testing.assert_allclose(
            agg.std_weights, rows.std(axis=0, ddof=1), atol=1e-12
        )

    def test_single_explanation_gives_zero_std(self):
        agg = aggregate([make_explanation([0.5, -0.5])], "angry")
        assert agg.n_utterances == 1
        np.testing.assert_array_equal(agg.std_weights, [0.0, 0.0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            aggregate([], "angry")

    def test_rejects_mixed_targets(self):
        exps = [make_explanation([0.1, 0.2]), make_explanation([0.1, 0.2], "happy")]
        with pytest.raises(ValueError):
            aggregate(exps, "angry")

    def test_rejects_mixed_band_counts(self):
        exps = [make_explanation([0.1, 0.2]), make_explanation([0.1, 0.2, 0.3])]
        with pytest.raises(ValueError):
            aggregate(exps, "angry")

    def test_aggregate_validation(self):
        with pytest.raises(ValueError):
            EmotionAggregate(
                emotion="angry",
                n_utterances=3,
                mean_weights=np.zeros(2),
                std_weights=np.zeros(2),
                weight_matrix=np.zeros((2, 2)),
            )
        with pytest.raises(ValueError):
            EmotionAggregate(
                emotion="angry",
                n_utterances=2,
                mean_weights=np.zeros(2),
                std_weights=np.array([0.1, -0.1]),
                weight_matrix=np.zeros((2, 2)),
            )


class TestCramerStatistic:
    def test_singleton_hand_value(self):
        # one point at 0 vs one at 1: T = (1/2) * (1 - 0 - 0)
        assert cramer_statistic(np.array([[0.0]]), np.array([[1.0]])) == 0.5

    def test_identical_samples_give_zero(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(6, 8))
        assert cramer_statistic(X, X.copy()) == 0.0

    def test_symmetry_is_exact(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(9, 8))
        Y = rng.normal(size=(5, 8)) + 0.3
        assert cramer_statistic(X, Y) == cramer_statistic(Y, X)

    def test_row_order_invariance_is_exact(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(8, 8))
        Y = rng.normal(size=(8, 8))
        shuffled = X[rng.permutation(8)]
        assert cramer_statistic(X, Y) == cramer_statistic(shuffled, Y)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(10, 8))
        Y = rng.normal(size=(10, 8)) + 1.0
        Q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        t0 = cramer_statistic(X, Y)
        t1 = cramer_statistic(X @ Q, Y @ Q)
        assert abs(t0 - t1) <= 1e-9

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(10, 4))
        Y = rng.normal(size=(10, 4)) + 0.5
        t0 = cramer_statistic(X, Y)
        t3 = cramer_statistic(3.0 * X, 3.0 * Y)
        assert abs(t3 - 3.0 * t0) <= 1e-9 * max(1.0, abs(t3))

    def test_grows_with_separation(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(10, 8))
        noise = rng.normal(size=(10, 8))
        values = [cramer_statistic(X, noise + shift) for shift in (0.0, 1.0, 2.0, 4.0)]
        assert values == sorted(values)

    def test_accepts_1d_inputs(self):
        assert cramer_statistic(np.array([0.0]), np.array([1.0])) == 0.5

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cramer_statistic(np.zeros((3, 2)), np.zeros((3, 3)))


class TestCramerTest:
    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(10, 8))
        Y = rng.normal(size=(10, 8))
        a = cramer_test(X, Y, seed=7, n_permutations=200)
        b = cramer_test(X, Y, seed=7, n_permutations=200)
        assert a == b

    def test_identical_samples_never_reject(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(10, 8))
        result = cramer_test(X, X.copy(), n_permutations=200, seed=0)
        assert result.statistic == 0.0
        assert result.p_value == 1.0
        assert not result.reject

    def test_clear_separation_rejects(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(10, 8))
        Y = rng.normal(size=(10, 8)) + 2.0
        result = cramer_test(X, Y, alpha=0.05, n_permutations=500, seed=1)
        assert result.reject
        assert result.statistic > result.critical_value
        assert result.p_value <= 0.05

    def test_p_value_granularity(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(5, 3))
        Y = rng.normal(size=(5, 3)) + 5.0
        result = cramer_test(X, Y, n_permutations=99, seed=2)
        scaled = result.p_value * 100
        assert abs(scaled - round(scaled)) <= 1e-9
        assert result.p_value >= 0.01

    def test_result_metadata(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(6, 2))
        Y = rng.normal(size=(4, 2))
        result = cramer_test(X, Y, alpha=0.1, n_permutations=150, seed=3)
        assert result.alpha == 0.1
        assert result.n_permutations == 150

    def test_rejects_tiny_samples(self):
        with pytest.raises(ValueError):
            cramer_test(np.zeros((1, 2)), np.zeros((5, 2)))

    def test_rejects_too_few_permutations(self):
        with pytest.raises(ValueError):
            cramer_test(np.zeros((5, 2)), np.ones((5, 2)), n_permutations=50)

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            cramer_test(np.zeros((5, 2)), np.ones((5, 2)), alpha=1.5)

    def test_result_consistency_enforced(self):
        with pytest.raises(ValueError):
            CramerResult(
                statistic=0.1,
                critical_value=0.5,
                p_value=0.5,
                alpha=0.05,
                n_permutations=100,
                reject=True,
            )
