"""Tests for metric spaces, k-NN predictors, and the loss estimators."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activetest import (
    KnnInstance,
    LabelOracle,
    MetricSpace,
    TargetFunction,
    best_k,
    best_k_grid,
    chernoff_iterations,
    estimate_hard_error,
    estimate_loss_lipschitz,
    estimate_soft_loss_pth,
    estimate_weighted_nn_loss,
    exact_hard_error,
    exact_soft_loss,
    exact_soft_loss_table,
    exact_weighted_nn_loss,
    id_distribution,
    knn_instance_from_json,
    knn_instance_to_json,
    knn_predict_hard,
    knn_predict_soft,
    lipschitz_inner_samples,
    loss_stability_bound,
    median_repetitions,
    verify_triangle,
)


@pytest.fixture
def line_instance():
    coords = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    labels = [0, 0, 1, 1, 0, 1]
    return KnnInstance(
        MetricSpace.euclidean1d(coords),
        np.arange(6),
        LabelOracle(TargetFunction.from_labels(labels)),
    )


class TestMetricSpace:
    def test_euclidean_cross(self):
        space = MetricSpace.euclidean1d([0.0, 0.5, 2.0])
        np.testing.assert_allclose(space.cross([0, 2], [1]), [[0.5], [1.5]])
        assert space.dist(0, 2) == 2.0
        assert space.n == 3

    def test_explicit_matrix(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        space = MetricSpace.explicit(m)
        assert space.dist(0, 1) == 1.0
        assert verify_triangle(space)

    def test_id_range_checked(self):
        space = MetricSpace.euclidean1d([0.0, 1.0])
        with pytest.raises(ValueError, match="domain mismatch"):
            space.cross([0], [2])

    def test_triangle_violation_detected(self):
        bad = np.array(
            [[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]]
        )
        assert not verify_triangle(MetricSpace.explicit(bad))

    def test_triangle_sampled_path(self):
        rng = np.random.default_rng(0)
        coords = rng.random(600)
        m = np.abs(coords[:, None] - coords[None, :])
        assert verify_triangle(MetricSpace.explicit(m), samples=5000, seed=1)


class TestKnnInstance:
    def test_ranking_prefix_property(self, line_instance):
        lesser = line_instance.neighbor_ids([3], 2)
        greater = line_instance.neighbor_ids([3], 4)
        np.testing.assert_array_equal(greater[:, :2], lesser)

    def test_stable_tie_break(self):
        space = MetricSpace.euclidean1d([0.0, 1.0, -1.0])
        inst = KnnInstance(space, [1, 2], TargetFunction.from_labels([0, 0, 0]))
        # both pool points are at distance 1 from id 0: earlier pool slot wins
        np.testing.assert_array_equal(inst.neighbor_ids([0], 1), [[1]])

    def test_empty_pool_rejected(self):
        space = MetricSpace.euclidean1d([0.0, 1.0])
        with pytest.raises(ValueError):
            KnnInstance(space, [], TargetFunction.constant(0))

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=12, unique=True))
    def test_ranking_sorts_distances(self, coords):
        space = MetricSpace.euclidean1d(coords)
        inst = KnnInstance(
            space, np.arange(len(coords)), TargetFunction.constant(0)
        )
        rank = inst.ranking(np.arange(len(coords)))
        d = space.cross(np.arange(len(coords)), np.arange(len(coords)))
        sorted_d = np.take_along_axis(d, rank, axis=1)
        assert np.all(np.diff(sorted_d, axis=1) >= 0)


class TestPredictors:
    def test_soft_and_hard(self, line_instance):
        # neighbors of id 2 at k=3: ids 2, 1, 3 -> labels 1, 0, 1
        assert knn_predict_soft(line_instance, 2, 3) == pytest.approx(2 / 3)
        assert knn_predict_hard(line_instance, 2, 3) == 1
        # exact tie votes 0
        assert knn_predict_soft(line_instance, 2, 2) == pytest.approx(0.5)
        assert knn_predict_hard(line_instance, 2, 2) == 0

    def test_k_validation(self, line_instance):
        with pytest.raises(ValueError, match="invalid k"):
            knn_predict_soft(line_instance, 0, 0)
        with pytest.raises(ValueError, match="invalid k"):
            knn_predict_soft(line_instance, 0, 7)


class TestSoftLossEstimator:
    def test_exact_query_count_and_iterations(self, line_instance):
        eps, p = 0.2, 2
        est = estimate_soft_loss_pth(
            line_instance, id_distribution(np.arange(6)), 3, p, eps, seed=5
        )
        t = chernoff_iterations(eps, 1 / 3)
        assert est.iterations == t
        assert est.queries_used == t * (p + 1)
        assert line_instance.oracle.used == est.queries_used
        assert 0.0 <= est.value <= 1.0

    def test_zero_loss_instance(self):
        inst = KnnInstance(
            MetricSpace.euclidean1d(np.arange(5.0)),
            np.arange(5),
            TargetFunction.constant(1),
        )
        est = estimate_soft_loss_pth(
            inst, id_distribution(np.arange(5)), 2, 1, 0.3, seed=6
        )
        assert est.value == 0.0

    def test_reproducible(self, line_instance):
        dist = id_distribution(np.arange(6))
        a = estimate_soft_loss_pth(line_instance, dist, 3, 1, 0.25, seed=7)
        b = estimate_soft_loss_pth(line_instance, dist, 3, 1, 0.25, seed=7)
        assert a.value == b.value

    def test_near_exact_loss_at_small_eps(self, line_instance):
        dist = id_distribution(np.arange(6))
        truth = exact_soft_loss(line_instance, np.arange(6), None, 3, 1)
        est = estimate_soft_loss_pth(line_instance, dist, 3, 1, 0.05, seed=8)
        assert est.value == pytest.approx(truth, abs=0.05)


class TestExactOracles:
    def test_table_matches_single_k(self, line_instance):
        table = exact_soft_loss_table(line_instance, np.arange(6), None, 2)
        assert table.shape == (6,)
        for k in (1, 3, 6):
            assert table[k - 1] == pytest.approx(
                exact_soft_loss(line_instance, np.arange(6), None, k, 2)
            )

    def test_hard_error_hand_value(self, line_instance):
        # k=1 on the pool itself: every point is its own neighbor
        assert exact_hard_error(line_instance, np.arange(6), None, 1) == 0.0

    def test_weighted_probs(self, line_instance):
        probs = np.array([1.0, 0, 0, 0, 0, 0])
        val = exact_hard_error(line_instance, np.arange(6), probs, 3)
        # id 0 neighbors at k=3: 0,1,2 -> vote 0, truth 0
        assert val == 0.0

    def test_oracle_not_charged(self, line_instance):
        exact_soft_loss_table(line_instance, np.arange(6), None, 3)
        exact_hard_error(line_instance, np.arange(6), None, 3)
        assert line_instance.oracle.used == 0


class TestHardErrorEstimator:
    def test_exact_query_count(self, line_instance):
        eps, k = 0.25, 3
        est = estimate_hard_error(
            line_instance, id_distribution(np.arange(6)), k, eps, seed=9
        )
        t = chernoff_iterations(eps, 1 / 3)
        assert est.queries_used == t * (k + 1)

    def test_zero_error_instance(self):
        inst = KnnInstance(
            MetricSpace.euclidean1d(np.arange(4.0)),
            np.arange(4),
            TargetFunction.constant(0),
        )
        est = estimate_hard_error(inst, id_distribution(np.arange(4)), 2, 0.3, seed=10)
        assert est.value == 0.0


class TestLipschitzEstimator:
    def test_inner_sample_formula(self):
        t = 50
        assert lipschitz_inner_samples(2.0, 0.2, t) == math.ceil(
            2.0 * 4.0 * math.log(12.0 * t) / 0.04
        )
        with pytest.raises(ValueError):
            lipschitz_inner_samples(0.0, 0.2, 10)

    def test_query_count_and_zero_loss(self):
        inst = KnnInstance(
            MetricSpace.euclidean1d(np.arange(6.0)),
            np.arange(6),
            TargetFunction.constant(0),
        )
        eps = 0.3
        est = estimate_loss_lipschitz(
            inst, id_distribution(np.arange(6)), 3, lambda z: z, 1.0, eps, seed=11
        )
        t = chernoff_iterations(eps / 2, 1 / 6)
        w = lipschitz_inner_samples(1.0, eps, t)
        assert est.iterations == t
        assert est.queries_used == t * (w + 1)
        assert est.value == 0.0


class TestWeightedNnEstimator:
    def test_matches_uniform_k_sampling_in_value(self, line_instance):
        # weights = indicator of the 3 nearest reproduces the soft 3-NN loss
        truth = exact_soft_loss(line_instance, np.arange(6), None, 3, 1)

        def weights_of(dists):
            cut = np.sort(dists)[2]
            w = (dists <= cut).astype(float)
            return w

        wnn = exact_weighted_nn_loss(
            line_instance, weights_of, np.arange(6), None, 1
        )
        assert wnn == pytest.approx(truth)

        est = estimate_weighted_nn_loss(
            line_instance, weights_of, id_distribution(np.arange(6)), 1, 0.1, seed=12
        )
        t = chernoff_iterations(0.1, 1 / 3)
        assert est.queries_used == t * 2
        assert est.value == pytest.approx(truth, abs=0.1)

    def test_degenerate_weights_rejected(self, line_instance):
        with pytest.raises(ValueError, match="degenerate weights"):
            estimate_weighted_nn_loss(
                line_instance,
                lambda d: np.zeros(6),
                id_distribution(np.arange(6)),
                1,
                0.3,
                seed=13,
            )


class TestBestK:
    def test_grid_shape(self):
        grid = best_k_grid(200, 2, 0.2)
        assert grid[0] == 1
        assert grid == sorted(set(grid))
        assert all(1 <= k <= 200 for k in grid)
        r = 2 / (2 - 0.2 / 3)
        assert math.floor(r ** len(grid)) >= 1

    def test_grid_covers_every_k_within_ratio(self):
        eps, p, n = 0.3, 1, 60
        grid = best_k_grid(n, p, eps)
        r = p / (p - eps / 3)
        for k in range(1, n + 1):
            assert any(g <= k <= g * r or k <= g <= k * r for g in grid)

    def test_search_returns_grid_point_and_table(self):
        rng = np.random.default_rng(14)
        coords = rng.random(40)
        labels = (coords > 0.5).astype(int)
        inst = KnnInstance(
            MetricSpace.euclidean1d(coords),
            np.arange(40),
            TargetFunction.from_labels(labels),
        )
        k_star, table = best_k(inst, id_distribution(np.arange(40)), 1, 0.3, seed=15)
        grid = best_k_grid(40, 1, 0.3)
        assert [k for k, _ in table] == grid
        assert k_star in grid
        reps = median_repetitions(1 / (9 * len(grid)))
        t = chernoff_iterations(0.1, 1 / 3)
        assert inst.oracle.used == reps * t * (1 + len(grid) * 1)

    def test_stability_bound(self):
        assert loss_stability_bound(2, 10, 20) == 2 * (1 - 0.5)
        assert loss_stability_bound(1, 5, 5) == 0.0
        with pytest.raises(ValueError):
            loss_stability_bound(1, 10, 5)

    def test_stability_bound_holds_on_exact_table(self):
        rng = np.random.default_rng(16)
        coords = rng.random(20)
        inst = KnnInstance(
            MetricSpace.euclidean1d(coords),
            np.arange(20),
            TargetFunction.from_labels(rng.integers(0, 2, size=20)),
        )
        for p in (1, 2):
            table = exact_soft_loss_table(inst, np.arange(20), None, p)
            for k1 in range(1, 21):
                for k2 in range(k1, 21):
                    bound = loss_stability_bound(p, k1, k2)
                    assert abs(table[k1 - 1] - table[k2 - 1]) <= bound + 1e-12


class TestJson:
    def test_euclidean_round_trip(self, line_instance):
        text = knn_instance_to_json(line_instance)
        back = knn_instance_from_json(text)
        np.testing.assert_array_equal(back.pool, line_instance.pool)
        np.testing.assert_array_equal(
            back.oracle.target.eval_many(np.arange(6)),
            line_instance.oracle.target.eval_many(np.arange(6)),
        )
        assert back.space.kind == "euclidean1d"

    def test_explicit_round_trip(self):
        m = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
        inst = KnnInstance(
            MetricSpace.explicit(m), [0, 2], TargetFunction.from_labels([1, 0, 1])
        )
        back = knn_instance_from_json(knn_instance_to_json(inst))
        np.testing.assert_array_equal(back.space.matrix, m)
        np.testing.assert_array_equal(back.pool, [0, 2])

    def test_unknown_metric_rejected(self):
        payload = json.dumps(
            {"metric": "hyperbolic", "points": [0], "pool_indices": [0], "labels": [0]}
        )
        with pytest.raises(ValueError):
            knn_instance_from_json(payload)
