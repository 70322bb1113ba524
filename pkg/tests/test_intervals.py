"""Tests for interval unions, the exact distance DP, and its approximation."""

import math

import numpy as np
import pytest

from activetest import (
    ActivePool,
    Distribution,
    InsufficientPoolError,
    IntervalUnion,
    LabelOracle,
    TargetFunction,
    WeightedSample,
    active_sample_size,
    exact_distance_to_intervals,
    interval_block_spec,
    interval_da,
    interval_da_plan,
    interval_da_uniform,
    interval_error_curve,
    rank_positions,
    shrink_interval_union,
)


class TestIntervalUnion:
    def test_sorted_disjoint_closed(self):
        u = IntervalUnion([[0.6, 0.8], [0.1, 0.3]])
        assert len(u) == 2
        np.testing.assert_array_equal(u.intervals, [[0.1, 0.3], [0.6, 0.8]])
        assert u.measure() == pytest.approx(0.4)
        np.testing.assert_array_equal(
            u.contains([0.0, 0.1, 0.2, 0.3, 0.5, 0.6, 0.8, 0.9]),
            [False, True, True, True, False, True, True, False],
        )
        assert u.evaluate([0.2]).dtype == np.int8

    def test_validation(self):
        with pytest.raises(ValueError):
            IntervalUnion([[0.5, 0.4]])
        with pytest.raises(ValueError):
            IntervalUnion([[0.1, 0.5], [0.4, 0.9]])
        with pytest.raises(ValueError):
            IntervalUnion([[0.0, 0.5], [0.5, 0.9]])  # touching counts as overlap

    def test_empty(self):
        u = IntervalUnion()
        assert len(u) == 0
        assert u.measure() == 0.0
        assert not u.contains([0.5])[0]

    def test_as_target_and_json(self):
        u = IntervalUnion([[0.2, 0.4]])
        tf = u.as_target()
        assert tf(0.3) == 1
        assert tf(0.5) == 0
        assert IntervalUnion.from_json(u.to_json()) == u


def _brute_interval_distance(points, weights, labels, d):
    """Minimum disagreement over all labelings with at most d runs of ones
    in sorted position order; positions must be distinct."""
    order = np.argsort(points)
    w = np.asarray(weights, dtype=float)[order]
    lab = np.asarray(labels)[order]
    n = len(lab)
    best = math.inf
    for bits in range(2**n):
        g = (bits >> np.arange(n)) & 1
        runs = int(np.count_nonzero(np.diff(np.concatenate(([0], g))) == 1))
        if runs > d:
            continue
        best = min(best, float(w[g != lab].sum()))
    return best


class TestExactDistance:
    def test_hand_instance(self):
        # ones at the ends, zero in the middle: one interval must pay
        s = WeightedSample.uniform(
            np.array([0.1, 0.3, 0.5, 0.7, 0.9]), labels=[1, 1, 0, 1, 1]
        )
        alpha2, w2 = exact_distance_to_intervals(s, 2)
        assert alpha2 == 0.0
        assert len(w2) == 2
        alpha1, w1 = exact_distance_to_intervals(s, 1)
        assert alpha1 == pytest.approx(0.2)
        assert len(w1) <= 1

    @pytest.mark.parametrize("d", [0, 1, 2, 3])
    def test_matches_brute_force(self, d):
        rng = np.random.default_rng(40 + d)
        for _ in range(25):
            n = int(rng.integers(2, 11))
            pts = rng.random(n)
            w = rng.random(n)
            w /= w.sum()
            labels = rng.integers(0, 2, size=n)
            s = WeightedSample(pts, w, labels)
            alpha, witness = exact_distance_to_intervals(s, d)
            assert alpha == pytest.approx(
                _brute_interval_distance(pts, w, labels, d), abs=1e-12
            )
            assert len(witness) <= d
            # the witness achieves the optimum on the sample
            disagreement = float(w[witness.evaluate(pts) != labels].sum())
            assert disagreement == pytest.approx(alpha, abs=1e-12)

    def test_validation(self):
        s = WeightedSample.uniform(np.array([0.5]), labels=[1])
        with pytest.raises(ValueError, match="invalid class parameter"):
            exact_distance_to_intervals(s, -1)
        with pytest.raises(ValueError, match="domain mismatch"):
            exact_distance_to_intervals(WeightedSample.uniform(np.array([0.5])), 1)
        unnormalized = WeightedSample(np.array([0.5]), np.array([0.3]), [1])
        with pytest.raises(ValueError):
            exact_distance_to_intervals(unnormalized, 1)

    def test_empty_sample_rejected(self):
        # weights of an empty sample cannot be normalized
        empty = WeightedSample(np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int8))
        with pytest.raises(ValueError):
            exact_distance_to_intervals(empty, 3)

    def test_duplicate_positions_grouped(self):
        # equal positions must share a label in any interval labeling
        s = WeightedSample.uniform(np.array([0.5, 0.5, 0.5, 0.2]), labels=[1, 0, 1, 0])
        alpha, _ = exact_distance_to_intervals(s, 3)
        assert alpha == pytest.approx(0.25)


class TestErrorCurve:
    def test_non_increasing_and_endpoints(self):
        rng = np.random.default_rng(9)
        pts = rng.random(30)
        w = np.full(30, 1 / 30)
        labels = rng.integers(0, 2, size=30)
        curve = interval_error_curve(pts, w, labels, kmax=10)
        assert curve.shape == (11,)
        assert np.all(np.diff(curve) <= 1e-15)
        assert curve[0] == pytest.approx(w[labels == 1].sum())

    def test_matches_exact_solver(self):
        rng = np.random.default_rng(10)
        pts = rng.random(12)
        w = np.full(12, 1 / 12)
        labels = rng.integers(0, 2, size=12)
        curve = interval_error_curve(pts, w, labels, kmax=5)
        s = WeightedSample(pts, w, labels)
        for k in range(6):
            assert curve[k] == pytest.approx(
                exact_distance_to_intervals(s, k)[0], abs=1e-12
            )

    def test_negative_kmax_rejected(self):
        with pytest.raises(ValueError):
            interval_error_curve(np.zeros(1), np.ones(1), np.zeros(1), -1)


class TestBlockSpec:
    def test_block_curves_match_restricted_dp(self):
        spec = interval_block_spec(4)
        rng = np.random.default_rng(3)
        pts = rng.random(40)
        labels = (pts * 7 % 1 > 0.5).astype(np.int8)
        blocks = spec.block_of(pts)
        for i in range(4):
            mask = blocks == i
            sub = WeightedSample(
                pts[mask], np.full(mask.sum(), 1 / 40.0), labels[mask]
            )
            curve = spec.cost_curve(i, sub, 3)
            expected = interval_error_curve(
                pts[mask], sub.weights, labels[mask], 3
            )
            np.testing.assert_allclose(curve, expected)

    def test_empty_block_is_free(self):
        spec = interval_block_spec(2)
        empty = WeightedSample(np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int8))
        np.testing.assert_array_equal(spec.cost_curve(0, empty, 2), np.zeros(3))


class TestShrink:
    def test_within_budget_is_identity(self):
        u = IntervalUnion([[0.1, 0.2], [0.4, 0.6]])
        assert shrink_interval_union(u, 30, 0.2) is u

    def test_drops_shortest(self):
        # 18 intervals, budget 16: valid regime since 18 <= (1 + eps/2) * 16
        intervals = [[0.05 * i, 0.05 * i + 0.0005 * (i + 1)] for i in range(18)]
        u = IntervalUnion(intervals)
        out = shrink_interval_union(u, 16, 0.25)
        # ceil(0.25 * 18 / 2) = 3 shortest intervals removed
        assert len(out) == 15
        assert out.intervals[0, 0] == pytest.approx(0.15)

    def test_regime_validation(self):
        u = IntervalUnion([[0.0, 0.1]])
        with pytest.raises(ValueError, match="parameter regime"):
            shrink_interval_union(u, 5, 0.2)  # d <= 2/eps
        too_many = IntervalUnion([[i / 40.0, i / 40.0 + 0.01] for i in range(20)])
        with pytest.raises(ValueError, match="parameter regime"):
            shrink_interval_union(too_many, 12, 0.25)


class TestRankPositions:
    def test_values_and_ties(self):
        r = rank_positions(np.array([0.9, 0.1, 0.5]))
        np.testing.assert_allclose(r, [5 / 6, 1 / 6, 0.5])
        tied = rank_positions(np.array([0.4, 0.4]))
        np.testing.assert_allclose(np.sort(tied), [0.25, 0.75])
        assert tied[0] < tied[1]  # earlier draw wins the tie


class TestPlan:
    def test_route_threshold(self):
        assert interval_da_plan(0.2, 40)["route"] == "agnostic"
        assert interval_da_plan(0.2, 41)["route"] == "composition"

    def test_agnostic_samples_do_not_depend_on_d(self):
        q = {interval_da_plan(0.2, d)["samples"] for d in (1, 7, 40)}
        assert len(q) == 1

    def test_composition_parameters(self):
        plan = interval_da_plan(0.2, 100)
        assert plan["m"] == math.floor(0.2 * 100 / 8)
        assert plan["lam"] == pytest.approx(100 / plan["m"])
        assert plan["lam_eff"] == pytest.approx(1.025 * plan["lam"])
        assert plan["eps_inner"] == pytest.approx(0.1)
        assert plan["mu"] == pytest.approx(1.05 / 1.025 - 1.0)
        assert plan["repetitions"] == 3
        # label spend is a function of eps alone
        assert (
            plan["erm_samples"]
            == interval_da_plan(0.2, 5000)["erm_samples"]
            == math.ceil(6.5e-3 * math.log(5.0) / 0.2**6)
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            interval_da_plan(0.5, 10)
        with pytest.raises(ValueError):
            interval_da_plan(0.2, -1)


def _uniform_pool(n, target, seed):
    rng = np.random.default_rng(seed)
    return ActivePool(rng.random(n), LabelOracle(target))


class TestDaUniform:
    def test_agnostic_route_zero_distance(self):
        target = IntervalUnion([[0.2, 0.3], [0.6, 0.9]]).as_target()
        plan = interval_da_plan(0.25, 8)
        pool = _uniform_pool(plan["samples"] + 10, target, seed=21)
        res = interval_da_uniform(pool, 0.25, 8, seed=22)
        assert res.alpha_hat == 0.0
        assert len(res.witness) <= 8
        assert res.queries_used == plan["samples"]
        assert res.unlabeled_used == plan["samples"]

    def test_composition_route_zero_distance(self):
        target = IntervalUnion([[0.0, 0.5]]).as_target()
        pool = _uniform_pool(1000, target, seed=23)
        res = interval_da_uniform(pool, 0.2, 100, seed=24)
        assert res.alpha_hat == 0.0
        assert res.witness is None
        plan = interval_da_plan(0.2, 100)
        assert res.queries_used == plan["erm_samples"] * plan["repetitions"]
        assert res.unlabeled_used >= res.queries_used

    def test_insufficient_pool(self):
        target = TargetFunction.constant(0)
        pool = _uniform_pool(50, target, seed=25)
        with pytest.raises(InsufficientPoolError):
            interval_da_uniform(pool, 0.2, 100, seed=26)


class TestDaWrapper:
    def test_small_budget_labels_whole_draw(self):
        union = IntervalUnion([[0.1, 0.4]])
        res = interval_da(
            Distribution.uniform01(), union.as_target(), 0.3, 2, seed=30
        )
        n_unl = active_sample_size(4, 0.3, kind="da", constant=0.1)
        assert res.unlabeled_used == n_unl
        assert res.queries_used == n_unl
        assert res.alpha_hat == 0.0
        assert res.witness is not None

    def test_large_budget_composition(self):
        union = IntervalUnion([[0.0, 0.5]])
        res = interval_da(
            Distribution.uniform01(), union.as_target(), 0.4, 100, seed=31
        )
        assert res.alpha_hat == 0.0
        assert res.witness is None
        inner = interval_da_plan(0.2, 100)
        assert res.queries_used == inner["erm_samples"] * inner["repetitions"]
        assert res.unlabeled_used == active_sample_size(
            200, 0.4, kind="da", constant=0.1
        )

    def test_accepts_oracle_and_charges_it(self):
        oracle = LabelOracle(TargetFunction.constant(1))
        res = interval_da(Distribution.uniform01(), oracle, 0.3, 1, seed=32)
        assert oracle.used == res.queries_used
        # constant 1 is a single interval: distance zero
        assert res.alpha_hat == 0.0

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            interval_da(Distribution.uniform01(), TargetFunction.constant(0), 0.6, 3)
