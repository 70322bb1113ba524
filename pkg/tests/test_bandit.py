"""Tests for Bernoulli arms, good-arm counting, and the star constructions."""

import json
import math

import numpy as np
import pytest

from activetest import (
    ArmSet,
    KnnInstance,
    aga_schedule,
    build_star_instance_hard,
    build_star_instance_soft,
    chernoff_iterations,
    exact_hard_error,
    hard_gamma,
    natural_aga,
    pull,
    pull_many,
    recover_good_fraction,
    star_exact_hard_error,
    star_hard_plan,
    star_instance_from_json,
    star_instance_to_json,
    star_metadata,
    star_soft_plan,
    verify_triangle,
)


class TestArmSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            ArmSet([])
        with pytest.raises(ValueError):
            ArmSet([0.5, 1.2])
        with pytest.raises(ValueError):
            ArmSet([0.5], gamma=0.7)

    def test_good_mask(self):
        arms = ArmSet([0.9, 0.1, 0.7])
        np.testing.assert_array_equal(arms.good_mask(0.2), [True, False, True])

    def test_good_mask_regime_violation(self):
        arms = ArmSet([0.9, 0.55])
        with pytest.raises(ValueError, match="parameter regime violated"):
            arms.good_mask(0.2)

    def test_pull_counters_and_determinism_at_extremes(self):
        arms = ArmSet([0.0, 1.0])
        assert pull(arms, 0, seed=0) == 0
        draws = pull_many(arms, 1, 5, seed=1)
        np.testing.assert_array_equal(draws, np.ones(5))
        np.testing.assert_array_equal(arms.pulls, [1, 5])
        with pytest.raises(ValueError):
            pull(arms, 2)
        with pytest.raises(ValueError):
            pull_many(arms, 0, -1)


class TestAgaSchedule:
    def test_formula(self):
        eps, gamma = 0.1, 0.2
        s, q = aga_schedule(eps, gamma)
        assert s == chernoff_iterations(eps / 2, 1 / 6)
        assert q == math.ceil(math.log(12 * s) / (2 * gamma**2))

    def test_validation(self):
        with pytest.raises(ValueError):
            aga_schedule(0.0, 0.2)
        with pytest.raises(ValueError):
            aga_schedule(0.1, 0.6)


class TestNaturalAga:
    def test_extremes_are_exact(self):
        all_good = ArmSet(np.full(7, 0.9))
        assert natural_aga(all_good, 0.3, 0.2, seed=2) == 1.0
        all_bad = ArmSet(np.full(7, 0.1))
        assert natural_aga(all_bad, 0.3, 0.2, seed=3) == 0.0

    def test_pull_count_is_schedule_product(self):
        arms = ArmSet(np.where(np.arange(10) < 5, 0.9, 0.1))
        out = natural_aga(arms, 0.4, 0.2, seed=4)
        s, q = aga_schedule(0.2, 0.4)
        assert arms.pulls.sum() == s * q
        assert abs(out - 0.5) <= 0.2

    def test_gap_violation_spends_nothing(self):
        arms = ArmSet([0.9, 0.5])
        with pytest.raises(ValueError, match="parameter regime violated"):
            natural_aga(arms, 0.2, 0.1, seed=5)
        assert arms.pulls.sum() == 0


class TestPlans:
    def test_hard_gamma(self):
        assert hard_gamma(100, 0.2) == pytest.approx(
            math.sqrt(math.log(5.0) / 100)
        )
        assert hard_gamma(1, 0.2, constant=10.0) == 0.5
        with pytest.raises(ValueError):
            hard_gamma(0, 0.2)

    def test_soft_plan_formulas(self):
        plan = star_soft_plan(2, 0.25, constants=(1.0, 0.5, 0.1))
        assert plan["k"] == math.ceil(4 / 0.0625)
        assert plan["b"] == math.ceil(6 / 0.25)
        assert plan["N"] == math.ceil(0.5 * (1 + plan["b"]) * plan["k"])
        assert plan["m"] == math.ceil(0.1 * plan["N"] ** 2 / (1 + plan["b"]))
        assert plan["points"] == plan["m"] * (1 + plan["b"])

    def test_hard_plan_formulas(self):
        plan = star_hard_plan(4, 3, 0.25, constants=(0.5, 0.01))
        assert plan["b"] == math.ceil(3 / 0.25)
        assert plan["N"] == math.ceil(0.5 * (1 + plan["b"]) * 4 * (3 + math.log(4.0)))
        assert plan["m"] == math.ceil(0.01 * plan["N"] ** 2 / ((1 + plan["b"]) * 4))
        assert plan["points"] == 4 * plan["m"] * (1 + plan["b"])

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            star_soft_plan(0, 0.2)
        with pytest.raises(ValueError):
            star_hard_plan(2, 2, 0.2, constants=(0.0, 1.0))


def _tiny_hard_instance(seed=7):
    return build_star_instance_hard(
        2, [0.9, 0.1], 2, 0.3, constants=(0.2, 0.5), seed=seed
    )


class TestStarGeometry:
    def test_distance_structure(self):
        si = _tiny_hard_instance()
        space = si.instance.space
        m, size = si.m, space.star_size
        # two centers of star 0
        assert space.dist(0, 1) == 1.0
        # two leaves of star 0
        assert space.dist(m, m + 1) == 2.0
        # center to a leaf of its own star: that center's radius
        assert space.dist(0, m) == pytest.approx(space.radii[0])
        assert 1.0 < space.dist(0, m) < 2.0
        # across stars
        assert space.dist(0, size) == 10.0
        assert space.dist(0, 0) == 0.0

    def test_is_a_metric(self):
        si = _tiny_hard_instance()
        assert verify_triangle(si.instance.space.to_explicit())

    def test_labels_and_pool(self):
        si = _tiny_hard_instance()
        assert np.all(si.labels[si.leaf_ids] == 0)
        assert si.instance.pool.shape == (si.N,)
        assert si.center_ids.shape == (2 * si.m,)
        assert si.leaf_ids.shape == (2 * si.m * si.b,)

    def test_soft_construction_labels(self):
        si = build_star_instance_soft(1, 0.3, 0.0, constants=(1.0, 0.5, 0.02), seed=8)
        assert si.n == 1
        assert np.all(si.labels[si.leaf_ids] == 1)
        assert np.all(si.labels[si.center_ids] == 0)  # coin mean zero
        sure = build_star_instance_soft(1, 0.3, 1.0, constants=(1.0, 0.5, 0.02), seed=8)
        assert np.all(sure.labels == 1)
        with pytest.raises(ValueError):
            build_star_instance_soft(1, 0.3, 1.5)


class TestStarHardError:
    def test_matches_full_enumeration(self):
        si = _tiny_hard_instance()
        fast = star_exact_hard_error(si, si.k)
        explicit = KnnInstance(
            si.instance.space.to_explicit(), si.instance.pool, si.instance.oracle
        )
        slow = exact_hard_error(
            explicit, np.arange(si.instance.space.n), None, si.k
        )
        assert fast == pytest.approx(slow, abs=1e-12)

    def test_invalid_k(self):
        si = _tiny_hard_instance()
        with pytest.raises(ValueError, match="invalid k"):
            star_exact_hard_error(si, 0)

    def test_recover_good_fraction(self):
        assert recover_good_fraction(0.25, 4) == pytest.approx(0.3125)
        assert recover_good_fraction(0.99, 2) == 1.0
        assert recover_good_fraction(-0.1, 2) == 0.0
        with pytest.raises(ValueError):
            recover_good_fraction(0.5, 0)


class TestStarJson:
    def test_round_trip(self):
        si = _tiny_hard_instance()
        back = star_instance_from_json(star_instance_to_json(si))
        assert star_metadata(back) == star_metadata(si)
        np.testing.assert_array_equal(back.labels, si.labels)
        np.testing.assert_array_equal(back.instance.pool, si.instance.pool)
        np.testing.assert_allclose(
            back.instance.space.radii, si.instance.space.radii
        )
        assert star_exact_hard_error(back, si.k) == star_exact_hard_error(si, si.k)

    def test_wrong_metric_rejected(self):
        with pytest.raises(ValueError):
            star_instance_from_json(json.dumps({"metric": "euclidean1d"}))

    def test_label_shape_checked(self):
        si = _tiny_hard_instance()
        obj = json.loads(star_instance_to_json(si))
        obj["labels"] = obj["labels"][:-1]
        with pytest.raises(ValueError):
            star_instance_from_json(json.dumps(obj))
