import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plrank import (
    PLInstance,
    Ranking,
    convert_objective,
    environment,
    evaluate,
    is_eps_best_item,
    is_eps_best_ranking,
    is_eps_best_ranking_multiplicative,
    kendall_eps_loss,
)

GEO8 = environment("geo8")
HAR20 = environment("har20")
ARITH10 = environment("arith10")


class TestEpsBestItem:
    def test_max_item_always_qualifies(self):
        assert is_eps_best_item(GEO8, 0, 0.0)

    def test_geo8_second_item(self):
        # weight 0.875 >= 1 - 0.2
        assert is_eps_best_item(GEO8, 1, 0.2)

    def test_geo8_last_item(self):
        # weight 0.875^7 ~ 0.393 < 1 - 0.2
        assert not is_eps_best_item(GEO8, 7, 0.2)

    def test_out_of_range_item(self):
        with pytest.raises(ValueError):
            is_eps_best_item(GEO8, 8, 0.1)


class TestEpsBestRanking:
    def test_identity_on_sorted_weights(self):
        ok, bad = is_eps_best_ranking(HAR20, Ranking(range(20)), 0.0)
        assert ok and bad == []

    def test_reversed_har20_all_pairs_violate(self):
        ok, bad = is_eps_best_ranking(HAR20, Ranking(range(19, -1, -1)), 0.0)
        assert not ok
        assert len(bad) == 190

    def test_huge_eps_vacuous(self):
        spread = float(HAR20.weights.max() - HAR20.weights.min())
        ok, bad = is_eps_best_ranking(HAR20, Ranking(range(19, -1, -1)), spread + 0.01)
        assert ok and bad == []

    def test_boundary_gap_counts_as_violation(self):
        # the predicate uses a non-strict gap comparison
        inst = PLInstance([1.0, 0.6])
        ok, bad = is_eps_best_ranking(inst, Ranking([1, 0]), 0.4)
        assert not ok and bad == [(0, 1)]


class TestMultiplicative:
    def test_identity(self):
        assert is_eps_best_ranking_multiplicative(GEO8, Ranking(range(8)), 0.05)

    def test_two_item_swap(self):
        inst = PLInstance([1.0, 0.5])
        # p_01 = 2/3 >= 0.5 + 0.1
        assert not is_eps_best_ranking_multiplicative(inst, Ranking([1, 0]), 0.1)

    def test_half_eps_always_true(self):
        inst = PLInstance([1.0, 0.5])
        assert is_eps_best_ranking_multiplicative(inst, Ranking([1, 0]), 0.5)


class TestKendallLoss:
    def test_identity_is_zero(self):
        assert kendall_eps_loss(HAR20, Ranking(range(20)), 0.0) == 0.0

    def test_reversed_har20_is_one(self):
        assert kendall_eps_loss(HAR20, Ranking(range(19, -1, -1)), 0.0) == 1.0

    def test_arith10_adjacent_swaps_forgiven(self):
        # gaps of 0.1 stay under eps = 0.15, so swapping neighbours is free
        swapped = Ranking([1, 0, 3, 2, 5, 4, 7, 6, 9, 8])
        assert kendall_eps_loss(ARITH10, swapped, 0.15) == 0.0

    def test_boundary_gap_not_counted(self):
        # the loss uses a strict gap comparison
        inst = PLInstance([1.0, 0.6])
        assert kendall_eps_loss(inst, Ranking([1, 0]), 0.4) == 0.0

    def test_single_swap_value(self):
        swapped = Ranking([1, 0] + list(range(2, 20)))
        assert kendall_eps_loss(HAR20, swapped, 0.0) == pytest.approx(1 / 190)

    @given(
        weights=st.lists(st.floats(0.05, 1.0), min_size=3, max_size=6),
        seed=st.integers(0, 10**6),
        eps_pair=st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0)),
    )
    @settings(max_examples=80, deadline=None)
    def test_monotone_in_eps(self, weights, seed, eps_pair):
        inst = PLInstance(weights, normalize=True)
        order = np.random.default_rng(seed).permutation(inst.n)
        ranking = Ranking(order.tolist())
        lo, hi = sorted(eps_pair)
        assert kendall_eps_loss(inst, ranking, hi) <= kendall_eps_loss(inst, ranking, lo)


class TestLossPredicateEquivalence:
    @pytest.mark.parametrize("n", [3, 4])
    def test_exhaustive_on_gapped_instances(self, n):
        # away from the gap == eps boundary the two notions coincide
        inst = PLInstance([1.0 - 0.17 * i for i in range(n)])
        for eps in (0.05, 0.3, 0.62):
            for perm in itertools.permutations(range(n)):
                ranking = Ranking(perm)
                ok, _ = is_eps_best_ranking(inst, ranking, eps)
                loss = kendall_eps_loss(inst, ranking, eps)
                assert ok == (loss == 0.0)


class TestEvalReport:
    def test_fields_consistent(self):
        report = evaluate(GEO8, Ranking(range(8)), 0.1)
        assert report.is_eps_best
        assert report.kendall_eps_loss == 0.0
        assert report.violating_pairs == ()

    def test_violations_reported(self):
        report = evaluate(HAR20, Ranking(range(19, -1, -1)), 0.0)
        assert not report.is_eps_best
        assert report.kendall_eps_loss == 1.0
        assert len(report.violating_pairs) == 190


class TestConvertObjective:
    def test_additive_to_multiplicative(self):
        assert convert_objective(0.2, 1.0, 0.4, "additive-to-multiplicative") == pytest.approx(0.1)

    def test_multiplicative_to_additive(self):
        got = convert_objective(0.25, 1.0, 0.1, "multiplicative-to-additive")
        assert got == pytest.approx(0.11)

    def test_zero_eps_both_ways(self):
        assert convert_objective(0.3, 0.9, 0.0, "additive-to-multiplicative") == 0.0
        assert convert_objective(0.3, 0.9, 0.0, "multiplicative-to-additive") == 0.0

    @pytest.mark.parametrize("a,b,eps", [(0.5, 0.4, 0.1), (0.0, 1.0, 0.1), (0.2, 0.8, 1.0)])
    def test_domain_checks(self, a, b, eps):
        with pytest.raises(ValueError):
            convert_objective(a, b, eps, "additive-to-multiplicative")

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            convert_objective(0.2, 0.8, 0.1, "sideways")

    @pytest.mark.parametrize("n", [3, 4])
    def test_converted_tolerances_transfer_correctness(self, n):
        # demanding the multiplicative check at the converted tolerance is
        # enough to certify the additive check at eps, and vice versa
        inst = PLInstance([1.0 - 0.13 * i for i in range(n)])
        a = float(inst.weights.min())
        b = float(inst.weights.max())
        for eps in (0.1, 0.35):
            eps_mult = convert_objective(a, b, eps, "additive-to-multiplicative")
            eps_add = convert_objective(a, b, eps, "multiplicative-to-additive")
            for perm in itertools.permutations(range(n)):
                ranking = Ranking(perm)
                if is_eps_best_ranking_multiplicative(inst, ranking, eps_mult):
                    ok, _ = is_eps_best_ranking(inst, ranking, eps)
                    assert ok
                add_ok, _ = is_eps_best_ranking(inst, ranking, eps_add)
                if add_ok:
                    assert is_eps_best_ranking_multiplicative(inst, ranking, eps)


def test_geo8_weights_match_ratio_rule():
    assert GEO8.weights.tolist() == [0.875**i for i in range(8)]
    assert GEO8.weights[7] == pytest.approx(0.3927, abs=5e-5)


def test_loss_range_and_counts():
    loss = kendall_eps_loss(HAR20, Ranking(range(19, -1, -1)), 0.05)
    assert 0.0 <= loss <= 1.0
    gaps = [
        (i, j)
        for i in range(20)
        for j in range(20)
        if HAR20.weights[i] > HAR20.weights[j] + 0.05
    ]
    assert loss == pytest.approx(len(gaps) / math.comb(20, 2))
