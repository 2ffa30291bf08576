"""Classical test statistics against hand computations and brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsynth.data import load_cardio_csv
from dpsynth.rng import RandomSource
from dpsynth.stattests import (
    FailureReason,
    TestOutcome,
    chi_squared,
    mann_whitney_u,
    median_test,
    t_test,
    u_statistic,
)


def brute_force_u(x, y) -> float:
    """Pair-count oracle: x-wins plus half the ties, counted one pair at a time."""
    u = 0.0
    for xi in x:
        for yj in y:
            if xi > yj:
                u += 1.0
            elif xi == yj:
                u += 0.5
    return u


small_group = st.lists(st.integers(0, 6).map(float), min_size=1, max_size=12)


class TestOutcomeContract:
    def test_infeasible_cannot_carry_p(self):
        with pytest.raises(ValueError):
            TestOutcome(1.0, 0.5, False, FailureReason.SINGLE_CLASS)

    def test_feasible_requires_p(self):
        with pytest.raises(ValueError):
            TestOutcome(1.0, None, True)

    def test_reason_must_match_flag(self):
        with pytest.raises(ValueError):
            TestOutcome(1.0, 0.5, True, FailureReason.CONSTANT_VALUES)


class TestMannWhitney:
    def test_separated_groups(self):
        out = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert out.statistic == 0.0
        # z = (0 - 4.5 + 0.5)/sqrt(5.25) = -1.7457
        assert out.p_value == pytest.approx(0.0809, abs=5e-4)

    def test_constant_values_infeasible(self):
        out = mann_whitney_u([5, 5, 5], [5, 5, 5])
        assert not out.feasible
        assert out.failure_reason is FailureReason.CONSTANT_VALUES

    def test_empty_group_infeasible(self):
        out = mann_whitney_u([], [1.0, 2.0])
        assert out.failure_reason is FailureReason.SINGLE_CLASS

    @given(small_group, small_group)
    def test_matches_brute_force_pair_counting(self, x, y):
        assert u_statistic(x, y) == brute_force_u(x, y)

    @given(small_group, small_group)
    def test_complement_identity(self, x, y):
        assert u_statistic(x, y) + u_statistic(y, x) == len(x) * len(y)

    @given(small_group, small_group)
    def test_permutation_invariance_within_groups(self, x, y):
        rng = np.random.default_rng(0)
        out = mann_whitney_u(x, y)
        shuffled = mann_whitney_u(rng.permutation(x), rng.permutation(y))
        assert out.feasible == shuffled.feasible
        if out.feasible:
            assert out.statistic == shuffled.statistic
            assert out.p_value == shuffled.p_value

    def test_cardio_bmi_statistic(self, cardio_path):
        data = load_cardio_csv(cardio_path)
        out = mann_whitney_u(data.group_values(1), data.group_values(0))
        assert out.statistic == 471_500_929.50


class TestTTest:
    def test_hand_computed_example(self):
        out = t_test([1, 2, 3], [2, 3, 4])
        assert out.statistic == pytest.approx(-1.2247, abs=1e-3)
        assert out.p_value == pytest.approx(0.288, abs=1e-2)

    def test_identical_lists_give_p_one(self):
        out = t_test([1, 2, 3], [1, 2, 3])
        assert out.statistic == 0.0
        assert out.p_value == 1.0

    def test_zero_variance_infeasible(self):
        out = t_test([1, 1], [1, 1])
        assert out.failure_reason is FailureReason.CONSTANT_VALUES

    def test_small_group_infeasible(self):
        assert t_test([1.0], [1, 2, 3]).failure_reason is FailureReason.SINGLE_CLASS

    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=20),
        st.lists(st.floats(-10, 10), min_size=2, max_size=20),
    )
    def test_symmetric_under_group_swap(self, x, y):
        a, b = t_test(x, y), t_test(y, x)
        if a.feasible:
            assert b.p_value == pytest.approx(a.p_value, rel=1e-12)
            assert b.statistic == pytest.approx(-a.statistic, rel=1e-12)


class TestChiSquared:
    def test_uniform_table(self):
        out = chi_squared([[10, 10], [10, 10]])
        assert out.statistic == 0.0
        assert out.p_value == 1.0

    def test_yates_example(self):
        out = chi_squared([[20, 5], [5, 20]])
        assert out.statistic == pytest.approx(15.68, abs=1e-12)
        assert out.p_value == pytest.approx(7.5e-5, abs=1e-5)

    def test_low_expected_frequency(self):
        out = chi_squared([[2, 8], [3, 7]])
        assert out.failure_reason is FailureReason.LOW_EXPECTED_FREQUENCY

    def test_zero_marginal_single_class(self):
        out = chi_squared([[0, 0], [5, 5]])
        assert out.failure_reason is FailureReason.SINGLE_CLASS

    def test_yates_disabled(self):
        out = chi_squared([[20, 5], [5, 20]], yates=False)
        assert out.statistic == pytest.approx(4 * 7.5**2 / 12.5, abs=1e-12)

    def test_wide_table_no_yates(self):
        table = [[20, 20, 20], [20, 20, 20]]
        out = chi_squared(table)
        assert out.statistic == 0.0
        assert out.p_value == 1.0


class TestMedianTest:
    def test_fully_separated_groups(self):
        out = median_test([1, 2, 3, 4], [5, 6, 7, 8])
        assert out.statistic == pytest.approx(4.5, abs=1e-12)
        assert out.p_value == pytest.approx(0.0339, abs=1e-3)

    def test_degenerate_median(self):
        out = median_test([7, 7, 7, 7], [7, 7, 7, 7])
        assert out.failure_reason is FailureReason.DEGENERATE_MEDIAN

    def test_empty_group(self):
        assert median_test([], [1.0]).failure_reason is FailureReason.SINGLE_CLASS

    @given(
        st.lists(st.floats(-5, 5), min_size=2, max_size=20),
        st.lists(st.floats(-5, 5), min_size=2, max_size=20),
    )
    def test_symmetric_under_group_swap(self, x, y):
        a, b = median_test(x, y), median_test(y, x)
        assert a.feasible == b.feasible
        if a.feasible:
            assert b.p_value == pytest.approx(a.p_value, rel=1e-12)

    @settings(max_examples=10)
    @given(st.integers(0, 2**32 - 1))
    def test_no_minimum_frequency_rule(self, seed):
        # Small samples stay feasible here, unlike the chi-squared policy.
        g = np.random.default_rng(seed)
        out = median_test(g.normal(size=4), g.normal(size=4))
        assert out.feasible or out.failure_reason is FailureReason.DEGENERATE_MEDIAN

    def test_calibration_on_null_data(self):
        # 2000 repetitions of n=200 i.i.d. continuous data. Exact oracle: the
        # above-median count is Hypergeom(200, 100, 100), and the Yates
        # statistic rejects at alpha=0.05 with probability 0.033636 (the
        # continuity correction makes the test conservative, never inflated).
        truth = 0.033636
        reps = 2000
        rng = RandomSource(2024)
        rejections = 0
        for rep in range(reps):
            g = rng.child(rep).generator
            out = median_test(g.normal(size=100), g.normal(size=100))
            rejections += out.feasible and out.p_value <= 0.05
        rate = rejections / reps
        assert abs(rate - truth) <= 3 * np.sqrt(truth * (1 - truth) / reps)
        assert rate <= 0.07
