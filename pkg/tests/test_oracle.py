"""Reference statistics computed directly on the plaintext inputs.

Expected values here were worked out by hand from the definitions
(ranked positions (n+1)//2, (n+3)//4 and 3n//4+1, top-quartile averaging
for best-in-class, population variance) and are frozen as literals.
"""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from blindbench import oracle
from blindbench.errors import PeerGroupTooSmall


def F(x):
    return Fraction(str(x))


def test_four_values_worked_example():
    report = oracle.compute([F(5), F(9), F(2), F(7)])
    assert report.n == 4
    assert report.mean == F("5.75")
    assert report.variance == Fraction(107, 16)  # 6.6875 exactly
    assert report.median == 5
    assert report.maximum == 9
    assert report.bottom_quartile == 2
    assert report.top_quartile == 9
    assert report.best_in_class == 9


def test_eight_distinct_values():
    report = oracle.compute([F(k) for k in range(1, 9)])
    assert report.median == 4        # position (8+1)//2 = 4
    assert report.bottom_quartile == 2   # position (8+3)//4 = 2
    assert report.top_quartile == 7      # position 3*8//4+1 = 7
    assert report.maximum == 8
    assert report.best_in_class == F("7.5")  # mean of {7, 8}
    assert report.mean == F("4.5")
    assert report.variance == Fraction(21, 4)


def test_constant_inputs():
    report = oracle.compute([F(3)] * 5)
    assert report.variance == 0
    for stat in ("mean", "median", "maximum", "best_in_class",
                 "bottom_quartile", "top_quartile"):
        assert report.as_dict()[stat] == 3


def test_ties_at_the_quartile_boundary():
    values = [F(1), F(1), F(2), F(2), F(2), F(3)]
    report = oracle.compute(values)
    assert report.median == 2        # position 3 of sorted
    assert report.bottom_quartile == 1   # position 2
    assert report.top_quartile == 2      # position 5
    assert report.best_in_class == Fraction(5, 2)  # mean of {2, 3}


def test_minimum_group_size_enforced():
    with pytest.raises(PeerGroupTooSmall):
        oracle.compute([F(1)] * 3)
    oracle.compute([F(1), F(2)], min_n=2)


def test_quantized_uses_fixed_point_strings():
    report = oracle.compute([F(5), F(9), F(2), F(7)])
    quantized = report.quantized(2)
    assert quantized["variance"] == "6.69"
    assert quantized["mean"] == "5.75"
    assert quantized["median"] == "5.00"
    assert set(quantized) == {
        "mean", "variance", "median", "maximum", "best_in_class",
        "bottom_quartile", "top_quartile",
    }


@st.composite
def value_lists(draw):
    n = draw(st.integers(4, 20))
    scaled = st.integers(-10 ** 6, 10 ** 6)
    return [Fraction(draw(scaled), 100) for _ in range(n)]


@given(value_lists())
def test_order_statistics_invariants(values):
    report = oracle.compute(values)
    lo, hi = min(values), max(values)
    assert report.maximum == hi
    assert lo <= report.mean <= hi
    assert report.median in values
    assert report.bottom_quartile in values
    assert report.top_quartile in values
    assert report.bottom_quartile <= report.median <= report.top_quartile
    assert report.top_quartile <= report.best_in_class <= hi
    assert report.variance >= 0


@given(value_lists())
def test_mean_and_variance_against_direct_formulas(values):
    report = oracle.compute(values)
    n = len(values)
    mean = sum(values) / n
    assert report.mean == mean
    assert report.variance == sum((v - mean) ** 2 for v in values) / n


@given(value_lists(), st.integers(-500, 500))
def test_shift_equivariance(values, shift_scaled):
    # Adding a constant shifts every location statistic and leaves the
    # variance unchanged.
    shift = Fraction(shift_scaled, 100)
    base = oracle.compute(values)
    moved = oracle.compute([v + shift for v in values])
    assert moved.mean == base.mean + shift
    assert moved.median == base.median + shift
    assert moved.maximum == base.maximum + shift
    assert moved.best_in_class == base.best_in_class + shift
    assert moved.variance == base.variance
