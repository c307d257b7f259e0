import itertools
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from app.core.exceptions import DimensionMismatchError, UnsupportedDimensionError
from app.services.lhv_service import (
    LhvAssignment,
    analytic_bounds,
    analytic_bounds_exact,
    bell_value_direct,
    bell_value_lhv,
    bell_value_lhv_exact,
    brute_force_bounds,
    brute_force_bounds_exact,
    delta_count,
    delta_matrix,
)


@st.composite
def assignments(draw, dims=(2, 3, 5, 7)):
    d = draw(st.sampled_from(dims))
    a = draw(st.lists(st.integers(0, d - 1), min_size=d, max_size=d))
    b = draw(st.lists(st.integers(0, d - 1), min_size=d, max_size=d))
    return LhvAssignment(d, tuple(a), tuple(b))


@pytest.mark.parametrize(
    "d, expected",
    [(2, (-2, 2)), (3, (Fraction(-9, 2), Fraction(9, 2))), (5, (Fraction(-25, 4), Fraction(35, 4)))],
)
def test_brute_force_bounds(d, expected):
    result = brute_force_bounds_exact(d)
    assert (result.min_value, result.max_value) == expected
    assert analytic_bounds_exact(d) == expected
    assert bell_value_lhv_exact(result.argmin) == result.min_value
    assert bell_value_lhv_exact(result.argmax) == result.max_value


def test_brute_force_float_api():
    low, high, argmin, argmax = brute_force_bounds(3)
    assert (low, high) == (-4.5, 4.5)
    assert argmin.a[0] == 0 and argmax.a[0] == 0


def test_brute_force_qutrit_is_fast():
    started = time.perf_counter()
    result = brute_force_bounds_exact(3)
    assert time.perf_counter() - started < 1.0
    assert result.assignments_scanned == 3 ** 5


def test_brute_force_d5_runtime():
    started = time.perf_counter()
    result = brute_force_bounds_exact(5)
    assert time.perf_counter() - started < 30.0
    assert result.assignments_scanned == 5 ** 9


def test_brute_force_guard():
    with pytest.raises(UnsupportedDimensionError, match="analytic"):
        brute_force_bounds_exact(7)


def test_analytic_bounds_d17():
    assert analytic_bounds_exact(17)[1] == Fraction(527, 16)
    assert analytic_bounds(17) == (-289 / 16, 32.9375)


@pytest.mark.parametrize("d", [7, 11, 13])
def test_analytic_bounds_formula(d):
    low, high = analytic_bounds_exact(d)
    assert low == Fraction(-d * d, d - 1)
    assert high == Fraction(d * (2 * d - 3), d - 1)


@given(assignments())
def test_delta_reduction_matches_direct_sum(asg):
    assert abs(bell_value_lhv(asg) - bell_value_direct(asg)) <= 1e-12


@given(assignments(), st.integers(-20, 20))
def test_shift_invariance(asg, s):
    assert delta_count(asg.shifted(s)) == delta_count(asg)


@hyp_settings(max_examples=200)
@given(assignments(dims=(5, 7, 11)))
def test_delta_never_exceeds_tight_count(asg):
    # at most 3d − 3 of the d² congruences can hold at once
    assert 0 <= delta_count(asg) <= 3 * asg.d - 3


def test_delta_matrix_rows():
    asg = LhvAssignment(3, (0, 0, 0), (0, 0, 0))
    # a_i + b_j + ij = ij mod 3
    assert delta_matrix(asg).tolist() == [[0, 0, 0], [0, 1, 2], [0, 2, 1]]
    assert delta_count(asg) == 5
    assert bell_value_lhv_exact(asg) == Fraction(3, 2) * (5 - 3)


def test_assignment_reduces_and_validates():
    asg = LhvAssignment(3, (4, -1, 3), (0, 1, 2))
    assert asg.a == (1, 2, 0)
    assert asg.as_dict() == {"a": [1, 2, 0], "b": [0, 1, 2]}
    with pytest.raises(DimensionMismatchError):
        LhvAssignment(3, (0, 1), (0, 1, 2))
    with pytest.raises(UnsupportedDimensionError):
        LhvAssignment(4, (0,) * 4, (0,) * 4)


def test_row_exclusion_qutrit_exhaustive():
    # two zero cells (i,j), (i,k) in one row forbid the same pair of columns in any other row
    d = 3
    for values in itertools.product(range(d), repeat=2 * d):
        zeros = delta_matrix(LhvAssignment(d, values[:d], values[d:])) == 0
        for i in range(d):
            for j, k in itertools.combinations(range(d), 2):
                if zeros[i, j] and zeros[i, k]:
                    others = [l for l in range(d) if l != i]
                    assert not any(zeros[l, j] and zeros[l, k] for l in others), (values, i, j, k)
