from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kolmo.dyadics import DyadicRational, canonicalize, dyadic_grid, level_for_times, nearest_dyadic


def values(grid):
    return [p.value for p in grid.points]


def test_grid_examples():
    assert values(dyadic_grid(2, 1.0)) == [0, F(1, 4), F(1, 2), F(3, 4), 1]
    assert values(dyadic_grid(0, 2.5)) == [0, 1, 2]
    assert values(dyadic_grid(3, 0.4)) == [0, F(1, 8), F(2, 8), F(3, 8)]


def test_grid_rejects_nonpositive_horizon():
    with pytest.raises(ValueError):
        dyadic_grid(2, 0)
    with pytest.raises(ValueError):
        dyadic_grid(2, -1.0)


@given(st.integers(0, 12), st.floats(0.01, 20))
def test_grid_invariants(n, T):
    g = dyadic_grid(n, T)
    vals = values(g)
    assert vals[0] == 0
    assert all(b - a == F(1, 2**n) for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= F(T)
    assert vals[-1] > F(T) - F(1, 2**n)
    np.testing.assert_array_equal(g.times, [float(v) for v in vals])


@given(st.integers(0, 10), st.floats(0.01, 10))
def test_grid_nesting(n, T):
    coarse, fine = dyadic_grid(n, T), dyadic_grid(n + 1, T)
    fine_points = set(fine.points)
    assert all(p in fine_points for p in coarse.points)


def test_nearest_examples():
    g = dyadic_grid(2, 1)
    p, d = nearest_dyadic(0.3, g)
    assert p == canonicalize(1, 2) and d == pytest.approx(0.05)
    p, d = nearest_dyadic(0.5, g)
    assert p.value == F(1, 2) and d == 0
    p, d = nearest_dyadic(0.375, g)  # tie between 1/4 and 1/2
    assert p.value == F(1, 4) and d == 0.125


def test_nearest_out_of_range():
    with pytest.raises(ValueError):
        nearest_dyadic(1.5, dyadic_grid(2, 1))
    with pytest.raises(ValueError):
        nearest_dyadic(-0.1, dyadic_grid(2, 1))


def test_nearest_near_horizon_not_on_grid():
    g = dyadic_grid(1, 2.3)  # last point 2
    p, d = nearest_dyadic(2.3, g)
    assert p.value == 2 and d == pytest.approx(0.3)


def test_canonicalize_examples():
    assert canonicalize(4, 2) == DyadicRational(1, 0)
    assert canonicalize(6, 3) == DyadicRational(3, 2)
    assert canonicalize(5, 3) == DyadicRational(5, 3)
    assert canonicalize(0, 7) == DyadicRational(0, 0)
    with pytest.raises(ValueError):
        canonicalize(-1, 2)
    with pytest.raises(ValueError):
        canonicalize(1, -2)
    with pytest.raises(ValueError):
        DyadicRational(2, 3)  # not canonical
    with pytest.raises(ValueError):
        canonicalize(1, 41)  # above the level cap


@given(st.integers(0, 2**20), st.integers(0, 20), st.integers(0, 2**20), st.integers(0, 20))
def test_canonical_equality_is_value_equality(k1, n1, k2, n2):
    a, b = canonicalize(k1, n1), canonicalize(k2, n2)
    assert (a == b) == (F(k1, 2**n1) == F(k2, 2**n2))
    assert (a < b) == (F(k1, 2**n1) < F(k2, 2**n2))
    assert a.value == F(k1, 2**n1)


def test_rendering():
    assert str(canonicalize(2, 3)) == "1/4"
    assert canonicalize(3, 2).render() == "3/2^2"
    assert str(canonicalize(8, 2)) == "2"


def test_level_for_times():
    assert level_for_times([0, 0.25, 0.5, 1]) == 2
    assert level_for_times([0, 3]) == 0
    with pytest.raises(ValueError):
        level_for_times([0.1])
