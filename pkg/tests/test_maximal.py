from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wtlab.errors import ParameterError
from wtlab.operators.maximal import average, maximal, maximal_many
from wtlab.triadic import Rational3, indicator

from conftest import interior_points, random_step, step_functions
from oracles import brute_maximal


def test_indicator_values():
    f = indicator(Rational3(1, 1), Rational3(2, 1))
    assert maximal(f, Fraction(1, 2)) == pytest.approx(1.0)
    # outside: best interval is [x, 2/3] of length 2/3 - x
    x = Fraction(1, 6)
    assert maximal(f, x) == pytest.approx((1 / 3) / (2 / 3 - 1 / 6), rel=1e-14)
    assert maximal(f, x, r=2) == pytest.approx(((1 / 3) / (2 / 3 - 1 / 6)) ** 0.5, rel=1e-14)


@pytest.mark.parametrize("r", [1.0, 1.37, 2.0])
def test_matches_brute_force(rng, r):
    for _ in range(15):
        f = random_step(rng, int(rng.integers(1, 30)))
        xs = np.concatenate([interior_points(rng, f, 4), rng.uniform(0, 1, 2)])
        got = maximal_many(f, list(xs), r)
        want = [brute_maximal(f, x, r) for x in xs]
        assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


@given(step_functions(), st.floats(1.0, 3.0), st.floats(0.0, 3.0), st.floats(0.01, 0.99))
def test_jensen_monotone_in_r(f, r, ds, x):
    m1 = maximal(f, x, 1.0)
    mr = maximal(f, x, r)
    ms = maximal(f, x, r + ds)
    assert m1 <= mr * (1 + 1e-12) + 1e-14
    assert mr <= ms * (1 + 1e-12) + 1e-14


@given(step_functions(), st.floats(0.01, 0.99), st.floats(0.1, 50.0))
def test_homogeneous(f, x, c):
    assert maximal(f.scaled(c), x, 1.5) == pytest.approx(c * maximal(f, x, 1.5), rel=1e-12, abs=1e-13)


@given(step_functions(), st.floats(0.01, 0.99))
def test_dominates_value_and_average(f, x):
    m = maximal(f, x)
    assert m >= f.evaluate(x) * (1 - 1e-12)
    assert m >= f.mass * (1 - 1e-12)  # the interval [0, 1] contains x


def test_average_and_errors():
    f = indicator(0, Rational3(1, 1), 3.0)
    assert average(f, 0, Fraction(2, 3)) == pytest.approx(1.5)
    with pytest.raises(ParameterError):
        average(f, Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(ParameterError):
        maximal(f, 0.5, r=0.5)
