from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wtlab.errors import CapacityError, ParameterError
from wtlab.triadic import (Rational3, StepFunction, TriadicInterval, adjacent_scaled, children,
                           indicator, middle_third)

from conftest import step_functions

triadic = st.builds(Rational3, st.integers(-10**6, 10**6), st.integers(0, 12))


@given(triadic, triadic)
def test_rational3_arithmetic_matches_fraction(a, b):
    assert (a + b).to_fraction() == a.to_fraction() + b.to_fraction()
    assert (a - b).to_fraction() == a.to_fraction() - b.to_fraction()
    assert (a * b).to_fraction() == a.to_fraction() * b.to_fraction()
    assert (a < b) == (a.to_fraction() < b.to_fraction())


@given(triadic)
def test_rational3_render_parse_roundtrip(a):
    assert Rational3.parse(a.render()) == a


def test_rational3_canonical_form():
    assert Rational3(9, 3) == Rational3(1, 1)
    assert Rational3(9, 3).scale == 1
    assert Rational3.parse("1/27") == Rational3(1, 3)
    with pytest.raises(ParameterError):
        Rational3.from_fraction(Fraction(1, 2))
    with pytest.raises(ParameterError):
        Rational3.parse("one third")


def test_children_and_middle_third():
    I = TriadicInterval(2, 4)
    kids = children(I)
    assert [c.left for c in kids] == [Rational3(12, 3), Rational3(13, 3), Rational3(14, 3)]
    assert kids[-1].right == I.right
    assert middle_third(I) == kids[1]
    assert all(I.contains_interval(c) for c in kids)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_adjacent_scaled_touches_middle_third(k):
    I = TriadicInterval(1, 1)
    mid = middle_third(I)
    left = adjacent_scaled(I, "left", k)
    right = adjacent_scaled(I, "right", k)
    assert left.right == mid.left and right.left == mid.right
    assert left.length == right.length == Rational3(1, I.level + k)
    assert I.contains_interval(left) and I.contains_interval(right)


def test_triadic_interval_bounds():
    with pytest.raises(ParameterError):
        TriadicInterval(1, 3)


@given(step_functions())
def test_stepfn_json_roundtrip(f):
    g = StepFunction.from_json(f.to_json())
    assert g == f
    assert np.array_equal(g.values, f.values)


@given(step_functions(), st.integers(1, 3))
def test_refinement_preserves_integrals(f, extra):
    g = f.refined(f.scale + extra)
    assert g.mass == pytest.approx(f.mass, rel=1e-12, abs=1e-15)
    a, b = Rational3(1, 2), Rational3(7, 3)
    assert g.integrate(a, b) == pytest.approx(f.integrate(a, b), rel=1e-12, abs=1e-15)


@given(step_functions(), st.fractions(0, 1), st.fractions(0, 1), st.fractions(0, 1))
def test_integrate_is_additive(f, a, b, c):
    a, b, c = sorted((a, b, c))
    total = f.integrate(a, c)
    assert f.integrate(a, b) + f.integrate(b, c) == pytest.approx(total, rel=1e-12, abs=1e-13)


def test_integrate_exact_values():
    f = StepFunction.from_pieces([(Rational3(0), Rational3(1, 1), 3.0),
                                  (Rational3(2, 1), Rational3(1), 6.0)])
    assert f.mass == pytest.approx(3.0)
    assert f.integrate(Fraction(1, 6), Fraction(5, 6)) == pytest.approx(3 / 6 + 6 / 6)
    assert f.integrate(0, 1, power=2) == pytest.approx(9 / 3 + 36 / 3)
    assert f.evaluate(Fraction(1, 2)) == 0.0
    assert f.evaluate(Rational3(2, 1)) == 6.0


def test_indicator_and_scaling():
    f = indicator(Rational3(1, 1), Rational3(2, 1), 2.0)
    assert f.mass == pytest.approx(2 / 3)
    assert f.scaled(1.5).mass == pytest.approx(1.0)


def test_rejects_bad_input():
    with pytest.raises(ParameterError):
        StepFunction.from_grid(np.array([0, 2, 1]), 1, [1.0, 1.0])
    with pytest.raises(ParameterError):
        StepFunction.from_grid(np.array([0, 1]), 1, [-1.0])
    with pytest.raises(CapacityError):
        StepFunction.from_grid(np.array([0, 1]), 45, [1.0])
    with pytest.raises(ParameterError):
        StepFunction.from_dict({"format": "other", "records": []})
