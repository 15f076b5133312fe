import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wtlab.errors import DomainError, ParameterError
from wtlab.operators.maximal import maximal
from wtlab.operators.orlicz import (alpha_of_r, growth_factor, lemma22_exponent, luxemburg_norm,
                                    mphi_mr_bound_constant, orlicz_maximal, r_k)
from wtlab.operators.young import YoungFunction
from wtlab.triadic import Rational3, indicator

from conftest import interior_points, random_step, step_functions
from oracles import brute_orlicz_maximal, luxemburg_average, sup_on_log_grid

KERNELS = ["linear", "power:1.5", "log:1", "loglog:1"]


@pytest.mark.parametrize("spec", ["linear", "power:1.5", "log:0.5", "loglog:1.0"])
def test_young_spec_roundtrip(spec):
    phi = YoungFunction.parse(spec)
    assert YoungFunction.parse(phi.spec()) == phi


def test_young_parse_errors():
    assert YoungFunction.parse("psi") == YoungFunction("loglog", 1.0)
    for bad in ("cubic", "power:x", "power:0.5", "log:-1", "linear:2"):
        with pytest.raises(ParameterError) as exc:
            YoungFunction.parse(bad)
        assert bad.split(":")[-1] in str(exc.value)


@given(st.sampled_from(KERNELS), st.floats(1e-6, 1e12))
def test_young_inverse_roundtrip(spec, y):
    phi = YoungFunction.parse(spec)
    assert phi(phi.inverse(y)) == pytest.approx(y, rel=1e-12)


@given(st.sampled_from(KERNELS), st.floats(-30, 30))
def test_log_value_consistent(spec, u):
    phi = YoungFunction.parse(spec)
    assert phi.log_value(u) == pytest.approx(math.log(phi(math.exp(u))), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("spec", KERNELS)
def test_luxemburg_matches_brentq(rng, spec):
    phi = YoungFunction.parse(spec)
    for _ in range(10):
        f = random_step(rng, 8, scale=5)
        a, b = sorted(rng.choice(f.grid, 2, replace=False) * f.unit)
        got = luxemburg_norm(f, a, b, phi)
        assert got == pytest.approx(luxemburg_average(f, a, b, phi), rel=1e-11, abs=1e-14)


@given(step_functions(), st.floats(0.1, 10.0), st.sampled_from(KERNELS))
def test_luxemburg_homogeneous(f, c, spec):
    phi = YoungFunction.parse(spec)
    base = luxemburg_norm(f, 0, 1, phi)
    assert luxemburg_norm(f.scaled(c), 0, 1, phi) == pytest.approx(c * base, rel=1e-10, abs=1e-14)


def test_linear_luxemburg_is_average():
    f = indicator(0, Rational3(1, 1), 3.0)
    assert luxemburg_norm(f, 0, 1, YoungFunction("linear")) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("spec", ["log:1", "loglog:1", "power:1.3"])
def test_orlicz_maximal_methods_agree(rng, spec):
    phi = YoungFunction.parse(spec)
    for _ in range(5):
        f = random_step(rng, 6, scale=4)
        for x in interior_points(rng, f, 2):
            ref = orlicz_maximal(f, x, phi, "enumerate")
            assert orlicz_maximal(f, x, phi, "threshold") == pytest.approx(ref, rel=1e-10)
            assert ref == pytest.approx(brute_orlicz_maximal(f, x, phi), rel=1e-9)


def test_power_kernel_uses_hull_engine(rng):
    f = random_step(rng, 20)
    phi = YoungFunction.parse("power:2")
    for x in interior_points(rng, f, 5):
        assert orlicz_maximal(f, x, phi) == pytest.approx(maximal(f, x, 2.0), rel=1e-12)
        assert orlicz_maximal(f, x, phi, "enumerate") == pytest.approx(maximal(f, x, 2.0), rel=1e-10)


@given(step_functions(), st.floats(0.01, 0.99), st.sampled_from(["log:1", "loglog:1"]))
def test_orlicz_maximal_dominates_plain(f, x, spec):
    m = orlicz_maximal(f, x, YoungFunction.parse(spec))
    assert m >= maximal(f, x) * (1 - 1e-10)


@pytest.mark.parametrize("spec,r", [("log:1", 1.1), ("loglog:1", 1.5), ("power:1.3", 1.5),
                                    ("linear", 1.1)])
def test_bound_constant_matches_grid_oracle(spec, r):
    phi = YoungFunction.parse(spec)
    u0 = math.log(phi.inverse(0.5))
    best = sup_on_log_grid(lambda u: phi.log_value(u) - r * u, u0, u0 + 60 * r / (r - 1))
    assert mphi_mr_bound_constant(phi, r) == pytest.approx(math.exp((math.log(2) + best) / r), rel=1e-9)


def test_bound_constant_linear_r2():
    # sup over t >= 1/2 of t / t^2 is 2, so (2 * 2)^(1/2)
    assert mphi_mr_bound_constant(YoungFunction("linear"), 2.0) == pytest.approx(2.0, rel=1e-12)


def test_bound_constant_refuses_faster_kernel():
    with pytest.raises(DomainError):
        mphi_mr_bound_constant(YoungFunction.parse("power:1.3"), 1.1)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_growth_factor_psi_matches_grid_oracle(k):
    phi, r = YoungFunction.parse("psi"), r_k(k)
    best = sup_on_log_grid(lambda u: phi.log_value(u) / r - u, 0.0, 60 * r / (r - 1))
    assert growth_factor(phi, r) == pytest.approx(math.exp(best), rel=1e-9)


def test_growth_factor_linear_is_one():
    for k in range(2, 9):
        assert growth_factor(YoungFunction("linear"), r_k(k)) == 1.0


def test_exponents():
    assert r_k(2) == pytest.approx(1 + 1 / 55)
    assert lemma22_exponent(3) == pytest.approx(1 + 1 / 81)
    assert alpha_of_r(1.5) == pytest.approx(3.0)
    with pytest.raises(ParameterError):
        alpha_of_r(2.0)
