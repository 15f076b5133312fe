import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from wtlab.triadic import StepFunction

settings.register_profile(
    "wtlab", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("wtlab")


def random_step(rng, n_pieces, scale=7, zero_frac=0.2, vmax=5.0):
    """Random nonnegative step function with ``n_pieces`` pieces on the ``3^-scale`` grid."""
    grid = np.sort(rng.choice(np.arange(3**scale + 1), size=n_pieces + 1, replace=False))
    values = rng.uniform(0.0, vmax, n_pieces)
    values[rng.random(n_pieces) < zero_frac] = 0.0
    return StepFunction.from_grid(grid, scale, values)


def interior_points(rng, f, n):
    """Points strictly inside pieces, as ``Fraction``-free floats away from breakpoints."""
    i = rng.integers(0, f.n_pieces, n)
    theta = rng.uniform(0.05, 0.95, n)
    a = f.grid[i].astype(float)
    b = f.grid[i + 1].astype(float)
    return (a + theta * (b - a)) * f.unit


@st.composite
def step_functions(draw, max_pieces=12, scale=6):
    n = draw(st.integers(1, max_pieces))
    cuts = draw(st.lists(st.integers(0, 3**scale), min_size=n + 1, max_size=n + 1, unique=True))
    values = draw(st.lists(st.floats(0.0, 10.0, allow_nan=False, allow_subnormal=False),
                           min_size=n, max_size=n))
    return StepFunction.from_grid(np.sort(cuts), scale, values)


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
