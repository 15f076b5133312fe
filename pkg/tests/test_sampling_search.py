from fractions import Fraction

import numpy as np
import pytest

from wtlab.operators.hilbert import hilbert_step
from wtlab.operators.maximal import maximal
from wtlab.rt_construction import (ConstructionParams, Orientation, build_generations,
                                   build_weight, orientation_search)
from wtlab.sampling import build_plan, hw_ratios, maximal_ratios
from wtlab.search import plan_score


def weight(k, depth, orientation="all_left"):
    tree = build_generations(ConstructionParams(k, depth, orientation))
    return tree, build_weight(tree)[0]


def test_plan_points_lie_on_islands():
    tree, w = weight(3, 3)
    plan = build_plan(tree, w, margin=1)
    assert len(plan) == 3 * (1 + 9)
    for m in range(len(plan)):
        x = plan.point(m)
        l = int(plan.level[m])
        assert w.evaluate(x) == pytest.approx(float(Fraction(27, 10) ** l))


def test_ratios_match_pointwise_operators():
    tree, w = weight(2, 3, "alternate_by_level")
    plan = build_plan(tree, w, margin=1)
    h = hw_ratios(w, plan)
    r = 1 + 3.0**-3
    m = maximal_ratios(w, plan, r)
    for j in range(0, len(plan), 4):
        x = plan.point(j)
        assert h[j] == pytest.approx(abs(hilbert_step(w, x)) / w.evaluate(x), rel=1e-11)
        assert m[j] == pytest.approx(maximal(w, x, r) / w.evaluate(x), rel=1e-11)


def test_greedy_search_beats_fixed_policies():
    found, score = orientation_search(3, 3)
    assert score == pytest.approx(plan_score(3, 3, found), rel=1e-12)
    for name in ("all_left", "all_right", "alternate_by_level"):
        assert score >= plan_score(3, 3, Orientation(name)) * (1 - 1e-12)
    again, _ = orientation_search(3, 3)
    assert again == found
