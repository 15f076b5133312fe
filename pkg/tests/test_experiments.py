import json
import math

import numpy as np
import pytest

from wtlab import experiments as ex
from wtlab.errors import ParameterError, TailRefusal
from wtlab.rt_construction import ConstructionParams, build_generations, build_weight
from wtlab.triadic import Rational3, indicator

from oracles import chi_functional


def test_lemma21_report():
    rep = ex.run_lemma21_check(2, 3)
    assert rep.summary["exact_mass"] == "37/64"
    assert rep.summary["passed"]
    assert rep.tail_mass == 27 / 64


def test_lemma22_report_within_bound():
    rep = ex.run_lemma22_check(3, 3)
    assert rep.summary["max_ratio"] <= 21
    assert rep.summary["n_points"] == len(rep.records["ratio"])
    assert rep.summary["r"] == pytest.approx(1 + 3.0**-4)


def test_hw_lowerbound_carries_regime_note():
    rep = ex.run_hw_lowerbound(2, 3, orientation="alternate_by_level")
    assert rep.summary["min_ratio"] > 0
    assert ex.PAPER_REGIME_NOTE in rep.notes


def test_tail_refusal_names_required_depth():
    with pytest.raises(TailRefusal) as exc:
        ex.run_lemma22_check(2, 3, tail_threshold=0.01)
    assert "L >= 17" in str(exc.value)


def test_weaktype_report_fields():
    rep = ex.weaktype_ratio(2, 3, "linear")
    s = rep.summary
    for key in ("ratio_sup", "lambda_star", "D", "D_refined", "grid_boundary", "hw_min_ratio",
                "lemma22_max_ratio"):
        assert key in s
    assert s["ratio_sup"] > 0
    assert s["D_discrepancy"] < 1e-3


def test_weaktype_explicit_lambdas_and_errors():
    rep = ex.weaktype_ratio(2, 2, "psi", lambdas=[1.0, 2.0, 4.0])
    assert len(rep.records["lambda"]) == 3
    with pytest.raises(ParameterError):
        ex.weaktype_ratio(2, 2, "linear", lambdas=[-1.0])


def test_functional_on_indicator_matches_quadrature():
    # M_α χ = 1 on [0, 1], so the functional is ∫ log^2|x/(1-x)|
    val = ex.functional_of(indicator(), 1.5)
    assert val == pytest.approx(chi_functional(), rel=1e-9)
    assert chi_functional() == pytest.approx(math.pi**2 / 3, rel=1e-12)


@pytest.mark.parametrize("r", [1.2, 1.5, 1.8])
def test_functional_is_one_homogeneous(r):
    w, _ = build_weight(build_generations(ConstructionParams(2, 2)))
    base = ex.functional_of(w, r)
    for c in (2.0, 10.0):
        assert ex.functional_of(w.scaled(c), r) == pytest.approx(c * base, rel=1e-12)


def test_extrapolation_report_has_comparator():
    rep = ex.extrapolation_functional(2, 2)
    assert "paper_regime_comparator" in rep.summary
    assert rep.summary["functional_over_mass"] == pytest.approx(
        rep.summary["functional"] / rep.summary["mass"])
    other = ex.extrapolation_functional(2, 2, r=1.5)
    assert "paper_regime_comparator" not in other.summary


def test_growth_factor_report():
    rep = ex.growth_factor_report("psi", k=3)
    assert rep.summary["growth_factor_over_k"] == pytest.approx(rep.summary["growth_factor"] / 3)
    with pytest.raises(ParameterError):
        ex.growth_factor_report("psi")


def test_depth_rules():
    assert ex.depth_rule("fixed:3", 2) == 3
    assert ex.depth_rule("budget:2000", 3) == 4
    assert ex.depth_rule("auto", 5) >= 3
    with pytest.raises(ParameterError):
        ex.depth_rule("deep", 2)


def test_k_sweep_records_skipped_cells(tmp_path):
    out = tmp_path / "sweep.json"
    reps = ex.k_sweep(["linear"], [2, 9], "fixed:9", orientation="all_left", output=str(out),
                      timing=False)
    assert reps[1].summary["skipped_reason"]
    loaded = ex.load_reports(str(out))
    assert [r.to_json() for r in loaded] == [r.to_json(False) for r in reps]
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0].split(",") == list(ex.CSV_COLUMNS)
    assert len(rows) == 3


@pytest.mark.parametrize("make", [
    lambda: ex.run_lemma21_check(2, 3),
    lambda: ex.run_lemma22_check(3, 3),
    lambda: ex.run_hw_lowerbound(2, 3),
    lambda: ex.weaktype_ratio(3, 2, "psi", orientation="greedy_search"),
    lambda: ex.extrapolation_functional(2, 2),
    lambda: ex.growth_factor_report("loglog:0.5", k=4),
    lambda: ex.run_orientation_search(2, 3),
    lambda: ex.hilbert_eval(["1/3^3", "1/2"], k=2, depth=2),
])
def test_rerun_is_bit_identical_across_threads(make):
    rep = make()
    for threads in (1, 3):
        assert ex.rerun(rep, threads=threads).to_json(timing=False) == rep.to_json(timing=False)


def test_report_dict_roundtrip():
    rep = ex.run_lemma21_check(2, 2)
    back = ex.ExperimentReport.from_dict(json.loads(rep.to_json()))
    assert back.to_json() == rep.to_json()
    with pytest.raises(ParameterError):
        ex.ExperimentReport.from_dict({"format": "nope"})


def test_hilbert_eval_on_source_and_points():
    f = indicator(Rational3(1, 1), Rational3(2, 1))
    rep = ex.hilbert_eval(["1/2", "0.1"], source=f.to_dict())
    x = np.array([0.5, 0.1])
    want = np.log(np.abs((x - 1 / 3) / (x - 2 / 3)))
    assert np.allclose(rep.records["H"], want, rtol=1e-13)
    assert ex.parse_point("1/3^2") == Rational3(1, 2)
    with pytest.raises(ParameterError):
        ex.parse_point("a/b")


def test_orlicz_auto_depth_respects_work_budget():
    depth = ex._orlicz_depth(3, None, ex.DEFAULT_PIECE_BUDGET)
    assert ex._orlicz_work(3, depth) <= ex.ORLICZ_WORK_BUDGET
    assert ex._orlicz_work(3, depth + 1) > ex.ORLICZ_WORK_BUDGET


def test_orlicz_explicit_depth_over_budget_refused():
    from wtlab.errors import CapacityError
    with pytest.raises(CapacityError, match="use depth <= 5"):
        ex.weaktype_ratio(3, 7, "log:1")
