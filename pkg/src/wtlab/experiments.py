"""Reproducible experiments on the truncated weight, serialized as JSON/CSV reports.

Every run function takes only JSON-serializable keyword arguments and stores
them verbatim in its report, so :func:`rerun` can regenerate any report from
its own ``params``.  Thread count never changes a result: work is split into
fixed-size chunks whose results are concatenated in order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, ParameterError, TailRefusal
from .operators.hilbert import H_CONVENTION, HilbertEvaluator
from .operators.maximal import MaximalEngine
from .operators.orlicz import (alpha_of_r, growth_factor_detail, lemma22_exponent,
                               orlicz_maximal_at, r_k)
from .operators.superlevel import sample_transform, superlevel_profile
from .operators.young import YoungFunction
from .rt_construction import (DEFAULT_PIECE_BUDGET, ConstructionParams, Orientation,
                              build_generations, build_weight, check_structure, default_depth,
                              exact_mass, orientation_search, piece_count, truncation_tail,
                              verify_mass_balance)
from .sampling import SamplePlan, build_plan
from .triadic import Rational3, StepFunction, _anchor

REPORT_FORMAT = "wtlab-report-v1"
CSV_COLUMNS = ("k", "L", "tail_mass", "phi", "r_k", "ratio_sup", "lambda_star", "growth_factor",
               "lemma22_max_ratio", "hw_min_ratio", "duration_ms")
DEFAULT_TAIL_THRESHOLD = 1.0
CHUNK = 4096
PAPER_REGIME_NOTE = ("the lower bound |Hw_k| >= (k/3) w_k is established only for k > 3000; "
                     "this run is a finite-k trend datum, not a verification")

__all__ = ["ExperimentReport", "SamplePlan", "build_plan", "run_lemma21_check", "run_lemma22_check",
           "run_hw_lowerbound", "weaktype_ratio", "extrapolation_functional", "k_sweep",
           "growth_factor_report", "run_orientation_search", "hilbert_eval", "rerun",
           "write_reports"]


# -- reports ----------------------------------------------------------------

@dataclass
class ExperimentReport:
    """Parameters, per-sample records (columnar), summary scalars and timing."""

    experiment: str
    params: dict
    records: dict
    summary: dict
    tail_mass: float | None
    duration_ms: float | None = None
    notes: list = field(default_factory=list)
    convention: str = H_CONVENTION

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "format": REPORT_FORMAT,
            "experiment": self.experiment,
            "params": self.params,
            "convention": self.convention,
            "tail_mass": self.tail_mass,
            "summary": self.summary,
            "records": self.records,
            "notes": list(self.notes),
            "duration_ms": self.duration_ms if timing else None,
        }

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, allow_nan=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentReport":
        if doc.get("format") != REPORT_FORMAT:
            raise ParameterError(f"unsupported report format {doc.get('format')!r}")
        return cls(doc["experiment"], doc["params"], doc["records"], doc["summary"],
                   doc["tail_mass"], doc.get("duration_ms"), doc.get("notes", []),
                   doc.get("convention", H_CONVENTION))

    def csv_row(self) -> dict:
        p, s = self.params, self.summary
        k = p.get("k")
        row = {
            "k": k,
            "L": p.get("depth"),
            "tail_mass": self.tail_mass,
            "phi": p.get("phi", ""),
            "r_k": r_k(k) if isinstance(k, int) else "",
            "ratio_sup": s.get("ratio_sup", ""),
            "lambda_star": s.get("lambda_star", ""),
            "growth_factor": s.get("growth_factor", ""),
            "lemma22_max_ratio": s.get("lemma22_max_ratio", s.get("max_ratio", "")
                                       if self.experiment == "lemma22" else ""),
            "hw_min_ratio": s.get("hw_min_ratio", s.get("min_ratio", "")
                                  if self.experiment == "hw_lowerbound" else ""),
            "duration_ms": self.duration_ms if self.duration_ms is not None else "",
        }
        return {c: ("" if row[c] is None else row[c]) for c in CSV_COLUMNS}


def reports_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        writer.writerow(rep.csv_row())
    return buf.getvalue()


def write_reports(reports, path: str, timing: bool = True) -> tuple[str, str]:
    """Write ``x.json`` (full reports) and ``x.csv`` (summary rows); returns both paths."""
    reports = list(reports)
    base, ext = os.path.splitext(path)
    json_path = path if ext else path + ".json"
    csv_path = base + ".csv"
    docs = [r.to_dict(timing) for r in reports]
    payload = docs[0] if len(docs) == 1 else {"format": REPORT_FORMAT, "reports": docs}
    with open(json_path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
    if not timing:
        for r in reports:
            r.duration_ms = None
    with open(csv_path, "w") as fh:
        fh.write(reports_csv(reports))
    return json_path, csv_path


def load_reports(path: str) -> list[ExperimentReport]:
    with open(path) as fh:
        doc = json.load(fh)
    docs = doc["reports"] if "reports" in doc else [doc]
    return [ExperimentReport.from_dict(d) for d in docs]


# -- shared plumbing --------------------------------------------------------

def _threads(threads: int | None) -> int:
    return max(1, threads if threads else (os.cpu_count() or 1))


def _chunked(fn, n: int, threads: int | None, chunk: int = CHUNK) -> np.ndarray:
    """``fn(start, stop)`` over fixed chunks of ``range(n)``, concatenated in order."""
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    if not bounds:
        return np.zeros(0)
    workers = min(_threads(threads), len(bounds))
    if workers == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts)


def _check_tail(k: int, depth: int, threshold: float) -> float:
    tail = truncation_tail(k, depth)
    if tail > threshold:
        q = 3 ** (k - 1) / (3 ** (k - 1) + 1)
        need = math.ceil(math.log(threshold) / math.log(q)) if threshold > 0 else float("inf")
        raise TailRefusal(f"truncation tail {tail:.6g} at (k={k}, L={depth}) exceeds {threshold}; "
                          f"depth L >= {need} ({piece_count(k, need)} pieces) would be required")
    return tail


def _setup(k: int, depth: int, orientation: str, tail_threshold: float, piece_budget: int,
           margin: int = 1, sample_budget: int = 20_000):
    tail = _check_tail(k, depth, tail_threshold)
    params = ConstructionParams(k, depth, Orientation.parse(orientation), piece_budget)
    tree = build_generations(params, sample_budget=sample_budget, margin=margin)
    weight, _ = build_weight(tree)
    return tree, weight, tail


def _point_labels(plan: SamplePlan) -> list[str]:
    return [f"{int(a)}+{f!r}" for a, f in zip(plan.anchor.tolist(), plan.frac.tolist())]


def _resolve_depth(k: int, depth, piece_budget: int) -> int:
    return default_depth(k, piece_budget) if depth in (None, "auto") else int(depth)


# non-power Orlicz maximal values bisect per point with an O(pieces) rebuild per step;
# k=3, L=5 (about 6.5e8 here) takes roughly two minutes on one core
ORLICZ_WORK_BUDGET = 1_000_000_000


def _orlicz_work(k: int, depth: int) -> int:
    return 3 * piece_count(k, depth) ** 2


def _orlicz_depth(k: int, depth, piece_budget: int) -> int:
    """Depth for a non-power Φ: the auto rule also respects ``ORLICZ_WORK_BUDGET``."""
    auto = depth in (None, "auto")
    L = _resolve_depth(k, depth, piece_budget)
    best = L
    while best > 1 and _orlicz_work(k, best) > ORLICZ_WORK_BUDGET:
        best -= 1
    if auto:
        return best
    if best < L:
        raise CapacityError(
            f"non-power Young function at k={k}, L={L} needs ~{_orlicz_work(k, L):.2g} "
            f"work units (budget {ORLICZ_WORK_BUDGET:.2g}); use depth <= {best}")
    return L


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.duration_ms = round((time.perf_counter() - start) * 1000.0, 3)
        return rep
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


def _per_level(plan: SamplePlan, values: np.ndarray, fold) -> dict:
    return {str(l): float(fold(values[plan.level == l])) for l in np.unique(plan.level).tolist()}


# -- construction checks ---------------------------------------------------

@_timed
def run_lemma21_check(k: int, depth=None, orientation: str = "all_left",
                      tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
                      piece_budget: int = DEFAULT_PIECE_BUDGET,
                      threads: int | None = None) -> ExperimentReport:
    """Mass identity, tail-corrected mass recursion and island geometry of the truncated weight."""
    depth = _resolve_depth(k, depth, piece_budget)
    tree, weight, tail = _setup(k, depth, orientation, tail_threshold, piece_budget)
    check_structure(tree)
    balance = verify_mass_balance(tree, weight)
    exact = exact_mass(k, depth)
    summary = {
        "mass": weight.mass,
        "exact_mass": f"{exact.numerator}/{exact.denominator}",
        "mass_plus_tail_minus_one": weight.mass + tail - 1.0,
        "max_rel_recursion": balance.max_rel_recursion,
        "max_rel_equal_mass": balance.max_rel_equal_mass,
        "max_rel_island": balance.max_rel_island,
        "max_discrepancy": balance.max_discrepancy,
        "n_checked": balance.n_checked,
        "n_pieces": weight.n_pieces,
        "passed": balance.passed(),
    }
    params = {"k": k, "depth": depth, "orientation": orientation,
              "tail_threshold": tail_threshold, "piece_budget": piece_budget}
    return ExperimentReport("lemma21", params, {}, summary, tail)


@_timed
def run_orientation_search(k: int, depth=None, margin: int = 1, sample_budget: int = 20_000,
                           piece_budget: int = DEFAULT_PIECE_BUDGET,
                           threads: int | None = None) -> ExperimentReport:
    """Greedy island sides and the resulting ``min |Hw|/w`` against the fixed policies."""
    depth = _resolve_depth(k, depth, piece_budget)
    found, score = orientation_search(k, depth, sample_budget, margin, piece_budget)
    summary = {"orientation": found.spec(), "score": score}
    if depth > margin:
        for name in ("all_left", "all_right", "alternate_by_level"):
            tree = build_generations(ConstructionParams(k, depth, Orientation(name), piece_budget))
            weight, _ = build_weight(tree)
            plan = build_plan(tree, weight, margin)
            h = HilbertEvaluator.of(weight)(plan.anchor, plan.frac)
            summary[f"score_{name}"] = float(np.min(np.abs(h) / weight.values[plan.piece]))
    params = {"k": k, "depth": depth, "margin": margin, "sample_budget": sample_budget,
              "piece_budget": piece_budget}
    return ExperimentReport("orientation_search", params, {}, summary, truncation_tail(k, depth))


def parse_point(text: str):
    """A triadic rational when possible (``n/3^e``), else an exact ``Fraction``."""
    try:
        return Rational3.parse(text)
    except ParameterError:
        pass
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"cannot parse point {text!r}") from None


@_timed
def hilbert_eval(points, k: int | None = None, depth=None, orientation: str = "all_left",
                 source: dict | None = None, piece_budget: int = DEFAULT_PIECE_BUDGET,
                 threads: int | None = None) -> ExperimentReport:
    """``Hf`` at exact points for a stepfn-v1 ``source`` or, without one, the weight ``w_k``."""
    pts = [parse_point(p) if isinstance(p, str) else p for p in points]
    tail = None
    if source is not None:
        f = StepFunction.from_dict(source)
    else:
        if k is None:
            raise ParameterError("hilbert-eval needs a source step function or k")
        depth = _resolve_depth(k, depth, piece_budget)
        tree = build_generations(ConstructionParams(k, depth, Orientation.parse(orientation),
                                                    piece_budget))
        f, tail = build_weight(tree)
    anchor = np.empty(len(pts), dtype=np.int64)
    frac = np.empty(len(pts))
    for i, x in enumerate(pts):
        anchor[i], frac[i] = _anchor(x, f.scale)
    values = HilbertEvaluator.of(f)(anchor, frac, method="direct")
    records = {"x": [str(x) for x in pts], "H": values.tolist()}
    summary = {"n_points": len(pts), "max_abs": float(np.max(np.abs(values))) if len(pts) else 0.0}
    params = {"points": records["x"], "k": k, "depth": depth, "orientation": orientation,
              "source": source, "piece_budget": piece_budget}
    return ExperimentReport("hilbert_eval", params, records, summary, tail)


# -- pointwise checks -------------------------------------------------------

@_timed
def run_lemma22_check(k: int, depth=None, margin: int = 1, orientation: str = "all_left",
                      tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
                      piece_budget: int = DEFAULT_PIECE_BUDGET, threads: int | None = None,
                      store_records: bool = True) -> ExperimentReport:
    """``M_r w(x) / w(x)`` with ``r = 1 + 3^-(k+1)`` on every plan point."""
    depth = _resolve_depth(k, depth, piece_budget)
    tree, weight, tail = _setup(k, depth, orientation, tail_threshold, piece_budget, margin)
    plan = build_plan(tree, weight, margin)
    r = lemma22_exponent(k)
    engine = MaximalEngine.of(weight, r)
    offsets = plan.offsets(weight)
    m = _chunked(lambda a, b: engine(plan.piece[a:b], offsets[a:b]), len(plan), threads)
    ratio = m / weight.values[plan.piece]
    j = int(np.argmax(ratio))
    summary = {
        "max_ratio": float(ratio.max()),
        "min_ratio": float(ratio.min()),
        "argmax": {"level": int(plan.level[j]), "anchor": int(plan.anchor[j]),
                   "frac": float(plan.frac[j])},
        "per_level_max": _per_level(plan, ratio, np.max),
        "bound": 21.0,
        "n_points": len(plan),
        "r": r,
    }
    records = {"level": plan.level.tolist(), "point": _point_labels(plan),
               "ratio": ratio.tolist()} if store_records else {}
    params = {"k": k, "depth": depth, "margin": margin, "orientation": orientation,
              "tail_threshold": tail_threshold, "piece_budget": piece_budget,
              "store_records": store_records}
    return ExperimentReport("lemma22", params, records, summary, tail)


@_timed
def run_hw_lowerbound(k: int, depth=None, orientation: str = "all_left", margin: int = 1,
                      tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
                      piece_budget: int = DEFAULT_PIECE_BUDGET, sample_budget: int = 20_000,
                      threads: int | None = None, store_records: bool = True) -> ExperimentReport:
    """``ρ(x) = |Hw(x)| / w(x)`` on every plan point."""
    depth = _resolve_depth(k, depth, piece_budget)
    tree, weight, tail = _setup(k, depth, orientation, tail_threshold, piece_budget, margin,
                                sample_budget)
    plan = build_plan(tree, weight, margin)
    ev = HilbertEvaluator.of(weight)
    h = _chunked(lambda a, b: ev(plan.anchor[a:b], plan.frac[a:b]), len(plan), threads)
    rho = np.abs(h) / weight.values[plan.piece]
    j = int(np.argmin(rho))
    summary = {
        "min_ratio": float(rho.min()),
        "argmin": {"level": int(plan.level[j]), "anchor": int(plan.anchor[j]),
                   "frac": float(plan.frac[j])},
        "per_level_min": _per_level(plan, rho, np.min),
        "asymptotic_constant_k_over_3": k / 3.0,
        "n_points": len(plan),
    }
    records = {"level": plan.level.tolist(), "point": _point_labels(plan),
               "rho": rho.tolist()} if store_records else {}
    params = {"k": k, "depth": depth, "orientation": orientation, "margin": margin,
              "tail_threshold": tail_threshold, "piece_budget": piece_budget,
              "sample_budget": sample_budget, "store_records": store_records}
    return ExperimentReport("hw_lowerbound", params, records, summary, tail,
                            notes=[PAPER_REGIME_NOTE])


# -- weak-type ratio ---------------------------------------------------------

def default_lambda_grid(samples: np.ndarray, n: int = 40) -> np.ndarray:
    """``n`` log-spaced values over ``[0.01 median|Hw|, 3 max|Hw|]`` of the sampled values."""
    a = np.abs(samples[np.isfinite(samples)])
    a = a[a > 0]
    if len(a) == 0:
        raise ParameterError("no finite nonzero samples to build a lambda grid from")
    return np.geomspace(0.01 * float(np.median(a)), 3.0 * float(a.max()), n)


def denominator(weight: StepFunction, phi: YoungFunction, threads: int | None = None) -> dict:
    """``∫ w M_Φ w`` by the per-piece midpoint rule and its 3-split refinement."""
    nz = np.nonzero(weight.values)[0]
    lens = weight.lengths()[nz].astype(np.float64)
    mass = weight.values[nz] * lens * weight.unit
    fracs = (0.5, 1 / 6, 5 / 6)
    idx = np.tile(nz, 3)
    off = np.concatenate([lens * f for f in fracs])
    m = _chunked(lambda a, b: orlicz_maximal_at(weight, idx[a:b], off[a:b], phi), len(idx), threads)
    m = m.reshape(3, len(nz))
    d1 = float(np.sum(mass * m[0]))
    d3 = float(np.sum(mass * m.mean(axis=0)))
    return {"D": d1, "D_refined": d3, "D_richardson": (9 * d3 - d1) / 8,
            "D_discrepancy": abs(d3 - d1) / d3 if d3 else 0.0}


def _weaktype_core(weight: StepFunction, phi: YoungFunction, lambdas, resolution: int,
                   threads: int | None = None) -> tuple[dict, dict]:
    if lambdas is None:
        lam = default_lambda_grid(sample_transform(weight, weight, resolution))
    else:
        lam = np.asarray(lambdas, dtype=np.float64)
        if lam.size == 0 or np.any(~(lam > 0)):
            raise ParameterError("lambda grid must be nonempty and positive")
    prof = superlevel_profile(weight, weight, lam, resolution)
    den = denominator(weight, phi, threads)
    ratio = lam * prof.measure / den["D"]
    j = int(np.argmax(ratio))
    summary = {
        "ratio_sup": float(ratio[j]),
        "lambda_star": float(lam[j]),
        "grid_boundary": bool(j in (0, len(lam) - 1)),
        "ratio_sup_refined_D": float(ratio[j] * den["D"] / den["D_refined"]),
        "n_brackets": prof.n_brackets,
        **den,
    }
    records = {"lambda": lam.tolist(), "measure": prof.measure.tolist(), "ratio": ratio.tolist()}
    return summary, records


@_timed
def weaktype_ratio(k: int, depth=None, phi: str = "linear", lambdas=None, resolution: int = 16,
                   orientation: str = "all_left", margin: int = 1,
                   tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
                   piece_budget: int = DEFAULT_PIECE_BUDGET, sample_budget: int = 20_000,
                   threads: int | None = None) -> ExperimentReport:
    """``sup_λ λ w{|Hw| > λ} / ∫ w M_Φ w`` for the truncated weight."""
    young = YoungFunction.parse(phi)
    if young.power_exponent is None:
        depth = _orlicz_depth(k, depth, piece_budget)
    else:
        depth = _resolve_depth(k, depth, piece_budget)
    tree, weight, tail = _setup(k, depth, orientation, tail_threshold, piece_budget, margin,
                                sample_budget)
    summary, records = _weaktype_core(weight, young, lambdas, resolution, threads)
    plan = build_plan(tree, weight, margin) if depth > margin else None
    if plan is not None:
        h = HilbertEvaluator.of(weight)(plan.anchor, plan.frac)
        summary["hw_min_ratio"] = float(np.min(np.abs(h) / weight.values[plan.piece]))
        m = MaximalEngine.of(weight, lemma22_exponent(k))(plan.piece, plan.offsets(weight))
        summary["lemma22_max_ratio"] = float(np.max(m / weight.values[plan.piece]))
    if summary["grid_boundary"]:
        summary["flag"] = "sup attained at the lambda-grid boundary; widen the grid"
    params = {"k": k, "depth": depth, "phi": young.spec(),
              "lambdas": None if lambdas is None else [float(x) for x in lambdas],
              "resolution": resolution, "orientation": orientation, "margin": margin,
              "tail_threshold": tail_threshold, "piece_budget": piece_budget,
              "sample_budget": sample_budget}
    return ExperimentReport("weaktype_ratio", params, records, summary, tail)


def weaktype_of(weight: StepFunction, phi: str = "linear", lambdas=None,
                resolution: int = 16) -> dict:
    """Weak-type summary for an arbitrary weight (no construction, no report)."""
    summary, records = _weaktype_core(weight, YoungFunction.parse(phi), lambdas, resolution)
    return {**summary, "records": records}


# -- extrapolation functional ----------------------------------------------

_GRADING = 34   # geometric cells toward each piece end, ratio 3


def _log_nodes(res: int) -> tuple[np.ndarray, np.ndarray]:
    """Relative positions in ``(0, 1/2]`` and quadrature weights.

    Gauss-Legendre with ``res`` nodes in ``log θ`` on each cell; the integrand
    is smooth in that variable, so the rule converges geometrically.
    """
    edges = 0.5 * 3.0 ** -np.arange(_GRADING, -1, -1.0)
    lo = np.log(edges[:-1])
    step = math.log(3.0)
    x, wq = np.polynomial.legendre.leggauss(res)
    s = (lo[:, None] + 0.5 * (x + 1.0) * step).ravel()
    theta = np.exp(s)
    return theta, theta * np.tile(0.5 * step * wq, len(lo))


def functional_of(weight: StepFunction, r: float, res: int = 8,
                  threads: int | None = None) -> float:
    """``∫_0^1 (|Hw| / (M_α w)^{α/r})^2 w^α`` with ``α = r/(2-r)``."""
    a = alpha_of_r(r)
    theta, qw = _log_nodes(res)
    nz = np.nonzero(weight.values)[0]
    h = weight.lengths()[nz].astype(np.float64)
    nt = len(theta)
    piece = np.repeat(nz, 2 * nt)
    hp = np.repeat(h, 2 * nt)
    left = np.tile(np.concatenate([np.ones(nt, bool), np.zeros(nt, bool)]), len(nz))
    th = np.tile(np.concatenate([theta, theta]), len(nz))
    anchor = np.where(left, weight.grid[piece], weight.grid[piece + 1])
    frac = np.where(left, th, -th) * hp
    offset = np.where(left, th * hp, hp - th * hp)
    ev = HilbertEvaluator.of(weight)
    engine = MaximalEngine.of(weight, a)
    H = _chunked(lambda s, t: ev(anchor[s:t], frac[s:t]), len(piece), threads)
    M = _chunked(lambda s, t: engine(piece[s:t], offset[s:t]), len(piece), threads)
    v = weight.values[piece]
    integrand = (np.abs(H) / M ** (a / r)) ** 2 * v ** a
    per_piece = (integrand * np.tile(np.concatenate([qw, qw]), len(nz))).reshape(len(nz), -1).sum(axis=1)
    return float(np.sum(per_piece * h) * weight.unit)


@_timed
def extrapolation_functional(k: int, depth=None, r: float | None = None, plan_resolution: int = 8,
                             orientation: str = "all_left",
                             tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
                             piece_budget: int = DEFAULT_PIECE_BUDGET,
                             threads: int | None = None) -> ExperimentReport:
    """The weighted ``L^2`` functional of the extrapolation step; ``r`` defaults to ``r_k``."""
    depth = _resolve_depth(k, depth, piece_budget)
    r = r_k(k) if r is None else float(r)
    a = alpha_of_r(r)
    tree, weight, tail = _setup(k, depth, orientation, tail_threshold, piece_budget)
    value = functional_of(weight, r, plan_resolution, threads)
    mass = weight.mass
    summary = {"functional": value, "alpha": a, "mass": mass, "functional_over_mass": value / mass}
    if r == r_k(k):
        # mass on the middle thirds of the islands is a third of the island mass
        summary["paper_regime_comparator"] = k**2 / (9 * 27 ** (2 / (2 - r))) * mass / 3
        summary["paper_regime_comparator_label"] = "paper-regime comparator (indicative only)"
    params = {"k": k, "depth": depth, "r": r, "plan_resolution": plan_resolution,
              "orientation": orientation, "tail_threshold": tail_threshold,
              "piece_budget": piece_budget}
    return ExperimentReport("extrapolation", params, {}, summary, tail)


# -- growth factor and sweep ------------------------------------------------

@_timed
def growth_factor_report(phi: str, r: float | None = None, k: int | None = None) -> ExperimentReport:
    """``sup_{t>=1} Φ(t)^{1/r}/t``; ``k`` selects ``r = r_k``."""
    if r is None:
        if k is None:
            raise ParameterError("growth factor needs r or k")
        r = r_k(k)
    young = YoungFunction.parse(phi)
    res = growth_factor_detail(young, float(r))
    summary = {"growth_factor": res.value, "log_t_star": res.log_t_star}
    if k is not None:
        summary["growth_factor_over_k"] = res.value / k
    params = {"phi": young.spec(), "r": float(r), "k": k}
    return ExperimentReport("growth_factor", params, {}, summary, None)


def depth_rule(rule: str, k: int, piece_budget: int = DEFAULT_PIECE_BUDGET) -> int:
    """``auto`` (largest depth within ``piece_budget``), ``fixed:L`` or ``budget:N``."""
    if rule == "auto":
        return default_depth(k, piece_budget)
    kind, _, value = rule.partition(":")
    try:
        n = int(value)
    except ValueError:
        raise ParameterError(f"bad depth rule {rule!r}") from None
    if kind == "fixed":
        return n
    if kind == "budget":
        return default_depth(k, n)
    raise ParameterError(f"bad depth rule {rule!r}")


def _attach_growth(rep: ExperimentReport, phi: str, k: int) -> None:
    """Add the growth factor at ``r_k``; an unbounded sup is recorded as such."""
    try:
        gf = growth_factor_detail(YoungFunction.parse(phi), r_k(k))
    except DomainError as exc:
        rep.summary["growth_factor"] = None
        rep.summary["growth_factor_unbounded"] = str(exc)
        return
    rep.summary["growth_factor"] = gf.value
    rep.summary["growth_log_t_star"] = gf.log_t_star


def k_sweep(phis=("linear", "psi"), k_range=(2, 3, 4, 5), depth_rule_spec: str = "budget:2000",
            orientation: str = "greedy_search", resolution: int = 16,
            tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
            piece_budget: int = DEFAULT_PIECE_BUDGET, threads: int | None = None,
            output: str | None = None, timing: bool = True) -> list[ExperimentReport]:
    """Weak-type ratio and growth factor for every ``(k, Φ)``; infeasible cells are recorded."""
    reports = []
    for k in k_range:
        for phi in phis:
            try:
                depth = depth_rule(depth_rule_spec, k, piece_budget)
                rep = weaktype_ratio(k, depth, phi, resolution=resolution, orientation=orientation,
                                     tail_threshold=tail_threshold, piece_budget=piece_budget,
                                     threads=threads)
                _attach_growth(rep, phi, k)
                rep.params["sweep"] = {"depth_rule": depth_rule_spec}
            except (ParameterError, TailRefusal, CapacityError) as exc:
                rep = ExperimentReport("weaktype_ratio", {"k": k, "phi": phi, "skipped": True},
                                       {}, {"skipped_reason": str(exc)}, None)
            reports.append(rep)
    if output:
        write_reports(reports, output, timing)
    return reports


# -- regeneration -----------------------------------------------------------

_RUNNERS = {
    "orientation_search": run_orientation_search,
    "hilbert_eval": hilbert_eval,
    "lemma21": run_lemma21_check,
    "lemma22": run_lemma22_check,
    "hw_lowerbound": run_hw_lowerbound,
    "weaktype_ratio": weaktype_ratio,
    "extrapolation": extrapolation_functional,
    "growth_factor": growth_factor_report,
}


def rerun(report: ExperimentReport, threads: int | None = None) -> ExperimentReport:
    """Regenerate a report from its embedded parameters."""
    params = dict(report.params)
    sweep = params.pop("sweep", None)
    if params.get("skipped"):
        raise ParameterError("cannot rerun a skipped cell")
    fn = _RUNNERS[report.experiment]
    if fn is not growth_factor_report:
        params["threads"] = threads
    out = fn(**params)
    if sweep is not None:
        _attach_growth(out, params["phi"], params["k"])
        out.params["sweep"] = sweep
    return out

