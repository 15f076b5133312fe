"""Command-line driver: ``wtlab <subcommand> [flags]``.

Every flag is a :class:`RunConfig` field.  ``--emit-config PATH`` writes the
resolved config and exits; ``--from-config PATH`` replays it.  Exit codes:
0 success, 1 parameter error, 2 budget or tail refusal, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field

from . import experiments as ex
from .errors import InvariantViolation, ParameterError, WtlabError
from .operators.young import YoungFunction
from .rt_construction import (DEFAULT_PIECE_BUDGET, ConstructionParams, Orientation,
                              build_generations, build_weight, piece_count)

CONFIG_FORMAT = "wtlab-config-v1"
SUBCOMMANDS = ("build-weight", "verify-lemma21", "verify-lemma22", "hilbert-eval",
               "weaktype-ratio", "extrapolation", "growth-factor", "k-sweep",
               "orientation-search")


@dataclass
class RunConfig:
    """Everything a run depends on; serializes to JSON and back unchanged."""

    subcommand: str
    k: int | None = None
    depth: str = "auto"
    orientation: str = "all_left"
    phi: str = "linear"
    phis: list = field(default_factory=lambda: ["linear", "psi"])
    r: float | None = None
    lambdas: str = "auto"
    resolution: int = 16
    plan_resolution: int = 8
    margin: int = 1
    tail_threshold: float = ex.DEFAULT_TAIL_THRESHOLD
    piece_budget: int = DEFAULT_PIECE_BUDGET
    sample_budget: int = 20_000
    k_range: list = field(default_factory=lambda: [2, 3, 4, 5])
    depth_rule: str = "budget:2000"
    points: list = field(default_factory=list)
    input: str | None = None
    seed: int = 0
    output: str | None = None
    timing: bool = True
    threads: int | None = None
    quiet: bool = False

    def to_dict(self) -> dict:
        return {"format": CONFIG_FORMAT, **dataclasses.asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        if doc.pop("format", CONFIG_FORMAT) != CONFIG_FORMAT:
            raise ParameterError("unsupported config format")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def depth_value(self):
        return None if self.depth == "auto" else int(self.depth)

    def validate(self) -> None:
        """Range checks, run before any computation."""
        if self.subcommand not in SUBCOMMANDS:
            raise ParameterError(f"unknown subcommand {self.subcommand!r}")
        needs_k = self.subcommand not in ("growth-factor", "k-sweep", "hilbert-eval")
        if needs_k and self.k is None:
            raise ParameterError(f"{self.subcommand} needs --k")
        if self.k is not None and self.k < 2:
            raise ParameterError(f"k must be >= 2, got {self.k}")
        if self.depth != "auto":
            d = _int_token(self.depth, "depth")
            if d < 1:
                raise ParameterError(f"depth must be >= 1, got {self.depth}")
        Orientation.parse(self.orientation)
        YoungFunction.parse(self.phi)
        for p in self.phis:
            YoungFunction.parse(p)
        if self.r is not None and not 1.0 <= self.r < 2.0:
            raise ParameterError(f"r must lie in [1, 2), got {self.r}")
        if self.subcommand == "growth-factor" and self.r is None and self.k is None:
            raise ParameterError("growth-factor needs --r or --k")
        parse_lambdas(self.lambdas)
        for name in ("resolution", "plan_resolution", "piece_budget", "sample_budget"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.margin < 0:
            raise ParameterError(f"margin must be >= 0, got {self.margin}")
        if not self.tail_threshold > 0:
            raise ParameterError(f"tail threshold must be positive, got {self.tail_threshold}")
        if self.threads is not None and self.threads < 1:
            raise ParameterError(f"threads must be >= 1, got {self.threads}")
        if any(k < 2 for k in self.k_range):
            raise ParameterError(f"k range must be >= 2, got {self.k_range}")
        _check_rule(self.depth_rule)
        for p in self.points:
            ex.parse_point(p)


def _check_rule(rule: str) -> None:
    if rule == "auto":
        return
    kind, _, value = rule.partition(":")
    if kind not in ("fixed", "budget"):
        raise ParameterError(f"bad depth rule {rule!r}")
    if _int_token(value, "depth rule") < 1:
        raise ParameterError(f"bad depth rule {rule!r}")


def _int_token(text, what: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ParameterError(f"invalid {what}: {text!r}") from None


def _float_token(text, what: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ParameterError(f"invalid {what}: {text!r}") from None


def parse_lambdas(spec: str):
    """``auto``, a comma list, or ``geom:lo:hi:n``; returns ``None`` for auto."""
    import numpy as np

    if spec == "auto":
        return None
    if spec.startswith("geom:"):
        parts = spec.split(":")[1:]
        if len(parts) != 3:
            raise ParameterError(f"lambda grid must be geom:lo:hi:n, got {spec!r}")
        lo, hi = (_float_token(p, "lambda") for p in parts[:2])
        n = _int_token(parts[2], "lambda count")
        if not (0 < lo < hi) or n < 1:
            raise ParameterError(f"bad lambda grid {spec!r}")
        return [float(x) for x in np.geomspace(lo, hi, n)]
    values = [_float_token(t, "lambda") for t in spec.split(",") if t.strip()]
    if not values or any(not v > 0 for v in values):
        raise ParameterError(f"lambdas must be positive, got {spec!r}")
    return values


def _int_list(text: str) -> list:
    """``2,3,4`` or ``2-5``."""
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        return list(range(_int_token(lo, "k"), _int_token(hi, "k") + 1))
    return [_int_token(t, "k") for t in text.split(",") if t.strip()]


class _Parser(argparse.ArgumentParser):
    """Parse errors raise :class:`ParameterError` (exit 1) after printing usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParameterError(message)


def _typed(conv, what):
    def parse(text):
        return conv(text, what)
    parse.__name__ = what
    return parse


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--k", type=_typed(_int_token, "k"))
    g.add_argument("--depth", default="auto", help="integer or 'auto'")
    g.add_argument("--orientation", default="all_left")
    g.add_argument("--phi", default="linear")
    g.add_argument("--phis", type=lambda s: [t for t in s.split(",") if t], default=None)
    g.add_argument("--r", type=_typed(_float_token, "r"))
    g.add_argument("--lambdas", default="auto")
    g.add_argument("--resolution", type=_typed(_int_token, "resolution"), default=16)
    g.add_argument("--plan-resolution", type=_typed(_int_token, "plan resolution"), default=8)
    g.add_argument("--margin", type=_typed(_int_token, "margin"), default=1)
    g.add_argument("--tail-threshold", type=_typed(_float_token, "tail threshold"),
                   default=ex.DEFAULT_TAIL_THRESHOLD)
    g.add_argument("--piece-budget", type=_typed(_int_token, "piece budget"),
                   default=DEFAULT_PIECE_BUDGET)
    g.add_argument("--sample-budget", type=_typed(_int_token, "sample budget"), default=20_000)
    g.add_argument("--k-range", type=_int_list, default=None)
    g.add_argument("--depth-rule", default="budget:2000")
    g.add_argument("--points", type=lambda s: [t for t in s.split(",") if t.strip()],
                   default=None, help="comma-separated points; read from stdin if omitted")
    g.add_argument("--input", help="stepfn-v1 JSON source for hilbert-eval")
    g.add_argument("--seed", type=_typed(_int_token, "seed"), default=0)
    o = common.add_argument_group("output")
    o.add_argument("--output", help="write x.json (and x.csv) instead of printing the report")
    o.add_argument("--no-timing", dest="timing", action="store_false")
    o.add_argument("--threads", type=_typed(_int_token, "threads"))
    o.add_argument("--quiet", action="store_true")
    o.add_argument("--emit-config", metavar="PATH", help="write the config ('-' for stdout) and exit")

    parser = _Parser(prog="wtlab", description="Weighted weak-type experiments on triadic step functions.")
    parser.add_argument("--from-config", metavar="PATH", help="replay a config written by --emit-config")
    parser.add_argument("--quiet", dest="replay_quiet", action="store_true",
                        help="with --from-config: suppress stdout")
    parser.add_argument("--threads", dest="replay_threads", type=_typed(_int_token, "threads"),
                        help="with --from-config: worker count (results do not depend on it)")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(ns: argparse.Namespace, stdin=None) -> RunConfig:
    points = ns.points
    if ns.subcommand == "hilbert-eval" and points is None and not ns.emit_config:
        stream = sys.stdin if stdin is None else stdin
        points = stream.read().replace(",", " ").split()
    cfg = RunConfig(
        subcommand=ns.subcommand, k=ns.k, depth=str(ns.depth), orientation=ns.orientation,
        phi=ns.phi, phis=ns.phis if ns.phis is not None else ["linear", "psi"], r=ns.r,
        lambdas=ns.lambdas, resolution=ns.resolution, plan_resolution=ns.plan_resolution,
        margin=ns.margin, tail_threshold=ns.tail_threshold, piece_budget=ns.piece_budget,
        sample_budget=ns.sample_budget,
        k_range=ns.k_range if ns.k_range is not None else [2, 3, 4, 5],
        depth_rule=ns.depth_rule, points=points or [], input=ns.input, seed=ns.seed,
        output=ns.output, timing=ns.timing, threads=ns.threads, quiet=ns.quiet)
    return cfg


def _build_weight_doc(cfg: RunConfig) -> dict:
    depth = ex._resolve_depth(cfg.k, cfg.depth_value(), cfg.piece_budget)
    params = ConstructionParams(cfg.k, depth, Orientation.parse(cfg.orientation), cfg.piece_budget)
    tree = build_generations(params, sample_budget=cfg.sample_budget, margin=cfg.margin)
    weight, tail = build_weight(tree)
    return {"format": "wtlab-weight-v1", "k": cfg.k, "depth": depth,
            "orientation": tree.orientation().spec(), "n_pieces": piece_count(cfg.k, depth),
            "tail_mass": tail, "mass": weight.mass, "weight": weight.to_dict()}


def execute(cfg: RunConfig) -> list:
    """Run a validated config; returns reports (or one document for build-weight)."""
    depth = cfg.depth_value()
    common = {"tail_threshold": cfg.tail_threshold, "piece_budget": cfg.piece_budget}
    sc = cfg.subcommand
    if sc == "build-weight":
        return [_build_weight_doc(cfg)]
    if sc == "verify-lemma21":
        return [ex.run_lemma21_check(cfg.k, depth, cfg.orientation, threads=cfg.threads, **common)]
    if sc == "verify-lemma22":
        return [ex.run_lemma22_check(cfg.k, depth, cfg.margin, cfg.orientation,
                                     threads=cfg.threads, **common)]
    if sc == "hilbert-eval":
        if not cfg.points:
            raise ParameterError("hilbert-eval needs points (--points or stdin)")
        source = None
        if cfg.input:
            with open(cfg.input) as fh:
                doc = json.load(fh)
            source = doc.get("weight", doc)
        return [ex.hilbert_eval(cfg.points, cfg.k, depth, cfg.orientation, source,
                                cfg.piece_budget, cfg.threads)]
    if sc == "weaktype-ratio":
        return [ex.weaktype_ratio(cfg.k, depth, cfg.phi, parse_lambdas(cfg.lambdas),
                                  cfg.resolution, cfg.orientation, cfg.margin,
                                  sample_budget=cfg.sample_budget, threads=cfg.threads, **common)]
    if sc == "extrapolation":
        return [ex.extrapolation_functional(cfg.k, depth, cfg.r, cfg.plan_resolution,
                                            cfg.orientation, threads=cfg.threads, **common)]
    if sc == "growth-factor":
        return [ex.growth_factor_report(cfg.phi, cfg.r, cfg.k)]
    if sc == "k-sweep":
        return ex.k_sweep(cfg.phis, cfg.k_range, cfg.depth_rule, cfg.orientation, cfg.resolution,
                          threads=cfg.threads, **common)
    if sc == "orientation-search":
        return [ex.run_orientation_search(cfg.k, depth, cfg.margin, cfg.sample_budget,
                                          cfg.piece_budget, cfg.threads)]
    raise ParameterError(f"unknown subcommand {sc!r}")


def summary_line(item) -> str:
    if isinstance(item, dict):
        keys = ("k", "depth", "n_pieces", "tail_mass", "mass")
        return json.dumps({"experiment": "build_weight", **{k: item[k] for k in keys}}, sort_keys=True)
    p = item.params
    head = {"experiment": item.experiment, "tail_mass": item.tail_mass,
            **{k: p[k] for k in ("k", "depth", "phi") if k in p}}
    return json.dumps({**head, "summary": item.summary}, sort_keys=True)


def _write(cfg: RunConfig, results: list) -> None:
    if results and isinstance(results[0], dict):
        text = json.dumps(results[0], sort_keys=True) + "\n"
        if cfg.output:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        elif not cfg.quiet:
            sys.stdout.write(text)
            return
    elif cfg.output:
        ex.write_reports(results, cfg.output, cfg.timing)
    if not cfg.quiet:
        for item in results:
            print(summary_line(item))


def _check_invariants(results: list) -> None:
    for item in results:
        if not isinstance(item, dict) and item.experiment == "lemma21" and not item.summary["passed"]:
            raise InvariantViolation(
                f"mass balance discrepancy {item.summary['max_discrepancy']:.3g} exceeds 1e-12")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.from_config:
            if ns.subcommand is not None:
                raise ParameterError("--from-config replaces the subcommand and its flags")
            with open(ns.from_config) as fh:
                cfg = RunConfig.from_dict(json.load(fh))
            cfg.quiet = cfg.quiet or ns.replay_quiet
            if ns.replay_threads is not None:
                cfg.threads = ns.replay_threads
        elif ns.subcommand is None:
            parser.print_usage(sys.stderr)
            raise ParameterError("a subcommand is required")
        else:
            cfg = config_from_args(ns)
        cfg.validate()
        if ns.subcommand is not None and ns.emit_config:
            text = cfg.to_json()
            if ns.emit_config == "-":
                sys.stdout.write(text)
            else:
                with open(ns.emit_config, "w") as fh:
                    fh.write(text)
            return 0
        results = execute(cfg)
        _check_invariants(results)
        _write(cfg, results)
        return 0
    except WtlabError as exc:
        print(f"wtlab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"wtlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
