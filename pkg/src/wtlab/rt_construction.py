"""Generation tree and truncated weight of the triadic counterexample construction.

Level 1 holds ``J = [0, 1)``.  Every ``J`` of level ``l`` carries one island
``I = P(J)`` of length ``3^-k |J|`` touching the middle third ``J^Δ`` on the
chosen side, and its middle third splits into the ``3^(k-1)`` intervals ``J``
of level ``l + 1``.  The weight equals ``α_l = (3^k / (3^(k-1) + 1))^l`` on
level-``l`` islands.

Intervals of one level are stored as sorted int64 index arrays: ``J`` of
level ``l`` is the triadic interval ``(level=(l-1)k, index=j)`` and its island
is ``(level=lk, index=i)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapacityError, InvariantViolation, ParameterError, TailRefusal
from .triadic import MAX_GRID_SCALE, StepFunction, TriadicInterval, adjacent_scaled

DEFAULT_PIECE_BUDGET = 2_000_000
POLICIES = ("all_left", "all_right", "alternate_by_level", "explicit", "greedy_search")


def piece_count(k: int, depth: int) -> int:
    """Number of islands kept at depth ``L``: ``Σ_{l<=L} 3^((k-1)(l-1))``."""
    return sum(3 ** ((k - 1) * (l - 1)) for l in range(1, depth + 1))


def alpha_exact(k: int, level: int) -> Fraction:
    return Fraction(3**k, 3 ** (k - 1) + 1) ** level


def alpha(k: int, level: int) -> float:
    return float(alpha_exact(k, level))


def tail_ratio(k: int) -> Fraction:
    """``q = 3^(k-1) / (3^(k-1) + 1)``, the mass fraction passed to the next level."""
    return Fraction(3 ** (k - 1), 3 ** (k - 1) + 1)


def truncation_tail(k: int, depth: int) -> float:
    """Exact mass of the levels deeper than ``depth``: ``q^L``."""
    if k < 2 or depth < 0:
        raise ParameterError(f"need k >= 2 and L >= 0, got k={k}, L={depth}")
    return float(tail_ratio(k) ** depth)


def exact_mass(k: int, depth: int) -> Fraction:
    """Mass of the depth-``L`` weight as a rational: ``Σ_l #islands · |I| · α_l``."""
    return sum((3 ** ((k - 1) * (l - 1)) * Fraction(1, 3 ** (l * k)) * alpha_exact(k, l)
                for l in range(1, depth + 1)), Fraction(0))


@dataclass(frozen=True)
class Orientation:
    """Side policy for the islands.

    ``sides`` is only used by the explicit policy: one entry per island in
    level order, then in increasing position; ``True`` means the right side.
    """

    policy: str = "all_left"
    sides: tuple[bool, ...] | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ParameterError(f"unknown orientation policy {self.policy!r}")
        if self.policy == "explicit" and self.sides is None:
            raise ParameterError("explicit orientation needs a side list")

    @classmethod
    def explicit(cls, sides: Sequence[bool]) -> "Orientation":
        return cls("explicit", tuple(bool(s) for s in sides))

    @classmethod
    def parse(cls, text: str) -> "Orientation":
        """``all_left``, ``all_right``, ``alternate_by_level``, ``greedy_search`` or ``explicit:LRRL...``."""
        token = text.strip()
        if token.startswith("explicit:"):
            letters = token.split(":", 1)[1].strip().upper()
            if not letters or set(letters) - {"L", "R"}:
                raise ParameterError(f"explicit orientation must be a string of L/R, got {text!r}")
            return cls.explicit([c == "R" for c in letters])
        if token not in POLICIES or token == "explicit":
            raise ParameterError(f"unknown orientation policy {text!r}")
        return cls(token)

    def spec(self) -> str:
        if self.policy == "explicit":
            return "explicit:" + "".join("R" if s else "L" for s in self.sides)
        return self.policy

    def level_sides(self, level: int, count: int, offset: int) -> np.ndarray:
        if self.policy == "all_left":
            return np.zeros(count, dtype=bool)
        if self.policy == "all_right":
            return np.ones(count, dtype=bool)
        if self.policy == "alternate_by_level":
            return np.full(count, level % 2 == 0)
        if self.policy == "explicit":
            if offset + count > len(self.sides):
                raise ParameterError(
                    f"explicit orientation has {len(self.sides)} sides, need at least {offset + count}")
            return np.array(self.sides[offset:offset + count], dtype=bool)
        raise ParameterError("greedy_search must be resolved before building the tree")


@dataclass(frozen=True)
class ConstructionParams:
    k: int
    depth: int
    orientation: Orientation = field(default_factory=Orientation)
    piece_budget: int = DEFAULT_PIECE_BUDGET

    def __post_init__(self):
        if isinstance(self.orientation, str):
            object.__setattr__(self, "orientation", Orientation.parse(self.orientation))
        if int(self.k) != self.k or self.k < 2:
            raise ParameterError(f"k must be an integer >= 2, got {self.k}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ParameterError(f"depth must be an integer >= 1, got {self.depth}")
        if self.piece_budget < 1:
            raise ParameterError("piece budget must be positive")
        n = piece_count(self.k, self.depth)
        if n > self.piece_budget:
            raise CapacityError(
                f"(k={self.k}, L={self.depth}) needs {n} pieces, above the budget of {self.piece_budget}")
        if self.k * self.depth > MAX_GRID_SCALE:
            raise CapacityError(
                f"(k={self.k}, L={self.depth}) needs grid 3^-{self.k * self.depth}, "
                f"finer than the exact int64 grid 3^-{MAX_GRID_SCALE}")

    @property
    def n_pieces(self) -> int:
        return piece_count(self.k, self.depth)


@dataclass
class GenerationTree:
    """Per level ``l`` (list position ``l - 1``): J indices, parent positions and island sides."""

    k: int
    depth: int
    j_index: list[np.ndarray]
    parent: list[np.ndarray]
    side: list[np.ndarray]

    def island_index(self, level: int) -> np.ndarray:
        """Triadic indices (at level ``lk``) of the islands of generation ``level``."""
        k = self.k
        j = self.j_index[level - 1]
        left = (3 * j + 1) * 3 ** (k - 1) - 1
        right = (3 * j + 2) * 3 ** (k - 1)
        return np.where(self.side[level - 1], right, left)

    def families(self, level: int) -> tuple[list[TriadicInterval], list[TriadicInterval]]:
        """The J and I families of one level as :class:`TriadicInterval` lists."""
        k = self.k
        js = [TriadicInterval((level - 1) * k, int(j)) for j in self.j_index[level - 1]]
        islands = [TriadicInterval(level * k, int(i)) for i in self.island_index(level)]
        return js, islands

    def orientation(self) -> Orientation:
        return Orientation.explicit(np.concatenate(self.side).tolist())

    @property
    def n_pieces(self) -> int:
        return sum(len(j) for j in self.j_index)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        levels = []
        for l in range(1, self.depth + 1):
            recs = []
            for j, p, s in zip(self.j_index[l - 1].tolist(), self.parent[l - 1].tolist(),
                               self.side[l - 1].tolist()):
                recs.append({"level": l, "index": j, "side": "right" if s else "left",
                             "parent": None if p < 0 else p})
            levels.append(recs)
        return {"format": "rt-tree-v1", "k": self.k, "depth": self.depth, "levels": levels}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "GenerationTree":
        if doc.get("format") != "rt-tree-v1":
            raise ParameterError(f"unsupported tree format {doc.get('format')!r}")
        j_index, parent, side = [], [], []
        for recs in doc["levels"]:
            j_index.append(np.array([r["index"] for r in recs], dtype=np.int64))
            parent.append(np.array([-1 if r["parent"] is None else r["parent"] for r in recs],
                                   dtype=np.int64))
            side.append(np.array([r["side"] == "right" for r in recs], dtype=bool))
        return cls(int(doc["k"]), int(doc["depth"]), j_index, parent, side)

    @classmethod
    def from_json(cls, text: str) -> "GenerationTree":
        return cls.from_dict(json.loads(text))


def _skeleton(k: int, depth: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    j_index = [np.zeros(1, dtype=np.int64)]
    parent = [np.full(1, -1, dtype=np.int64)]
    m = 3 ** (k - 1)
    for _ in range(2, depth + 1):
        prev = j_index[-1]
        # children of J^Δ at level lk: indices (3j+1)·3^(k-1) + 0..3^(k-1)-1
        j_index.append(((3 * prev + 1) * m)[:, None].repeat(m, axis=1).ravel()
                       + np.tile(np.arange(m, dtype=np.int64), len(prev)))
        parent.append(np.repeat(np.arange(len(prev), dtype=np.int64), m))
    return j_index, parent


def build_generations(params: ConstructionParams, **search_options) -> GenerationTree:
    """Build the tree; a ``greedy_search`` policy runs :func:`orientation_search` first."""
    orientation = params.orientation
    if orientation.policy == "greedy_search":
        orientation, _ = orientation_search(params.k, params.depth,
                                            piece_budget=params.piece_budget, **search_options)
    j_index, parent = _skeleton(params.k, params.depth)
    sides, offset = [], 0
    for l, js in enumerate(j_index, start=1):
        sides.append(orientation.level_sides(l, len(js), offset))
        offset += len(js)
    if orientation.policy == "explicit" and offset != len(orientation.sides):
        raise ParameterError(f"explicit orientation has {len(orientation.sides)} sides, tree has {offset}")
    return GenerationTree(params.k, params.depth, j_index, parent, sides)


def _island_arrays(tree: GenerationTree) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Islands of all levels on the depth grid: ``lo``, ``hi``, ``value``, ``level``."""
    k, L = tree.k, tree.depth
    lo, hi, val, lev = [], [], [], []
    for l in range(1, L + 1):
        step = 3 ** ((L - l) * k)
        idx = tree.island_index(l)
        lo.append(idx * step)
        hi.append(idx * step + step)
        val.append(np.full(len(idx), alpha(k, l)))
        lev.append(np.full(len(idx), l, dtype=np.int64))
    lo, hi, val, lev = map(np.concatenate, (lo, hi, val, lev))
    order = np.argsort(lo, kind="stable")
    return lo[order], hi[order], val[order], lev[order]


def build_weight(tree: GenerationTree, k: int | None = None) -> tuple[StepFunction, float]:
    """The depth-``L`` weight and the exact mass of the discarded levels."""
    if k is not None and k != tree.k:
        raise ParameterError(f"tree was built with k={tree.k}, asked for k={k}")
    lo, hi, val, _ = _island_arrays(tree)
    return StepFunction.from_intervals(lo, hi, val, tree.k * tree.depth), truncation_tail(tree.k, tree.depth)


def weight_for(params: ConstructionParams, **search_options):
    """Shortcut: ``(tree, weight, tail_mass)`` for a parameter set."""
    tree = build_generations(params, **search_options)
    w, tail = build_weight(tree)
    return tree, w, tail


@dataclass(frozen=True)
class MassBalanceReport:
    """Tail-corrected discrepancies of the mass recursion.

    ``recursion``: ``w(I_J) + w(J^Δ) + tail(J)`` against the full mass of ``J``.
    ``equal_mass``: islands against each next-level ``J`` (tail corrected).
    """

    max_rel_recursion: float
    max_rel_equal_mass: float
    max_rel_island: float
    n_checked: int

    @property
    def max_discrepancy(self) -> float:
        return max(self.max_rel_recursion, self.max_rel_equal_mass, self.max_rel_island)

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_discrepancy <= tol


def verify_mass_balance(tree: GenerationTree, weight: StepFunction) -> MassBalanceReport:
    k, L = tree.k, tree.depth
    q = float(tail_ratio(k))
    E = k * L
    if weight.scale > E:
        raise ParameterError("weight grid is finer than the tree depth")
    w = weight.refined(E) if weight.scale < E else weight
    rec = eq = isl = 0.0
    n = 0
    for l in range(1, L + 1):
        js = tree.j_index[l - 1]
        j_len = 3 ** ((L - l + 1) * k)          # |J| in grid units
        full_j = alpha(k, l - 1) * 3.0 ** (-(l - 1) * k)
        j_lo = js * j_len
        i_lo = tree.island_index(l) * (j_len // 3**k)
        i_len = j_len // 3**k
        w_i = w.integrate_grid(i_lo, i_lo + i_len)
        w_mid = w.integrate_grid(j_lo + j_len // 3, j_lo + 2 * (j_len // 3))
        recur = w_i + w_mid + q ** (L - l + 1) * full_j
        rec = max(rec, float(np.max(np.abs(recur - full_j))) / full_j)
        island_mass = alpha(k, l) * 3.0 ** (-l * k)
        isl = max(isl, float(np.max(np.abs(w_i - island_mass))) / island_mass)
        if l < L:
            nxt = tree.j_index[l] * (j_len // 3**k)
            w_next = w.integrate_grid(nxt, nxt + j_len // 3**k)
            corrected = w_next + q ** (L - l) * island_mass
            eq = max(eq, float(np.max(np.abs(corrected - island_mass))) / island_mass)
        n += len(js)
    return MassBalanceReport(rec, eq, isl, n)


def check_structure(tree: GenerationTree) -> None:
    """Raise :class:`InvariantViolation` unless islands are disjoint and properly nested."""
    k, L = tree.k, tree.depth
    lo, hi, _, _ = _island_arrays(tree)
    if np.any(lo[1:] < hi[:-1]):
        raise InvariantViolation("islands overlap")
    for l in range(1, L + 1):
        js = tree.j_index[l - 1]
        if len(js) != 3 ** ((k - 1) * (l - 1)):
            raise InvariantViolation(f"level {l} has {len(js)} intervals")
        islands = tree.island_index(l)
        for m in np.unique(np.linspace(0, len(js) - 1, min(len(js), 50)).astype(np.int64)):
            side = "right" if tree.side[l - 1][m] else "left"
            j, i = int(js[m]), int(islands[m])
            if adjacent_scaled(TriadicInterval((l - 1) * k, j), side, k) != TriadicInterval(l * k, i):
                raise InvariantViolation(f"island {i} is not adjacent to the middle third of {j}")
        if l > 1:
            par = tree.j_index[l - 2][tree.parent[l - 1]]
            m = 3 ** (k - 1)
            if np.any(js // m != 3 * par + 1):
                raise InvariantViolation(f"level {l} intervals escape their parent's middle third")


def orientation_search(k: int, depth: int, sample_budget: int = 20_000, margin: int = 1,
                       piece_budget: int = DEFAULT_PIECE_BUDGET):
    """Greedy side selection maximizing ``min |Hw| / w`` over sample points.

    Seeds with the best of the fixed policies, then sweeps levels in order and
    flips each island whenever that strictly raises the objective.  Returns
    the explicit orientation and its score on the full sample plan.
    """
    from .search import greedy_orientation

    ConstructionParams(k, depth, Orientation("all_left"), piece_budget)
    return greedy_orientation(k, depth, sample_budget=sample_budget, margin=margin)


def default_depth(k: int, piece_budget: int = DEFAULT_PIECE_BUDGET,
                  tail_threshold: float = 1.0) -> int:
    """Largest ``L`` within the piece budget and the exact grid; tail must not exceed the threshold."""
    L = 0
    while (piece_count(k, L + 1) <= piece_budget and k * (L + 1) <= MAX_GRID_SCALE):
        L += 1
    if L == 0:
        raise CapacityError(f"k={k} admits no depth within budget {piece_budget}")
    if truncation_tail(k, L) > tail_threshold:
        need = L
        q = float(tail_ratio(k))
        while q**need > tail_threshold:
            need += 1
        raise TailRefusal(
            f"k={k}: feasible depth {L} leaves tail {truncation_tail(k, L):.4g} above "
            f"{tail_threshold}; depth {need} ({piece_count(k, need)} pieces) would be required")
    return L
