"""Sample points inside the middle thirds of the islands, and the pointwise ratios on them."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError
from .operators.hilbert import HilbertEvaluator
from .operators.maximal import MaximalEngine
from .rt_construction import GenerationTree
from .triadic import StepFunction

DEFAULT_THETAS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


@dataclass(frozen=True)
class SamplePlan:
    """Points ``x = lo(I) + |I|(1 + θ)/3`` for islands ``I`` of levels ``<= L - margin``.

    ``anchor`` is an int64 numerator on the weight grid and ``frac`` the
    remaining fraction of one grid unit.  ``piece`` is the index of the
    owning island in the weight.
    """

    depth: int
    margin: int
    thetas: tuple[Fraction, ...]
    scale: int
    level: np.ndarray
    piece: np.ndarray
    anchor: np.ndarray
    frac: np.ndarray
    theta_index: np.ndarray

    def __len__(self):
        return len(self.anchor)

    def offsets(self, f: StepFunction) -> np.ndarray:
        """Offsets from the start of the owning piece, in grid units of ``f``."""
        return (self.anchor - f.grid[self.piece]).astype(np.float64) + self.frac

    def point(self, m: int) -> Fraction:
        return Fraction(int(self.anchor[m]), 3**self.scale) + Fraction(self.frac[m]) / 3**self.scale

    def describe(self) -> dict:
        return {"margin": self.margin, "thetas": [str(t) for t in self.thetas],
                "n_points": len(self)}


def island_sample_offsets(level: np.ndarray, k: int, depth: int, thetas) -> tuple[np.ndarray, np.ndarray]:
    """Integer and fractional parts of ``|I|(1 + θ)/3`` in grid units, per point and θ.

    Returns arrays of shape ``(len(level), len(thetas))``.
    """
    ints = np.zeros((len(level), len(thetas)), dtype=np.int64)
    fracs = np.zeros((len(level), len(thetas)))
    for l in np.unique(level):
        rows = level == l
        for c, t in enumerate(thetas):
            off = Fraction(3 ** ((depth - int(l)) * k)) * (1 + Fraction(t)) / 3
            whole = off.numerator // off.denominator
            ints[rows, c] = whole
            fracs[rows, c] = float(off - whole)
    return ints, fracs


def build_plan(tree: GenerationTree, weight: StepFunction, margin: int = 1,
               thetas=DEFAULT_THETAS) -> SamplePlan:
    k, L = tree.k, tree.depth
    thetas = tuple(Fraction(t) for t in thetas)
    if any(not 0 < t < 1 for t in thetas):
        raise ParameterError("sample positions must lie strictly inside the middle third")
    top = L - margin
    if margin < 0 or top < 1:
        raise ParameterError(f"margin {margin} leaves no sampled level at depth {L}")
    if weight.scale != k * L:
        raise ParameterError("weight grid does not match the tree depth")
    level, lo = [], []
    for l in range(1, top + 1):
        step = 3 ** ((L - l) * k)
        idx = tree.island_index(l)
        level.append(np.full(len(idx), l, dtype=np.int64))
        lo.append(idx * step)
    level = np.concatenate(level)
    lo = np.concatenate(lo)
    order = np.argsort(lo, kind="stable")
    level, lo = level[order], lo[order]
    ints, fracs = island_sample_offsets(level, k, L, thetas)
    piece = np.searchsorted(weight.grid, lo, side="right") - 1
    if not np.array_equal(weight.grid[piece], lo):
        raise ParameterError("island starts are not breakpoints of the weight")
    nt = len(thetas)
    return SamplePlan(
        depth=L, margin=margin, thetas=thetas, scale=weight.scale,
        level=np.repeat(level, nt), piece=np.repeat(piece, nt),
        anchor=(lo[:, None] + ints).ravel(), frac=fracs.ravel(),
        theta_index=np.tile(np.arange(nt), len(lo)),
    )


def hw_ratios(weight: StepFunction, plan: SamplePlan) -> np.ndarray:
    """``|Hw(x)| / w(x)`` on the plan points."""
    h = HilbertEvaluator.of(weight)(plan.anchor, plan.frac)
    return np.abs(h) / weight.values[plan.piece]


def maximal_ratios(weight: StepFunction, plan: SamplePlan, r: float) -> np.ndarray:
    """``M_r w(x) / w(x)`` on the plan points."""
    m = MaximalEngine.of(weight, r)(plan.piece, plan.offsets(weight))
    return m / weight.values[plan.piece]
