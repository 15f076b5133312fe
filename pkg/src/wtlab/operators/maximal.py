"""Exact power-maximal operator ``M_r`` for step functions.

``M_r f(x)^r`` is the largest slope between a point of the graph of
``F(t) = ∫_0^t f^r`` left of ``x`` and one right of it, with candidate
endpoints at breakpoints or at ``x`` itself.  Outside the support the
average over ``[x, far end]`` shrinks, so only breakpoints matter there.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ParameterError
from ..triadic import StepFunction, as_fraction
from . import _hull


class MaximalEngine:
    """Hull tables for one ``(f, r)`` pair, answering point queries in O(log n)."""

    def __init__(self, f: StepFunction, r: float):
        if not r >= 1.0:
            raise ParameterError(f"maximal operator needs r >= 1, got {r}")
        self.f = f
        self.r = float(r)
        self.pos = f.grid
        self.Fh, self.Fl = f.prefix(self.r)
        self.vp = np.power(f.values, self.r)
        self.prev = _hull.lower_prefix_prev(self.pos, self.Fh, self.Fl)
        self.nxt = _hull.upper_suffix_next(self.pos, self.Fh, self.Fl)
        levels = max(1, math.ceil(math.log2(len(self.pos) + 1)) + 1)
        self.up_prev = _hull.lifting_table(self.prev, levels)
        self.up_next = _hull.lifting_table(self.nxt, levels)

    @classmethod
    def of(cls, f: StepFunction, r: float) -> "MaximalEngine":
        return f.derived(("maximal", float(r)), lambda: cls(f, r))

    def powered(self, idx, off) -> np.ndarray:
        """``(M_r f)^r`` at points given by piece index and grid offset (see ``locate``)."""
        idx = np.asarray(idx, dtype=np.int64)
        off = np.asarray(off, dtype=np.float64)
        # offsets rounded up to the piece length mean the next breakpoint
        inner = (idx >= 0) & (idx < len(self.pos) - 1)
        span = np.where(inner, np.diff(self.pos, append=self.pos[-1])[np.clip(idx, 0, None)], np.inf)
        spill = off >= span
        if spill.any():
            idx = np.where(spill, idx + 1, idx)
            off = np.where(spill, off - span, off)
        return _hull.query_many(self.pos, self.Fh, self.Fl, self.vp, self.prev, self.nxt,
                                self.up_prev, self.up_next, idx, off)

    def __call__(self, idx, off) -> np.ndarray:
        return np.power(self.powered(idx, off), 1.0 / self.r)


def locate_many(f: StepFunction, points) -> tuple[np.ndarray, np.ndarray]:
    pairs = [f.locate(x) for x in points]
    return (np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.float64))


def maximal(f: StepFunction, x, r: float = 1.0) -> float:
    """``M_r f(x) = sup_{R ∋ x} (|R|^-1 ∫_R f^r)^{1/r}``."""
    i, d = f.locate(x)
    return float(MaximalEngine.of(f, r)([i], [d])[0])


def maximal_many(f: StepFunction, points, r: float = 1.0) -> np.ndarray:
    idx, off = locate_many(f, points)
    return MaximalEngine.of(f, r)(idx, off)


def maximal_at(f: StepFunction, idx, off, r: float = 1.0) -> np.ndarray:
    """Vectorized ``M_r f`` at ``(piece index, offset)`` locations."""
    return MaximalEngine.of(f, r)(idx, off)


def average(f: StepFunction, a, b, r: float = 1.0) -> float:
    """``(|R|^-1 ∫_R f^r)^{1/r}`` over ``R = [a, b]``."""
    length = float(as_fraction(b) - as_fraction(a))
    if length <= 0:
        raise ParameterError("average needs a nonempty interval")
    return (f.integrate(a, b, r) / length) ** (1.0 / r)
