"""Hilbert transform of step functions.

Convention: ``Hf(x) = p.v. ∫ f(t) / (x - t) dt`` with no ``1/π`` factor, so a
piece ``[a, b)`` with value ``v`` contributes ``v * log|(x - a) / (x - b)|``.

Evaluation points are passed as ``(anchor, offset)`` pairs: an int64
numerator on the source's grid plus a float offset in grid units.  All
distances to breakpoints are then an exact integer difference plus a small
float, which keeps the logarithms accurate at depth.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import SingularityError
from ..triadic import StepFunction, _anchor

H_CONVENTION = "Hf(x) = p.v. int f(t)/(x-t) dt, no 1/pi factor"

_LEAF = 32
_ORDER = 32
_SEPARATION = 3.0
# direct evaluation below this many (point, piece) pairs
_DIRECT_PAIRS = 2_000_000
# targets per treecode pass, bounds the near-field pair arrays
_TREE_CHUNK = 2048


def _piece_terms(v, da, db, length):
    """``v * log|da/db|`` for distances ``da = x - a``, ``db = x - b`` (grid units)."""
    out = np.empty(np.broadcast(v, da, db).shape)
    right = db > 0
    left = da < 0
    inside = ~(right | left)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = v * np.log1p(length / np.where(right, db, 1.0))
        lft = -v * np.log1p(length / np.where(left, -da, 1.0))
        ins = v * (np.log(np.where(inside, da, 1.0)) - np.log(np.where(inside, -db, 1.0)))
    out = np.where(right, r, np.where(left, lft, ins))
    return out


def hilbert_step(f: StepFunction, x) -> float:
    """``Hf(x)`` in closed form; ``x`` may be a Rational3, Fraction, int or float."""
    anchor, frac = _anchor(x, f.scale)
    grid = f.grid
    if abs(anchor) < 2**62:
        d = (np.int64(anchor) - grid).astype(np.float64) + frac
        exact = frac == 0.0
        hit = bool(exact and np.any(grid == anchor))
    else:
        d = float(x) - grid.astype(np.float64) * f.unit
        d = d / f.unit
        hit = False
    if hit:
        raise SingularityError(f"Hilbert transform evaluated at breakpoint {x}")
    nz = f.values != 0
    da, db = d[:-1][nz], d[1:][nz]
    length = f.lengths()[nz].astype(np.float64)
    return math.fsum(_piece_terms(f.values[nz], da, db, length))


class _Tree:
    """Binary tree over the (nonzero) pieces with far-field moments."""

    def __init__(self, a, b, v):
        n = len(a)
        starts, ends = [0], [n]
        lefts, rights = [], []
        depth_of = [0]
        i = 0
        while i < len(starts):
            s, e = starts[i], ends[i]
            if e - s > _LEAF:
                m = (s + e) // 2
                lefts.append(len(starts))
                starts.append(s)
                ends.append(m)
                depth_of.append(depth_of[i] + 1)
                rights.append(len(starts))
                starts.append(m)
                ends.append(e)
                depth_of.append(depth_of[i] + 1)
            else:
                lefts.append(-1)
                rights.append(-1)
            i += 1
        self.start = np.array(starts, dtype=np.int64)
        self.end = np.array(ends, dtype=np.int64)
        self.left = np.array(lefts, dtype=np.int64)
        self.right = np.array(rights, dtype=np.int64)
        lo = a[self.start]
        hi = b[self.end - 1]
        self.center = lo + (hi - lo) // 2
        self.radius = np.maximum(self.center - lo, hi - self.center).astype(np.float64)
        self.moments = np.zeros((len(starts), _ORDER))
        depth = np.array(depth_of)
        for dlev in range(depth.max() + 1):
            nodes = np.nonzero(depth == dlev)[0]
            counts = self.end[nodes] - self.start[nodes]
            owner = np.repeat(nodes, counts)
            idx = np.concatenate([np.arange(s, e) for s, e in zip(self.start[nodes], self.end[nodes])])
            rho = self.radius[owner]
            ta = (a[idx] - self.center[owner]).astype(np.float64) / rho
            tb = (b[idx] - self.center[owner]).astype(np.float64) / rho
            delta = (b[idx] - a[idx]).astype(np.float64) / rho
            # D_p = tb^p - ta^p via D_p = tb D_{p-1} + ta^{p-1} delta (no cancellation)
            D = delta.copy()
            ta_pow = np.ones_like(ta)
            vv = v[idx]
            nmax = len(self.start)
            for p in range(1, _ORDER + 1):
                if p > 1:
                    ta_pow = ta_pow * ta
                    D = tb * D + ta_pow * delta
                self.moments[:, p - 1] += np.bincount(owner, weights=vv * D, minlength=nmax)
        self.moments /= np.arange(1, _ORDER + 1)

    def far_field(self, nodes, u):
        S = self.moments[nodes]
        acc = np.zeros(len(nodes))
        for p in range(_ORDER - 1, -1, -1):
            acc = acc * u + S[:, p]
        return acc * u


class HilbertEvaluator:
    """Batch evaluation of ``Hf`` at many ``(anchor, offset)`` points."""

    def __init__(self, f: StepFunction):
        self.f = f
        nz = np.nonzero(f.values)[0]
        self.a = f.grid[nz]
        self.b = f.grid[nz + 1]
        self.v = f.values[nz]
        self.length = (self.b - self.a).astype(np.float64)
        self._tree = None

    @classmethod
    def of(cls, f: StepFunction) -> "HilbertEvaluator":
        return f.derived("hilbert-evaluator", lambda: cls(f))

    @property
    def tree(self) -> _Tree:
        if self._tree is None:
            self._tree = _Tree(self.a, self.b, self.v)
        return self._tree

    def __call__(self, anchor, offset, method: str = "auto") -> np.ndarray:
        anchor = np.asarray(anchor, dtype=np.int64)
        offset = np.asarray(offset, dtype=np.float64)
        m, n = len(anchor), len(self.a)
        if n == 0 or m == 0:
            return np.zeros(m)
        if method == "auto":
            method = "direct" if m * n <= _DIRECT_PAIRS or n <= 4 * _LEAF else "tree"
        if method == "direct":
            return self._direct(anchor, offset)
        out = np.empty(m)
        for s in range(0, m, _TREE_CHUNK):
            out[s:s + _TREE_CHUNK] = self._treecode(anchor[s:s + _TREE_CHUNK], offset[s:s + _TREE_CHUNK])
        return out

    def _check(self, da, db):
        if np.any(da == 0) or np.any(db == 0):
            raise SingularityError("Hilbert transform evaluated at a breakpoint")

    def _direct(self, anchor, offset):
        m, n = len(anchor), len(self.a)
        out = np.empty(m)
        step = max(1, 2_000_000 // n)
        for s in range(0, m, step):
            anc = anchor[s:s + step, None]
            off = offset[s:s + step, None]
            da = (anc - self.a).astype(np.float64) + off
            db = (anc - self.b).astype(np.float64) + off
            self._check(da, db)
            # pairwise summation along the piece axis
            out[s:s + step] = _piece_terms(self.v, da, db, self.length).sum(axis=1)
        return out

    def _treecode(self, anchor, offset):
        tree = self.tree
        m = len(anchor)
        out = np.zeros(m)
        t = np.arange(m)
        node = np.zeros(m, dtype=np.int64)
        while len(t):
            d = (anchor[t] - tree.center[node]).astype(np.float64) + offset[t]
            rho = tree.radius[node]
            far = np.abs(d) >= _SEPARATION * rho
            if far.any():
                vals = tree.far_field(node[far], rho[far] / d[far])
                out += np.bincount(t[far], weights=vals, minlength=m)
            near = ~far
            t, node = t[near], node[near]
            leaf = tree.left[node] < 0
            if leaf.any():
                tl, nl = t[leaf], node[leaf]
                counts = tree.end[nl] - tree.start[nl]
                tt = np.repeat(tl, counts)
                first = np.repeat(tree.start[nl], counts)
                within = np.arange(len(tt)) - np.repeat(np.cumsum(counts) - counts, counts)
                pc = first + within
                da = (anchor[tt] - self.a[pc]).astype(np.float64) + offset[tt]
                db = (anchor[tt] - self.b[pc]).astype(np.float64) + offset[tt]
                self._check(da, db)
                vals = _piece_terms(self.v[pc], da, db, self.length[pc])
                out += np.bincount(tt, weights=vals, minlength=m)
            t, node = t[~leaf], node[~leaf]
            t = np.concatenate([t, t])
            node = np.concatenate([tree.left[node], tree.right[node]])
        return out


def points_to_anchors(f: StepFunction, points) -> tuple[np.ndarray, np.ndarray]:
    """Convert exact points (Rational3/Fraction/int/float) to ``(anchor, offset)`` arrays."""
    pairs = [_anchor(x, f.scale) for x in points]
    return (np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.float64))


def hilbert_many(f: StepFunction, points, method: str = "auto") -> np.ndarray:
    anchor, offset = points_to_anchors(f, points)
    return HilbertEvaluator.of(f)(anchor, offset, method=method)


class SampledTransform:
    """``Hf`` for a fixed source ``f`` with memoized point evaluations.

    Values are a pure function of ``(f, x)``, so memo hits return exactly
    what a fresh evaluation would.
    """

    convention = H_CONVENTION

    def __init__(self, f: StepFunction):
        self.source = f
        self._memo: dict = {}

    def __call__(self, x) -> float:
        key = _anchor(x, self.source.scale)
        val = self._memo.get(key)
        if val is None:
            val = hilbert_step(self.source, x)
            self._memo[key] = val
        return val

    def many(self, anchor, offset) -> np.ndarray:
        return HilbertEvaluator.of(self.source)(anchor, offset)

    def __len__(self):
        return len(self._memo)
