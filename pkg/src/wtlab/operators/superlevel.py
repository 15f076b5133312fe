"""Weighted measure of the superlevel sets ``{|Hf| > λ}``.

On every segment where ``w`` is positive and ``f`` is constant, ``Hf`` is
sampled at ``resolution`` interior points.  At a jump ``J = f(p+) - f(p-)``
the transform behaves like ``J log|x - p|``, so such segment ends count as
``-sign(J) inf``.  The set ``{|Hf| > λ}`` is split into ``{Hf > λ}`` and
``{Hf < -λ}``: working with the signed transform keeps the zero crossing of
``Hf`` inside an island from hiding two crossings of ``|Hf| = λ``.  Each
change of either predicate between neighbouring nodes is refined by
bisection, all brackets of all ``λ`` in lockstep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..triadic import StepFunction
from .hilbert import HilbertEvaluator

BRACKET_WIDTH = 1e-12
GRADING = 12               # nodes at 3^-m / 2 from each segment end
EXTREMUM_ITERATIONS = 60
RESIDUAL_TOL = 1e-13


@dataclass(frozen=True)
class SuperlevelProfile:
    lambdas: np.ndarray
    measure: np.ndarray        # ∫_{|Hf| > λ} w, per λ
    samples: np.ndarray        # Hf at the uniform nodes (one row per segment)
    n_brackets: int
    n_evaluations: int


class _Segments:
    """Segments of positive ``w`` on the common grid, with jump flags of ``f`` at their ends."""

    def __init__(self, f: StepFunction, w: StepFunction):
        S = max(f.scale, w.scale)
        self.f = f.refined(S) if f.scale < S else f
        ws = w.refined(S) if w.scale < S else w
        self.unit = 3.0 ** (-S)
        grid = np.union1d(self.f.grid, ws.grid)
        a, b = grid[:-1], grid[1:]
        wi = np.searchsorted(ws.grid, a, side="right") - 1
        wv = np.where((wi >= 0) & (wi < ws.n_pieces), ws.values[np.clip(wi, 0, ws.n_pieces - 1)], 0.0)
        keep = wv > 0
        self.a, self.b, self.wv = a[keep], b[keep], wv[keep]
        self.h = (self.b - self.a).astype(np.float64)
        self.jump_a = self._jump(self.a)
        self.jump_b = self._jump(self.b)
        self.evaluator = HilbertEvaluator.of(self.f)

    def _jump(self, p):
        g, v = self.f.grid, self.f.values
        n = len(v)
        i = np.searchsorted(g, p, side="left")
        on = (i <= n) & (g[np.clip(i, 0, n)] == p)
        right = np.where(on & (i < n), v[np.clip(i, 0, n - 1)], 0.0)
        left = np.where(on & (i > 0), v[np.clip(i - 1, 0, n - 1)], 0.0)
        return right - left

    def value(self, seg, theta):
        """``Hf`` at relative position ``theta`` of segment ``seg``, anchored at the nearer end."""
        near_left = theta <= 0.5
        anchor = np.where(near_left, self.a[seg], self.b[seg])
        offset = np.where(near_left, theta, theta - 1.0) * self.h[seg]
        return self.evaluator(anchor, offset)


def _base_nodes(resolution: int) -> np.ndarray:
    """Uniform interior nodes plus nodes graded geometrically toward both ends."""
    uniform = (np.arange(resolution) + 0.5) / resolution
    graded = 0.5 * 3.0 ** -np.arange(1, GRADING + 1)
    return np.unique(np.concatenate([[0.0], graded, uniform, 1.0 - graded, [1.0]]))


def _refine_extrema(segs: _Segments, theta: np.ndarray, ext: np.ndarray):
    """Golden-section search for the true extremum around every sampled local extremum.

    Returns the extra ``(segment, theta, value)`` nodes.  With every extremum
    of ``Hf`` on the node set, ``Hf`` is monotone between neighbouring nodes.
    """
    seg_out, th_out, val_out = [], [], []
    for sign in (1.0, -1.0):
        v = sign * ext
        mid = v[:, 1:-1]
        peak = (mid >= v[:, :-2]) & (mid >= v[:, 2:]) & ((mid > v[:, :-2]) | (mid > v[:, 2:]))
        peak &= np.isfinite(mid)
        s, j = np.nonzero(peak)
        if len(s) == 0:
            continue
        a, b = theta[j].copy(), theta[j + 2].copy()
        g = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = b - g * (b - a), a + g * (b - a)
        fc = sign * segs.value(s, c)
        fd = sign * segs.value(s, d)
        for _ in range(EXTREMUM_ITERATIONS):
            left = fc > fd                 # the maximum lies in [a, d]
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            new_c = np.where(left, b - g * (b - a), d)
            new_d = np.where(left, c, a + g * (b - a))
            fx = sign * segs.value(s, np.where(left, new_c, new_d))
            fc, fd = np.where(left, fx, fd), np.where(left, fc, fx)
            c, d = new_c, new_d
        best = np.where(fc > fd, c, d)
        seg_out.append(s)
        th_out.append(best)
        val_out.append(segs.value(s, best))
    if not seg_out:
        return np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0)
    return np.concatenate(seg_out), np.concatenate(th_out), np.concatenate(val_out)


def sample_transform(f: StepFunction, w: StepFunction, resolution: int = 16) -> np.ndarray:
    """``Hf`` at ``resolution`` uniform nodes of every segment where ``w > 0``."""
    segs = _Segments(f, w)
    theta = (np.arange(resolution) + 0.5) / resolution
    ns = len(segs.a)
    if ns == 0:
        return np.zeros((0, resolution))
    return segs.value(np.repeat(np.arange(ns), resolution), np.tile(theta, ns)).reshape(ns, resolution)


@dataclass
class _Crossings:
    theta: np.ndarray
    n_evaluations: int


def _locate_crossings(segs: _Segments, seg, lam, sgn, lo, hi, g_lo, g_hi) -> _Crossings:
    """Root of ``g = sgn Hf - λ`` in each bracket ``[lo, hi]``, on which ``Hf`` is monotone.

    ``g_lo``/``g_hi`` are the residuals at the bracket ends (possibly
    infinite).  Illinois regula falsi, with a bisection step whenever three
    steps fail to halve the bracket.  A bracket is done when it is narrower
    than ``BRACKET_WIDTH`` or the residual is at rounding level.
    """
    lo, hi = lo.copy(), hi.copy()
    g_lo, g_hi = g_lo.copy(), g_hi.copy()
    n = len(seg)
    lo_positive = g_lo > 0
    tol = BRACKET_WIDTH / (segs.h[seg] * segs.unit)
    root = 0.5 * (lo + hi)
    last = np.zeros(n, dtype=np.int8)          # -1: lo moved last, +1: hi moved last
    ref_width = hi - lo
    force = np.zeros(n, dtype=bool)
    active = np.nonzero(hi - lo > tol)[0]
    n_eval, step = 0, 0
    while len(active):
        a, b = lo[active], hi[active]
        fa, fb = g_lo[active], g_hi[active]
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            x = b - fb * (b - a) / (fb - fa)
        bad = ~np.isfinite(x) | (x <= a) | (x >= b) | force[active]
        x = np.where(bad, 0.5 * (a + b), x)
        gx = sgn[active] * segs.value(seg[active], x) - lam[active]
        n_eval += len(active)
        move_lo = (gx > 0) == lo_positive[active]
        prev = last[active]
        lo[active] = np.where(move_lo, x, a)
        hi[active] = np.where(move_lo, b, x)
        g_lo[active] = np.where(move_lo, gx, np.where(prev == 1, 0.5 * fa, fa))
        g_hi[active] = np.where(move_lo, np.where(prev == -1, 0.5 * fb, fb), gx)
        last[active] = np.where(move_lo, -1, 1)
        step += 1
        force[active] = False
        if step % 3 == 0:
            width = hi[active] - lo[active]
            force[active] = width > 0.5 * ref_width[active]
            ref_width[active] = width
        exact = np.abs(gx) <= RESIDUAL_TOL * np.maximum(1.0, lam[active])
        root[active] = np.where(exact, x, 0.5 * (lo[active] + hi[active]))
        active = active[~(exact | (hi[active] - lo[active] <= tol[active]))]
    return _Crossings(root, n_eval)


def superlevel_profile(f: StepFunction, w: StepFunction, lambdas, resolution: int = 16) -> SuperlevelProfile:
    """``∫_{{|Hf| > λ} ∩ [0,1]} w`` for every ``λ`` in ``lambdas``."""
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=np.float64))
    if np.any(~(lambdas > 0)):
        raise ParameterError("superlevel thresholds must be positive")
    if resolution < 1:
        raise ParameterError("resolution must be a positive integer")
    segs = _Segments(f, w)
    ns = len(segs.a)
    if ns == 0:
        return SuperlevelProfile(lambdas, np.zeros(len(lambdas)), np.zeros((0, resolution)), 0, 0)
    nodes = _base_nodes(resolution)
    inner = nodes[1:-1]
    seg_idx = np.repeat(np.arange(ns), len(inner))
    vals = segs.value(seg_idx, np.tile(inner, ns)).reshape(ns, len(inner))
    n_eval = vals.size
    ext = np.empty((ns, len(nodes)))
    ext[:, 1:-1] = vals
    ext[:, 0] = np.where(segs.jump_a > 0, -np.inf, np.where(segs.jump_a < 0, np.inf, vals[:, 0]))
    ext[:, -1] = np.where(segs.jump_b > 0, -np.inf, np.where(segs.jump_b < 0, np.inf, vals[:, -1]))

    es, et, ev = _refine_extrema(segs, nodes, ext)
    n_eval += len(es) * (EXTREMUM_ITERATIONS + 3)
    theta = np.broadcast_to(nodes, ext.shape)
    if len(es):
        # pad every row to the same number of extra nodes with copies of node 1
        count = np.bincount(es, minlength=ns)
        width = int(count.max())
        order = np.argsort(es, kind="stable")
        slot = np.empty(len(es), dtype=np.int64)
        slot[order] = np.arange(len(es)) - np.repeat(np.cumsum(count) - count, count)
        xt = np.repeat(theta[:, 1:2], width, axis=1).copy()
        xv = np.repeat(ext[:, 1:2], width, axis=1).copy()
        xt[es, slot] = et
        xv[es, slot] = ev
        theta = np.concatenate([theta, xt], axis=1)
        ext = np.concatenate([ext, xv], axis=1)
        perm = np.argsort(theta, axis=1, kind="stable")
        theta = np.take_along_axis(theta, perm, axis=1)
        ext = np.take_along_axis(ext, perm, axis=1)
    scale = segs.wv * segs.h * segs.unit       # w-mass per unit of theta
    gaps = np.diff(theta, axis=1)

    measure = np.zeros(len(lambdas))
    parts = {key: [] for key in ("seg", "lam", "lo", "hi", "left", "sign", "g_lo", "g_hi")}
    for li, lam in enumerate(lambdas):
        for sign in (1.0, -1.0):
            above = sign * ext > lam
            both = above[:, :-1] & above[:, 1:]
            measure[li] += float(np.sum((both * gaps).sum(axis=1) * scale))
            s, j = np.nonzero(above[:, :-1] != above[:, 1:])
            parts["seg"].append(s)
            parts["lam"].append(np.full(len(s), li))
            parts["lo"].append(theta[s, j])
            parts["hi"].append(theta[s, j + 1])
            parts["left"].append(above[s, j])
            parts["sign"].append(np.full(len(s), sign))
            parts["g_lo"].append(sign * ext[s, j] - lam)
            parts["g_hi"].append(sign * ext[s, j + 1] - lam)
    seg, lam_i, lo0, hi0, left_above, sgn, g_lo, g_hi = (np.concatenate(parts[key]) for key in parts)
    cross = _locate_crossings(segs, seg, lambdas[lam_i], sgn, lo0, hi0, g_lo, g_hi)
    n_eval += cross.n_evaluations
    cross = cross.theta
    part = np.where(left_above, cross - lo0, hi0 - cross)
    measure += np.bincount(lam_i, weights=part * scale[seg], minlength=len(lambdas))
    uniform = np.searchsorted(inner, (np.arange(resolution) + 0.5) / resolution)
    return SuperlevelProfile(lambdas, measure, vals[:, uniform], len(seg), n_eval)


def superlevel_weight(f: StepFunction, w: StepFunction, lam: float, resolution: int = 16) -> float:
    """``∫_{{|Hf| > λ} ∩ [0,1]} w dx``; segments where ``w = 0`` are skipped."""
    return float(superlevel_profile(f, w, [lam], resolution).measure[0])
