"""Greedy search over island sides maximizing ``min |Hw| / w`` on the sample plan."""

from __future__ import annotations

import numpy as np

from .operators.hilbert import _piece_terms
from .rt_construction import (ConstructionParams, Orientation, alpha, build_generations,
                              build_weight)
from .sampling import build_plan, hw_ratios, island_sample_offsets

SEED_POLICIES = ("all_left", "all_right", "alternate_by_level")
_IMPROVE = 1e-12


def plan_score(k: int, depth: int, orientation: Orientation, margin: int = 1) -> float:
    """``min |Hw|/w`` over the full plan for a fixed orientation."""
    tree = build_generations(ConstructionParams(k, depth, orientation))
    weight, _ = build_weight(tree)
    return float(hw_ratios(weight, build_plan(tree, weight, margin)).min())


class _State:
    """Islands in level order with both candidate positions and the current choice."""

    def __init__(self, k: int, depth: int, sides: np.ndarray, margin: int, budget: int):
        tree = build_generations(ConstructionParams(k, depth, Orientation.explicit(sides)))
        self.k, self.depth = k, depth
        lo_left, lo_right, length, value, level = [], [], [], [], []
        for l in range(1, depth + 1):
            j = tree.j_index[l - 1]
            step = 3 ** ((depth - l) * k)
            lo_left.append(((3 * j + 1) * 3 ** (k - 1) - 1) * step)
            lo_right.append(((3 * j + 2) * 3 ** (k - 1)) * step)
            length.append(np.full(len(j), step, dtype=np.int64))
            value.append(np.full(len(j), alpha(k, l)))
            level.append(np.full(len(j), l, dtype=np.int64))
        self.lo_left, self.lo_right, self.len, self.value, self.level = map(
            np.concatenate, (lo_left, lo_right, length, value, level))
        self.lenf = self.len.astype(np.float64)
        self.side = np.asarray(sides, dtype=bool).copy()
        # objective points: owner island and offset from its start
        owners = np.nonzero(self.level <= depth - margin)[0]
        ints, fracs = island_sample_offsets(self.level[owners], k, depth, (0.25, 0.5, 0.75))
        nt = ints.shape[1]
        owner = np.repeat(owners, nt)
        off_i, off_f = ints.ravel(), fracs.ravel()
        if len(owner) > budget:
            keep = np.unique(np.linspace(0, len(owner) - 1, budget).round().astype(np.int64))
            owner, off_i, off_f = owner[keep], off_i[keep], off_f[keep]
        self.owner, self.off_i, self.off_f = owner, off_i, off_f
        self.by_owner: dict[int, np.ndarray] = {}
        for m, o in enumerate(owner.tolist()):
            self.by_owner.setdefault(o, []).append(m)
        self.by_owner = {o: np.array(v) for o, v in self.by_owner.items()}
        self.refresh()

    def lo(self, idx=None):
        lo = np.where(self.side, self.lo_right, self.lo_left)
        return lo if idx is None else lo[idx]

    def positions(self):
        return self.lo(self.owner) + self.off_i

    def _contrib(self, anchor, frac, lo, length, value):
        da = (anchor - lo).astype(np.float64) + frac
        db = (anchor - lo - length).astype(np.float64) + frac
        return _piece_terms(value, da, db, length.astype(np.float64))

    def full_h(self, anchor, frac):
        lo = self.lo()
        out = np.empty(len(anchor))
        step = max(1, 2_000_000 // len(lo))
        for s in range(0, len(anchor), step):
            out[s:s + step] = self._contrib(anchor[s:s + step, None], frac[s:s + step, None],
                                            lo, self.len, self.value).sum(axis=1)
        return out

    def refresh(self):
        self.h = self.full_h(self.positions(), self.off_f)

    def objective(self, h=None):
        h = self.h if h is None else h
        return float(np.min(np.abs(h) / self.value[self.owner]))

    def try_flip(self, j: int) -> bool:
        """Flip island ``j`` if that strictly improves the objective."""
        old_lo = self.lo(j)
        new_lo = self.lo_left[j] if self.side[j] else self.lo_right[j]
        anc = self.positions()
        frac = self.off_f
        L, v = np.array([self.len[j]]), np.array([self.value[j]])
        delta = (self._contrib(anc, frac, np.array([new_lo]), L, v)
                 - self._contrib(anc, frac, np.array([old_lo]), L, v))
        h_new = self.h + delta
        own = self.by_owner.get(j)
        if own is not None:
            self.side[j] = not self.side[j]
            h_new[own] = self.full_h(self.positions()[own], frac[own])
            self.side[j] = not self.side[j]
        if self.objective(h_new) > self.objective() * (1 + _IMPROVE):
            self.side[j] = not self.side[j]
            self.h = h_new
            return True
        return False


def greedy_orientation(k: int, depth: int, sample_budget: int = 20_000, margin: int = 1):
    seeds = []
    for name in SEED_POLICIES:
        o = Orientation(name)
        seeds.append((plan_score(k, depth, o, margin), name, o))
    best = max(seeds, key=lambda s: s[0])
    seed_score, _, seed = best
    tree = build_generations(ConstructionParams(k, depth, seed))
    sides = np.concatenate(tree.side)
    state = _State(k, depth, sides, margin, sample_budget)
    for l in range(1, depth + 1):
        for j in np.nonzero(state.level == l)[0]:
            state.try_flip(int(j))
        state.refresh()
    result = Orientation.explicit(state.side.tolist())
    score = plan_score(k, depth, result, margin)
    if score < seed_score:
        return Orientation.explicit(sides.tolist()), seed_score
    return result, score
