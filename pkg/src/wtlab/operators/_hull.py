"""Convex-hull kernels for exact sup-of-averages queries.

Points are ``(pos[j], F[j])`` where ``F`` is the prefix integral of a step
function (split into ``Fh + Fl`` for extra precision).  The average of the
function over ``[pos[a], pos[b]]`` is the slope between two points, so the
maximal function at ``x`` is the largest slope between a point left of ``x``
and one right of it.  Persistent hulls make every prefix lower hull and
every suffix upper hull available at once:

* ``prev[j]`` -- predecessor of ``j`` on the lower hull of points ``0..j``;
* ``nxt[j]``  -- successor of ``j`` on the upper hull of points ``j..P``.

Binary lifting over those chains gives O(log n) tangent queries.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _slope(pos, Fh, Fl, i, j):
    return ((Fh[j] - Fh[i]) + (Fl[j] - Fl[i])) / float(pos[j] - pos[i])


@njit(cache=True)
def _slope_ext(pos, Fh, Fl, j, ep, ed, eh, el):
    # slope between hull point j and an external point at pos ep + ed with F = eh + el
    return ((Fh[j] - eh) + (Fl[j] - el)) / (float(pos[j] - ep) - ed)


@njit(cache=True)
def lower_prefix_prev(pos, Fh, Fl):
    n = len(pos)
    prev = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for j in range(n):
        while top >= 2 and _slope(pos, Fh, Fl, stack[top - 2], stack[top - 1]) >= _slope(
            pos, Fh, Fl, stack[top - 1], j
        ):
            top -= 1
        if top >= 1:
            prev[j] = stack[top - 1]
        stack[top] = j
        top += 1
    return prev


@njit(cache=True)
def upper_suffix_next(pos, Fh, Fl):
    n = len(pos)
    nxt = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for j in range(n - 1, -1, -1):
        while top >= 2 and _slope(pos, Fh, Fl, j, stack[top - 1]) <= _slope(
            pos, Fh, Fl, stack[top - 1], stack[top - 2]
        ):
            top -= 1
        if top >= 1:
            nxt[j] = stack[top - 1]
        stack[top] = j
        top += 1
    return nxt


def lifting_table(links, n_levels):
    """``table[t, j]`` is ``links`` applied ``2**t`` times; -1 maps to a sentinel."""
    n = len(links)
    sentinel = n
    base = np.where(links < 0, sentinel, links).astype(np.int64)
    base = np.append(base, sentinel)
    table = np.empty((n_levels, n + 1), dtype=np.int64)
    table[0] = base
    for t in range(1, n_levels):
        table[t] = table[t - 1][table[t - 1]]
    return table


@njit(cache=True)
def _tangent_upper(pos, Fh, Fl, nxt, up, s, ep, ed, eh, el):
    # maximize slope(ext, v) over the upper hull of points s..P; ext lies left of them
    n = len(pos)
    if s >= n:
        return -1
    v = s
    nx = nxt[v]
    if nx < 0 or not (_slope(pos, Fh, Fl, v, nx) > _slope_ext(pos, Fh, Fl, v, ep, ed, eh, el)):
        return v
    for t in range(up.shape[0] - 1, -1, -1):
        u = up[t, v]
        if u >= n:
            continue
        ux = nxt[u]
        if ux >= 0 and _slope(pos, Fh, Fl, u, ux) > _slope_ext(pos, Fh, Fl, u, ep, ed, eh, el):
            v = u
    return nxt[v]


@njit(cache=True)
def _tangent_lower(pos, Fh, Fl, prev, up, e, ep, ed, eh, el):
    # maximize slope(v, ext) over the lower hull of points 0..e; ext lies right of them
    n = len(pos)
    if e < 0:
        return -1
    v = e
    pv = prev[v]
    if pv < 0 or not (_slope(pos, Fh, Fl, pv, v) > _slope_ext(pos, Fh, Fl, v, ep, ed, eh, el)):
        return v
    for t in range(up.shape[0] - 1, -1, -1):
        u = up[t, v]
        if u >= n:
            continue
        pu = prev[u]
        if pu >= 0 and _slope(pos, Fh, Fl, pu, u) > _slope_ext(pos, Fh, Fl, u, ep, ed, eh, el):
            v = u
    return prev[v]


@njit(cache=True)
def _query(pos, Fh, Fl, vp, prev, nxt, up_prev, up_next, i, d):
    n = len(pos)
    P = n - 1
    if i < 0:
        q = _tangent_upper(pos, Fh, Fl, nxt, up_next, 0, pos[0], d, Fh[0], Fl[0])
        return max(0.0, _slope_ext(pos, Fh, Fl, q, pos[0], d, Fh[0], Fl[0]))
    if i >= P:
        e = P if d > 0 else P - 1
        if e < 0:
            return 0.0
        p = _tangent_lower(pos, Fh, Fl, prev, up_prev, e, pos[P], d, Fh[P], Fl[P])
        return max(0.0, _slope_ext(pos, Fh, Fl, p, pos[P], d, Fh[P], Fl[P]))
    eh = Fh[i]
    el = Fl[i] + vp[i] * d
    best = vp[i]
    q = _tangent_upper(pos, Fh, Fl, nxt, up_next, i + 1, pos[i], d, eh, el)
    s = _slope_ext(pos, Fh, Fl, q, pos[i], d, eh, el)
    if s > best:
        best = s
    e = i if d > 0 else i - 1
    if e >= 0:
        p = _tangent_lower(pos, Fh, Fl, prev, up_prev, e, pos[i], d, eh, el)
        s = _slope_ext(pos, Fh, Fl, p, pos[i], d, eh, el)
        if s > best:
            best = s
    # pairs of breakpoints straddling x: alternate best responses until stable
    p = i
    q = _tangent_upper(pos, Fh, Fl, nxt, up_next, i + 1, pos[p], 0.0, Fh[p], Fl[p])
    cur = _slope(pos, Fh, Fl, p, q)
    for _ in range(200):
        p2 = _tangent_lower(pos, Fh, Fl, prev, up_prev, i, pos[q], 0.0, Fh[q], Fl[q])
        q2 = _tangent_upper(pos, Fh, Fl, nxt, up_next, i + 1, pos[p2], 0.0, Fh[p2], Fl[p2])
        s2 = _slope(pos, Fh, Fl, p2, q2)
        if not (s2 > cur):
            break
        cur = s2
        q = q2
    if cur > best:
        best = cur
    return best


@njit(cache=True, nogil=True)
def query_many(pos, Fh, Fl, vp, prev, nxt, up_prev, up_next, qi, qd):
    out = np.empty(len(qi))
    for m in range(len(qi)):
        out[m] = _query(pos, Fh, Fl, vp, prev, nxt, up_prev, up_next, qi[m], qd[m])
    return out


@njit(cache=True)
def _walk_upper(pos, Fh, Fl, nxt, s, ep, ed, eh, el):
    n = len(pos)
    if s >= n:
        return -1
    v = s
    while True:
        nx = nxt[v]
        if nx < 0 or not (_slope(pos, Fh, Fl, v, nx) > _slope_ext(pos, Fh, Fl, v, ep, ed, eh, el)):
            return v
        v = nx


@njit(cache=True)
def _walk_lower(pos, Fh, Fl, prev, e, ep, ed, eh, el):
    if e < 0:
        return -1
    v = e
    while True:
        pv = prev[v]
        if pv < 0 or not (_slope(pos, Fh, Fl, pv, v) > _slope_ext(pos, Fh, Fl, v, ep, ed, eh, el)):
            return v
        v = pv


@njit(cache=True)
def _local_hulls(pos, Fh, Fl, i):
    # lower hull of points 0..i and upper hull of points i+1..P, as linked chains
    n = len(pos)
    prev = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for j in range(min(i + 1, n)):
        while top >= 2 and _slope(pos, Fh, Fl, stack[top - 2], stack[top - 1]) >= _slope(
            pos, Fh, Fl, stack[top - 1], j
        ):
            top -= 1
        if top >= 1:
            prev[j] = stack[top - 1]
        stack[top] = j
        top += 1
    top = 0
    for j in range(n - 1, i, -1):
        while top >= 2 and _slope(pos, Fh, Fl, j, stack[top - 1]) <= _slope(
            pos, Fh, Fl, stack[top - 1], stack[top - 2]
        ):
            top -= 1
        if top >= 1:
            nxt[j] = stack[top - 1]
        stack[top] = j
        top += 1
    return prev, nxt


@njit(cache=True)
def query_single(pos, Fh, Fl, vp, i, d):
    """Same result as ``_query`` without precomputed tables: O(n) per call."""
    n = len(pos)
    P = n - 1
    ii = min(max(i, -1), P)
    prev, nxt = _local_hulls(pos, Fh, Fl, ii)
    if i < 0:
        q = _walk_upper(pos, Fh, Fl, nxt, 0, pos[0], d, Fh[0], Fl[0])
        return max(0.0, _slope_ext(pos, Fh, Fl, q, pos[0], d, Fh[0], Fl[0]))
    if i >= P:
        e = P if d > 0 else P - 1
        if e < 0:
            return 0.0
        p = _walk_lower(pos, Fh, Fl, prev, e, pos[P], d, Fh[P], Fl[P])
        return max(0.0, _slope_ext(pos, Fh, Fl, p, pos[P], d, Fh[P], Fl[P]))
    eh = Fh[i]
    el = Fl[i] + vp[i] * d
    best = vp[i]
    q = _walk_upper(pos, Fh, Fl, nxt, i + 1, pos[i], d, eh, el)
    s = _slope_ext(pos, Fh, Fl, q, pos[i], d, eh, el)
    if s > best:
        best = s
    e = i if d > 0 else i - 1
    if e >= 0:
        # prev links are persistent: the chain from e is the hull of 0..e
        p = _walk_lower(pos, Fh, Fl, prev, e, pos[i], d, eh, el)
        s = _slope_ext(pos, Fh, Fl, p, pos[i], d, eh, el)
        if s > best:
            best = s
    p = i
    q = _walk_upper(pos, Fh, Fl, nxt, i + 1, pos[p], 0.0, Fh[p], Fl[p])
    cur = _slope(pos, Fh, Fl, p, q)
    for _ in range(200):
        p2 = _walk_lower(pos, Fh, Fl, prev, i, pos[q], 0.0, Fh[q], Fl[q])
        q2 = _walk_upper(pos, Fh, Fl, nxt, i + 1, pos[p2], 0.0, Fh[p2], Fl[p2])
        s2 = _slope(pos, Fh, Fl, p2, q2)
        if not (s2 > cur):
            break
        cur = s2
        q = q2
    if cur > best:
        best = cur
    return best
