"""Luxemburg averages, the Orlicz maximal operator and the Young-function suprema.

Two independent routes compute ``M_Φ f(x)``:

* ``enumerate`` takes the largest Luxemburg average over every interval
  whose endpoints are breakpoints of ``f`` or ``x`` itself;
* ``threshold`` uses ``M_Φ f(x) = inf{λ : M[Φ(f/λ)](x) <= 1}`` and bisects
  on ``λ`` with the exact linear maximal function of ``Φ(f/λ)``.

Power kernels (including the linear one) are answered by the hull engine of
:mod:`.maximal` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DomainError, ParameterError
from ..triadic import StepFunction, _anchor
from ._hull import query_single
from .maximal import MaximalEngine
from .young import YoungFunction

_REL_TOL = 1e-13
_KIND_CODE = {"linear": 0, "power": 1, "log": 2, "loglog": 3}
_EXP_E = math.exp(math.e)


def _window_lengths(f: StepFunction, a, b) -> tuple[np.ndarray, float]:
    """Overlap of each piece with ``[a, b]`` and ``|[a, b]|``, both in grid units."""
    aa, fa = _anchor(a, f.scale)
    ab, fb = _anchor(b, f.scale)
    total = float(ab - aa) + (fb - fa)
    if not total > 0:
        raise ParameterError("Luxemburg average needs |R| > 0")
    p = (f.grid - np.int64(aa)).astype(np.float64) - fa
    lens = np.clip(np.minimum(p[1:], total) - np.maximum(p[:-1], 0.0), 0.0, None)
    return lens, total


def _luxemburg_batch(lens: np.ndarray, total: np.ndarray, values: np.ndarray,
                     phi: YoungFunction) -> np.ndarray:
    """Luxemburg averages of ``values`` for each row of piece overlaps ``lens``.

    Bisection on ``log λ`` in lockstep across rows.
    """
    lens = np.atleast_2d(lens)
    total = np.asarray(total, dtype=np.float64).reshape(-1)
    active = (lens * (values > 0)).sum(axis=1) > 0
    out = np.zeros(len(total))
    if not active.any():
        return out
    lens, total = lens[active], total[active]
    vmax = np.where(lens > 0, values, 0.0).max(axis=1)

    def excess(lam):
        return (lens * phi(values[None, :] / lam[:, None])).sum(axis=1) / total - 1.0

    hi = vmax / phi.inverse(1.0)
    lo = hi / 2
    while True:
        low_side = excess(lo) <= 0
        if not low_side.any():
            break
        lo = np.where(low_side, lo / 2, lo)
    log_lo, log_hi = np.log(lo), np.log(hi)
    while np.any(log_hi - log_lo > _REL_TOL):
        mid = 0.5 * (log_lo + log_hi)
        above = excess(np.exp(mid)) > 0
        log_lo = np.where(above, mid, log_lo)
        log_hi = np.where(above, log_hi, mid)
    out[active] = np.exp(0.5 * (log_lo + log_hi))
    return out


def luxemburg_norm(f: StepFunction, a, b, phi: YoungFunction) -> float:
    """``inf{λ > 0 : |R|^-1 ∫_R Φ(f/λ) <= 1}`` over ``R = [a, b]``; 0 if ``f = 0`` on R."""
    lens, total = _window_lengths(f, a, b)
    return float(_luxemburg_batch(lens[None, :], np.array([total]), f.values, phi)[0])


# -- threshold route --------------------------------------------------------

@njit(cache=True)
def _phi_scalar(code, param, t):
    if code == 0:
        return t
    if code == 1:
        return t ** param
    if code == 2:
        return t * math.log(math.e + t) ** param
    return t * math.log(math.log(_EXP_E + t)) ** param


@njit(cache=True)
def _scaled_prefix(lens, values, code, param, lam):
    # prefix integrals of Φ(f/λ) as an error-free (hi, lo) running sum
    n = len(values)
    Fh = np.zeros(n + 1)
    Fl = np.zeros(n + 1)
    vp = np.empty(n)
    s = 0.0
    c = 0.0
    for j in range(n):
        v = _phi_scalar(code, param, values[j] / lam)
        vp[j] = v
        x = v * lens[j]
        t = s + x
        bb = t - s
        c += (s - (t - bb)) + (x - bb)
        s = t
        Fh[j + 1] = s
        Fl[j + 1] = c
    return Fh, Fl, vp


@njit(cache=True, nogil=True)
def _threshold_point(pos, lens, values, code, param, i, d, log_lo, log_hi, tol):
    while log_hi - log_lo > tol:
        mid = 0.5 * (log_lo + log_hi)
        Fh, Fl, vp = _scaled_prefix(lens, values, code, param, math.exp(mid))
        if query_single(pos, Fh, Fl, vp, i, d) > 1.0:
            log_lo = mid
        else:
            log_hi = mid
    return 0.5 * (log_lo + log_hi)


def _threshold_many(f: StepFunction, idx, off, phi: YoungFunction) -> np.ndarray:
    m1 = MaximalEngine.of(f, 1.0)(idx, off)
    inv1 = phi.inverse(1.0)
    vmax = float(f.values.max()) if f.n_pieces else 0.0
    lens = f.lengths().astype(np.float64)
    code = _KIND_CODE[phi.kind]
    out = np.zeros(len(idx))
    for j in range(len(idx)):
        if m1[j] <= 0:
            continue
        # Jensen gives the lower bracket, the sup of f the upper one
        lo = math.log(m1[j] / inv1) - 1e-12
        hi = math.log(vmax / inv1) + 1e-12
        out[j] = math.exp(_threshold_point(f.grid, lens, f.values, code, phi.param,
                                           int(idx[j]), float(off[j]), lo, hi, _REL_TOL))
    return out


# -- enumeration route ------------------------------------------------------

def _enumerate_point(f: StepFunction, x, phi: YoungFunction) -> float:
    anchor, frac = _anchor(x, f.scale)
    xp = float(anchor) + frac
    bp = f.grid.astype(np.float64)
    lefts = np.unique(np.append(bp[bp <= xp], xp))
    rights = np.unique(np.append(bp[bp >= xp], xp))
    A, B = np.meshgrid(lefts, rights, indexing="ij")
    A, B = A.ravel(), B.ravel()
    keep = B > A
    A, B = A[keep], B[keep]
    if len(A) == 0:
        return 0.0
    lens = np.clip(np.minimum(bp[None, 1:], B[:, None]) - np.maximum(bp[None, :-1], A[:, None]),
                   0.0, None)
    return float(_luxemburg_batch(lens, B - A, f.values, phi).max())


def orlicz_maximal(f: StepFunction, x, phi: YoungFunction, method: str = "auto") -> float:
    """``M_Φ f(x)``: the sup of Luxemburg averages over intervals containing ``x``.

    ``method`` is ``auto``, ``hull`` (power kernels only), ``threshold`` or
    ``enumerate``.
    """
    if method == "enumerate":
        return _enumerate_point(f, x, phi)
    i, d = f.locate(x)
    return float(orlicz_maximal_at(f, [i], [d], phi, method=method)[0])


def orlicz_maximal_at(f: StepFunction, idx, off, phi: YoungFunction,
                      method: str = "auto") -> np.ndarray:
    """Vectorized ``M_Φ f`` at ``(piece index, offset)`` locations."""
    idx = np.asarray(idx, dtype=np.int64)
    off = np.asarray(off, dtype=np.float64)
    r = phi.power_exponent
    if method == "auto":
        method = "hull" if r is not None else "threshold"
    if method == "hull":
        if r is None:
            raise ParameterError(f"hull route needs a power kernel, got {phi.spec()}")
        return MaximalEngine.of(f, r)(idx, off)
    if method == "threshold":
        return _threshold_many(f, idx, off, phi)
    raise ParameterError(f"unknown Orlicz maximal method {method!r}")


# -- suprema over t ---------------------------------------------------------

@dataclass(frozen=True)
class SupResult:
    """``value`` is the bound; ``log_t_star`` is where the inner sup is attained."""

    value: float
    log_t_star: float


def _sup_log(g, u0: float, u_max: float) -> tuple[float, float]:
    """Max of ``g`` on ``[u0, u_max]`` by a mixed grid scan plus golden-section refinement."""
    span = u_max - u0
    if span > 60.0:
        nodes = np.concatenate([u0 + np.linspace(0.0, 60.0, 5000),
                                u0 + np.geomspace(60.0, span, 5000)[1:]])
    else:
        nodes = np.linspace(u0, u_max, 10_000)
    vals = g(nodes)
    j = int(np.argmax(vals))
    best_u, best = float(nodes[j]), float(vals[j])
    a = float(nodes[max(j - 1, 0)])
    b = float(nodes[min(j + 1, len(nodes) - 1)])
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    gc, gd = float(g(c)), float(g(d))
    for _ in range(200):
        if b - a <= 1e-12 * max(1.0, abs(a)):
            break
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = float(g(c))
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = float(g(d))
    for u, val in ((c, gc), (d, gd)):
        if val > best:
            best, best_u = val, u
    return best, best_u


def _far_end(u0: float, r: float) -> float:
    # the sup sits near t ~ exp(r'); scan well beyond it and beyond 1e15
    r_prime = r / (r - 1.0)
    return max(math.log(1e15), u0 + 50.0 * r_prime)


def _guard(g, u_max: float, phi: YoungFunction, r: float):
    far = np.array([u_max, 2.0 * u_max, 4.0 * u_max])
    vals = g(far)
    if np.any(np.diff(vals) > 1e-12 * np.abs(vals[:-1]) + 1e-300):
        raise DomainError(f"sup over t is unbounded for Phi={phi.spec()} and r={r}")


def mphi_mr_bound(phi: YoungFunction, r: float) -> SupResult:
    """``(2 sup_{t >= Φ^{-1}(1/2)} Φ(t)/t^r)^{1/r}`` with the attaining ``log t``."""
    if not r > 1:
        raise ParameterError(f"r must exceed 1, got {r}")
    u0 = math.log(phi.inverse(0.5))

    def g(u):
        return phi.log_value(u) - r * np.asarray(u)

    u_max = _far_end(u0, r)
    _guard(g, u_max, phi, r)
    best, u_star = _sup_log(g, u0, u_max)
    return SupResult(math.exp((math.log(2.0) + best) / r), u_star)


def mphi_mr_bound_constant(phi: YoungFunction, r: float) -> float:
    return mphi_mr_bound(phi, r).value


def growth_factor_detail(phi: YoungFunction, r: float) -> SupResult:
    """``sup_{t >= 1} Φ(t)^{1/r} / t`` with the attaining ``log t``."""
    if not r > 1:
        raise ParameterError(f"r must exceed 1, got {r}")

    def g(u):
        return phi.log_value(u) / r - np.asarray(u)

    u_max = _far_end(0.0, r)
    _guard(g, u_max, phi, r)
    best, u_star = _sup_log(g, 0.0, u_max)
    return SupResult(math.exp(best), u_star)


def growth_factor(phi: YoungFunction, r: float) -> float:
    return growth_factor_detail(phi, r).value


def r_k(k: int) -> float:
    """``1 + 1/(2·3^{k+1} + 1)``, the exponent paired with ``w_k`` in the extrapolation step."""
    return 1.0 + 1.0 / (2 * 3 ** (k + 1) + 1)


def alpha_of_r(r: float) -> float:
    """``α_r = r / (2 - r)``."""
    if not 1 < r < 2:
        raise ParameterError(f"need 1 < r < 2, got {r}")
    return r / (2.0 - r)


def lemma22_exponent(k: int) -> float:
    """``1 + 3^{-(k+1)}``, the maximal-operator exponent in the pointwise bound."""
    return 1.0 + 3.0 ** (-(k + 1))
