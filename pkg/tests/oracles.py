"""Independent reference computations used only by the tests."""

import math

import numpy as np
from scipy import integrate, optimize


def pv_hilbert(f, x):
    """``p.v. ∫ f(t)/(x - t) dt`` by quadrature with symmetric excision around ``x``."""
    total = 0.0
    edges = f.grid.astype(float) * f.unit
    for a, b, v in zip(edges[:-1], edges[1:], f.values):
        if v == 0:
            continue
        if x <= a or x >= b:
            total += integrate.quad(lambda t: v / (x - t), a, b, epsabs=1e-14, epsrel=1e-13)[0]
            continue
        # the symmetric window [x-e, x+e] integrates to zero; keep the leftover
        e = min(x - a, b - x)
        lo, hi = (x + e, b) if x - a < b - x else (a, x - e)
        if hi > lo:
            total += integrate.quad(lambda t: v / (x - t), lo, hi, epsabs=1e-14, epsrel=1e-13)[0]
    return total


def brute_maximal(f, x, r=1.0, n_dense=400):
    """``sup (avg over [a,b] of f^r)^{1/r}`` over a dense candidate grid plus breakpoints."""
    edges = f.grid.astype(float) * f.unit
    cand = np.unique(np.concatenate([edges, np.linspace(0.0, 1.0, n_dense), [x]]))
    lens = np.diff(edges)
    vr = np.power(f.values, r)

    def F(t):
        return np.clip(t[:, None] - edges[:-1][None, :], 0.0, lens[None, :]) @ vr

    left = cand[cand <= x]
    right = cand[cand >= x]
    Fl, Fr = F(left), F(right)
    width = right[None, :] - left[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (Fr[None, :] - Fl[:, None]) / width
    avg = np.where(width > 0, avg, -np.inf)
    return float(np.max(avg)) ** (1.0 / r)


def luxemburg_average(f, a, b, phi):
    """Root of ``(1/|I|) ∫_I Φ(f/λ) = 1`` by brentq on a plain piece sum."""
    edges = f.grid.astype(float) * f.unit
    lo = np.clip(edges[:-1], a, b)
    hi = np.clip(edges[1:], a, b)
    w = (hi - lo) / (b - a)
    mask = (w > 0) & (f.values > 0)
    if not mask.any():
        return 0.0
    w, v = w[mask], f.values[mask]

    def g(lam):
        return float(np.sum(w * phi(v / lam))) - 1.0

    top = float(v.max()) * 1e3 + 1.0
    return optimize.brentq(g, 1e-12 * top, top, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def brute_orlicz_maximal(f, x, phi, n_dense=60):
    edges = f.grid.astype(float) * f.unit
    cand = np.unique(np.concatenate([edges, np.linspace(0.0, 1.0, n_dense), [x]]))
    best = 0.0
    for a in cand[cand <= x]:
        for b in cand[cand >= x]:
            if b > a:
                best = max(best, luxemburg_average(f, a, b, phi))
    return best


def sup_on_log_grid(h, u_lo, u_hi, n=200_001):
    """Max of ``h(u)`` over a uniform grid refined by bounded scalar minimization."""
    u = np.linspace(u_lo, u_hi, n)
    vals = h(u)
    j = int(np.argmax(vals))
    a, b = u[max(j - 1, 0)], u[min(j + 1, n - 1)]
    res = optimize.minimize_scalar(lambda s: -float(h(np.array([s]))[0]), bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-13})
    return max(float(vals[j]), -float(res.fun))


def chi_functional():
    """``∫_0^1 log^2 |x/(1-x)| dx``, computed by quadrature."""
    val, _ = integrate.quad(lambda x: math.log(x / (1 - x)) ** 2, 0.0, 1.0, limit=200,
                            points=[0.5], epsabs=1e-13, epsrel=1e-13)
    return val
