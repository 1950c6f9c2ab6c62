"""Bracketed root finding and unimodal maximization, vectorized over numpy arrays.

Tolerances are absolute in the argument unless stated otherwise.  All
bisections are deterministic (fixed iteration counts derived from the
bracket width), so results are bit-reproducible across runs.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConservationError

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_max(fn: Callable, lo, hi, tol: float = 1e-10):
    """Argmax of a unimodal function on [lo, hi], elementwise over arrays."""
    a, b = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    a = a.copy()
    b = b.copy()
    span = float(np.max(b - a)) if a.size else 0.0
    if span <= tol:
        return (a + b) / 2.0
    n_iter = int(np.ceil(np.log(tol / span) / np.log(_INVPHI))) + 1
    for _ in range(n_iter):
        d = _INVPHI * (b - a)
        x1 = b - d
        x2 = a + d
        keep_left = fn(x1) > fn(x2)
        b = np.where(keep_left, x2, b)
        a = np.where(keep_left, a, x1)
    return (a + b) / 2.0


def bisect(fn: Callable, lo, hi, tol: float = 1e-12):
    """Root of fn on [lo, hi], elementwise; fn must change sign on the bracket."""
    a, b = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    a = a.copy()
    b = b.copy()
    fa = np.asarray(fn(a), dtype=float)
    span = float(np.max(np.abs(b - a))) if a.size else 0.0
    if span <= tol:
        return (a + b) / 2.0
    n_iter = int(np.ceil(np.log2(span / tol))) + 1
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        fm = np.asarray(fn(m), dtype=float)
        same = np.sign(fm) == np.sign(fa)
        a = np.where(same, m, a)
        fa = np.where(same, fm, fa)
        b = np.where(same, b, m)
    return 0.5 * (a + b)


def scan_roots(fn: Callable, lo: float, hi: float, n: int = 1025,
               tol: float = 1e-12) -> list[float]:
    """All roots of a scalar function on [lo, hi].

    Brackets via a uniform n-point scan, then bisects each sign change.
    Grid nodes where |fn| is at round-off level count as roots too, which
    catches the endpoint roots of fluxes vanishing at both ends of the
    saturation range.  Tangential (no-sign-change) interior roots between
    grid nodes are not detected.
    """
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(fn(xs), dtype=float)
    scale = max(float(np.max(np.abs(ys))), 1.0)
    atol = 1e-12 * scale
    roots: list[float] = []
    near_zero = np.abs(ys) <= atol
    i = 0
    while i < n:
        if near_zero[i]:
            j = i
            while j + 1 < n and near_zero[j + 1]:
                j += 1
            roots.append(0.5 * (xs[i] + xs[j]))
            i = j + 1
            continue
        if i + 1 < n and not near_zero[i + 1] and ys[i] * ys[i + 1] < 0.0:
            roots.append(float(bisect(fn, xs[i], xs[i + 1], tol=tol)))
        i += 1
    roots.sort()
    deduped: list[float] = []
    sep = max(1e-9 * (hi - lo), 1e-14)
    for r in roots:
        if not deduped or r - deduped[-1] > sep:
            deduped.append(r)
    return deduped


def solve_conserved_c(s, rhs, adsorption: Callable, adsorption_deriv: Callable,
                      x0=None, tol: float = 1e-12, clamp: float = 1e-10,
                      max_iter: int = 100):
    """Invert m(c) = c*s + a(c) = rhs for c in [0, 1], elementwise.

    m is strictly increasing (s >= 0, a' > 0).  Uses Newton steps guarded by
    a shrinking bisection bracket.  rhs outside [m(0), m(1)] by more than
    `clamp` raises ConservationError; smaller excursions (round-off from the
    explicit saturation update) are clamped onto the range.
    """
    s = np.asarray(s, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    s, rhs = np.broadcast_arrays(s, rhs)
    m_lo = float(adsorption(0.0))
    m_hi = s + adsorption(1.0)
    if np.any(rhs < m_lo - clamp) or np.any(rhs > m_hi + clamp):
        bad = np.flatnonzero((rhs < m_lo - clamp) | (rhs > m_hi + clamp))
        raise ConservationError(
            f"c*s + a(c) = {float(np.ravel(rhs)[bad[0]]):.6g} unattainable for "
            f"s = {float(np.ravel(s)[bad[0]]):.6g} (first of {bad.size} cells)")
    rhs = np.minimum(np.maximum(rhs, m_lo), m_hi)
    lo = np.zeros_like(rhs)
    hi = np.ones_like(rhs)
    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0) if x0 is not None \
        else np.full_like(rhs, 0.5)
    x = np.broadcast_arrays(x, rhs)[0].copy()
    for _ in range(max_iter):
        r = x * s + adsorption(x) - rhs
        if float(np.max(np.abs(r))) <= tol:
            return x
        pos = r > 0.0
        hi = np.where(pos, x, hi)
        lo = np.where(pos, lo, x)
        step = r / (s + adsorption_deriv(x))
        x_new = x - step
        outside = (x_new <= lo) | (x_new >= hi) | ~np.isfinite(x_new)
        x = np.where(outside, 0.5 * (lo + hi), x_new)
    r = x * s + adsorption(x) - rhs
    if float(np.max(np.abs(r))) > tol:
        raise ConservationError(
            f"concentration recovery stalled at residual {float(np.max(np.abs(r))):.3g}")
    return x
