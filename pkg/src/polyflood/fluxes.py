"""The five interface fluxes (F, G) consumed by the time stepper.

Every evaluator maps the four interface arguments (s_i, c_i, s_{i+1},
c_{i+1}) to the numerical flux pair for the conserved quantities s and
c*s + a(c).  All of them broadcast over numpy arrays, which is the
parallelization surface of the solver: one call per scheme per step
evaluates every cell face at once.

dflu      min{ f(min(s_i, th_i), c_i), f(max(s_{i+1}, th_{i+1}), c_{i+1}) }
          with th = argmax f(., c); G = c_i F.  Doubles as the interface
          flux across a spatial flux discontinuity by passing two models.
godunov   f at xi = 0 of the exact Riemann fan.  Evaluated in closed form
          through the contact geometry: the flux is the scalar Godunov
          value between s_i and the contact's left state (which is
          min(s_i, s*) when the contact runs at full speed and the exit
          intersection of the slowed contact line otherwise).
um        phase-by-phase upwinding of the mobilities by the sign of each
          phase's driving force; the implicit selection is resolved by
          enumerating the four assignments.
lf        Lax-Friedrichs center flux with grid diffusion (s_{i+1}-s_i)/lam
          resp. (m_{i+1}-m_i)/lam on the conserved pair.
force     average of Lax-Friedrichs and the two-step Lax-Wendroff flux;
          the half step recovers c from c*s + a(c) like the main update.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._rootfind import bisect, golden_max, solve_conserved_c
from .errors import CflViolationError, StructuralError
from .model import PolymerModel
from . import riemann as _riemann

__all__ = [
    "FluxScheme", "SCHEME_TAGS", "dflu", "godunov", "godunov_with_cases",
    "upstream_mobility", "lax_friedrichs", "force", "scalar_dflu",
    "CASE_LABELS",
]

SCHEME_TAGS = ("dflu", "godunov", "um", "lf", "force")

# case codes emitted by the godunov classifier
CASE_SCALAR, CASE_1A, CASE_1B, CASE_2A, CASE_2B, CASE_C_RISING = range(6)
CASE_LABELS = {CASE_SCALAR: "scalar", CASE_1A: "1a", CASE_1B: "1b",
               CASE_2A: "2a", CASE_2B: "2b", CASE_C_RISING: "c-rising"}


@dataclass(frozen=True)
class FluxScheme:
    """Tagged scheme choice; lambda_ratio = dt/h is required by lf/force."""

    tag: str
    lambda_ratio: Optional[float] = None

    def __post_init__(self):
        if self.tag not in SCHEME_TAGS:
            raise ValueError(f"unknown scheme tag {self.tag!r}; "
                             f"choose from {SCHEME_TAGS}")
        if self.tag in ("lf", "force") and self.lambda_ratio is not None \
                and self.lambda_ratio <= 0.0:
            raise ValueError("lambda_ratio must be positive")


def _prep(*args):
    scalar = all(np.ndim(a) == 0 for a in args)
    return scalar, [np.asarray(a, dtype=float) for a in args]


def _ret(scalar, F, G):
    if scalar:
        return float(F), float(G)
    return F, G


def _theta_vec(model: PolymerModel, c, tol: float = 1e-10):
    out = golden_max(lambda x: model.f(x, c), model.s_min, model.s_max, tol=tol)
    return np.clip(out, model.s_min, model.s_max)


def dflu(model_l: PolymerModel, model_r: PolymerModel, s_i, c_i, s_ip1, c_ip1):
    """Godunov-type flux that never solves a Riemann problem; exact for the
    scalar problem with the flux frozen to each side's concentration."""
    scalar, (s_i, c_i, s_ip1, c_ip1) = _prep(s_i, c_i, s_ip1, c_ip1)
    th_l = _theta_vec(model_l, c_i)
    th_r = _theta_vec(model_r, c_ip1)
    F = np.minimum(model_l.f(np.minimum(s_i, th_l), c_i),
                   model_r.f(np.maximum(s_ip1, th_r), c_ip1))
    return _ret(scalar, F, c_i * F)


def scalar_dflu(f_left: Callable, f_right: Callable, u_L, u_R,
                domain: tuple[float, float] = (0.0, 1.0)):
    """Interface flux min{ f_L(min(u_L, th_L)), f_R(max(u_R, th_R)) } for two
    unimodal scalar fluxes with common endpoint values."""
    lo, hi = domain
    th_l = golden_max(f_left, lo, hi)
    th_r = golden_max(f_right, lo, hi)
    u_L = np.asarray(u_L, dtype=float)
    u_R = np.asarray(u_R, dtype=float)
    out = np.minimum(f_left(np.minimum(u_L, th_l)), f_right(np.maximum(u_R, th_r)))
    return float(out) if out.ndim == 0 else out


def _abar_vec(model: PolymerModel, c_l, c_r):
    dc = c_r - c_l
    tiny = np.abs(dc) < 1e-14
    safe = np.where(tiny, 1.0, dc)
    secant = (model.adsorption(c_r) - model.adsorption(c_l)) / safe
    return np.where(tiny, model.adsorption_deriv(c_l), secant)


def godunov_with_cases(model: PolymerModel, s_i, c_i, s_ip1, c_ip1):
    """Exact Godunov flux pair plus the per-face Riemann case code."""
    scalar, (s_i, c_i, s_ip1, c_ip1) = _prep(s_i, c_i, s_ip1, c_ip1)
    s_i, c_i, s_ip1, c_ip1 = np.broadcast_arrays(s_i, c_i, s_ip1, c_ip1)
    shape = s_i.shape
    s_i, c_i = s_i.ravel(), c_i.ravel()
    s_ip1, c_ip1 = s_ip1.ravel(), c_ip1.ravel()

    F = np.empty_like(s_i)
    cases = np.full(s_i.shape, CASE_SCALAR, dtype=np.int8)
    falling = c_i >= c_ip1 - 1e-12
    if np.any(falling):
        Ff, cf = _godunov_falling(model, s_i[falling], c_i[falling],
                                  s_ip1[falling], c_ip1[falling])
        F[falling] = Ff
        cases[falling] = cf
    rising = ~falling
    for k in np.flatnonzero(rising):
        # no closed form stated for rising concentration: read the exact fan
        sol = _riemann.solve_riemann(model, s_i[k], c_i[k], s_ip1[k], c_ip1[k])
        F[k] = model.f(*sol.sample(0.0))
        cases[k] = CASE_C_RISING
    F = F.reshape(shape)
    cases = cases.reshape(shape)
    G = c_i.reshape(shape) * F
    if scalar:
        return float(F), float(G), int(cases)
    return F, G, cases


def _godunov_falling(model: PolymerModel, s_i, c_i, s_ip1, c_ip1):
    """Closed-form Godunov flux for nonincreasing concentration across the face."""
    smin, smax = model.s_min, model.s_max
    th_i = _theta_vec(model, c_i)
    F = model.f(np.minimum(s_i, th_i), c_i)  # value when the contact is unimpeded
    ab = _abar_vec(model, c_i, c_ip1)
    star = np.clip(golden_max(
        lambda x: model.f(x, c_i) / (x + ab), smin, smax), smin, smax)
    sigma_left = model.f(np.minimum(s_i, star), c_i) / (np.minimum(s_i, star) + ab)
    peak_r = np.clip(golden_max(
        lambda x: model.f(x, c_ip1) / (x + ab), smin, smax), smin, smax)
    max_psi_r = model.f(peak_r, c_ip1) / (peak_r + ab)
    psi_r_end = model.f(smax, c_ip1) / (smax + ab)

    case_b = max_psi_r < sigma_left
    need_b_root = ~case_b & (psi_r_end <= sigma_left)
    if np.any(need_b_root):
        idx = np.flatnonzero(need_b_root)
        sig = sigma_left[idx]
        abx = ab[idx]
        cr = c_ip1[idx]
        B = bisect(lambda x: model.f(x, cr) - sig * (x + abx),
                   peak_r[idx], np.full(idx.shape, smax), tol=1e-12)
        hit = s_ip1[idx] >= B - 1e-12
        case_b[idx] |= hit

    cases = np.where(s_i < star, CASE_1A, CASE_2A).astype(np.int8)
    if np.any(case_b):
        idx = np.flatnonzero(case_b)
        abx = ab[idx]
        cl = c_i[idx]
        sigma_c = model.f(s_ip1[idx], c_ip1[idx]) / (s_ip1[idx] + abx)
        g_end = model.f(smax, cl) - sigma_c * (smax + abx)
        if np.any(g_end > 1e-12):
            raise StructuralError(
                "slowed contact line does not exit the left flux curve; "
                "nonzero total velocity interface outside the closed form")
        u = bisect(lambda x: model.f(x, cl) - sigma_c * (x + abx),
                   star[idx], np.full(idx.shape, smax), tol=1e-12)
        # scalar Godunov value between s_i and the contact's left state u
        F_b = np.minimum(model.f(np.minimum(s_i[idx], th_i[idx]), cl),
                         model.f(np.maximum(u, th_i[idx]), cl))
        F[idx] = F_b
        cases[idx] = np.where(s_i[idx] < star[idx], CASE_1B, CASE_2B)
    return F, cases


def godunov(model: PolymerModel, s_i, c_i, s_ip1, c_ip1):
    """Exact Godunov flux pair (F, G) with G = c_i F."""
    F, G, _ = godunov_with_cases(model, s_i, c_i, s_ip1, c_ip1)
    return F, G


def upstream_mobility(model: PolymerModel, s_i, c_i, s_ip1, c_ip1,
                      model_r: Optional[PolymerModel] = None,
                      counters: Optional[dict] = None):
    """Phase-wise upwind mobility flux.

    lambda_l* takes the left value when phi + (g_l - g_other) lambda_other*
    is positive, the right value otherwise; the two selections are coupled,
    so the four assignments are enumerated and the self-consistent one is
    kept.  With no or several consistent assignments the counter-current
    standard (phase 1 tested against the right-hand lambda_2) wins, and the
    event is counted in `counters["um_ambiguous"]`.

    G uses the upwind concentration: c_i for F >= 0, c_{i+1} otherwise
    (the nonnegative-flux case is the only one the derivation needs, but a
    deterministic extension is required for phi < 0 setups).
    """
    if model_r is None:
        model_r = model
    scalar, (s_i, c_i, s_ip1, c_ip1) = _prep(s_i, c_i, s_ip1, c_ip1)
    s_i, c_i, s_ip1, c_ip1 = np.broadcast_arrays(s_i, c_i, s_ip1, c_ip1)
    phi = model.total_velocity
    g1, g2 = model.gravity_1, model.gravity_2
    lam1 = (model.mobility_1(s_i, c_i), model_r.mobility_1(s_ip1, c_ip1))
    lam2 = (model.mobility_2(s_i, c_i), model_r.mobility_2(s_ip1, c_ip1))

    shape = np.broadcast_shapes(s_i.shape, s_ip1.shape)
    lam1_star = np.zeros(shape)
    lam2_star = np.zeros(shape)
    found = np.zeros(shape, dtype=bool)
    n_consistent = np.zeros(shape, dtype=np.int8)
    # preference order: counter-current standard first
    for a1, a2 in ((0, 1), (1, 1), (0, 0), (1, 0)):
        l1 = lam1[a1]
        l2 = lam2[a2]
        t1 = phi + (g1 - g2) * l2
        t2 = phi + (g2 - g1) * l1
        ok = ((t1 > 0.0) if a1 == 0 else (t1 <= 0.0)) \
            & ((t2 > 0.0) if a2 == 0 else (t2 <= 0.0))
        n_consistent += ok
        take = ok & ~found
        lam1_star = np.where(take, l1, lam1_star)
        lam2_star = np.where(take, l2, lam2_star)
        found |= take
    if not np.all(found):
        # no self-consistent assignment: fall back to the preferred one
        miss = ~found
        lam1_star = np.where(miss, lam1[0], lam1_star)
        lam2_star = np.where(miss, lam2[1], lam2_star)
    if counters is not None:
        counters["um_ambiguous"] = counters.get("um_ambiguous", 0) \
            + int(np.count_nonzero(n_consistent != 1))

    tot = lam1_star + lam2_star
    with np.errstate(invalid="ignore", divide="ignore"):
        F = np.where(tot > 0.0,
                     lam1_star / np.where(tot > 0.0, tot, 1.0)
                     * (phi + (g1 - g2) * lam2_star),
                     0.0)
    c_up = np.where(F >= 0.0, c_i, c_ip1)
    return _ret(scalar, F, c_up * F)


def lax_friedrichs(model: PolymerModel, s_i, c_i, s_ip1, c_ip1,
                   lambda_ratio: float,
                   model_r: Optional[PolymerModel] = None):
    """Centered flux with grid-scaled diffusion on both conserved quantities."""
    if model_r is None:
        model_r = model
    scalar, (s_i, c_i, s_ip1, c_ip1) = _prep(s_i, c_i, s_ip1, c_ip1)
    f_l = model.f(s_i, c_i)
    f_r = model_r.f(s_ip1, c_ip1)
    m_l = c_i * s_i + model.adsorption(c_i)
    m_r = c_ip1 * s_ip1 + model.adsorption(c_ip1)
    F = 0.5 * (f_r + f_l - (s_ip1 - s_i) / lambda_ratio)
    G = 0.5 * (c_ip1 * f_r + c_i * f_l - (m_r - m_l) / lambda_ratio)
    return _ret(scalar, F, G)


def force(model: PolymerModel, s_i, c_i, s_ip1, c_ip1, lambda_ratio: float,
          model_r: Optional[PolymerModel] = None):
    """Average of the Lax-Friedrichs and two-step Lax-Wendroff fluxes.

    The half step advances both conserved quantities by the centered
    update, then recovers the half-step concentration from
    c*s + a(c) = rhs with the same monotone solve as the main scheme.
    """
    if model_r is None:
        model_r = model
    scalar, (s_i, c_i, s_ip1, c_ip1) = _prep(s_i, c_i, s_ip1, c_ip1)
    lam = lambda_ratio
    f_l = model.f(s_i, c_i)
    f_r = model_r.f(s_ip1, c_ip1)
    a_l = model.adsorption(c_i)
    a_r = model.adsorption(c_ip1)
    s_half = 0.5 * (s_ip1 + s_i) - 0.5 * lam * (f_r - f_l)
    over = np.maximum(model.s_min - s_half, s_half - model.s_max)
    if np.any(over > 1e-10):
        raise CflViolationError(
            f"half-step saturation leaves the domain by {float(np.max(over)):.3g}; "
            "the time step violates the stability bound")
    s_half = model.clip_s(s_half)
    rhs = 0.5 * (s_ip1 * c_ip1 + s_i * c_i) + 0.5 * (a_r + a_l) \
        - 0.5 * lam * (c_ip1 * f_r - c_i * f_l)
    c_half = solve_conserved_c(s_half, rhs, model.adsorption,
                               model.adsorption_deriv,
                               x0=0.5 * (c_i + c_ip1))
    if model_r is model:
        f_half = model.f(s_half, c_half)
    else:
        f_half = 0.5 * (model.f(s_half, c_half) + model_r.f(s_half, c_half))
    m_l = c_i * s_i + a_l
    m_r = c_ip1 * s_ip1 + a_r
    F = 0.25 * (f_r + f_l + 2.0 * f_half - (s_ip1 - s_i) / lam)
    G = 0.25 * (c_ip1 * f_r + c_i * f_l + 2.0 * c_half * f_half
                - (m_r - m_l) / lam)
    return _ret(scalar, F, G)
