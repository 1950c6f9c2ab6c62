"""Exact self-similar Riemann solutions.

Wave structure of the 2x2 system: two families, called s-waves and c-waves.
s-waves (shocks/rarefactions at fixed c) follow the scalar entropy theory
for s -> f(s, c): lower convex envelope for increasing data, upper concave
envelope for decreasing data.  c-waves are contact discontinuities across
which both s and c jump so that f/(s + abar) is continuous, with abar the
adsorption secant anchored at the left concentration.

For c_left != c_right the fan is

    [s-waves at c_left, speeds <= sigma_c] [contact] [s-waves at c_right, >= sigma_c]

and the whole construction reduces to placing the contact: the fastest
contact the left side can feed runs at sigma_left = psi_L(min(s_left, s*)),
with psi_L(s) = f(s, c_left)/(s + abar) peaking at the resonance point s*.
If the right state can absorb that speed (s_right below the exit
intersection B of the sigma_left-line with f(., c_right)) the contact runs
at sigma_left and lands on the entry intersection; otherwise it slows to
psi_R(s_right) and the left side connects to the exit intersection of that
slower line with f(., c_left).  The same classification reproduces the four
textbook case figures and extends to c_left < c_right unchanged.

The spatially-discontinuous-flux problem (left/right flux functions meeting
at x = 0) is solved by splitting: a scalar two-flux problem at frozen
concentration on the left of the interface, glued to a standard system
solution on the right, with the interface saturation chosen per the same
entry/exit geometry.  The concentration is continuous across x = 0 by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._rootfind import bisect, golden_max, scan_roots
from .errors import ModelValidationError, StructuralError
from .model import (DiscontinuousModel, PolymerModel, abar,
                    contact_root_on_branch, s_star, theta)

__all__ = [
    "Wave", "RiemannSolution", "TwoFluxSolution", "DiscontinuousRiemannSolution",
    "solve_riemann", "scalar_s_wave", "scalar_two_flux_riemann",
    "solve_riemann_discontinuous", "classify_case",
]

S_SHOCK = "s_shock"
S_RAREFACTION = "s_rarefaction"
C_CONTACT = "c_contact"

_SPEED_TOL = 1e-9


@dataclass(frozen=True)
class Wave:
    """One elementary wave.  speed_lo == speed_hi for shocks and contacts.

    Rarefactions carry the derivative of their flux slice so the inverse
    characteristic map can be evaluated when sampling.
    """

    kind: str
    speed_lo: float
    speed_hi: float
    left: tuple[float, float]
    right: tuple[float, float]
    dflux: Optional[Callable] = None

    def invert(self, xi):
        """State inside a rarefaction fan at similarity speed(s) xi."""
        if self.kind != S_RAREFACTION:
            raise ValueError("only rarefactions can be inverted")
        a = min(self.left[0], self.right[0])
        b = max(self.left[0], self.right[0])
        return bisect(lambda s: self.dflux(s) - xi, a, b, tol=1e-12)


@dataclass(frozen=True)
class RiemannSolution:
    left_state: tuple[float, float]
    right_state: tuple[float, float]
    waves: tuple[Wave, ...]
    case: str = ""

    def sample(self, xi: float) -> tuple[float, float]:
        """State at xi = x/t.  At an exact jump speed the right limit wins."""
        s, c = self.left_state
        for w in self.waves:
            if xi < w.speed_lo:
                return s, c
            if w.kind == S_RAREFACTION and xi < w.speed_hi:
                return float(w.invert(xi)), w.left[1]
            s, c = w.right
        return s, c

    def sample_many(self, xi) -> tuple[np.ndarray, np.ndarray]:
        xi = np.asarray(xi, dtype=float)
        s = np.full(xi.shape, self.left_state[0])
        c = np.full(xi.shape, self.left_state[1])
        for w in self.waves:
            past = xi >= w.speed_lo
            s = np.where(past, w.right[0], s)
            c = np.where(past, w.right[1], c)
            if w.kind == S_RAREFACTION:
                inside = past & (xi < w.speed_hi)
                if np.any(inside):
                    s[inside] = w.invert(xi[inside])
                    c[inside] = w.left[1]
        return s, c

    @property
    def speeds(self) -> list[tuple[float, float]]:
        return [(w.speed_lo, w.speed_hi) for w in self.waves]

    def validate(self) -> None:
        prev_state = self.left_state
        prev_hi = -np.inf
        for w in self.waves:
            if w.speed_lo < prev_hi - 1e-12:
                raise StructuralError(
                    f"wave speeds out of order: {w.speed_lo} after {prev_hi}")
            if abs(w.left[0] - prev_state[0]) > 1e-9 or \
                    abs(w.left[1] - prev_state[1]) > 1e-12:
                raise StructuralError("wave states do not chain")
            if w.speed_hi < w.speed_lo - 1e-12:
                raise StructuralError("wave with decreasing internal speeds")
            prev_hi = w.speed_hi
            prev_state = w.right
        if abs(prev_state[0] - self.right_state[0]) > 1e-9 or \
                abs(prev_state[1] - self.right_state[1]) > 1e-12:
            raise StructuralError("fan does not reach the right state")


def _hull_vertices(xs: np.ndarray, ys: np.ndarray, upper: bool) -> list[int]:
    """Indices of the lower convex (upper concave) hull of the sampled curve."""
    sign = -1.0 if upper else 1.0
    stack: list[int] = []
    for i in range(len(xs)):
        while len(stack) >= 2:
            o, a = stack[-2], stack[-1]
            cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o])
            if sign * cross <= 0.0:
                stack.pop()
            else:
                break
        stack.append(i)
    return stack


def _refine_tangency(f, df, t0: float, anchor: float, lo: float, hi: float,
                     step: float) -> float:
    """Point t near t0 where the chord from (anchor, f(anchor)) is tangent:
    df(t) * (anchor - t) = f(anchor) - f(t)."""
    fa = f(anchor)

    def r(t):
        return df(t) * (anchor - t) - (fa - f(t))

    a = max(lo, t0 - step)
    b = min(hi, t0 + step)
    for _ in range(6):
        ra, rb = float(r(a)), float(r(b))
        if ra == 0.0:
            return a
        if rb == 0.0:
            return b
        if ra * rb < 0.0:
            return float(bisect(r, a, b, tol=1e-13))
        a = max(lo, a - step)
        b = min(hi, b + step)
        step *= 2.0
    return t0  # keep the grid estimate; structure is still correct


def scalar_wave_curve(f: Callable, df: Callable, s_l: float, s_r: float,
                      c: float, n: int = 2049) -> list[Wave]:
    """Entropy solution of the scalar Riemann problem for flux f, data s_l | s_r.

    Convex/concave envelope computed on a fine grid, then every interior
    shock-rarefaction junction is sharpened by solving the tangency
    condition, so chord speeds carry root-finding accuracy rather than grid
    accuracy.
    """
    if abs(s_r - s_l) <= 1e-13:
        return []
    lo, hi = (s_l, s_r) if s_l < s_r else (s_r, s_l)
    increasing = s_r > s_l
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(f(xs), dtype=float)
    verts = _hull_vertices(xs, ys, upper=not increasing)

    # Split hull vertices into contact runs (curve == hull, merged into one
    # rarefaction span) and gaps (chords).
    nodes = [float(xs[verts[0]])]
    is_gap: list[bool] = []
    for a, b in zip(verts[:-1], verts[1:]):
        gap = b > a + 1
        if is_gap and not is_gap[-1] and not gap:
            nodes[-1] = float(xs[b])
        else:
            nodes.append(float(xs[b]))
            is_gap.append(gap)

    # Sharpen interior junction points: a junction is an interior node
    # flanked by a gap on one side and curve contact on the other (or by
    # two gaps through a common tangency).
    step = 2.0 * (hi - lo) / (n - 1)
    for _ in range(3):
        for k in range(1, len(nodes) - 1):
            left_gap = is_gap[k - 1]
            right_gap = is_gap[k] if k < len(is_gap) else False
            if left_gap and not right_gap:
                nodes[k] = _refine_tangency(f, df, nodes[k], nodes[k - 1], lo, hi, step)
            elif right_gap and not left_gap:
                nodes[k] = _refine_tangency(f, df, nodes[k], nodes[k + 1], lo, hi, step)
            elif left_gap and right_gap:
                t = _refine_tangency(f, df, nodes[k], nodes[k - 1], lo, hi, step)
                nodes[k] = _refine_tangency(f, df, t, nodes[k + 1], lo, hi, step)

    # Assemble waves in fan order (ascending speed).
    order = range(len(is_gap)) if increasing else range(len(is_gap) - 1, -1, -1)
    waves: list[Wave] = []
    span_tol = 1e-12 * (hi - lo)
    for k in order:
        a, b = nodes[k], nodes[k + 1]
        s_from, s_to = (a, b) if increasing else (b, a)
        if abs(s_to - s_from) <= span_tol:
            continue
        if is_gap[k]:
            sigma = float((f(s_to) - f(s_from)) / (s_to - s_from))
            waves.append(Wave(S_SHOCK, sigma, sigma, (s_from, c), (s_to, c)))
        else:
            sp_lo = float(df(s_from))
            sp_hi = max(float(df(s_to)), float(df(s_from)))
            waves.append(Wave(S_RAREFACTION, sp_lo, sp_hi,
                              (s_from, c), (s_to, c), dflux=df))
    return waves


def scalar_s_wave(model: PolymerModel, c: float, s_left: float,
                  s_right: float) -> list[Wave]:
    """s-wave fan along the flux slice f(., c)."""
    return scalar_wave_curve(lambda s: model.f(s, c), lambda s: model.f_s(s, c),
                             s_left, s_right, c)


def _contact_geometry(model: PolymerModel, s_L: float, c_L: float,
                      s_R: float, c_R: float) -> dict:
    """Place the concentration contact; shared by the solver and classifier."""
    ab = float(abar(model, c_L, c_R))
    star = s_star(model, c_L, c_R)
    u_a = min(s_L, star)
    sigma_left = float(model.contact_speed(u_a, c_L, ab))
    peak_r = float(golden_max(
        lambda s: model.contact_speed(s, c_R, ab), model.s_min, model.s_max))
    max_psi_r = float(model.contact_speed(peak_r, c_R, ab))
    case_b = False
    if max_psi_r < sigma_left:
        case_b = True  # the right curve never reaches sigma_left (c rising)
    elif float(model.contact_speed(model.s_max, c_R, ab)) <= sigma_left:
        b_exit = contact_root_on_branch(model, c_R, sigma_left, ab,
                                        "exit", peak=peak_r)
        case_b = s_R >= b_exit - 1e-12
    if case_b:
        sigma_c = float(model.contact_speed(s_R, c_R, ab))
        u = contact_root_on_branch(model, c_L, sigma_c, ab, "exit", peak=star)
        w = s_R
    else:
        sigma_c = sigma_left
        u = u_a
        w = contact_root_on_branch(model, c_R, sigma_c, ab, "entry", peak=peak_r)
    label = ("1" if s_L < star else "2") + ("b" if case_b else "a")
    return {"abar": ab, "s_star": star, "sigma_c": sigma_c,
            "u": u, "w": w, "case": label}


def classify_case(model: PolymerModel, s_L: float, c_L: float,
                  s_R: float, c_R: float) -> str:
    """Riemann case label: 'scalar', '1a', '1b', '2a' or '2b'."""
    if abs(c_L - c_R) <= 1e-14:
        return "scalar"
    return _contact_geometry(model, s_L, c_L, s_R, c_R)["case"]


def solve_riemann(model: PolymerModel, s_L: float, c_L: float,
                  s_R: float, c_R: float) -> RiemannSolution:
    """Exact solution of the Riemann problem with data (s_L, c_L) | (s_R, c_R)."""
    s_L, c_L, s_R, c_R = map(float, (s_L, c_L, s_R, c_R))
    if abs(c_L - c_R) <= 1e-14:
        waves = scalar_s_wave(model, c_L, s_L, s_R)
        sol = RiemannSolution((s_L, c_L), (s_R, c_R), tuple(waves), case="scalar")
        sol.validate()
        return sol

    geo = _contact_geometry(model, s_L, c_L, s_R, c_R)
    sigma_c, u, w = geo["sigma_c"], geo["u"], geo["w"]
    res_l = abs(model.contact_speed(u, c_L, geo["abar"]) - sigma_c)
    res_r = abs(model.contact_speed(w, c_R, geo["abar"]) - sigma_c)
    if max(res_l, res_r) > _SPEED_TOL:
        raise StructuralError(
            f"contact states violate the jump condition: residuals "
            f"{res_l:.2e}/{res_r:.2e} for line slope {sigma_c:.6g} through "
            f"(-{geo['abar']:.6g}, 0)")
    contact = Wave(C_CONTACT, sigma_c, sigma_c, (u, c_L), (w, c_R))
    waves = (scalar_s_wave(model, c_L, s_L, u) + [contact]
             + scalar_s_wave(model, c_R, w, s_R))
    sol = RiemannSolution((s_L, c_L), (s_R, c_R), tuple(waves), case=geo["case"])
    sol.validate()
    return sol


@dataclass(frozen=True)
class TwoFluxSolution:
    """Self-similar solution of a scalar law whose flux jumps at x = 0.

    Left and right waves sit strictly on their own side of the interface;
    the traces are the limits at x = 0- / 0+ and share the interface flux.
    """

    u_left: float
    u_right: float
    trace_left: float
    trace_right: float
    interface_flux: float
    left_waves: tuple[Wave, ...]
    right_waves: tuple[Wave, ...]

    def sample(self, xi: float) -> float:
        if xi < 0.0:
            u = self.u_left
            for w in self.left_waves:
                if xi < w.speed_lo:
                    return u
                if w.kind == S_RAREFACTION and xi < w.speed_hi:
                    return float(w.invert(xi))
                u = w.right[0]
            return u
        u = self.trace_right
        for w in self.right_waves:
            if xi < w.speed_lo:
                return u
            if w.kind == S_RAREFACTION and xi < w.speed_hi:
                return float(w.invert(xi))
            u = w.right[0]
        return u


def _scalar_argmax(f: Callable, lo: float, hi: float) -> float:
    return float(golden_max(f, lo, hi))


def _branch_root(f: Callable, value: float, lo: float, hi: float) -> float:
    """Root of f = value on a monotone stretch [lo, hi] of f."""
    g = lambda s: f(s) - value
    g_lo, g_hi = float(g(lo)), float(g(hi))
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        roots = scan_roots(g, lo, hi, n=2049)
        if not roots:
            raise StructuralError(
                f"no flux level crossing f = {value:.6g} on [{lo:.6g}, {hi:.6g}]")
        return roots[0]
    return float(bisect(g, lo, hi, tol=1e-13))


def scalar_two_flux_riemann(f_left: Callable, f_right: Callable,
                            u_L: float, u_R: float,
                            df_left: Optional[Callable] = None,
                            df_right: Optional[Callable] = None,
                            domain: tuple[float, float] = (0.0, 1.0),
                            c: float = np.nan) -> TwoFluxSolution:
    """Riemann problem for u_t + (H(-x) f_left(u) + H(x) f_right(u))_x = 0.

    Both fluxes must be unimodal with matching endpoint values.  The
    interface flux is

        q = min( f_left(min(u_L, theta_L)), f_right(max(u_R, theta_R)) )

    which reduces to the classical Godunov flux when f_left == f_right.
    The left trace solves f_left = q on {u_L} or the decreasing branch, the
    right trace on {u_R} or the increasing branch, so the left fan has only
    nonpositive and the right fan only nonnegative speeds.
    """
    lo, hi = domain
    if df_left is None:
        df_left = _numeric_derivative(f_left, lo, hi)
    if df_right is None:
        df_right = _numeric_derivative(f_right, lo, hi)
    th_l = _scalar_argmax(f_left, lo, hi)
    th_r = _scalar_argmax(f_right, lo, hi)
    f_l_max = float(f_left(th_l))
    f_r_max = float(f_right(th_r))
    scale = max(1.0, f_l_max, f_r_max)
    for endpoint in (lo, hi):
        if abs(float(f_left(endpoint)) - float(f_right(endpoint))) > 1e-9 * scale:
            raise ModelValidationError(
                "the two fluxes must agree at the saturation endpoints")

    q = min(float(f_left(min(u_L, th_l))), float(f_right(max(u_R, th_r))))
    atol = 1e-12 * scale
    if u_L <= th_l and float(f_left(u_L)) <= q + atol:
        trace_left = u_L
    else:
        trace_left = _branch_root(f_left, q, th_l, hi)
    if u_R >= th_r and float(f_right(u_R)) <= q + atol:
        trace_right = u_R
    else:
        trace_right = _branch_root(f_right, q, lo, th_r)

    left_waves = scalar_wave_curve(f_left, df_left, u_L, trace_left, c)
    right_waves = scalar_wave_curve(f_right, df_right, trace_right, u_R, c)
    if left_waves and left_waves[-1].speed_hi > _SPEED_TOL:
        raise StructuralError("interface left fan has positive speeds")
    if right_waves and right_waves[0].speed_lo < -_SPEED_TOL:
        raise StructuralError("interface right fan has negative speeds")
    if abs(float(f_left(trace_left)) - float(f_right(trace_right))) > _SPEED_TOL * scale:
        raise StructuralError("interface traces do not conserve the flux")
    return TwoFluxSolution(u_L, u_R, trace_left, trace_right, q,
                           tuple(left_waves), tuple(right_waves))


def _numeric_derivative(f: Callable, lo: float, hi: float) -> Callable:
    h = 1e-6 * (hi - lo)

    def df(s):
        s0 = np.clip(np.asarray(s, dtype=float), lo + h, hi - h)
        return (f(s0 + h) - f(s0 - h)) / (2.0 * h)

    return df


@dataclass(frozen=True)
class InterfaceStates:
    s_left: float
    s_right: float
    c: float
    flux: float


@dataclass(frozen=True)
class DiscontinuousRiemannSolution:
    """Riemann solution through a flux discontinuity pinned at x = 0.

    left_solution covers x < 0 (flux of the left medium, all wave speeds
    nonpositive, concentration frozen at c_left); right_solution covers
    x > 0.  The concentration is continuous across the interface.
    """

    left_solution: RiemannSolution
    right_solution: RiemannSolution
    interface: InterfaceStates

    def sample(self, xi: float) -> tuple[float, float]:
        if xi < 0.0:
            return self.left_solution.sample(min(xi, -0.0))
        return self.right_solution.sample(xi)

    def sample_many(self, xi) -> tuple[np.ndarray, np.ndarray]:
        xi = np.asarray(xi, dtype=float)
        s_l, c_l = self.left_solution.sample_many(xi)
        s_r, c_r = self.right_solution.sample_many(xi)
        neg = xi < 0.0
        return np.where(neg, s_l, s_r), np.where(neg, c_l, c_r)


def solve_riemann_discontinuous(dmodel: DiscontinuousModel, s_L: float,
                                c_L: float, s_R: float,
                                c_R: float) -> DiscontinuousRiemannSolution:
    """Exact Riemann solution when the flux jumps at x = 0 (data jump there too).

    Covered scope: c_L >= c_R and f_left max below f_right max at c_L (the
    configuration the splitting construction assumes).  c_L == c_R reduces
    to the scalar two-flux problem.
    """
    s_L, c_L, s_R, c_R = map(float, (s_L, c_L, s_R, c_R))
    lm, rm = dmodel.left_model, dmodel.right_model
    lo, hi = lm.s_min, lm.s_max

    if c_L < c_R - 1e-14:
        raise StructuralError(
            "rising concentration across a flux discontinuity is outside "
            "the covered construction (requires c_left >= c_right)")

    fl = lambda s: lm.f(s, c_L)
    dfl = lambda s: lm.f_s(s, c_L)
    fr_cl = lambda s: rm.f(s, c_L)
    dfr_cl = lambda s: rm.f_s(s, c_L)

    th_ll = float(theta(lm, c_L))
    th_rl = float(theta(rm, c_L))
    cap_l = float(fl(th_ll))
    if cap_l > float(fr_cl(th_rl)) + 1e-9 * max(1.0, cap_l):
        raise StructuralError(
            "left flux maximum exceeds the right flux maximum at c_left; "
            "this ordering is outside the covered construction")

    if abs(c_L - c_R) <= 1e-14:
        prob1 = scalar_two_flux_riemann(fl, fr_cl, s_L, s_R, dfl, dfr_cl,
                                        domain=(lo, hi), c=c_L)
        return _glue(s_L, c_L, s_R, c_R, prob1, [])

    # Interface saturation: the state just right of x = 0 at concentration c_L.
    cap = float(fl(min(s_L, th_ll)))
    v = _branch_root(fr_cl, cap, lo, th_rl)
    ab = float(abar(lm, c_L, c_R))
    star_r = s_star(rm, c_L, c_R)
    m = min(star_r, v)
    slope = float(rm.contact_speed(m, c_L, ab))
    peak_r = float(golden_max(
        lambda s: rm.contact_speed(s, c_R, ab), lo, hi))
    b_bar = contact_root_on_branch(rm, c_R, slope, ab, "exit", peak=peak_r)
    if s_R <= b_bar + 1e-12:
        s_mid = v
    else:
        sigma_c = float(rm.contact_speed(s_R, c_R, ab))
        s_mid = contact_root_on_branch(rm, c_L, sigma_c, ab, "exit", peak=star_r)

    prob1 = scalar_two_flux_riemann(fl, fr_cl, s_L, s_mid, dfl, dfr_cl,
                                    domain=(lo, hi), c=c_L)
    prob2 = solve_riemann(rm, s_mid, c_L, s_R, c_R)
    if prob1.right_waves and prob2.waves and \
            prob1.right_waves[-1].speed_hi > prob2.waves[0].speed_lo + _SPEED_TOL:
        raise StructuralError("interface fan overlaps the downstream fan")
    return _glue(s_L, c_L, s_R, c_R, prob1, list(prob2.waves))


def _glue(s_L, c_L, s_R, c_R, prob1: TwoFluxSolution,
          downstream: list[Wave]) -> DiscontinuousRiemannSolution:
    left_sol = RiemannSolution((s_L, c_L), (prob1.trace_left, c_L),
                               prob1.left_waves, case="interface-left")
    right_waves = tuple(prob1.right_waves) + tuple(downstream)
    right_sol = RiemannSolution((prob1.trace_right, c_L), (s_R, c_R),
                                right_waves, case="interface-right")
    left_sol.validate()
    right_sol.validate()
    iface = InterfaceStates(prob1.trace_left, prob1.trace_right, c_L,
                            prob1.interface_flux)
    return DiscontinuousRiemannSolution(left_sol, right_sol, iface)
