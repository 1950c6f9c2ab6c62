"""Two-phase transport model with a dissolved additive.

The conserved pair is (s, c*s + a(c)): s is the saturation of the wetting
phase, c the normalized additive concentration carried by it, and a(c) the
amount adsorbed by the rock.  The saturation flux

    f(s, c) = lambda_1 / (lambda_1 + lambda_2) * [phi + (g_1 - g_2) * lambda_2]

is built from the phase mobilities; with gravity (g_1 > g_2) it is
non-monotone in s with a single interior maximum.  This module owns the
model data, its derivatives, and the scalar constructions every other
module consumes: the flux argmax, the resonance saturation where the
s-characteristic speed equals the concentration-contact speed, and the
intersections of a flux curve with a secant line through (-abar, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._rootfind import bisect, golden_max, scan_roots
from .errors import ModelValidationError, StructuralError

__all__ = [
    "PolymerModel", "DiscontinuousModel",
    "eval_f", "eval_fs", "eval_fc", "abar", "theta", "s_star",
    "secant_intersections", "quadratic_demo", "two_phase",
    "two_phase_discontinuous", "get_preset", "PRESETS",
]

_FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class PolymerModel:
    """Immutable model data; all evaluators accept scalars or numpy arrays.

    Mobility derivative closures are optional.  When present, f_s and f_c
    are assembled analytically by the quotient rule; otherwise central
    differences with a fixed relative step are used.  Wave constructions
    only need sign-accurate f_s, which the presets provide analytically.
    """

    mobility_1: Callable
    mobility_2: Callable
    adsorption: Callable
    adsorption_deriv: Callable
    gravity_1: float
    gravity_2: float
    total_velocity: float = 0.0
    s_min: float = 0.0
    s_max: float = 1.0
    mobility_1_ds: Optional[Callable] = None
    mobility_1_dc: Optional[Callable] = None
    mobility_2_ds: Optional[Callable] = None
    mobility_2_dc: Optional[Callable] = None
    name: str = "custom"

    def __post_init__(self):
        _validate(self)

    @property
    def s_span(self) -> float:
        return self.s_max - self.s_min

    def f(self, s, c):
        lam1 = self.mobility_1(s, c)
        lam2 = self.mobility_2(s, c)
        drive = self.total_velocity + (self.gravity_1 - self.gravity_2) * lam2
        return lam1 / (lam1 + lam2) * drive

    def f_s(self, s, c):
        if self.mobility_1_ds is not None and self.mobility_2_ds is not None:
            return self._df_analytic(s, c, self.mobility_1_ds(s, c),
                                     self.mobility_2_ds(s, c))
        ds = _FD_REL_STEP * self.s_span
        s0 = np.clip(np.asarray(s, dtype=float), self.s_min + ds, self.s_max - ds)
        return (self.f(s0 + ds, c) - self.f(s0 - ds, c)) / (2.0 * ds)

    def f_c(self, s, c):
        if self.mobility_1_dc is not None and self.mobility_2_dc is not None:
            return self._df_analytic(s, c, self.mobility_1_dc(s, c),
                                     self.mobility_2_dc(s, c))
        dc = _FD_REL_STEP
        c0 = np.clip(np.asarray(c, dtype=float), dc, 1.0 - dc)
        return (self.f(s, c0 + dc) - self.f(s, c0 - dc)) / (2.0 * dc)

    def _df_analytic(self, s, c, dlam1, dlam2):
        lam1 = self.mobility_1(s, c)
        lam2 = self.mobility_2(s, c)
        tot = lam1 + lam2
        dg = self.gravity_1 - self.gravity_2
        drive = self.total_velocity + dg * lam2
        num_d = dlam1 * drive + lam1 * dg * dlam2
        return num_d / tot - lam1 * drive * (dlam1 + dlam2) / tot**2

    def contact_speed(self, s, c, abar_val):
        """f(s, c) / (s + abar): speed of a concentration contact leaving (s, c)."""
        return self.f(s, c) / (np.asarray(s, dtype=float) + abar_val)

    def clip_s(self, s, slack: float = 0.0):
        return np.clip(s, self.s_min - slack, self.s_max + slack)


def _check_range(x, lo, hi, what, slack):
    x = np.asarray(x, dtype=float)
    if np.any(x < lo - slack) or np.any(x > hi + slack):
        raise ValueError(f"{what} out of range [{lo}, {hi}]: "
                         f"min {float(np.min(x)):.6g}, max {float(np.max(x)):.6g}")
    return np.clip(x, lo, hi)


def _checked_args(model: PolymerModel, s, c):
    slack = 1e-9 * max(model.s_span, 1.0)
    s = _check_range(s, model.s_min, model.s_max, "saturation", slack)
    c = _check_range(c, 0.0, 1.0, "concentration", 1e-9)
    return s, c


def eval_f(model: PolymerModel, s, c):
    """Saturation flux with domain validation (round-off clamped, more rejected)."""
    s, c = _checked_args(model, s, c)
    return model.f(s, c)


def eval_fs(model: PolymerModel, s, c):
    s, c = _checked_args(model, s, c)
    return model.f_s(s, c)


def eval_fc(model: PolymerModel, s, c):
    s, c = _checked_args(model, s, c)
    return model.f_c(s, c)


def abar(model: PolymerModel, c_left, c):
    """Secant slope of the adsorption function anchored at c_left.

    Continuous limit a'(c) at c == c_left.
    """
    c_left = np.asarray(c_left, dtype=float)
    c = np.asarray(c, dtype=float)
    dc = c - c_left
    tiny = np.abs(dc) < 1e-14
    safe_dc = np.where(tiny, 1.0, dc)
    secant = (model.adsorption(c) - model.adsorption(c_left)) / safe_dc
    out = np.where(tiny, model.adsorption_deriv(c), secant)
    return float(out) if out.ndim == 0 else out


def theta(model: PolymerModel, c, tol: float = 1e-10):
    """Argmax of s -> f(s, c) by golden-section search, projected on the domain.

    Vectorized over c.  Unimodality is validated at model construction.
    """
    c = np.asarray(c, dtype=float)
    out = golden_max(lambda x: model.f(x, c), model.s_min, model.s_max, tol=tol)
    out = np.clip(out, model.s_min, model.s_max)
    return float(out) if out.ndim == 0 else out


def s_star(model: PolymerModel, c_left, c_right, tol: float = 1e-12) -> float:
    """Resonance saturation: f_s(s, c_left) = f(s, c_left) / (s + abar).

    The unique interior root of g(s) = f_s * (s + abar) - f, bracketed by a
    uniform scan and bisected to `tol`.  abar is anchored at c_left and
    evaluated at c_right, matching the jump-condition anchoring.
    """
    ab = abar(model, c_left, c_right)

    def g(s):
        return model.f_s(s, c_left) * (s + ab) - model.f(s, c_left)

    eps = 1e-6 * model.s_span
    lo, hi = model.s_min + eps, model.s_max - eps
    xs = np.linspace(lo, hi, 1024)
    ys = np.asarray(g(xs), dtype=float)
    sign_flip = np.flatnonzero(ys[:-1] * ys[1:] < 0.0)
    if sign_flip.size == 0:
        raise StructuralError(
            f"no resonance point for c_left={float(c_left):.6g}, "
            f"c_right={float(c_right):.6g}: g has no interior sign change")
    i = int(sign_flip[0])
    return float(bisect(g, xs[i], xs[i + 1], tol=tol))


def secant_intersections(model: PolymerModel, c_target, sigma: float,
                         abar_val: float) -> list[float]:
    """All s with f(s, c_target) = sigma * (s + abar_val), ascending.

    These are the intersections of the flux curve at fixed concentration
    with the line of slope sigma through (-abar_val, 0); they supply the
    intermediate states of the wave constructions.  Empty list is valid.
    """
    def g(s):
        return model.f(s, c_target) - sigma * (s + abar_val)

    return scan_roots(g, model.s_min, model.s_max, n=1025)


def contact_root_on_branch(model: PolymerModel, c_target, sigma: float,
                           abar_val: float, branch: str,
                           peak: Optional[float] = None) -> float:
    """Root of f(s, c_target) = sigma*(s + abar) on one monotone branch of
    the contact-speed curve psi(s) = f/(s + abar).

    branch "entry": increasing side [s_min, argmax psi]; "exit": decreasing
    side [argmax psi, s_max].  Robust against closely spaced root pairs
    that a uniform scan can miss near tangency.
    """
    if peak is None:
        peak = float(golden_max(
            lambda x: model.contact_speed(x, c_target, abar_val),
            model.s_min, model.s_max))

    def g(s):
        return model.f(s, c_target) - sigma * (s + abar_val)

    lo, hi = (model.s_min, peak) if branch == "entry" else (peak, model.s_max)
    g_lo, g_hi = float(g(lo)), float(g(hi))
    if g_lo == 0.0:
        return float(lo)
    if g_hi == 0.0:
        return float(hi)
    if g_lo * g_hi > 0.0:
        roots = secant_intersections(model, c_target, sigma, abar_val)
        roots = [r for r in roots if (lo - 1e-9 <= r <= hi + 1e-9)]
        if not roots:
            raise StructuralError(
                f"no {branch} intersection with slope {sigma:.6g} on "
                f"[{lo:.6g}, {hi:.6g}] at c={float(c_target):.6g}")
        return roots[0] if branch == "entry" else roots[-1]
    return float(bisect(g, lo, hi, tol=1e-12))


def _validate(model: PolymerModel) -> None:
    if not model.s_max > model.s_min:
        raise ModelValidationError("empty saturation domain")
    cs = np.linspace(0.0, 1.0, 33)
    ss = np.linspace(model.s_min, model.s_max, 1024)
    sg, cg = np.meshgrid(ss, cs)
    lam1 = np.asarray(model.mobility_1(sg, cg), dtype=float)
    lam2 = np.asarray(model.mobility_2(sg, cg), dtype=float)
    scale = max(float(np.max(lam1 + lam2)), 1.0)
    if np.any(np.abs(model.mobility_1(model.s_min, cs)) > 1e-12 * scale):
        raise ModelValidationError("mobility_1 must vanish at s_min for all c")
    if np.any(np.abs(model.mobility_2(model.s_max, cs)) > 1e-12 * scale):
        raise ModelValidationError("mobility_2 must vanish at s_max for all c")
    interior = (sg > model.s_min) & (sg < model.s_max)
    if np.any((lam1 + lam2)[interior] <= 0.0):
        raise ModelValidationError(
            "mobilities vanish simultaneously inside the saturation domain")
    if np.any(np.diff(lam1, axis=1) < -1e-9 * scale):
        raise ModelValidationError("mobility_1 must be nondecreasing in s")
    if np.any(np.diff(lam2, axis=1) > 1e-9 * scale):
        raise ModelValidationError("mobility_2 must be nonincreasing in s")
    if abs(float(model.adsorption(0.0))) > 1e-12:
        raise ModelValidationError("adsorption must vanish at c = 0")
    if np.any(np.asarray(model.adsorption_deriv(cs), dtype=float) <= 0.0):
        raise ModelValidationError("adsorption derivative must be positive")

    fvals = lam1 / np.where(lam1 + lam2 > 0.0, lam1 + lam2, 1.0) \
        * (model.total_velocity + (model.gravity_1 - model.gravity_2) * lam2)
    fvals = np.where(lam1 + lam2 > 0.0, fvals, 0.0)
    fscale = max(float(np.max(np.abs(fvals))), 1.0)
    if np.any(fvals < -1e-12 * fscale):
        raise ModelValidationError("flux must be nonnegative on the domain")
    for j in (0, -1):
        col = fvals[:, j]
        if float(np.max(col) - np.min(col)) > 1e-12 * fscale:
            raise ModelValidationError(
                "flux at the saturation endpoints must not depend on c")
    # one strict interior maximum per c-slice, none elsewhere
    for row in fvals:
        peaks = np.flatnonzero(
            (row[1:-1] > row[:-2] + 1e-13 * fscale)
            & (row[1:-1] > row[2:] + 1e-13 * fscale))
        if _count_separated(peaks) > 1:
            raise ModelValidationError(
                "flux is not unimodal in s: multiple interior maxima found")


def _count_separated(idx: np.ndarray) -> int:
    """Number of runs of consecutive indices (a plateau counts once)."""
    if idx.size == 0:
        return 0
    return int(1 + np.sum(np.diff(idx) > 1))


@dataclass(frozen=True)
class DiscontinuousModel:
    """Flux data jumping at a fixed position: left_model governs x < interface,
    right_model governs x > interface.

    Both halves must share the saturation domain, the adsorption law, and
    the drive constants, since those enter the interface flux formulas.
    """

    left_model: PolymerModel
    right_model: PolymerModel
    interface_position: float = 0.0

    def __post_init__(self):
        lm, rm = self.left_model, self.right_model
        if (lm.s_min, lm.s_max) != (rm.s_min, rm.s_max):
            raise ModelValidationError("sub-models must share the saturation domain")
        cs = np.linspace(0.0, 1.0, 64)
        if np.max(np.abs(np.asarray(lm.adsorption(cs)) - np.asarray(rm.adsorption(cs)))) > 1e-12:
            raise ModelValidationError("sub-models must share the adsorption law")
        if (lm.gravity_1, lm.gravity_2, lm.total_velocity) != \
                (rm.gravity_1, rm.gravity_2, rm.total_velocity):
            raise ModelValidationError("sub-models must share gravity and total velocity")

    @property
    def s_min(self):
        return self.left_model.s_min

    @property
    def s_max(self):
        return self.left_model.s_max


def quadratic_demo() -> PolymerModel:
    """Synthetic model with flux s*(4 - s)/(1 + c) on s in [0, 4], a(c) = c.

    The mobilities 4*s/(1+c) and 4*(4-s)/(1+c) reproduce that flux exactly
    under a unit gravity difference and zero total velocity.
    """
    return PolymerModel(
        mobility_1=lambda s, c: 4.0 * s / (1.0 + c),
        mobility_2=lambda s, c: 4.0 * (4.0 - s) / (1.0 + c),
        mobility_1_ds=lambda s, c: 4.0 / (1.0 + c) + 0.0 * s,
        mobility_1_dc=lambda s, c: -4.0 * s / (1.0 + c) ** 2,
        mobility_2_ds=lambda s, c: -4.0 / (1.0 + c) + 0.0 * s,
        mobility_2_dc=lambda s, c: -4.0 * (4.0 - s) / (1.0 + c) ** 2,
        adsorption=lambda c: 1.0 * c,
        adsorption_deriv=lambda c: np.ones_like(np.asarray(c, dtype=float)),
        gravity_1=1.0,
        gravity_2=0.0,
        total_velocity=0.0,
        s_min=0.0,
        s_max=4.0,
        name="quadratic-demo",
    )


def two_phase() -> PolymerModel:
    """Quadratic relative permeabilities with additive-thickened wetting phase:
    lambda_1 = s^2/(0.5 + c), lambda_2 = (1 - s)^2, g = (2, 1), phi = 0,
    a(c) = 0.25 c."""
    return PolymerModel(
        mobility_1=lambda s, c: s**2 / (0.5 + c),
        mobility_2=lambda s, c: (1.0 - s) ** 2 + 0.0 * c,
        mobility_1_ds=lambda s, c: 2.0 * s / (0.5 + c),
        mobility_1_dc=lambda s, c: -(s**2) / (0.5 + c) ** 2,
        mobility_2_ds=lambda s, c: -2.0 * (1.0 - s) + 0.0 * c,
        mobility_2_dc=lambda s, c: 0.0 * s + 0.0 * c,
        adsorption=lambda c: 0.25 * c,
        adsorption_deriv=lambda c: 0.25 * np.ones_like(np.asarray(c, dtype=float)),
        gravity_1=2.0,
        gravity_2=1.0,
        total_velocity=0.0,
        name="two-phase",
    )


def _two_phase_scaled(k1: float, k2: float, name: str) -> PolymerModel:
    return PolymerModel(
        mobility_1=lambda s, c: k1 * s**2 / (0.5 + c),
        mobility_2=lambda s, c: k2 * (1.0 - s) ** 2 + 0.0 * c,
        mobility_1_ds=lambda s, c: 2.0 * k1 * s / (0.5 + c),
        mobility_1_dc=lambda s, c: -k1 * s**2 / (0.5 + c) ** 2,
        mobility_2_ds=lambda s, c: -2.0 * k2 * (1.0 - s) + 0.0 * c,
        mobility_2_dc=lambda s, c: 0.0 * s + 0.0 * c,
        adsorption=lambda c: 0.25 * c,
        adsorption_deriv=lambda c: 0.25 * np.ones_like(np.asarray(c, dtype=float)),
        gravity_1=2.0,
        gravity_2=1.0,
        total_velocity=0.0,
        name=name,
    )


def two_phase_discontinuous() -> DiscontinuousModel:
    """Heterogeneous variant: rock type changes at x = 0.

    The x < 0 mobilities are (50 s^2/(0.5+c), 5 (1-s)^2), the x > 0 ones
    (10 s^2/(0.5+c), 20 (1-s)^2); adsorption and gravity are shared.
    """
    return DiscontinuousModel(
        left_model=_two_phase_scaled(50.0, 5.0, "two-phase-disc-left"),
        right_model=_two_phase_scaled(10.0, 20.0, "two-phase-disc-right"),
        interface_position=0.0,
    )


PRESETS = {
    "quadratic-demo": quadratic_demo,
    "two-phase": two_phase,
    "two-phase-discontinuous": two_phase_discontinuous,
}


def get_preset(name: str):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ModelValidationError(
            f"unknown model preset {name!r}; available: {sorted(PRESETS)}") from None
    return factory()
