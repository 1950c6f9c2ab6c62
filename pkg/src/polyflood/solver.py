"""Conservative finite-volume time marching.

Update per step, with lam = dt/h and face fluxes (F, G) from the chosen
scheme:

    s_i^{n+1} = s_i^n - lam (F_{i+1/2} - F_{i-1/2})
    c_i^{n+1} s_i^{n+1} + a(c_i^{n+1}) = c_i^n s_i^n + a(c_i^n)
                                         - lam (G_{i+1/2} - G_{i-1/2})

The saturation update is explicit; the concentration is recovered per cell
from the monotone scalar equation m(c) = c s + a(c) = rhs.  Boundary
handling uses one ghost layer: dirichlet fills the ghost with the boundary
state, closed overrides the boundary-face flux pair with (0, 0).

For a spatially discontinuous model the face at grid.interface_index uses
the two-sided interface flux (the dflu formula across the two flux
functions for dflu/godunov, own-side mobilities for um, own-side flux
functions in the centered formulas for lf/force); every other face sees
its own side's model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from . import fluxes as _fx
from ._rootfind import solve_conserved_c
from .analysis import RunReport
from .errors import CflViolationError, ModelValidationError
from .model import DiscontinuousModel, PolymerModel

__all__ = [
    "Grid1D", "SchemeState", "BoundaryCondition", "BoundarySpec",
    "dirichlet", "closed", "compute_face_fluxes", "step", "recover_c",
    "cfl_max_dt", "run",
]

AnyModel = Union[PolymerModel, DiscontinuousModel]


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n_cells: int
    interface_index: Optional[int] = None

    def __post_init__(self):
        if self.n_cells < 1 or not self.x_hi > self.x_lo:
            raise ValueError("grid needs n_cells >= 1 and x_hi > x_lo")
        if self.interface_index is not None and \
                not (0 <= self.interface_index <= self.n_cells):
            raise ValueError("interface_index must be a face index")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_cells

    def centers(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.n_cells) + 0.5) * self.h

    def faces(self) -> np.ndarray:
        return self.x_lo + np.arange(self.n_cells + 1) * self.h


@dataclass(frozen=True)
class SchemeState:
    s: np.ndarray
    c: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.s.shape != self.c.shape or self.s.ndim != 1:
            raise ValueError("s and c must be 1-d arrays of equal length")


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str  # "dirichlet" | "closed"
    s: float = np.nan
    c: float = np.nan


def dirichlet(s: float, c: float) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", float(s), float(c))


def closed() -> BoundaryCondition:
    return BoundaryCondition("closed")


@dataclass(frozen=True)
class BoundarySpec:
    left: BoundaryCondition
    right: BoundaryCondition


def _ghost(state: SchemeState, bc: BoundaryCondition, side: int):
    if bc.kind == "dirichlet":
        return bc.s, bc.c
    # closed: the face flux is overridden to zero, the ghost value is inert
    edge = 0 if side < 0 else -1
    return float(state.s[edge]), float(state.c[edge])


def _face_models(model: AnyModel, grid: Grid1D):
    """Per-face (left-arg model, right-arg model) layout."""
    if isinstance(model, PolymerModel):
        return model, model, None
    if grid.interface_index is None:
        raise ModelValidationError(
            "a discontinuous model needs grid.interface_index at the jump")
    x_face = grid.x_lo + grid.interface_index * grid.h
    if abs(x_face - model.interface_position) > 1e-9 * max(grid.h, 1.0):
        raise ModelValidationError(
            f"grid face {x_face:.12g} does not line up with the flux "
            f"discontinuity at {model.interface_position:.12g}")
    return model.left_model, model.right_model, grid.interface_index


def compute_face_fluxes(state: SchemeState, model: AnyModel, grid: Grid1D,
                        scheme: _fx.FluxScheme, boundary: BoundarySpec,
                        lam: float, diagnostics: Optional[dict] = None):
    """Flux pair (F, G) on all n_cells + 1 faces."""
    n = grid.n_cells
    gl = _ghost(state, boundary.left, -1)
    gr = _ghost(state, boundary.right, +1)
    s_ext = np.concatenate(([gl[0]], state.s, [gr[0]]))
    c_ext = np.concatenate(([gl[1]], state.c, [gr[1]]))
    sl, cl = s_ext[:-1], c_ext[:-1]
    sr, cr = s_ext[1:], c_ext[1:]

    model_l, model_r, k = _face_models(model, grid)
    if k is None:
        F, G = _flux_batch(scheme, model_l, model_l, sl, cl, sr, cr, lam,
                           diagnostics)
    else:
        F = np.empty(n + 1)
        G = np.empty(n + 1)
        F[:k], G[:k] = _flux_batch(scheme, model_l, model_l, sl[:k], cl[:k],
                                   sr[:k], cr[:k], lam, diagnostics)
        F[k + 1:], G[k + 1:] = _flux_batch(scheme, model_r, model_r,
                                           sl[k + 1:], cl[k + 1:],
                                           sr[k + 1:], cr[k + 1:], lam,
                                           diagnostics)
        F[k], G[k] = _interface_flux(scheme, model_l, model_r,
                                     sl[k], cl[k], sr[k], cr[k], lam)

    if boundary.left.kind == "closed":
        F[0] = 0.0
        G[0] = 0.0
    if boundary.right.kind == "closed":
        F[n] = 0.0
        G[n] = 0.0
    return F, G


def _flux_batch(scheme, model_l, model_r, sl, cl, sr, cr, lam, diagnostics):
    tag = scheme.tag
    if tag == "dflu":
        return _fx.dflu(model_l, model_r, sl, cl, sr, cr)
    if tag == "godunov":
        if diagnostics is not None:
            F, G, cases = _fx.godunov_with_cases(model_l, sl, cl, sr, cr)
            Fd, _ = _fx.dflu(model_l, model_r, sl, cl, sr, cr)
            diagnostics["godunov_case_b_faces"] = \
                diagnostics.get("godunov_case_b_faces", 0) + int(np.count_nonzero(
                    (cases == _fx.CASE_1B) | (cases == _fx.CASE_2B)))
            diagnostics["godunov_dflu_diff_faces"] = \
                diagnostics.get("godunov_dflu_diff_faces", 0) + int(
                    np.count_nonzero(np.abs(F - Fd) > 1e-10))
            return F, G
        return _fx.godunov(model_l, sl, cl, sr, cr)
    if tag == "um":
        return _fx.upstream_mobility(model_l, sl, cl, sr, cr,
                                     model_r=model_r, counters=diagnostics)
    if tag == "lf":
        return _fx.lax_friedrichs(model_l, sl, cl, sr, cr, lam,
                                  model_r=model_r)
    if tag == "force":
        return _fx.force(model_l, sl, cl, sr, cr, lam, model_r=model_r)
    raise ValueError(f"unknown scheme tag {tag!r}")


def _interface_flux(scheme, model_l, model_r, sl, cl, sr, cr, lam):
    """Flux at the face where the flux function itself jumps."""
    if scheme.tag in ("dflu", "godunov"):
        # two-flux interface value; equals the Godunov flux when the
        # fluxes coincide
        return _fx.dflu(model_l, model_r, sl, cl, sr, cr)
    if scheme.tag == "um":
        return _fx.upstream_mobility(model_l, sl, cl, sr, cr, model_r=model_r)
    if scheme.tag == "lf":
        return _fx.lax_friedrichs(model_l, sl, cl, sr, cr, lam, model_r=model_r)
    return _fx.force(model_l, sl, cl, sr, cr, lam, model_r=model_r)


def recover_c(s_new, rhs, model: AnyModel, x0=None):
    """Concentration from c*s_new + a(c) = rhs, to |residual| <= 1e-12."""
    base = model.left_model if isinstance(model, DiscontinuousModel) else model
    return solve_conserved_c(s_new, rhs, base.adsorption,
                             base.adsorption_deriv, x0=x0)


def step(state: SchemeState, model: AnyModel, grid: Grid1D,
         scheme: _fx.FluxScheme, boundary: BoundarySpec, dt: float,
         diagnostics: Optional[dict] = None) -> SchemeState:
    """One conservative step of size dt."""
    lam = dt / grid.h
    F, G = compute_face_fluxes(state, model, grid, scheme, boundary, lam,
                               diagnostics)
    s_new = state.s - lam * np.diff(F)
    base = model.left_model if isinstance(model, DiscontinuousModel) else model
    over = np.maximum(base.s_min - s_new, s_new - base.s_max)
    if np.any(over > 1e-10):
        i = int(np.argmax(over))
        raise CflViolationError(
            f"saturation left [{base.s_min}, {base.s_max}] by "
            f"{float(over[i]):.3g} in cell {i} at t = {state.time + dt:.6g}; "
            "the step violates the stability bound")
    s_new = base.clip_s(s_new)
    rhs = state.c * state.s + base.adsorption(state.c) - lam * np.diff(G)
    c_new = recover_c(s_new, rhs, model, x0=state.c)
    if diagnostics is not None:
        diagnostics["boundary_flux_s"] = diagnostics.get("boundary_flux_s", 0.0) \
            + dt * (F[0] - F[-1])
        diagnostics["boundary_flux_sc"] = diagnostics.get("boundary_flux_sc", 0.0) \
            + dt * (G[0] - G[-1])
    return SchemeState(s_new, c_new, state.time + dt)


def cfl_max_dt(state: SchemeState, model: AnyModel, h: float,
               safety: float = 1.0, dt_max: float = np.inf,
               c_range: tuple[float, float] = (0.0, 1.0)) -> float:
    """Largest stable dt: safety * h / M with M = sup{|f_s|, f/(s + a')}.

    The sup is taken over the full saturation domain crossed with c_range
    (default the whole concentration interval), on a 512 x 32 grid.
    """
    models = (model.left_model, model.right_model) \
        if isinstance(model, DiscontinuousModel) else (model,)
    M = 0.0
    for m in models:
        ss = np.linspace(m.s_min, m.s_max, 512)
        cs = np.linspace(c_range[0], c_range[1], 32)
        sg, cg = np.meshgrid(ss, cs)
        fs = np.abs(m.f_s(sg, cg))
        lam_c = m.f(sg, cg) / (sg + m.adsorption_deriv(cg))
        M = max(M, float(np.max(fs)), float(np.max(lam_c)))
    if M <= 0.0:
        return dt_max
    return min(safety * h / M, dt_max)


def run(initial: SchemeState, model: AnyModel, grid: Grid1D,
        scheme: _fx.FluxScheme, boundary: BoundarySpec, t_end: float,
        dt: Optional[float] = None, snapshot_times=(),
        check_lemmas: str = "off") -> tuple[SchemeState, RunReport]:
    """March to t_end with fixed dt (adaptive stability-bound dt when None).

    Steps are truncated to land exactly on snapshot times and on t_end.
    check_lemmas: "off", "warn" or "strict" enables the per-step stability
    and variation monitors of the dflu scheme (see RunReport docs).
    """
    if t_end < initial.time:
        raise ValueError("t_end before the initial time")
    report = RunReport()
    state = initial
    report.record(state, grid, model)
    events = sorted({round(float(t), 15) for t in snapshot_times
                     if initial.time < t <= t_end} | {float(t_end)})
    snap_set = {round(float(t), 15) for t in snapshot_times}
    if any(t <= initial.time + 1e-15 for t in snapshot_times):
        report.snapshots.append((initial.time, state))
    for target in events:
        while state.time < target - 1e-13:
            dt_step = dt if dt is not None else \
                cfl_max_dt(state, model, grid.h, dt_max=target - state.time)
            dt_step = min(dt_step, target - state.time)
            prev = state
            state = step(state, model, grid, scheme, boundary, dt_step,
                         diagnostics=report.diagnostics)
            report.record(state, grid, model)
            if check_lemmas != "off" and scheme.tag == "dflu":
                _check_dflu_lemmas(prev, state, boundary,
                                   strict=check_lemmas == "strict")
        if round(state.time, 12) in {round(t, 12) for t in snap_set} or \
                any(abs(state.time - t) <= 1e-12 for t in snap_set):
            report.snapshots.append((state.time, state))
    return state, report


def _extend(arr: np.ndarray, bc_l: BoundaryCondition,
            bc_r: BoundaryCondition, which: str) -> np.ndarray:
    lo = getattr(bc_l, which) if bc_l.kind == "dirichlet" else arr[0]
    hi = getattr(bc_r, which) if bc_r.kind == "dirichlet" else arr[-1]
    return np.concatenate(([lo], arr, [hi]))


def _check_dflu_lemmas(prev: SchemeState, new: SchemeState,
                       boundary: BoundarySpec, strict: bool) -> None:
    """Per-step monitors: max-norm of c nonincreasing, total variation of c
    diminishing, the time-difference bound, and the per-cell convex
    combination.  Ghost values extend the profiles so the whole-line
    statements apply under dirichlet data."""
    import warnings

    tol = 1e-10
    c_prev = _extend(prev.c, boundary.left, boundary.right, "c")
    c_new = _extend(new.c, boundary.left, boundary.right, "c")
    problems = []
    if np.max(np.abs(c_new)) > np.max(np.abs(c_prev)) + tol:
        problems.append("max-norm of c grew")
    tv_prev = float(np.sum(np.abs(np.diff(c_prev))))
    if float(np.sum(np.abs(np.diff(c_new)))) > tv_prev + tol:
        problems.append("total variation of c grew")
    if float(np.sum(np.abs(new.c - prev.c))) > tv_prev + tol:
        problems.append("time difference of c exceeds the variation bound")
    lo = np.minimum(c_prev[:-2], c_prev[1:-1]) - 1e-9
    hi = np.maximum(c_prev[:-2], c_prev[1:-1]) + 1e-9
    if np.any((c_new[1:-1] < lo) | (c_new[1:-1] > hi)):
        problems.append("c left the local convex hull of its upwind pair")
    if problems:
        msg = "; ".join(problems) + f" at t = {new.time:.6g}"
        if strict:
            raise CflViolationError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
