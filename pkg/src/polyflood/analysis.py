"""Error norms, convergence tables, and run monitors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "RunReport", "ConvergenceTable", "l1_error", "l1_distance",
    "convergence_rate", "total_variation", "interface_trace",
    "state_sampler",
]


def total_variation(values) -> float:
    """Sum of absolute adjacent differences."""
    return float(np.sum(np.abs(np.diff(np.asarray(values, dtype=float)))))


@dataclass
class RunReport:
    """Per-step monitor series, snapshots, and diagnostic counters.

    mass_s tracks h * sum(s), mass_sc tracks h * sum(c s + a(c)); the
    diagnostics dict carries scheme counters (upstream-mobility ambiguity
    hits, Godunov/dflu disagreement faces) and the accumulated boundary
    flux, so discrete conservation can be checked exactly.
    """

    times: list = field(default_factory=list)
    mass_s: list = field(default_factory=list)
    mass_sc: list = field(default_factory=list)
    linf_c: list = field(default_factory=list)
    tv_c: list = field(default_factory=list)
    tv_s: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def record(self, state, grid, model) -> None:
        if self.times and state.time <= self.times[-1]:
            raise ValueError("monitor timestamps must increase strictly")
        base = model.left_model if hasattr(model, "left_model") else model
        h = grid.h
        self.times.append(state.time)
        self.mass_s.append(h * float(np.sum(state.s)))
        self.mass_sc.append(h * float(np.sum(
            state.c * state.s + base.adsorption(state.c))))
        self.linf_c.append(float(np.max(np.abs(state.c))))
        self.tv_c.append(total_variation(state.c))
        self.tv_s.append(total_variation(state.s))

    def monitor_rows(self):
        """Rows (t, mass_s, mass_sc, linf_c, tv_c) for the monitor CSV."""
        return list(zip(self.times, self.mass_s, self.mass_sc,
                        self.linf_c, self.tv_c))


def l1_error(state, reference: Callable, grid) -> tuple[float, float]:
    """Grid L1 distance h * sum |q_i - q_ref(x_i)| at cell centers,
    for q = s and q = c.  `reference` maps an x array to (s, c) arrays."""
    x = grid.centers()
    s_ref, c_ref = reference(x)
    h = grid.h
    err_s = h * float(np.sum(np.abs(state.s - np.asarray(s_ref, dtype=float))))
    err_c = h * float(np.sum(np.abs(state.c - np.asarray(c_ref, dtype=float))))
    return err_s, err_c


def state_sampler(state, grid) -> Callable:
    """Piecewise-constant sampler of a (finer) state, usable as a reference."""
    faces = grid.faces()

    def sampler(x):
        idx = np.clip(np.searchsorted(faces, x, side="right") - 1,
                      0, grid.n_cells - 1)
        return state.s[idx], state.c[idx]

    return sampler


def l1_distance(state_a, state_b, grid) -> tuple[float, float]:
    """L1 distance between two states on the same grid."""
    h = grid.h
    return (h * float(np.sum(np.abs(state_a.s - state_b.s))),
            h * float(np.sum(np.abs(state_a.c - state_b.c))))


def convergence_rate(e_coarse: float, e_fine: float) -> float:
    """log2(e_coarse / e_fine) for grids refined by 2; nan when undefined."""
    if e_coarse <= 0.0 or e_fine <= 0.0:
        return float("nan")
    return float(np.log2(e_coarse / e_fine))


def interface_trace(state, grid) -> tuple[float, float, float, float]:
    """Cell values adjacent to the interface face:
    (s_left, s_right, c_left, c_right).  Classifies which interface
    connection a scheme converged to."""
    k = grid.interface_index
    if k is None or not (1 <= k <= grid.n_cells - 1):
        raise ValueError("grid has no interior interface face")
    return (float(state.s[k - 1]), float(state.s[k]),
            float(state.c[k - 1]), float(state.c[k]))


@dataclass
class ConvergenceTable:
    """Rows (h, l1_error_s, rate_s, l1_error_c, rate_c); rates from the
    second row on, nan on the first."""

    scheme: str
    rows: list = field(default_factory=list)  # (h, err_s, rate_s, err_c, rate_c)

    @classmethod
    def from_errors(cls, scheme: str, hs, errs_s, errs_c) -> "ConvergenceTable":
        table = cls(scheme=scheme)
        for k, (h, es, ec) in enumerate(zip(hs, errs_s, errs_c)):
            rs = convergence_rate(errs_s[k - 1], es) if k else float("nan")
            rc = convergence_rate(errs_c[k - 1], ec) if k else float("nan")
            table.rows.append((float(h), float(es), rs, float(ec), rc))
        return table

    def text(self) -> str:
        header = f"{'h':>12} {'L1(s)':>14} {'rate':>8} {'L1(c)':>14} {'rate':>8}"
        lines = [f"scheme: {self.scheme}", header, "-" * len(header)]
        for h, es, rs, ec, rc in self.rows:
            rs_s = f"{rs:8.4f}" if np.isfinite(rs) else " " * 8
            rc_s = f"{rc:8.4f}" if np.isfinite(rc) else " " * 8
            lines.append(f"{h:12.6g} {es:14.6e} {rs_s} {ec:14.6e} {rc_s}")
        return "\n".join(lines)
