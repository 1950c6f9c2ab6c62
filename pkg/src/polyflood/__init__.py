"""Finite-volume solver for two-phase flow with a dissolved additive.

The package couples an exact Riemann solver (continuous and spatially
discontinuous flux) with a conservative finite-volume time stepper that can
run five interchangeable interface fluxes, plus error/convergence analysis
and a command-line experiment harness.
"""

from .model import (
    DiscontinuousModel,
    PolymerModel,
    get_preset,
    quadratic_demo,
    two_phase,
    two_phase_discontinuous,
)

__version__ = "0.1.0"

__all__ = [
    "PolymerModel",
    "DiscontinuousModel",
    "get_preset",
    "quadratic_demo",
    "two_phase",
    "two_phase_discontinuous",
    "__version__",
]
