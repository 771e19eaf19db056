"""Numerical laboratory for the Kazdan-Warner equation −Δu + α = S·e^{2u/n}
on flat tori: spectral solvers, sub/super-solution machinery, critical
thresholds, and executable a-priori estimates.
"""

from .domain import (
    CutoffSpec,
    RegionMask,
    ScalarField,
    TorusDomain,
    ball_mask,
    integrate,
    make_cutoff,
    make_torus,
    sublevel_mask,
)
from .problem import EnergyBreakdown, ProblemInstance
from .solvers import OrderInterval, SolveReport, SolverOptions
from .threshold import SolvabilityVerdict, ThresholdReport

__all__ = [
    "CutoffSpec",
    "EnergyBreakdown",
    "OrderInterval",
    "ProblemInstance",
    "RegionMask",
    "ScalarField",
    "SolvabilityVerdict",
    "SolveReport",
    "SolverOptions",
    "ThresholdReport",
    "TorusDomain",
    "ball_mask",
    "integrate",
    "make_cutoff",
    "make_torus",
    "sublevel_mask",
]

__version__ = "0.1.0"
