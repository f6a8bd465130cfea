"""Harmonic-aware synthesis and analysis of planar linkages.

Covers Fourier spectra of motion cycles, dyad-based position analysis,
five-bar hybrid path synthesis with a genetic algorithm, single-DOF needle
drive optimization with Powell's method, and inverse dynamics.
"""
from .harmonics import HarmonicSpectrum, compute_spectrum
from .planar import Branch, Point2, circle_intersect, dyad_pose
from .fivebar import FiveBarGeometry, PathSpec, analyse
from .objectives import ObjectiveBreakdown, ObjectiveWeights, composite
from .dynamics import InertiaModel, hybrid_quality, inverse_dynamics
from .singledof import NeedleMechanism, StrokeSpec, needle_objective, optimize_needle

__version__ = "0.1.0"

__all__ = [
    "HarmonicSpectrum", "compute_spectrum",
    "Branch", "Point2", "circle_intersect", "dyad_pose",
    "FiveBarGeometry", "PathSpec", "analyse",
    "ObjectiveBreakdown", "ObjectiveWeights", "composite",
    "InertiaModel", "hybrid_quality", "inverse_dynamics",
    "NeedleMechanism", "StrokeSpec", "needle_objective", "optimize_needle",
]
