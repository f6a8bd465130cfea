"""Objective components for five-bar synthesis and the single-DOF chain."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .fivebar import (DEFAULT_TREND_FACTOR, ClosureTrace, FiveBarGeometry,
                      InfeasibleTraceError, PathReport, PathSpec, analyse)
from .harmonics import DEFAULT_MAX_ORDER, HarmonicSpectrum, compute_spectrum

ERR_MODES = ("sum-squared", "sum-of-squares")


@dataclass(frozen=True)
class ObjectiveWeights:
    w_err: float = 1.0
    w_mob: float = 1.0
    w_harm: float = 1.0
    w_swept: float = 1.0

    def __post_init__(self):
        values = (self.w_err, self.w_mob, self.w_harm, self.w_swept)
        if any(w < 0 or not math.isfinite(w) for w in values):
            raise ValueError("weights must be finite and non-negative")
        if not any(w > 0 for w in values):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class ObjectiveBreakdown:
    err: float
    mob: float
    harm: float
    swept: float
    composite: float
    feasible: bool = True
    structural_error: float = 0.0
    mobility: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def obj_err(errors: Sequence[float], mode: str = "sum-squared") -> float:
    """Square of the cycle-summed point error (or the sum of squares)."""
    e = np.asarray(errors, dtype=float)
    if mode == "sum-squared":
        return float(e.sum()) ** 2
    if mode == "sum-of-squares":
        return float(np.dot(e, e))
    raise ValueError(f"unknown error mode {mode!r}")


def obj_mob(mobility: int) -> float:
    return float(mobility) ** 3


def obj_harm(spectrum: HarmonicSpectrum | Sequence[float]) -> float:
    """Sum of each harmonic magnitude raised to its order plus one.

    Accepts a spectrum or a plain sequence of magnitudes H1..HN.
    """
    mags = spectrum.magnitudes() if isinstance(spectrum, HarmonicSpectrum) \
        else np.asarray(spectrum, dtype=float)
    orders = np.arange(1, len(mags) + 1)
    return float(np.sum(mags ** (orders + 1)))


def obj_swept(trace: ClosureTrace | Sequence[float], s: float) -> float:
    """Servo crank length times the RMS servo displacement (radians)."""
    if isinstance(trace, ClosureTrace):
        if not trace.feasible:
            raise InfeasibleTraceError("swept area needs a feasible trace")
        theta = trace.theta5
    else:
        theta = np.asarray(trace, dtype=float)
    return float(s * math.sqrt(np.mean(np.square(theta))))


def singledof_harmonic_penalty(spectrum: HarmonicSpectrum | Sequence[float]) -> float:
    """Sum of squared magnitudes of harmonics 2 to 5."""
    mags = spectrum.magnitudes() if isinstance(spectrum, HarmonicSpectrum) \
        else np.asarray(spectrum, dtype=float)
    if len(mags) < 5:
        raise ValueError("need harmonics up to order 5")
    return float(np.sum(mags[1:5] ** 2))


def breakdown_from_report(report: PathReport, weights: ObjectiveWeights,
                          max_order: int = DEFAULT_MAX_ORDER,
                          err_mode: str = "sum-squared") -> ObjectiveBreakdown:
    trace = report.trace
    err = obj_err(report.errors, err_mode)
    mob = obj_mob(trace.mobility)
    if trace.feasible:
        harm = obj_harm(compute_spectrum(trace.theta5, max_order))
        swept = obj_swept(trace, report.geometry.s)
    else:
        # mobility term carries the infeasible case
        harm = swept = 0.0
    total = (weights.w_err * err + weights.w_mob * mob
             + weights.w_harm * harm + weights.w_swept * swept)
    return ObjectiveBreakdown(err, mob, harm, swept, total, trace.feasible,
                              report.structural_error, trace.mobility)


def composite(geom: FiveBarGeometry, path: PathSpec,
              weights: ObjectiveWeights = ObjectiveWeights(), *,
              max_order: int = DEFAULT_MAX_ORDER, err_mode: str = "sum-squared",
              trend_factor: float = DEFAULT_TREND_FACTOR) -> ObjectiveBreakdown:
    """Evaluate all four components for one geometry on one path."""
    report = analyse(geom, path, trend_factor)
    return breakdown_from_report(report, weights, max_order, err_mode)
