"""Straight-line needle drive: a four-bar crank-rocker coupled to a slider crank.

The crank (length ``a``) turns about the origin. The coupler ``b`` joins
the crank tip to the rocker ``c``, pivoted at ``pivot2``. A rocker arm of
length ``e`` is fixed to the rocker at phase offset ``beta``; a connecting
rod ``L`` drives the needle (slider) along the vertical line
``x = slider_x``. The needle hangs below the rocker-arm tip.

Design vector (nine scalars)::

    a, b, c, pivot2_x, pivot2_y, e, L, slider_x, beta
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .harmonics import HarmonicSpectrum, compute_spectrum
from .objectives import singledof_harmonic_penalty
from .optimize.powell import PenaltyResult, PowellConfig, penalty_minimize
from .planar import Branch, Point2, dyad_pose, transmission_angle

PARAMETER_NAMES = ("a", "b", "c", "pivot2_x", "pivot2_y", "e", "L", "slider_x", "beta")

# Objective assigned to configurations that cannot be assembled.
INFEASIBLE_PENALTY = 1e6


class GrashofError(ValueError):
    """Four-bar is not a crank-rocker with ``a`` as the crank."""


@dataclass(frozen=True)
class NeedleMechanism:
    a: float
    b: float
    c: float
    pivot2: Point2
    e: float
    L: float
    slider_x: float
    beta: float  # radians

    def __post_init__(self):
        object.__setattr__(self, "pivot2", Point2(*map(float, self.pivot2)))
        for name in ("a", "b", "c", "e", "L"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be a positive length")
        if grashof_margin(self.a, self.b, self.c, self.ground) < 0:
            raise GrashofError(
                f"(a, b, c, ground) = ({self.a:g}, {self.b:g}, {self.c:g}, {self.ground:g}) "
                "is not a crank-rocker")

    @property
    def ground(self) -> float:
        return self.pivot2.norm()

    def to_vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, *self.pivot2, self.e, self.L,
                         self.slider_x, self.beta])

    @classmethod
    def from_vector(cls, v) -> "NeedleMechanism":
        a, b, c, px, py, e, L, sx, beta = (float(x) for x in v)
        return cls(a, b, c, Point2(px, py), e, L, sx, beta)

    def to_dict(self) -> dict:
        return dict(zip(PARAMETER_NAMES, map(float, self.to_vector())))


def grashof_margin(a: float, b: float, c: float, ground: float) -> float:
    """Non-negative when ``a`` is the shortest link and the chain is Grashof."""
    links = (a, b, c, ground)
    shortest_ok = min(b, c, ground) - a
    grashof = (sum(links) - max(links) - min(links)) - (max(links) + min(links))
    return min(shortest_ok, grashof)


@dataclass(frozen=True)
class StrokeSpec:
    upper: float
    lower: float
    min_transmission: float = 30.0

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ValueError("upper stroke limit must exceed the lower one")
        if not 0 < self.min_transmission < 90:
            raise ValueError("min_transmission must lie in (0, 90) degrees")

    @property
    def stroke(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ChainState:
    slider: float
    mu_fourbar: float
    mu_slider: float
    crank_tip: Point2
    rocker_joint: Point2
    arm_tip: Point2
    slider_point: Point2


def chain_position(mech: NeedleMechanism, crank_angle: float,
                   branch: Branch = Branch.OPEN) -> ChainState | None:
    """Needle position and both transmission angles; None if the chain cannot close."""
    tip = Point2(mech.a * math.cos(crank_angle), mech.a * math.sin(crank_angle))
    pose = dyad_pose(tip, mech.b, mech.pivot2, mech.c, branch)
    if pose is None:
        return None
    joint = pose.elbow
    rocker = math.atan2(joint.y - mech.pivot2.y, joint.x - mech.pivot2.x)
    arm = Point2(mech.pivot2.x + mech.e * math.cos(rocker + mech.beta),
                 mech.pivot2.y + mech.e * math.sin(rocker + mech.beta))
    dx = mech.slider_x - arm.x
    if abs(dx) >= mech.L:
        return None
    slider = Point2(mech.slider_x, arm.y - math.sqrt(mech.L * mech.L - dx * dx))
    return ChainState(
        slider=slider.y,
        mu_fourbar=transmission_angle(joint, tip, mech.pivot2),
        mu_slider=transmission_angle(slider, arm, Point2(slider.x + 1.0, slider.y)),
        crank_tip=tip, rocker_joint=joint, arm_tip=arm, slider_point=slider,
    )


@dataclass
class NeedleEvaluation:
    objective: float
    h_upper: float
    h_lower: float
    displacement: np.ndarray
    spectrum: HarmonicSpectrum | None
    min_transmission: float
    infeasible_samples: int = 0
    harmonic_penalty: float = 0.0
    transmission_penalty: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.infeasible_samples == 0


def needle_objective(mech: NeedleMechanism, stroke: StrokeSpec,
                     n_samples: int = 24) -> NeedleEvaluation:
    """Harmonic penalty on harmonics 2-5 plus a transmission-angle penalty.

    The stroke equalities are returned separately as ``h_upper`` and
    ``h_lower`` for the penalty wrapper. A chain that fails to close at any
    sample scores ``INFEASIBLE_PENALTY`` plus the failure count.
    """
    if n_samples < 12:
        raise ValueError("need at least 12 samples per cycle")
    angles = 2.0 * math.pi * np.arange(n_samples) / n_samples
    states = [chain_position(mech, float(t)) for t in angles]
    failed = sum(s is None for s in states)
    good = [s for s in states if s is not None]
    disp = np.array([s.slider for s in good])
    if failed:
        h_up = float(disp.max() - stroke.upper) if len(disp) else 0.0
        h_lo = float(disp.min() - stroke.lower) if len(disp) else 0.0
        mu = min((min(s.mu_fourbar, s.mu_slider) for s in good), default=0.0)
        return NeedleEvaluation(INFEASIBLE_PENALTY + failed, h_up, h_lo, disp, None, mu, failed)
    spectrum = compute_spectrum(disp, 5)
    harm = singledof_harmonic_penalty(spectrum)
    mus = np.array([(s.mu_fourbar, s.mu_slider) for s in good])
    trans = float(np.sum(np.maximum(0.0, stroke.min_transmission - mus) ** 2))
    return NeedleEvaluation(harm + trans, float(disp.max() - stroke.upper),
                            float(disp.min() - stroke.lower), disp, spectrum,
                            float(mus.min()), 0, harm, trans)


# Reference needle problem: stroke of 12.26 centred on the origin, started
# from a feasible crank-rocker with both transmission angles above 38 degrees.
REFERENCE_START = NeedleMechanism(
    a=7.5, b=23.5, c=22.0, pivot2=Point2(10.5, 20.0), e=23.5, L=40.5,
    slider_x=45.5, beta=4.15)
REFERENCE_STROKE = StrokeSpec(upper=6.13, lower=-6.13, min_transmission=30.0)
# Line searches to 1e-6 and at most 20 Powell cycles per penalty round keep
# the reference problem to a few seconds.
NEEDLE_POWELL = PowellConfig(line_tol=1e-6, ftol=1e-9, max_iter=20)


@dataclass
class NeedleProblem:
    """Nine-parameter needle synthesis posed for the penalty wrapper."""

    stroke: StrokeSpec = REFERENCE_STROKE
    n_samples: int = 24
    _cache: dict = field(default_factory=dict, repr=False)

    def evaluate(self, x) -> NeedleEvaluation:
        key = tuple(np.asarray(x, dtype=float))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        try:
            mech = NeedleMechanism.from_vector(x)
        except ValueError:
            ev = NeedleEvaluation(INFEASIBLE_PENALTY + self.n_samples, 0.0, 0.0,
                                  np.empty(0), None, 0.0, self.n_samples)
        else:
            ev = needle_objective(mech, self.stroke, self.n_samples)
        if len(self._cache) > 4096:
            self._cache.clear()
        self._cache[key] = ev
        return ev

    def objective(self, x) -> float:
        return self.evaluate(x).objective

    def equalities(self):
        return [lambda x: self.evaluate(x).h_upper, lambda x: self.evaluate(x).h_lower]

    def inequalities(self):
        """Crank-rocker feasibility as ``g(x) <= 0``."""
        def grashof(x):
            a, b, c, px, py = x[:5]
            return -grashof_margin(a, b, c, math.hypot(px, py))
        return [grashof]


@dataclass
class NeedleResult:
    mechanism: NeedleMechanism
    evaluation: NeedleEvaluation
    penalty: PenaltyResult
    stroke: StrokeSpec

    @property
    def stroke_residual(self) -> float:
        """Largest stroke-limit miss as a fraction of the stroke."""
        ev = self.evaluation
        return max(abs(ev.h_upper), abs(ev.h_lower)) / self.stroke.stroke


def optimize_needle(stroke: StrokeSpec = REFERENCE_STROKE,
                    start: NeedleMechanism = REFERENCE_START,
                    config: PowellConfig = NEEDLE_POWELL, n_samples: int = 24) -> NeedleResult:
    problem = NeedleProblem(stroke, n_samples)
    res = penalty_minimize(problem.objective, start.to_vector(), problem.equalities(),
                           problem.inequalities(), config)
    mech = NeedleMechanism.from_vector(res.x)
    return NeedleResult(mech, needle_objective(mech, stroke, n_samples), res, stroke)
