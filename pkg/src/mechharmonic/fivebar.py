"""Position analysis of the hybrid five-bar path generator.

Topology: the CV crank ``p`` turns about ``cv_pivot``; the driving coupler
``q`` runs from the crank tip (the knee) to the end effector; the closing
coupler ``r`` joins the end effector to the servo crank ``s``, which turns
about ``servo_pivot``. The ground link ``t`` is the pivot separation.

Only the CV angle is known in advance. The driving dyad (p, q) is aimed at
each desired point to get the achieved end-effector position and its
error; the closing dyad (r, s) then yields up to two servo angles per
position, and the closure tracker picks one sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .planar import Branch, DegenerateGeometryError, Point2, circle_intersect, wrap_angle

DEFAULT_TREND_FACTOR = 5.0

PARAMETER_NAMES = ("p", "q", "r", "s", "cv_x", "cv_y", "servo_x", "servo_y")


class InfeasibleTraceError(ValueError):
    """Operation needs a closure trace that exists at every position."""


@dataclass(frozen=True)
class FiveBarGeometry:
    cv_pivot: Point2
    servo_pivot: Point2
    p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        object.__setattr__(self, "cv_pivot", Point2(*map(float, self.cv_pivot)))
        object.__setattr__(self, "servo_pivot", Point2(*map(float, self.servo_pivot)))
        for name in ("p", "q", "r", "s"):
            value = float(getattr(self, name))
            if not value > 0 or not math.isfinite(value):
                raise DegenerateGeometryError(f"link {name} must be a positive length, got {value}")
            object.__setattr__(self, name, value)
        if self.t == 0.0:
            raise DegenerateGeometryError("ground pivots coincide")

    @property
    def t(self) -> float:
        return (self.servo_pivot - self.cv_pivot).norm()

    def link_lengths(self) -> dict[str, float]:
        return {"p": self.p, "q": self.q, "r": self.r, "s": self.s, "t": self.t}

    def max_link_ratio(self) -> float:
        """Longest link relative to the CV crank."""
        return max(self.link_lengths().values()) / self.p

    def knee(self, theta_cv: float) -> Point2:
        return Point2(self.cv_pivot.x + self.p * math.cos(theta_cv),
                      self.cv_pivot.y + self.p * math.sin(theta_cv))

    def to_vector(self) -> np.ndarray:
        return np.array([self.p, self.q, self.r, self.s, *self.cv_pivot, *self.servo_pivot])

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "FiveBarGeometry":
        p, q, r, s, cx, cy, sx, sy = (float(x) for x in v)
        return cls(Point2(cx, cy), Point2(sx, sy), p, q, r, s)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q, "r": self.r, "s": self.s,
                "cv_pivot": list(self.cv_pivot), "servo_pivot": list(self.servo_pivot)}

    @classmethod
    def from_dict(cls, d: dict) -> "FiveBarGeometry":
        return cls(Point2(*d["cv_pivot"]), Point2(*d["servo_pivot"]),
                   d["p"], d["q"], d["r"], d["s"])


@dataclass(frozen=True)
class PathSpec:
    """Cyclically ordered target points, one per uniform CV crank step."""

    points: np.ndarray
    theta0: float = 0.0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("path points must be an (n, 2) array")
        if len(pts) < 4:
            raise ValueError("path needs at least 4 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("path points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def cv_angles(self) -> np.ndarray:
        n = len(self.points)
        return self.theta0 + 2.0 * np.pi * np.arange(n) / n

    def bbox_diagonal(self) -> float:
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.hypot(*span))


@dataclass(frozen=True)
class PositionSolution:
    theta_cv: float
    knee: Point2
    theta_q: float
    actual_end: Point2
    point_error: float
    servo_candidates: tuple[tuple[float, Branch], ...] = ()


@dataclass(frozen=True)
class ClosureTrace:
    """Servo angle sequence chosen by the closure tracker.

    ``theta5`` is unwrapped and empty when the trace is infeasible.
    """

    theta_cv: np.ndarray
    theta5: np.ndarray
    branches: tuple[Branch, ...]
    feasible: bool
    mobility: int

    def __len__(self) -> int:
        return len(self.theta_cv)


def driving_dyad_solve(geom: FiveBarGeometry, theta_cv: float, desired) -> PositionSolution:
    """Aim the driving coupler at ``desired`` and measure the miss.

    The achieved end effector lies on the ray from the knee towards the
    desired point at distance ``q``; the error is the leftover distance.
    """
    knee = geom.knee(theta_cv)
    dx, dy = desired[0] - knee.x, desired[1] - knee.y
    d = math.hypot(dx, dy)
    if d <= 1e-12 * geom.q:
        raise DegenerateGeometryError("desired point coincides with the knee")
    actual = Point2(knee.x + geom.q * dx / d, knee.y + geom.q * dy / d)
    return PositionSolution(
        theta_cv=theta_cv,
        knee=knee,
        theta_q=math.atan2(dy, dx),
        actual_end=actual,
        point_error=abs(d - geom.q),
        servo_candidates=tuple(closing_dyad_solutions(geom, actual)),
    )


def closing_dyad_solutions(geom: FiveBarGeometry, actual_end) -> list[tuple[float, Branch]]:
    """Servo crank angles that close the (r, s) dyad onto ``actual_end``."""
    sp = geom.servo_pivot
    try:
        elbows = circle_intersect(sp, geom.s, actual_end, geom.r)
    except DegenerateGeometryError:
        return []
    if len(elbows) == 1:
        labels = (Branch.OPEN,)
    else:
        labels = (Branch.OPEN, Branch.CROSSED)
    return [(math.atan2(b.y - sp.y, b.x - sp.x), lab) for b, lab in zip(elbows, labels)]


def solve_path(geom: FiveBarGeometry, path: PathSpec) -> list[PositionSolution | None]:
    """Per-position solutions; None where the desired point sits on the knee."""
    out: list[PositionSolution | None] = []
    for theta, pt in zip(path.cv_angles, path.points):
        try:
            out.append(driving_dyad_solve(geom, float(theta), pt))
        except DegenerateGeometryError:
            out.append(None)
    return out


def _mobility(solutions) -> int:
    return sum(2 - (len(s.servo_candidates) if s is not None else 0) for s in solutions)


def mobility_count(geom: FiveBarGeometry, path: PathSpec) -> int:
    """Closures missing over the cycle: two per position, tangency counts one."""
    return _mobility(solve_path(geom, path))


def track_candidates(candidates: Sequence[Sequence[tuple[float, Branch]]],
                     trend_factor: float = DEFAULT_TREND_FACTOR):
    """Pick one servo angle per position from per-position candidate lists.

    Start on the OPEN closure, take the smaller step at the second
    position, then keep the servo velocity as steady as possible. A
    trend-continuing choice is dropped for a direction reversal when its
    step is more than ``trend_factor`` times the reversal's step.

    Returns ``(theta5, branches)`` with ``theta5`` unwrapped, or None if
    any position has no candidate.
    """
    if any(len(c) == 0 for c in candidates):
        return None
    first = next((c for c in candidates[0] if c[1] is Branch.OPEN), candidates[0][0])
    theta = [first[0]]
    branches = [first[1]]
    for i in range(1, len(candidates)):
        prev = theta[-1]
        steps = [(wrap_angle(angle - prev), br) for angle, br in candidates[i]]
        if i == 1 or len(steps) == 1:
            step, br = min(steps, key=lambda s: abs(s[0]))
        else:
            v_prev = theta[-1] - theta[-2]
            ranked = sorted(steps, key=lambda s: abs(s[0] - v_prev))
            step, br = ranked[0]
            alt_step, alt_br = ranked[1]
            continues = step * v_prev > 0
            reverses = alt_step * v_prev < 0
            if continues and reverses and abs(step) > trend_factor * abs(alt_step):
                step, br = alt_step, alt_br
        theta.append(prev + step)
        branches.append(br)
    return np.array(theta), tuple(branches)


def velocity_fluctuation(theta5: Sequence[float]) -> float:
    """Sum of absolute changes in per-step servo displacement (open cycle)."""
    th = np.asarray(theta5, dtype=float)
    v = np.array([wrap_angle(d) for d in np.diff(th)])
    return float(np.abs(np.diff(v)).sum())


def trace_from_solutions(solutions, theta_cv, trend_factor=DEFAULT_TREND_FACTOR) -> ClosureTrace:
    mob = _mobility(solutions)
    theta_cv = np.asarray(theta_cv, dtype=float)
    if any(s is None for s in solutions):
        return ClosureTrace(theta_cv, np.empty(0), (), False, mob)
    picked = track_candidates([s.servo_candidates for s in solutions], trend_factor)
    if picked is None:
        return ClosureTrace(theta_cv, np.empty(0), (), False, mob)
    theta5, branches = picked
    return ClosureTrace(theta_cv, theta5, branches, True, mob)


def trace_closures(geom: FiveBarGeometry, path: PathSpec,
                   trend_factor: float = DEFAULT_TREND_FACTOR) -> ClosureTrace:
    return trace_from_solutions(solve_path(geom, path), path.cv_angles, trend_factor)


def cyclic_derivatives(values: Sequence[float], dt: float, angular: bool = True,
                       accuracy: int = 4):
    """Central first and second differences of one periodic cycle.

    ``accuracy`` selects the 3-point (2) or 5-point (4) stencil. With
    ``angular`` set, every step is wrapped into (-pi, pi] so that full
    rotations and the seam between the last and first sample are handled.
    """
    v = np.asarray(values, dtype=float)
    step = np.roll(v, -1) - v
    if angular and len(step):
        step = np.array([wrap_angle(d) for d in step])
    # displacement from sample i to i+k, built from wrapped unit steps
    ahead1 = step
    behind1 = -np.roll(step, 1)
    if accuracy == 2:
        vel = (ahead1 - behind1) / (2.0 * dt)
        acc = (ahead1 + behind1) / (dt * dt)
    elif accuracy == 4:
        ahead2 = step + np.roll(step, -1)
        behind2 = -(np.roll(step, 1) + np.roll(step, 2))
        vel = (8.0 * (ahead1 - behind1) - (ahead2 - behind2)) / (12.0 * dt)
        acc = (16.0 * (ahead1 + behind1) - (ahead2 + behind2)) / (12.0 * dt * dt)
    else:
        raise ValueError("accuracy must be 2 or 4")
    return vel, acc


def differentiate_profile(trace: ClosureTrace, cv_speed: float, accuracy: int = 4):
    """Servo velocity and acceleration at constant CV speed (rad/s)."""
    if not trace.feasible:
        raise InfeasibleTraceError("cannot differentiate an infeasible trace")
    n = len(trace.theta5)
    if n < 4:
        raise ValueError("need at least 4 positions")
    if cv_speed <= 0:
        raise ValueError("cv_speed must be positive")
    dt = (2.0 * math.pi / cv_speed) / n
    return cyclic_derivatives(trace.theta5, dt, accuracy=accuracy)


@dataclass
class PathReport:
    """Everything the analysis pipeline needs about one geometry on one path."""

    geometry: FiveBarGeometry
    path: PathSpec
    solutions: list = field(repr=False)
    trace: ClosureTrace

    @property
    def errors(self) -> np.ndarray:
        return np.array([s.point_error if s is not None else self.geometry.q
                         for s in self.solutions])

    @property
    def structural_error(self) -> float:
        return float(self.errors.sum())


def analyse(geom: FiveBarGeometry, path: PathSpec,
            trend_factor: float = DEFAULT_TREND_FACTOR) -> PathReport:
    solutions = solve_path(geom, path)
    trace = trace_from_solutions(solutions, path.cv_angles, trend_factor)
    return PathReport(geom, path, solutions, trace)
