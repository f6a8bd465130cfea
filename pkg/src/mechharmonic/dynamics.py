"""Inverse dynamics of a synthesised five-bar by virtual work.

Links are uniform slender rods. For each cycle position the actuator
torques are

    tau_j = sum_links (m a_G - m g) . dr_G/dq_j + I alpha dphi/dq_j

with generalised coordinates q = (theta_cv, theta5).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fivebar import ClosureTrace, FiveBarGeometry, InfeasibleTraceError, cyclic_derivatives
from .planar import DegenerateGeometryError, Point2, circle_intersect

LINKS = ("p", "q", "r", "s")
FD_STEP = 1e-6
SECOND_STEP = 1e-4  # joint-angle perturbation for curvature terms


class UndefinedRatioError(ValueError):
    """The CV axis carries no torque, so torque ratios are undefined."""


@dataclass(frozen=True)
class InertiaModel:
    density: float = 1.0
    gravity: tuple[float, float] = (0.0, 0.0)
    link_density: dict = field(default_factory=dict)  # per-link overrides, may be 0

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError("density must be positive")
        unknown = set(self.link_density) - set(LINKS)
        if unknown:
            raise ValueError(f"unknown links in density overrides: {sorted(unknown)}")
        if any(v < 0 for v in self.link_density.values()):
            raise ValueError("link densities must be non-negative")

    def mass_props(self, name: str, length: float) -> tuple[float, float]:
        """(mass, centroidal moment of inertia) of one rod."""
        m = self.link_density.get(name, self.density) * length
        return m, m * length * length / 12.0


@dataclass(frozen=True)
class TorqueProfile:
    theta_cv: np.ndarray
    tau_cv: np.ndarray  # NaN where the position was flagged
    tau_servo: np.ndarray
    theta5_rate: np.ndarray
    cv_speed: float
    flagged: tuple[int, ...] = ()

    def _valid(self, values: np.ndarray) -> np.ndarray:
        return values[np.isfinite(values)]

    @property
    def peak_cv(self) -> float:
        return float(np.max(np.abs(self._valid(self.tau_cv)), initial=0.0))

    @property
    def peak_servo(self) -> float:
        return float(np.max(np.abs(self._valid(self.tau_servo)), initial=0.0))

    @property
    def rms_cv(self) -> float:
        v = self._valid(self.tau_cv)
        return float(np.sqrt(np.mean(v ** 2))) if len(v) else 0.0

    @property
    def rms_servo(self) -> float:
        v = self._valid(self.tau_servo)
        return float(np.sqrt(np.mean(v ** 2))) if len(v) else 0.0

    @property
    def power(self) -> np.ndarray:
        return self.tau_cv * self.cv_speed + self.tau_servo * self.theta5_rate

    def energy_residual(self) -> float:
        """Net actuator work over the cycle relative to the gross work throughput.

        Zero for a conservative model; returns 0 when nothing moves.
        """
        p = self.power
        p = p[np.isfinite(p)]
        gross = float(np.abs(p).sum())
        return abs(float(p.sum())) / gross if gross > 0 else 0.0


def _assemble(geom: FiveBarGeometry, theta_cv: float, theta5: float, near) -> np.ndarray | None:
    """Link states (G_x, G_y, phi for p, q, r, s) with the end effector nearest ``near``."""
    knee = geom.knee(theta_cv)
    sp = geom.servo_pivot
    b = Point2(sp.x + geom.s * math.cos(theta5), sp.y + geom.s * math.sin(theta5))
    try:
        candidates = circle_intersect(knee, geom.q, b, geom.r)
    except DegenerateGeometryError:
        return None
    if not candidates:
        return None
    e = min(candidates, key=lambda c: (c.x - near[0]) ** 2 + (c.y - near[1]) ** 2)
    cv = geom.cv_pivot
    return np.array([
        (cv.x + knee.x) / 2, (cv.y + knee.y) / 2, theta_cv,
        (knee.x + e.x) / 2, (knee.y + e.y) / 2, math.atan2(e.y - knee.y, e.x - knee.x),
        (e.x + b.x) / 2, (e.y + b.y) / 2, math.atan2(b.y - e.y, b.x - e.x),
        (sp.x + b.x) / 2, (sp.y + b.y) / 2, theta5,
    ])


def link_states(geom: FiveBarGeometry, trace: ClosureTrace, actual_ends=None) -> np.ndarray:
    """(n, 12) array of centroid positions and angles for every link.

    The end effector is taken at the assembly closest to ``actual_ends``
    when given, otherwise closest to the previous position.
    """
    if not trace.feasible:
        raise InfeasibleTraceError("link states need a feasible trace")
    states = []
    near = actual_ends[0] if actual_ends is not None else None
    for i, (tc, t5) in enumerate(zip(trace.theta_cv, trace.theta5)):
        if actual_ends is not None:
            near = actual_ends[i]
        elif near is None:
            near = geom.knee(tc)
        st = _assemble(geom, float(tc), float(t5), near)
        if st is None:
            raise InfeasibleTraceError(f"mechanism does not assemble at position {i}")
        states.append(st)
        if actual_ends is None:
            knee = geom.knee(tc)
            near = (2 * st[3] - knee.x, 2 * st[4] - knee.y)
    return np.array(states)


def inverse_dynamics(geom: FiveBarGeometry, trace: ClosureTrace, cv_speed: float,
                     model: InertiaModel = InertiaModel(), actual_ends=None) -> TorqueProfile:
    """CV-axis and servo-axis torques around the cycle.

    Link accelerations are ``J qdd + d2r[qd, qd]`` with the servo rate and
    acceleration from cyclic central differences of the trace and both
    position derivatives from central differences of the closure. A zero
    ``cv_speed`` gives the static (gravity-only) load. Positions where a
    perturbed closure fails are flagged and carry NaN torques.
    """
    if not trace.feasible:
        raise InfeasibleTraceError("inverse dynamics needs a feasible trace")
    if cv_speed < 0:
        raise ValueError("cv_speed must be non-negative")
    n = len(trace.theta5)
    states = link_states(geom, trace, actual_ends)
    if cv_speed > 0:
        dt = (2.0 * math.pi / cv_speed) / n
        rate5, acc5 = cyclic_derivatives(trace.theta5, dt)
    else:
        rate5, acc5 = np.zeros(n), np.zeros(n)

    lengths = {"p": geom.p, "q": geom.q, "r": geom.r, "s": geom.s}
    masses = np.zeros(12)
    for k, name in enumerate(LINKS):
        m, inertia = model.mass_props(name, lengths[name])
        masses[3 * k:3 * k + 3] = (m, m, inertia)
    weight = np.zeros(12)
    weight[0::3] = masses[0::3] * model.gravity[0]
    weight[1::3] = masses[1::3] * model.gravity[1]

    tau = np.full((n, 2), np.nan)
    flagged = []
    for i in range(n):
        q0 = np.array([trace.theta_cv[i], trace.theta5[i]], dtype=float)
        qd = np.array([cv_speed, rate5[i]])
        qdd = np.array([0.0, acc5[i]])
        near = _end_from_state(geom, q0[0], states[i])
        jac = _jacobian(geom, q0, near)
        quad = _second_directional(geom, q0, qd, near, states[i])
        if jac is None or quad is None:
            flagged.append(i)
            continue
        acc = jac @ qdd + quad
        tau[i] = (masses * acc - weight) @ jac
    return TorqueProfile(np.asarray(trace.theta_cv, dtype=float), tau[:, 0], tau[:, 1],
                         rate5, float(cv_speed), tuple(flagged))


def _end_from_state(geom: FiveBarGeometry, theta_cv: float, state: np.ndarray) -> Point2:
    knee = geom.knee(theta_cv)
    return Point2(2 * state[3] - knee.x, 2 * state[4] - knee.y)


def _state_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a - b
    for col in (2, 5, 8, 11):
        d[col] = math.remainder(d[col], 2.0 * math.pi)
    return d


def _jacobian(geom: FiveBarGeometry, q0: np.ndarray, near) -> np.ndarray | None:
    """(12, 2) partial derivatives of the link states."""
    cols = []
    for j in range(2):
        dq = np.zeros(2)
        dq[j] = FD_STEP
        plus = _assemble(geom, *(q0 + dq), near)
        minus = _assemble(geom, *(q0 - dq), near)
        if plus is None or minus is None:
            return None
        cols.append(_state_diff(plus, minus) / (2.0 * FD_STEP))
    return np.array(cols).T


def _second_directional(geom, q0, qd, near, state) -> np.ndarray | None:
    """Second derivative of the link states along the velocity ``qd``."""
    speed = float(np.linalg.norm(qd))
    if speed == 0.0:
        return np.zeros(12)
    h = SECOND_STEP / speed
    plus = _assemble(geom, *(q0 + h * qd), near)
    minus = _assemble(geom, *(q0 - h * qd), near)
    if plus is None or minus is None:
        return None
    return (_state_diff(plus, state) + _state_diff(minus, state)) / (h * h)


@dataclass(frozen=True)
class HybridReport:
    peak_ratio: float
    rms_ratio: float

    @property
    def hybrid(self) -> bool:
        return self.peak_ratio < 1.0 and self.rms_ratio < 1.0

    def to_dict(self) -> dict:
        return {"peak_ratio": self.peak_ratio, "rms_ratio": self.rms_ratio,
                "hybrid": self.hybrid}


def hybrid_quality(profile: TorqueProfile) -> HybridReport:
    """Servo-to-CV torque ratios; the device works as a hybrid when both are below one."""
    if len(profile.tau_cv) == 0:
        raise ValueError("empty torque profile")
    if profile.peak_cv == 0.0:
        raise UndefinedRatioError("CV torque is zero everywhere")
    return HybridReport(profile.peak_servo / profile.peak_cv, profile.rms_servo / profile.rms_cv)
