import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mechharmonic.dynamics import (InertiaModel, TorqueProfile, UndefinedRatioError,
                                   hybrid_quality, inverse_dynamics, link_states)
from mechharmonic.fivebar import ClosureTrace, FiveBarGeometry, InfeasibleTraceError, analyse
from mechharmonic.planar import Point2, circle_intersect

from conftest import REFERENCE_GEOMETRY

GEOM = FiveBarGeometry(Point2(0, 1), Point2(27, -2), 16, 24, 30, 16)


def servo_angle(t):
    return math.radians(90 + 10 * math.sin(t))


def end_point(t):
    b = Point2(27 + 16 * math.cos(servo_angle(t)), -2 + 16 * math.sin(servo_angle(t)))
    return circle_intersect(GEOM.knee(t), 24, b, 30)[1], b


def rod_states(t):
    """Centroids and angles written out from the joint positions."""
    knee = GEOM.knee(t)
    e, b = end_point(t)
    joints = [(Point2(0, 1), knee), (knee, e), (e, b), (Point2(27, -2), b)]
    return [((u.x + v.x) / 2, (u.y + v.y) / 2, math.atan2(v.y - u.y, v.x - u.x))
            for u, v in joints]


def energy(t, omega, gravity, h=1e-5):
    """Kinetic plus potential energy at CV angle t for CV speed omega."""
    total = 0.0
    lengths = (16, 24, 30, 16)
    a, b = rod_states(t - h), rod_states(t + h)
    for (x0, y0, p0), (x1, y1, p1), (_, y, _), L in zip(a, b, rod_states(t), lengths):
        dphi = math.remainder(p1 - p0, 2 * math.pi)
        vx, vy, w = ((x1 - x0) * omega / (2 * h), (y1 - y0) * omega / (2 * h),
                     dphi * omega / (2 * h))
        m = L
        total += 0.5 * m * (vx * vx + vy * vy) + 0.5 * (m * L * L / 12) * w * w - m * gravity * y
    return total


def analytic_trace(n):
    tc = np.linspace(0, 2 * np.pi, n, endpoint=False)
    t5 = np.array([servo_angle(t) for t in tc])
    return ClosureTrace(tc, t5, ("OPEN",) * n, True, 0), [end_point(t)[0] for t in tc]


def test_power_matches_energy_rate():
    n, omega, g = 720, 2.0, -9.81
    trace, ends = analytic_trace(n)
    prof = inverse_dynamics(GEOM, trace, omega, InertiaModel(gravity=(0.0, g)), ends)
    dt = 1e-4
    oracle = np.array([(energy(t + dt, omega, g) - energy(t - dt, omega, g)) / (2 * dt / omega)
                       for t in trace.theta_cv])
    scale = np.max(np.abs(oracle))
    assert np.max(np.abs(prof.power - oracle)) < 1e-3 * scale
    assert prof.energy_residual() < 1e-3


def test_static_load_without_gravity_is_zero():
    trace, ends = analytic_trace(24)
    prof = inverse_dynamics(GEOM, trace, 0.0, InertiaModel(), ends)
    assert np.allclose(prof.tau_cv, 0) and np.allclose(prof.tau_servo, 0)
    assert prof.energy_residual() == 0.0


def test_static_gravity_hanging_crank():
    # only the crank has mass; gravity torque is m g L/2 cos(theta)
    trace, ends = analytic_trace(24)
    model = InertiaModel(gravity=(0.0, -9.81), link_density={"q": 0, "r": 0, "s": 0})
    prof = inverse_dynamics(GEOM, trace, 0.0, model, ends)
    expected = 16 * 9.81 * 8 * np.cos(trace.theta_cv)
    assert np.allclose(prof.tau_cv, expected, atol=1e-5)
    assert np.allclose(prof.tau_servo, 0, atol=1e-5)


def test_spinning_crank_alone_needs_no_torque():
    trace, ends = analytic_trace(24)
    model = InertiaModel(link_density={"q": 0, "r": 0, "s": 0})
    prof = inverse_dynamics(GEOM, trace, 3.0, model, ends)
    assert np.max(np.abs(prof.tau_cv)) < 1e-3
    assert np.max(np.abs(prof.tau_servo)) < 1e-4


def test_scaling_laws():
    trace, ends = analytic_trace(48)
    base = inverse_dynamics(GEOM, trace, 1.0, InertiaModel(), ends)
    heavy = inverse_dynamics(GEOM, trace, 1.0, InertiaModel(density=2.5), ends)
    fast = inverse_dynamics(GEOM, trace, 3.0, InertiaModel(), ends)
    assert np.allclose(heavy.tau_cv, 2.5 * base.tau_cv, rtol=1e-6, atol=1e-9)
    assert np.allclose(fast.tau_servo, 9 * base.tau_servo, rtol=1e-4, atol=1e-6)


def test_reference_design_is_hybrid(reference_path):
    rep = analyse(REFERENCE_GEOMETRY, reference_path)
    ends = [s.actual_end for s in rep.solutions]
    prof = inverse_dynamics(REFERENCE_GEOMETRY, rep.trace, 1.0, InertiaModel(), ends)
    assert not prof.flagged
    assert hybrid_quality(prof).hybrid
    assert prof.energy_residual() < 0.01


def test_link_states_close_the_chain():
    trace, ends = analytic_trace(24)
    states = link_states(GEOM, trace, ends)
    assert states.shape == (24, 12)
    for row, t in zip(states, trace.theta_cv):
        assert np.allclose(row.reshape(4, 3)[:, :2], np.array(rod_states(t))[:, :2], atol=1e-9)


def test_hybrid_quality_examples():
    def prof(cv, servo):
        n = len(cv)
        return TorqueProfile(np.zeros(n), np.array(cv, float), np.array(servo, float),
                             np.zeros(n), 1.0)
    h = hybrid_quality(prof([2, -4, 1], [1, 1, -1]))
    assert h.peak_ratio == pytest.approx(0.25)
    assert h.rms_ratio == pytest.approx(1 / math.sqrt(7))
    assert h.hybrid
    assert not hybrid_quality(prof([1, 1], [1, 0])).hybrid
    with pytest.raises(UndefinedRatioError):
        hybrid_quality(prof([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        hybrid_quality(prof([], []))


def test_flagged_positions_are_skipped_in_ratios():
    p = TorqueProfile(np.zeros(3), np.array([1.0, np.nan, 2.0]), np.array([0.5, np.nan, 0.5]),
                      np.zeros(3), 1.0, (1,))
    assert hybrid_quality(p).peak_ratio == pytest.approx(0.25)


def test_rejections():
    infeasible = ClosureTrace(np.zeros(3), np.array([]), (), False, 3)
    with pytest.raises(InfeasibleTraceError):
        inverse_dynamics(GEOM, infeasible, 1.0)
    trace, ends = analytic_trace(12)
    with pytest.raises(ValueError):
        inverse_dynamics(GEOM, trace, -1.0, InertiaModel(), ends)
    for bad in ({"density": 0}, {"link_density": {"x": 1}}, {"link_density": {"p": -1}}):
        with pytest.raises(ValueError):
            InertiaModel(**bad)


@settings(max_examples=20)
@given(st.floats(0.2, 5.0), st.floats(0.1, 10.0))
def test_torque_quadratic_in_speed_linear_in_density(speed, rho):
    trace, ends = analytic_trace(24)
    one = inverse_dynamics(GEOM, trace, 1.0, InertiaModel(), ends)
    other = inverse_dynamics(GEOM, trace, speed, InertiaModel(density=rho), ends)
    assert np.allclose(other.tau_cv, rho * speed ** 2 * one.tau_cv, rtol=1e-4, atol=1e-6)
