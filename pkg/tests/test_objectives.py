import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mechharmonic.fivebar import (ClosureTrace, FiveBarGeometry, InfeasibleTraceError, PathSpec,
                                  analyse)
from mechharmonic.harmonics import HarmonicSpectrum
from mechharmonic.objectives import (ObjectiveBreakdown, ObjectiveWeights, composite, obj_err,
                                     obj_harm, obj_mob, obj_swept, singledof_harmonic_penalty)
from mechharmonic.planar import Branch, Point2, circle_intersect

NEEDLE_MAGNITUDES = (12.2546, 0.3852, 0.03181, 0.002136, 0.00005629)
mags = st.lists(st.floats(0, 3), min_size=1, max_size=8)


def test_obj_err_examples():
    assert obj_err([0, 0, 0]) == 0
    assert obj_err([1, 1, 1, 1]) == 16
    assert obj_err([0.5, 0, 0, 0]) == 0.25
    assert obj_err([1, 1, 1, 1], "sum-of-squares") == 4
    with pytest.raises(ValueError):
        obj_err([1], "max")


def test_obj_mob_examples():
    assert obj_mob(0) == 0
    assert obj_mob(2) == 8
    assert obj_mob(48) == 110592


def test_obj_harm_examples():
    assert obj_harm([2, 0.5, 0.1]) == pytest.approx(4.1251, abs=1e-12)
    assert obj_harm(HarmonicSpectrum.zeros()) == 0
    assert obj_harm([1.0]) == 1.0


def test_obj_swept_examples():
    assert obj_swept(np.full(24, 0.5), 16) == pytest.approx(8.0)
    assert obj_swept(np.zeros(24), 16) == 0
    assert obj_swept([1, -1] * 12, 2) == pytest.approx(2.0)
    bad = ClosureTrace(np.zeros(4), np.empty(0), (), False, 2)
    with pytest.raises(InfeasibleTraceError):
        obj_swept(bad, 1.0)


def test_singledof_penalty_needle_table():
    # independent arithmetic on the published magnitudes
    want = sum(h * h for h in NEEDLE_MAGNITUDES[1:])
    assert singledof_harmonic_penalty(NEEDLE_MAGNITUDES) == pytest.approx(want, rel=1e-12)
    assert singledof_harmonic_penalty(NEEDLE_MAGNITUDES) == pytest.approx(0.14941, abs=1e-4)
    assert singledof_harmonic_penalty([1, 0, 0, 0, 0]) == 0
    assert singledof_harmonic_penalty([0, 1, 0, 0, 0]) == 1
    with pytest.raises(ValueError):
        singledof_harmonic_penalty([1, 0, 0, 0])


def test_weights_validation():
    with pytest.raises(ValueError):
        ObjectiveWeights(0, 0, 0, 0)
    with pytest.raises(ValueError):
        ObjectiveWeights(-1, 1, 1, 1)


def test_infeasible_geometry_dominated_by_mobility(reference_path):
    g = FiveBarGeometry(Point2(0, 1), Point2(27, -2), 16, 24, 0.5, 0.5)
    b = composite(g, reference_path)
    assert not b.feasible and b.mobility == 48
    assert b.harm == 0 and b.swept == 0
    assert b.composite == pytest.approx(110592 + b.err)


def zero_motion_case():
    """Exact tracking with the servo crank parked on the x-axis."""
    g = FiveBarGeometry(Point2(0, 0), Point2(10, 0), 1, 3, 10.5, 2)
    elbow = Point2(12, 0)
    pts = []
    for i in range(24):
        knee = g.knee(2 * math.pi * i / 24)
        pts.append(min(circle_intersect(knee, 3, elbow, 10.5), key=lambda p: p.y))
    return g, PathSpec(pts)


def test_zero_motion_composite_is_zero():
    g, path = zero_motion_case()
    rep = analyse(g, path)
    assert rep.trace.feasible and rep.trace.mobility == 0
    assert set(rep.trace.branches) == {Branch.OPEN}
    b = composite(g, path)
    assert b.composite == pytest.approx(0, abs=1e-12)


def test_unit_weights_project_components(reference_path, reference_geometry):
    full = composite(reference_geometry, reference_path)
    names = ("err", "mob", "harm", "swept")
    for i, name in enumerate(names):
        w = ObjectiveWeights(*[1.0 if j == i else 0.0 for j in range(4)])
        assert composite(reference_geometry, reference_path, w).composite == getattr(full, name)
    assert full.composite == pytest.approx(full.err + full.mob + full.harm + full.swept)


def test_breakdown_to_dict():
    b = ObjectiveBreakdown(1, 2, 3, 4, 10)
    assert b.to_dict()["composite"] == 10


@given(st.lists(st.floats(0, 10), min_size=1, max_size=24), st.integers(0, 23), st.floats(1e-3, 5))
def test_obj_err_monotone(errors, i, bump):
    i %= len(errors)
    bigger = list(errors)
    bigger[i] += bump
    assert obj_err(bigger) > obj_err(errors)
    assert obj_err(bigger, "sum-of-squares") > obj_err(errors, "sum-of-squares")


@given(st.integers(0, 47))
def test_obj_mob_monotone(m):
    assert obj_mob(m + 1) > obj_mob(m)


@given(mags)
def test_obj_harm_doubling_termwise(m):
    m = np.array(m)
    orders = np.arange(1, len(m) + 1)
    terms = m ** (orders + 1)
    doubled = (2 * m) ** (orders + 1)
    assert np.allclose(doubled, terms * 2.0 ** (orders + 1))
    assert obj_harm(2 * m) == pytest.approx(float(np.sum(doubled)))


@given(mags, st.integers(0, 7), st.floats(0, 1))
def test_smaller_harmonics_never_raise_composite(m, i, shrink):
    i %= len(m)
    smaller = list(m)
    smaller[i] *= shrink
    assert obj_harm(smaller) <= obj_harm(m)


@given(st.lists(st.floats(-7, 7), min_size=1, max_size=30), st.floats(0.1, 50))
def test_swept_sign_and_scale(theta, s):
    assert obj_swept(theta, s) == pytest.approx(obj_swept([-t for t in theta], s))
    assert obj_swept(theta, 2 * s) == pytest.approx(2 * obj_swept(theta, s))
