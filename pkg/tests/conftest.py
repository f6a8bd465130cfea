import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mechharmonic.cli import read_points, reference_path_file
from mechharmonic.fivebar import FiveBarGeometry, PathSpec
from mechharmonic.planar import Point2

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Five-bar dimensions listed with the published synthesis result.
REFERENCE_GEOMETRY = FiveBarGeometry(Point2(0.0, 1.0), Point2(27.0, -2.0), 16.0, 24.0, 30.0, 16.0)


@pytest.fixture(scope="session")
def reference_path() -> PathSpec:
    return PathSpec(read_points(reference_path_file()))


@pytest.fixture
def reference_geometry() -> FiveBarGeometry:
    return REFERENCE_GEOMETRY


def trig_poly(a0, a, b, n):
    """Samples of a0/2 + sum a_k cos kx + b_k sin kx at n uniform points."""
    x = 2.0 * math.pi * np.arange(n) / n
    f = np.full(n, 0.5 * a0)
    for k, (ak, bk) in enumerate(zip(a, b), start=1):
        f += ak * np.cos(k * x) + bk * np.sin(k * x)
    return f


CRITERIA: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
