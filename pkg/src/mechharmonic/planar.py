"""Planar geometry primitives: circle intersection, RR dyad closure and
transmission angle."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

# Relative tolerance for tangency (stretch/fold) detection.
TANGENT_RTOL = 1e-9


class DegenerateGeometryError(ValueError):
    """Input geometry has no well-defined answer (coincident points, zero links)."""


class Point2(NamedTuple):
    x: float
    y: float

    def __sub__(self, other):  # type: ignore[override]
        return Point2(self.x - other[0], self.y - other[1])

    def __add__(self, other):  # type: ignore[override]
        return Point2(self.x + other[0], self.y + other[1])

    def scale(self, k: float) -> "Point2":
        return Point2(self.x * k, self.y * k)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)


def polar(origin, length: float, angle: float) -> Point2:
    return Point2(origin[0] + length * math.cos(angle), origin[1] + length * math.sin(angle))


def distance(p1, p2) -> float:
    return math.hypot(p2[0] - p1[0], p2[1] - p1[1])


def cross(o, a, b) -> float:
    """z-component of (a - o) x (b - o)."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


class Branch(enum.Enum):
    """Assembly closure of a dyad.

    OPEN puts the elbow counter-clockwise of the base->target segment.
    """

    OPEN = "open"
    CROSSED = "crossed"

    def other(self) -> "Branch":
        return Branch.CROSSED if self is Branch.OPEN else Branch.OPEN


def circle_intersect(c1, r1: float, c2, r2: float) -> list[Point2]:
    """Intersection points of two circles, OPEN-side point first.

    Returns an empty list when the circles miss each other and a single
    point when they are tangent within ``TANGENT_RTOL * max(r1, r2)``.
    """
    if r1 <= 0 or r2 <= 0:
        raise DegenerateGeometryError("radii must be positive")
    scale = max(r1, r2)
    eps = TANGENT_RTOL * scale
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    d = math.hypot(dx, dy)
    if d <= eps:
        raise DegenerateGeometryError("concentric circles")
    if d > r1 + r2 + eps or d < abs(r1 - r2) - eps:
        return []
    ux, uy = dx / d, dy / d
    along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    if abs(d - (r1 + r2)) <= eps or abs(d - abs(r1 - r2)) <= eps:
        along = max(-r1, min(r1, along))
        return [Point2(c1[0] + along * ux, c1[1] + along * uy)]
    h = math.sqrt(max(r1 * r1 - along * along, 0.0))
    bx, by = c1[0] + along * ux, c1[1] + along * uy
    return [Point2(bx - h * uy, by + h * ux), Point2(bx + h * uy, by - h * ux)]


@dataclass(frozen=True)
class DyadPose:
    elbow: Point2
    angle1: float  # base -> elbow, radians from the x-axis
    angle2: float  # elbow -> target
    branch: Branch


def dyad_pose(base, l1: float, target, l2: float, branch: Branch) -> DyadPose | None:
    """Close an RR dyad from ``base`` onto ``target``.

    Returns None when the target is out of reach; that is a closure
    failure, not an error. At a stretch/fold singularity the single
    solution is returned for either branch, labelled OPEN.
    """
    if l1 <= 0 or l2 <= 0:
        raise DegenerateGeometryError("link lengths must be positive")
    try:
        points = circle_intersect(base, l1, target, l2)
    except DegenerateGeometryError:
        if abs(l1 - l2) <= TANGENT_RTOL * max(l1, l2):
            raise
        return None
    if not points:
        return None
    if len(points) == 1:
        elbow, label = points[0], Branch.OPEN
    else:
        elbow = points[0] if branch is Branch.OPEN else points[1]
        label = branch
    return DyadPose(
        elbow=elbow,
        angle1=math.atan2(elbow[1] - base[1], elbow[0] - base[0]),
        angle2=math.atan2(target[1] - elbow[1], target[0] - elbow[0]),
        branch=label,
    )


def transmission_angle(elbow, a, b) -> float:
    """Angle in degrees between elbow->a and elbow->b folded into [0, 90]."""
    ux, uy = a[0] - elbow[0], a[1] - elbow[1]
    vx, vy = b[0] - elbow[0], b[1] - elbow[1]
    nu, nv = math.hypot(ux, uy), math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("zero-length segment")
    c = max(-1.0, min(1.0, (ux * vx + uy * vy) / (nu * nv)))
    mu = math.degrees(math.acos(c))
    return min(mu, 180.0 - mu)


def wrap_angle(angle: float) -> float:
    """Map an angle difference into (-pi, pi]."""
    w = math.fmod(angle + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi
