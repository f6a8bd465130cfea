"""Regenerate src/mechharmonic/data/reference_path.csv.

The path is traced by a known five-bar (cv=(0,1), servo=(27,-2),
p=16, q=24, r=30, s=16) whose servo rocks ten degrees either side of
vertical once per CV turn. The result is a flat loop with two cusps.
"""
import math
from pathlib import Path

from mechharmonic.fivebar import FiveBarGeometry
from mechharmonic.planar import Point2, circle_intersect

OUT = Path(__file__).resolve().parents[1] / "src" / "mechharmonic" / "data" / "reference_path.csv"


def main():
    geom = FiveBarGeometry(Point2(0, 1), Point2(27, -2), 16, 24, 30, 16)
    rows = ["x,y"]
    for i in range(24):
        cv = 2 * math.pi * i / 24
        servo = math.radians(90 + 10 * math.sin(cv))
        rocker = Point2(27 + 16 * math.cos(servo), -2 + 16 * math.sin(servo))
        end = circle_intersect(geom.knee(cv), 24, rocker, 30)[1]
        rows.append(f"{round(end.x, 10)!r},{round(end.y, 10)!r}")
    OUT.write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
