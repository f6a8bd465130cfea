"""Fourier analysis of uniformly sampled cyclic motion profiles.

Samples ``f_k`` are taken at ``x_k = 2*pi*k/n`` over exactly one cycle.
Coefficients follow the real series convention

    f(x) = a0/2 + sum_n (a_n cos(n x) + b_n sin(n x))

and are computed with the rectangle rule, which is exact for band-limited
signals sampled uniformly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_MAX_ORDER = 5


class AliasingError(ValueError):
    """Requested harmonic order cannot be resolved from the sample count."""


@dataclass(frozen=True)
class HarmonicSpectrum:
    """Fourier coefficients of one motion cycle.

    ``a[n-1]`` and ``b[n-1]`` hold the cosine and sine coefficients of
    order ``n``.
    """

    a0: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).copy()
        b = np.asarray(self.b, dtype=float).copy()
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("cosine and sine coefficient arrays must match")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a0", float(self.a0))

    @property
    def max_order(self) -> int:
        return len(self.a)

    @classmethod
    def from_polar(cls, a0: float, magnitudes: Sequence[float],
                   phases_deg: Sequence[float]) -> "HarmonicSpectrum":
        """Build a spectrum from per-order magnitude and phase (degrees)."""
        mags = np.asarray(magnitudes, dtype=float)
        ph = np.radians(np.asarray(phases_deg, dtype=float))
        return cls(a0, mags * np.cos(ph), mags * np.sin(ph))

    @classmethod
    def zeros(cls, max_order: int = DEFAULT_MAX_ORDER) -> "HarmonicSpectrum":
        return cls(0.0, np.zeros(max_order), np.zeros(max_order))

    def magnitudes(self) -> np.ndarray:
        return np.hypot(self.a, self.b)

    def phases(self) -> np.ndarray:
        return np.array([phase(self, n) for n in range(1, self.max_order + 1)])

    def table(self) -> list[tuple[int, float, float]]:
        """Rows of (order, magnitude, phase in degrees)."""
        mags = self.magnitudes()
        return [(n, float(mags[n - 1]), phase(self, n))
                for n in range(1, self.max_order + 1)]


def max_resolvable_order(n_samples: int) -> int:
    return n_samples // 2 - 1


def compute_spectrum(samples: Sequence[float],
                     max_order: int = DEFAULT_MAX_ORDER) -> HarmonicSpectrum:
    """Fourier coefficients of one uniformly sampled cycle.

    Raises
    ------
    AliasingError
        If ``max_order`` exceeds ``n//2 - 1`` for ``n`` samples.
    ValueError
        For fewer than four samples or non-finite values.
    """
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1 or f.size < 4:
        raise ValueError("need a 1-D signal with at least 4 samples")
    if not np.all(np.isfinite(f)):
        raise ValueError("signal contains non-finite samples")
    if max_order < 1:
        raise ValueError("max_order must be a positive integer")
    n = f.size
    if max_order > max_resolvable_order(n):
        raise AliasingError(
            f"order {max_order} needs at least {2 * max_order + 2} samples, got {n}")

    x = 2.0 * np.pi * np.arange(n) / n
    orders = np.arange(1, max_order + 1)[:, None]
    a = (2.0 / n) * (np.cos(orders * x) @ f)
    b = (2.0 / n) * (np.sin(orders * x) @ f)
    a0 = (2.0 / n) * f.sum()
    return HarmonicSpectrum(a0, a, b)


def _check_order(spectrum: HarmonicSpectrum, order: int) -> None:
    if not 1 <= order <= spectrum.max_order:
        raise IndexError(f"order {order} outside 1..{spectrum.max_order}")


def magnitude(spectrum: HarmonicSpectrum, order: int) -> float:
    _check_order(spectrum, order)
    return math.hypot(spectrum.a[order - 1], spectrum.b[order - 1])


def phase(spectrum: HarmonicSpectrum, order: int) -> float:
    """Phase angle of one harmonic in degrees, in ``[0, 360)``.

    A zero-magnitude harmonic reports 0.
    """
    _check_order(spectrum, order)
    an, bn = spectrum.a[order - 1], spectrum.b[order - 1]
    if an == 0.0 and bn == 0.0:
        return 0.0
    deg = math.degrees(math.atan2(bn, an)) % 360.0
    # -tiny % 360 rounds up to 360.0
    return 0.0 if deg >= 360.0 else deg


def reconstruct(spectrum: HarmonicSpectrum, x):
    """Evaluate the truncated series at angle(s) ``x``."""
    xs = np.asarray(x, dtype=float)
    orders = np.arange(1, spectrum.max_order + 1)
    nx = np.multiply.outer(xs, orders)
    value = 0.5 * spectrum.a0 + np.cos(nx) @ spectrum.a + np.sin(nx) @ spectrum.b
    return float(value) if np.ndim(value) == 0 else value
