"""Powell's conjugate-direction method and a quadratic penalty wrapper."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...

Objective = Callable[[np.ndarray], float]


class OptimizationError(RuntimeError):
    """The objective returned a non-finite value during the search."""

    def __init__(self, message: str, x: np.ndarray | None = None, value: float | None = None):
        super().__init__(message)
        self.x = x
        self.value = value


@dataclass(frozen=True)
class PowellConfig:
    line_tol: float = 1e-8
    ftol: float = 1e-12
    max_iter: int = 500
    initial_step: float = 1.0
    max_bracket_steps: int = 60
    reset_every: int | None = None  # rebuild the coordinate basis every n cycles
    penalty_weight: float = 10.0
    penalty_growth: float = 10.0
    penalty_rounds: int = 5
    residual_tol: float = 1e-4

    def __post_init__(self):
        for name in ("line_tol", "ftol", "initial_step", "penalty_weight", "residual_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.max_iter < 1 or self.penalty_rounds < 1:
            raise ValueError("iteration counts must be positive")
        if self.reset_every is not None and self.reset_every < 1:
            raise ValueError("reset_every must be positive")


@dataclass
class PowellResult:
    x: np.ndarray
    fun: float
    iterations: int
    improving_cycles: int
    evaluations: int
    converged: bool


class _Counted:
    def __init__(self, fn: Objective):
        self.fn = fn
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        self.calls += 1
        value = float(self.fn(x))
        if not math.isfinite(value):
            raise OptimizationError(
                f"objective returned {value} at x={np.array2string(x, precision=6)} "
                f"after {self.calls} evaluations", x.copy(), value)
        return value


def _line_minimize(f: _Counted, x: np.ndarray, d: np.ndarray, fx: float,
                   cfg: PowellConfig) -> tuple[np.ndarray, float]:
    """Minimise along ``x + alpha*d``: expand a bracket, then golden-section.

    Only a strictly lower value moves the point.
    """
    g = lambda alpha: f(x + alpha * d)  # noqa: E731
    a, fa = 0.0, fx
    b = cfg.initial_step
    fb = g(b)
    if fb > fa:
        b2 = -cfg.initial_step
        fb2 = g(b2)
        if fb2 >= fa:
            # bracket (-h, 0, h) already encloses a minimum
            lo, hi = b2, b
            return _golden(g, x, d, lo, hi, a, fa, cfg)
        b, fb = b2, fb2
    # walk downhill from a through b with growing steps
    c = b + (b - a) / GOLDEN
    fc = g(c)
    steps = 0
    while fc < fb and steps < cfg.max_bracket_steps:
        a, fa = b, fb
        b, fb = c, fc
        c = b + (b - a) / GOLDEN
        fc = g(c)
        steps += 1
    if fc < fb:
        # bracketing ran out: take the best point found
        return x + c * d, fc
    lo, hi = min(a, c), max(a, c)
    xb, fxb = _golden(g, x, d, lo, hi, b, fb, cfg)
    return xb, fxb


def _golden(g, x, d, lo, hi, best_alpha, best_f, cfg: PowellConfig):
    scale = float(np.linalg.norm(d)) or 1.0
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = g(x1), g(x2)
    while (hi - lo) * scale > cfg.line_tol * (1.0 + abs(best_alpha) * scale):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = g(x2)
        for alpha, val in ((x1, f1), (x2, f2)):
            if val < best_f:
                best_alpha, best_f = alpha, val
    return x + best_alpha * d, best_f


def powell_run(objective: Objective, start: Sequence[float],
               config: PowellConfig = PowellConfig(),
               directions: np.ndarray | None = None) -> PowellResult:
    """Derivative-free minimisation by Powell's conjugate directions.

    Each cycle runs one line minimisation per direction. The direction of
    largest decrease is then swapped for the cycle's net displacement when
    Powell's test says the new direction is worth keeping.

    Raises
    ------
    OptimizationError
        If the objective is non-finite at the start or during the search.
    """
    f = _Counted(objective)
    x = np.array(start, dtype=float)
    k = len(x)
    basis = np.eye(k) if directions is None else np.array(directions, dtype=float)
    dirs = basis.copy()
    fx = f(x)
    improving = 0
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        if config.reset_every and it > 1 and (it - 1) % config.reset_every == 0:
            dirs = basis.copy()
        x_start, f_start = x.copy(), fx
        biggest, i_big = 0.0, 0
        for i in range(k):
            f_prev = fx
            x, fx = _line_minimize(f, x, dirs[i], fx, config)
            if f_prev - fx > biggest:
                biggest, i_big = f_prev - fx, i
        if fx < f_start:
            improving += 1
        if 2.0 * (f_start - fx) <= config.ftol * (abs(f_start) + abs(fx)) + 1e-300:
            converged = True
            break
        x_ext = 2.0 * x - x_start
        f_ext = f(x_ext)
        if f_ext < f_start:
            t = (2.0 * (f_start - 2.0 * fx + f_ext) * (f_start - fx - biggest) ** 2
                 - biggest * (f_start - f_ext) ** 2)
            if t < 0.0:
                new_dir = x - x_start
                x, fx = _line_minimize(f, x, new_dir, fx, config)
                dirs[i_big] = dirs[-1]
                dirs[-1] = new_dir
    logger.debug("powell: f=%.6g after %d cycles, %d evaluations", fx, it, f.calls)
    return PowellResult(x, fx, it, improving, f.calls, converged)


def penalty_wrap(objective: Objective,
                 equalities: Sequence[Callable[[np.ndarray], float]] = (),
                 inequalities: Sequence[Callable[[np.ndarray], float]] = (),
                 weight: float = 1.0) -> Objective:
    """``f + weight * (sum h^2 + sum max(0, g)^2)`` with ``g <= 0`` feasible."""
    def wrapped(x: np.ndarray) -> float:
        return objective(x) + weight * constraint_violation(x, equalities, inequalities)
    return wrapped


def constraint_violation(x, equalities=(), inequalities=()) -> float:
    total = sum(h(x) ** 2 for h in equalities)
    total += sum(max(0.0, g(x)) ** 2 for g in inequalities)
    return float(total)


def constraint_residuals(x, equalities=(), inequalities=()) -> np.ndarray:
    return np.array([h(x) for h in equalities] + [max(0.0, g(x)) for g in inequalities])


@dataclass
class PenaltyResult:
    x: np.ndarray
    fun: float
    residuals: np.ndarray
    residual_history: list[float] = field(default_factory=list)
    weights: list[float] = field(default_factory=list)
    converged: bool = False
    evaluations: int = 0


def penalty_minimize(objective: Objective, start: Sequence[float],
                     equalities: Sequence[Callable[[np.ndarray], float]] = (),
                     inequalities: Sequence[Callable[[np.ndarray], float]] = (),
                     config: PowellConfig = PowellConfig()) -> PenaltyResult:
    """Sequential unconstrained minimisation with a growing quadratic penalty.

    Each round minimises the penalised function with Powell's method,
    warm-started from the previous round's minimiser. The result is marked
    non-converged if the final residual norm exceeds ``residual_tol``; the
    last iterate is still returned.
    """
    x = np.array(start, dtype=float)
    weight = config.penalty_weight
    history, weights = [], []
    evaluations = 0
    for _ in range(config.penalty_rounds):
        res = powell_run(penalty_wrap(objective, equalities, inequalities, weight), x, config)
        x = res.x
        evaluations += res.evaluations
        history.append(float(np.linalg.norm(constraint_residuals(x, equalities, inequalities))))
        weights.append(weight)
        weight *= config.penalty_growth
    residuals = constraint_residuals(x, equalities, inequalities)
    converged = bool(np.linalg.norm(residuals) <= config.residual_tol) if len(residuals) else True
    return PenaltyResult(x, float(objective(x)), residuals, history, weights, converged, evaluations)
