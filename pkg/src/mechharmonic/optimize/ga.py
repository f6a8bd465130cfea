"""Real-coded genetic algorithm for five-bar path-generator synthesis."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..fivebar import DEFAULT_TREND_FACTOR, PARAMETER_NAMES, FiveBarGeometry, PathSpec, analyse
from ..harmonics import DEFAULT_MAX_ORDER
from ..objectives import ObjectiveBreakdown, ObjectiveWeights, breakdown_from_report
from ..planar import DegenerateGeometryError

logger = logging.getLogger(__name__)

# Composite assigned to vectors that do not form a valid geometry.
INVALID_COMPOSITE = 1e12
# Added to an infeasible individual's composite when ranking.
INFEASIBLE_OFFSET = 1e9


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray
    names: tuple[str, ...] = PARAMETER_NAMES

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or len(lo) != len(self.names):
            raise ValueError("bounds must be 1-D and match the parameter names")
        if not np.all(lo < hi):
            bad = [n for n, a, b in zip(self.names, lo, hi) if not a < b]
            raise ValueError(f"empty bounds for {', '.join(bad)}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    @classmethod
    def from_dict(cls, d: dict) -> "Bounds":
        return cls(np.array([d[n][0] for n in PARAMETER_NAMES]),
                   np.array([d[n][1] for n in PARAMETER_NAMES]))

    def to_dict(self) -> dict:
        return {n: [float(a), float(b)] for n, a, b in zip(self.names, self.lower, self.upper)}


@dataclass(frozen=True)
class GAConfig:
    population: int = 50
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    mutation_scale: float = 0.05  # sigma as a fraction of each parameter range
    mutation_decay: float = 0.0  # fraction of sigma shed linearly by the generation cap
    tournament: int = 3
    elites: int = 2
    blend_alpha: float = 0.5
    seed: int = 0
    error_threshold: float | None = None
    link_ratio_cap: float = 5.0
    workers: int = 1

    def __post_init__(self):
        for name in ("crossover_rate", "mutation_rate", "mutation_decay"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.population < 2 or self.tournament < 2:
            raise ValueError("population and tournament size must be at least 2")
        if not 0 <= self.elites < self.population:
            raise ValueError("elite count must be below the population size")
        if self.generations < 1:
            raise ValueError("generations must be positive")
        if self.mutation_scale < 0 or self.blend_alpha < 0:
            raise ValueError("mutation scale and blend alpha must be non-negative")
        if not self.link_ratio_cap > 0:
            raise ValueError("link ratio cap must be positive")


@dataclass(frozen=True)
class SynthesisProblem:
    path: PathSpec
    bounds: Bounds
    weights: ObjectiveWeights = ObjectiveWeights()
    max_order: int = DEFAULT_MAX_ORDER
    err_mode: str = "sum-squared"
    trend_factor: float = DEFAULT_TREND_FACTOR

    def default_threshold(self) -> float:
        """Two percent of the path's bounding-box diagonal.

        Compared against the structural error summed over all positions.
        """
        return 0.02 * self.path.bbox_diagonal()

    def evaluate(self, x: np.ndarray) -> ObjectiveBreakdown:
        try:
            geom = FiveBarGeometry.from_vector(x)
        except DegenerateGeometryError:
            return ObjectiveBreakdown(0.0, 0.0, 0.0, 0.0, INVALID_COMPOSITE, False,
                                      float("inf"), 2 * len(self.path))
        report = analyse(geom, self.path, self.trend_factor)
        return breakdown_from_report(report, self.weights, self.max_order, self.err_mode)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best: ObjectiveBreakdown


@dataclass
class GAResult:
    best_vector: np.ndarray
    breakdown: ObjectiveBreakdown
    history: list[GenerationRecord]
    termination: str
    generations: int
    error_threshold: float

    @property
    def best_geometry(self) -> FiveBarGeometry:
        return FiveBarGeometry.from_vector(self.best_vector)


def meets_termination(x: np.ndarray, b: ObjectiveBreakdown, threshold: float,
                      ratio_cap: float) -> bool:
    """Structural error below threshold and no link longer than cap times the CV crank."""
    if b.structural_error >= threshold:
        return False
    try:
        geom = FiveBarGeometry.from_vector(x)
    except DegenerateGeometryError:
        return False
    return geom.max_link_ratio() <= ratio_cap


def _evaluate_all(problem: SynthesisProblem, pop: np.ndarray, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(problem.evaluate, pop))
    return [problem.evaluate(x) for x in pop]


def _rank_keys(evals: Sequence[ObjectiveBreakdown]) -> np.ndarray:
    """Scalar ranking keys: feasible traces first, then by composite.

    Infeasible traces score zero harmonic and swept terms, so a single
    closure failure (composite 8) can undercut a feasible design's swept
    area; the offset keeps every feasible individual ahead.
    """
    composite = np.array([e.composite for e in evals])
    feasible = np.array([e.feasible for e in evals])
    return np.where(feasible, composite, composite + INFEASIBLE_OFFSET)


def _tournament(rng: np.random.Generator, fitness: np.ndarray, k: int) -> int:
    contenders = rng.integers(0, len(fitness), size=k)
    return int(contenders[np.argmin(fitness[contenders])])


def ga_run(problem: SynthesisProblem, config: GAConfig = GAConfig(), *,
           initial_population: Sequence[Sequence[float]] | None = None,
           seeds: Sequence[Sequence[float]] = (),
           callback: Callable[[GenerationRecord], None] | None = None) -> GAResult:
    """Minimise the composite objective over the bounded parameter box.

    ``seeds`` are injected into an otherwise random first population;
    ``initial_population`` replaces it entirely. A single seeded generator
    drives all stochastic choices, so results depend only on the seed.
    """
    bounds = problem.bounds
    rng = np.random.default_rng(config.seed)
    n_par = len(bounds.lower)
    threshold = (config.error_threshold if config.error_threshold is not None
                 else problem.default_threshold())

    if initial_population is not None:
        pop = bounds.clip(np.array(initial_population, dtype=float))
        if pop.shape != (config.population, n_par):
            raise ValueError("initial population has the wrong shape")
    else:
        pop = bounds.lower + rng.random((config.population, n_par)) * bounds.span
        for i, s in enumerate(seeds):
            pop[i] = bounds.clip(np.asarray(s, dtype=float))

    sigma = config.mutation_scale * bounds.span
    history: list[GenerationRecord] = []
    termination = "generation-cap"
    gen = 0
    while True:
        evals = _evaluate_all(problem, pop, config.workers)
        fitness = _rank_keys(evals)
        order = np.argsort(fitness, kind="stable")
        best_i = int(order[0])
        record = GenerationRecord(gen, evals[best_i])
        history.append(record)
        if callback is not None:
            callback(record)
        logger.debug("generation %d best %.6g", gen, fitness[best_i])
        if meets_termination(pop[best_i], evals[best_i], threshold, config.link_ratio_cap):
            termination = "threshold"
            break
        if gen >= config.generations:
            break

        children = [pop[i].copy() for i in order[:config.elites]]
        while len(children) < config.population:
            a = pop[_tournament(rng, fitness, config.tournament)]
            b = pop[_tournament(rng, fitness, config.tournament)]
            if rng.random() < config.crossover_rate:
                # BLX-alpha: sample each gene from the widened parent interval
                lo, hi = np.minimum(a, b), np.maximum(a, b)
                ext = config.blend_alpha * (hi - lo)
                c1 = lo - ext + rng.random(n_par) * (hi - lo + 2 * ext)
                c2 = lo - ext + rng.random(n_par) * (hi - lo + 2 * ext)
            else:
                c1, c2 = a.copy(), b.copy()
            step = sigma * (1.0 - config.mutation_decay * gen / config.generations)
            for child in (c1, c2):
                mask = rng.random(n_par) < config.mutation_rate
                child += mask * rng.normal(0.0, 1.0, n_par) * step
                children.append(bounds.clip(child))
        pop = np.array(children[:config.population])
        gen += 1

    best_vec = pop[best_i].copy()
    return GAResult(best_vec, evals[best_i], history, termination, gen, threshold)
