"""Multi-Niche Crowding genetic optimizer.

Selection and replacement are both crowding based: a mate is the most similar
of ``cs`` random candidates, and an offspring replaces the least fit among the
most similar members of ``cf`` random groups of ``group_size`` individuals.
The optimizer is generic over the fitness evaluator, so the same loop drives
chess tournaments and one-dimensional benchmark functions.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_random_state

from .genome import GENE_MAX, GENE_MIN, N_GENES


class TerminationReason(enum.Enum):
    MAX_GENERATIONS = "MaxGenerations"
    STALE_BEST = "StaleBest"
    LOW_CHANGE_RATE = "LowChangeRate"

    def __str__(self):
        return self.value


class EvaluationError(RuntimeError):
    pass


_uid = itertools.count()


@dataclass
class Individual:
    genes: np.ndarray
    fitness: Optional[float] = None
    birth_generation: int = 0
    uid: int = field(default_factory=lambda: next(_uid))

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=np.float64)

    def copy(self) -> "Individual":
        return Individual(self.genes.copy(), self.fitness, self.birth_generation)


class Evaluator(Protocol):
    """Fitness oracle.

    Called once per generation with the individuals that need scores (every
    individual when ``rescore_all`` is true) and returns one finite fitness
    per individual; higher is better.
    """

    rescore_all: bool

    def __call__(self, individuals: Sequence[Individual], generation: int, seed: int) -> Sequence[float]:
        ...


def phenotypic_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def crowding_select_mate(population: Sequence[Individual], a: int, cs: int, rng) -> int:
    """Index of the individual most similar to ``population[a]`` among ``cs`` draws.

    Draws are uniform with replacement; drawing ``a`` itself is redrawn.
    Ties go to the earliest draw.
    """
    n = len(population)
    if n < 2:
        raise ValueError("crowding selection needs at least two individuals")
    rng = check_random_state(rng)
    draws = []
    for _ in range(cs):
        j = a
        while j == a:
            j = int(rng.randint(n))
        draws.append(j)
    genes = np.array([population[j].genes for j in draws])
    dist = np.sqrt(np.sum((genes - population[a].genes) ** 2, axis=1))
    return draws[int(np.argmin(dist))]


def crossover(p1: Individual, p2: Individual, rate: float, rng, generation: int = 0):
    """Uniform crossover with probability ``rate``; otherwise the children are clones."""
    if p1.genes.shape != p2.genes.shape:
        raise ValueError("parents differ in gene length")
    rng = check_random_state(rng)
    c1, c2 = p1.genes.copy(), p2.genes.copy()
    if rng.random_sample() < rate:
        swap = rng.random_sample(c1.shape[0]) < 0.5
        c1[swap], c2[swap] = p2.genes[swap], p1.genes[swap]
    return Individual(c1, None, generation), Individual(c2, None, generation)


def mutate(ind: Individual, rate: float, sigma: float, rng, bounds=(GENE_MIN, GENE_MAX)) -> Individual:
    """Gaussian perturbation of each gene with probability ``rate``, clamped to ``bounds``."""
    rng = check_random_state(rng)
    n = ind.genes.shape[0]
    hit = rng.random_sample(n) < rate
    noise = rng.normal(0.0, 1.0, n) * sigma
    genes = ind.genes.copy()
    genes[hit] += noise[hit]
    np.clip(genes, bounds[0], bounds[1], out=genes)
    changed = not np.array_equal(genes, ind.genes)
    return Individual(genes, None if changed else ind.fitness, ind.birth_generation)


def _rank_fitness(ind: Individual) -> float:
    # unscored newborns of the current sweep are the first to be displaced
    return -math.inf if ind.fitness is None else ind.fitness


def replace_worst_among_most_similar(
    population: list[Individual], offspring: Individual, cf: int, group_size: int, rng
) -> int:
    """Replace, in place, the least fit of the per-group most similar individuals.

    Each of ``cf`` groups holds ``group_size`` individuals drawn uniformly with
    replacement; a group at least as large as the population is the whole
    population. The offspring may be less fit than its victim.
    """
    n = len(population)
    if not 1 <= group_size:
        raise ValueError("group_size must be >= 1")
    rng = check_random_state(rng)
    if group_size >= n:
        groups = np.tile(np.arange(n), (cf, 1))
    else:
        groups = rng.randint(n, size=(cf, group_size))
    genes = np.array([p.genes for p in population])
    dist = np.sqrt(np.sum((genes[groups] - offspring.genes) ** 2, axis=2))
    candidates = [int(groups[k, i]) for k, i in enumerate(np.argmin(dist, axis=1))]
    victim = min(candidates, key=lambda j: _rank_fitness(population[j]))
    population[victim] = offspring
    return victim


def _champion(population: Sequence[Individual]) -> Optional[int]:
    best, best_f = None, -math.inf
    for i, ind in enumerate(population):
        if ind.fitness is not None and ind.fitness > best_f:
            best, best_f = i, ind.fitness
    return best


class MultiNicheCrowding(BaseEstimator):
    """Multi-Niche Crowding optimizer with an estimator-style interface.

    ``fit(evaluator)`` runs the generation loop and sets ``population_``,
    ``best_``, ``termination_reason_``, ``n_generations_`` and ``history_``.

    Parameters
    ----------
    population_size : int
        Number of individuals, constant over the run.
    cs : int
        Crowding-selection group size: mate candidates drawn per selection.
    cf : int
        Number of crowding factor groups formed per replacement.
    group_size : int
        Individuals drawn into each crowding factor group.
    crossover_rate, mutation_rate, mutation_sigma : float
        Uniform crossover probability, per-gene mutation probability and
        Gaussian mutation standard deviation.
    max_generations, stale_best_generations, low_change_generations : int
        Termination limits: generation cap, generations without a new best,
        and consecutive generations with relative best change below
        ``low_change_threshold``.
    n_genes : int
        Gene vector length.
    bounds : (float, float)
        Gene domain, enforced after every operator.
    random_state : int, RandomState or None
        Seed for the single generator that owns all randomness of a run.
    """

    def __init__(
        self,
        population_size: int = 20,
        cs: int = 3,
        cf: int = 3,
        group_size: int = 3,
        crossover_rate: float = 0.9,
        mutation_rate: float = 0.05,
        mutation_sigma: float = 10.0,
        max_generations: int = 1000,
        stale_best_generations: int = 10,
        low_change_generations: int = 20,
        low_change_threshold: float = 0.01,
        n_genes: int = N_GENES,
        bounds: tuple[float, float] = (GENE_MIN, GENE_MAX),
        random_state=None,
    ):
        self.population_size = population_size
        self.cs = cs
        self.cf = cf
        self.group_size = group_size
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.mutation_sigma = mutation_sigma
        self.max_generations = max_generations
        self.stale_best_generations = stale_best_generations
        self.low_change_generations = low_change_generations
        self.low_change_threshold = low_change_threshold
        self.n_genes = n_genes
        self.bounds = bounds
        self.random_state = random_state

    def _validate_params(self):
        n = self.population_size
        if not isinstance(n, (int, np.integer)) or n < 4:
            raise ValueError(f"population_size must be an integer >= 4, got {n!r}")
        for name in ("cs", "cf", "group_size"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 1 <= v <= n:
                raise ValueError(f"{name} must be an integer in [1, population_size], got {v!r}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v!r}")
        if self.mutation_sigma < 0:
            raise ValueError(f"mutation_sigma must be >= 0, got {self.mutation_sigma!r}")
        for name in ("max_generations", "stale_best_generations", "low_change_generations"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.low_change_threshold < 0:
            raise ValueError("low_change_threshold must be >= 0")
        if self.n_genes < 1:
            raise ValueError("n_genes must be >= 1")
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError(f"bounds must satisfy low < high, got {self.bounds!r}")

    def _check_bounds(self, population, generation):
        lo, hi = self.bounds
        for ind in population:
            if ind.genes.shape != (self.n_genes,) or ind.genes.min() < lo or ind.genes.max() > hi:
                raise RuntimeError(f"generation {generation}: individual {ind.uid} violates gene bounds")

    def _evaluate(self, evaluator, population, generation, rng):
        seed = int(rng.randint(2**31 - 1))
        if getattr(evaluator, "rescore_all", False):
            pending = list(range(len(population)))
        else:
            pending = [i for i, ind in enumerate(population) if ind.fitness is None]
        if not pending:
            return
        try:
            scores = list(evaluator([population[i] for i in pending], generation, seed))
        except Exception as exc:
            ids = ", ".join(str(population[i].uid) for i in pending)
            raise EvaluationError(
                f"evaluator failed at generation {generation} (individuals {ids}): {exc}"
            ) from exc
        if len(scores) != len(pending):
            raise EvaluationError(
                f"generation {generation}: evaluator returned {len(scores)} scores for {len(pending)} individuals"
            )
        for i, s in zip(pending, scores):
            s = float(s)
            if not math.isfinite(s):
                raise EvaluationError(
                    f"generation {generation}: non-finite fitness for individual {population[i].uid}"
                )
            population[i].fitness = s

    def _breed(self, population, generation, rng):
        for a in range(len(population)):
            m = crowding_select_mate(population, a, self.cs, rng)
            children = crossover(population[a], population[m], self.crossover_rate, rng, generation)
            for child in children:
                child = mutate(child, self.mutation_rate, self.mutation_sigma, rng, self.bounds)
                child.birth_generation = generation
                replace_worst_among_most_similar(population, child, self.cf, self.group_size, rng)

    def init_population(self, rng) -> list[Individual]:
        lo, hi = self.bounds
        genes = rng.uniform(lo, hi, size=(self.population_size, self.n_genes))
        return [Individual(g, None, 0) for g in genes]

    def fit(self, evaluator: Evaluator, reporter: Optional[Callable[[dict], None]] = None,
            initial_population: Optional[Sequence[np.ndarray]] = None):
        self._validate_params()
        rng = check_random_state(self.random_state)
        if initial_population is None:
            population = self.init_population(rng)
        else:
            population = [Individual(np.array(g, dtype=np.float64), None, 0) for g in initial_population]
            if len(population) != self.population_size:
                raise ValueError("initial_population size differs from population_size")
        self._check_bounds(population, 0)

        best: Optional[Individual] = None
        stale = 0
        low_change = 0
        history = []
        generation = 0
        while True:
            self._evaluate(evaluator, population, generation, rng)
            champ = population[_champion(population)]
            prev = best
            if best is None or champ.fitness > best.fitness:
                best = champ.copy()
            if prev is None:
                change = math.nan
            else:
                delta = float(np.linalg.norm(best.genes - prev.genes))
                change = delta
                if np.array_equal(best.genes, prev.genes):
                    stale += 1
                else:
                    stale = 0
                rel = delta / (float(np.linalg.norm(prev.genes)) + 1e-9)
                low_change = low_change + 1 if rel < self.low_change_threshold else 0

            row = {
                "generation": generation,
                "best_fitness": champ.fitness,
                "mean_fitness": float(np.mean([p.fitness for p in population if p.fitness is not None])),
                "best_change_norm": change,
            }
            describe = getattr(evaluator, "describe", None)
            if describe is not None:
                row.update(describe(population))
            history.append(row)
            if reporter is not None:
                reporter(row)

            if stale >= self.stale_best_generations:
                reason = TerminationReason.STALE_BEST
                break
            if low_change >= self.low_change_generations:
                reason = TerminationReason.LOW_CHANGE_RATE
                break
            generation += 1
            self._breed(population, generation, rng)
            self._check_bounds(population, generation)
            if generation >= self.max_generations:
                reason = TerminationReason.MAX_GENERATIONS
                break

        self.population_ = population
        self.best_ = best
        self.termination_reason_ = reason
        self.n_generations_ = generation
        self.history_ = history
        return self

    def ranked_population(self) -> list[Individual]:
        """Evaluated individuals of the final population, best first (ties by index)."""
        scored = [(i, p) for i, p in enumerate(self.population_) if p.fitness is not None]
        scored.sort(key=lambda t: (-t[1].fitness, t[0]))
        return [p for _, p in scored]


# -- one-dimensional benchmarks ------------------------------------------------

@dataclass(frozen=True)
class Benchmark:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    bounds: tuple[float, float]
    minima: tuple[float, ...]


SQRT_3PI_2 = math.sqrt(1.5 * math.pi)

BENCHMARKS = {
    "sinx2": Benchmark("sinx2", lambda x: np.sin(x * x), (-3.0, 3.0), (-SQRT_3PI_2, SQRT_3PI_2)),
}


class FunctionFitness:
    """Closed-form evaluator for a benchmark; fitness is the negated function value."""

    rescore_all = False

    def __init__(self, benchmark: Benchmark, niche_radius: float = 0.3):
        self.benchmark = benchmark
        self.niche_radius = niche_radius

    def __call__(self, individuals, generation, seed):
        return [-float(self.benchmark.func(ind.genes)[0]) for ind in individuals]

    def niche_counts(self, population) -> list[int]:
        xs = np.array([p.genes[0] for p in population])
        return [int(np.sum(np.abs(xs - m) <= self.niche_radius)) for m in self.benchmark.minima]

    def describe(self, population) -> dict:
        sizes = self.niche_counts(population)
        return {"niche_count": sum(1 for c in sizes if c > 0), "niche_sizes": tuple(sizes)}


def benchmark_optimizer(benchmark: Benchmark, **params) -> MultiNicheCrowding:
    """Optimizer preset for one-dimensional benchmarks."""
    lo, hi = benchmark.bounds
    defaults = dict(
        n_genes=1,
        bounds=benchmark.bounds,
        cf=5,
        group_size=5,
        mutation_rate=0.5,
        mutation_sigma=0.05 * (hi - lo),
        max_generations=200,
        stale_best_generations=1000,
        low_change_generations=1000,
    )
    defaults.update(params)
    return MultiNicheCrowding(**defaults)
