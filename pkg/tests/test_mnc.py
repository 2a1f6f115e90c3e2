import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from phoenix.genome import GENE_MAX, GENE_MIN
from phoenix.mnc import (
    BENCHMARKS,
    EvaluationError,
    FunctionFitness,
    Individual,
    MultiNicheCrowding,
    TerminationReason,
    benchmark_optimizer,
    crossover,
    crowding_select_mate,
    mutate,
    phenotypic_distance,
    replace_worst_among_most_similar,
)


class ConstantFitness:
    rescore_all = True

    def __init__(self):
        self.calls = 0

    def __call__(self, individuals, generation, seed):
        self.calls += 1
        return [1.0] * len(individuals)


class SumFitness:
    rescore_all = False

    def __call__(self, individuals, generation, seed):
        return [float(ind.genes.sum()) for ind in individuals]


def _pop(values, fitness=None):
    return [Individual(np.array(v, dtype=float), fitness if fitness is None else fitness[i])
            for i, v in enumerate(values)]


def test_distance_examples():
    rs = np.random.RandomState(0)
    x = rs.uniform(-100, 100, 640)
    assert phenotypic_distance(x, x) == 0.0
    assert phenotypic_distance(x, x + 1.0) == pytest.approx(math.sqrt(640))
    assert phenotypic_distance(x, x + 1.0) == pytest.approx(25.2982, abs=1e-4)
    y = rs.uniform(-100, 100, 640)
    assert phenotypic_distance(x, y) == phenotypic_distance(y, x)
    with pytest.raises(ValueError):
        phenotypic_distance(x, y[:10])


def test_select_mate_two_individuals():
    pop = _pop([[0.0], [5.0]])
    rng = np.random.RandomState(1)
    assert all(crowding_select_mate(pop, 0, 3, rng) == 1 for _ in range(50))
    with pytest.raises(ValueError):
        crowding_select_mate(pop[:1], 0, 3, rng)


def test_select_mate_cs_one_is_uniform_draw():
    pop = _pop([[0.0], [1.0], [50.0], [90.0]])
    rng = np.random.RandomState(2)
    picks = [crowding_select_mate(pop, 0, 1, rng) for _ in range(3000)]
    counts = np.bincount(picks, minlength=4)
    assert counts[0] == 0
    assert all(abs(c / 3000 - 1 / 3) < 0.04 for c in counts[1:])


def test_select_mate_prefers_nearest():
    pop = _pop([[0.0], [10.0], [3.0], [-20.0], [40.0]])
    n, cs, trials = len(pop), len(pop) - 1, 4000
    rng = np.random.RandomState(3)
    hits = sum(crowding_select_mate(pop, 0, cs, rng) == 2 for _ in range(trials))
    p = 1 - ((n - 2) / (n - 1)) ** cs
    sd = math.sqrt(p * (1 - p) / trials)
    assert hits / trials >= p - 4 * sd


def test_crossover_examples():
    rng = np.random.RandomState(4)
    a = Individual(rng.uniform(-100, 100, 640), 3.0)
    b = Individual(rng.uniform(-100, 100, 640), 1.0)
    c1, c2 = crossover(a, b, 0.0, rng)
    assert np.array_equal(c1.genes, a.genes) and np.array_equal(c2.genes, b.genes)
    assert c1.fitness is None and c2.fitness is None
    c1, c2 = crossover(a, a, 1.0, rng)
    assert np.array_equal(c1.genes, a.genes) and np.array_equal(c2.genes, a.genes)
    c1, c2 = crossover(a, b, 1.0, rng)
    assert np.all((c1.genes == a.genes) | (c1.genes == b.genes))
    assert np.allclose(np.sort([c1.genes, c2.genes], axis=0), np.sort([a.genes, b.genes], axis=0))
    swapped = np.sum(c1.genes != a.genes)
    assert 240 < swapped < 400


def test_mutate_examples():
    rng = np.random.RandomState(5)
    ind = Individual(rng.uniform(-100, 100, 640), 2.0)
    same = mutate(ind, 0.0, 10.0, rng)
    assert np.array_equal(same.genes, ind.genes) and same.fitness == 2.0
    tiny = mutate(ind, 1.0, 1e-9, rng)
    assert np.max(np.abs(tiny.genes - ind.genes)) < 1e-6
    for _ in range(100):
        changed = int(np.sum(mutate(ind, 0.05, 10.0, rng).genes != ind.genes))
        assert 16 <= changed <= 48
    assert mutate(ind, 1.0, 10.0, rng).fitness is None


def test_operators_respect_bounds():
    rng = np.random.RandomState(6)
    pop = [Individual(rng.uniform(GENE_MIN, GENE_MAX, 640)) for _ in range(4)]
    for i in range(10_000):
        a, b = pop[i % 4], pop[(i + 1) % 4]
        c1, c2 = crossover(a, b, 0.9, rng)
        m = mutate(c1, 0.2, 80.0, rng)
        assert m.genes.min() >= GENE_MIN and m.genes.max() <= GENE_MAX
        assert c2.genes.min() >= GENE_MIN and c2.genes.max() <= GENE_MAX
        pop[i % 4] = m


def test_replace_degenerate_groups_uniform():
    rng = np.random.RandomState(7)
    counts = np.zeros(5, dtype=int)
    for _ in range(2500):
        pop = _pop([[float(i)] for i in range(5)], fitness=[1.0] * 5)
        counts[replace_worst_among_most_similar(pop, Individual(np.array([9.0])), 1, 1, rng)] += 1
    assert np.all(np.abs(counts / 2500 - 0.2) < 0.04)


def test_replace_full_sampling_is_deterministic():
    for seed in range(20):
        pop = _pop([[0.0], [4.0], [-3.0], [7.0]], fitness=[5.0, 1.0, 2.0, 3.0])
        child = Individual(np.array([4.0]))
        idx = replace_worst_among_most_similar(pop, child, 4, 4, np.random.RandomState(seed))
        assert idx == 1
        assert pop[1] is child
        assert len(pop) == 4


def test_replace_allows_weaker_offspring():
    pop = _pop([[0.0], [1.0], [2.0], [3.0]], fitness=[10.0, 20.0, 30.0, 40.0])
    child = Individual(np.array([0.1]), fitness=-5.0)
    idx = replace_worst_among_most_similar(pop, child, 4, 4, np.random.RandomState(0))
    assert idx == 0 and pop[0].fitness == -5.0


def test_constant_fitness_stops_on_stale_best():
    ev = ConstantFitness()
    est = MultiNicheCrowding(population_size=6, n_genes=4, random_state=0).fit(ev)
    assert est.termination_reason_ is TerminationReason.STALE_BEST
    assert est.n_generations_ == 10
    assert len(est.history_) == 11
    assert ev.calls == 11


def test_single_generation():
    ev = ConstantFitness()
    rows = []
    est = MultiNicheCrowding(population_size=6, n_genes=4, max_generations=1, random_state=0)
    est.fit(ev, reporter=rows.append)
    assert ev.calls == 1
    assert est.n_generations_ == 1
    assert est.termination_reason_ is TerminationReason.MAX_GENERATIONS
    assert len(rows) == 1 and rows[0]["generation"] == 0
    assert len(est.population_) == 6
    # the breeding sweep ran: some newborns are still unscored
    assert any(p.birth_generation == 1 for p in est.population_)


def test_low_change_termination():
    # the best record never moves, so the relative change is 0 every generation
    est = MultiNicheCrowding(
        population_size=6, n_genes=4, stale_best_generations=100, low_change_generations=5,
        random_state=1,
    ).fit(ConstantFitness())
    assert est.termination_reason_ is TerminationReason.LOW_CHANGE_RATE
    assert est.n_generations_ == 5


def test_determinism_bitwise():
    kwargs = dict(population_size=8, n_genes=16, max_generations=15, random_state=42)
    a = MultiNicheCrowding(**kwargs).fit(SumFitness())
    b = MultiNicheCrowding(**kwargs).fit(SumFitness())
    for p, q in zip(a.population_, b.population_):
        assert np.array_equal(p.genes, q.genes)
    assert np.array_equal(a.best_.genes, b.best_.genes)
    c = MultiNicheCrowding(**{**kwargs, "random_state": 43}).fit(SumFitness())
    assert not np.array_equal(a.best_.genes, c.best_.genes)


def test_bounds_hold_and_best_improves():
    est = MultiNicheCrowding(population_size=10, n_genes=8, max_generations=40,
                             stale_best_generations=1000, random_state=3).fit(SumFitness())
    for ind in est.population_:
        assert ind.genes.min() >= GENE_MIN and ind.genes.max() <= GENE_MAX
    fits = [row["best_fitness"] for row in est.history_]
    assert fits[-1] > fits[0]
    ranked = est.ranked_population()
    assert all(ranked[i].fitness >= ranked[i + 1].fitness for i in range(len(ranked) - 1))


def test_evaluator_failure_has_context():
    class Broken:
        rescore_all = True

        def __call__(self, individuals, generation, seed):
            raise RuntimeError("engine crashed")

    with pytest.raises(EvaluationError, match="generation 0"):
        MultiNicheCrowding(population_size=4, n_genes=2, random_state=0).fit(Broken())

    class NaN:
        rescore_all = True

        def __call__(self, individuals, generation, seed):
            return [math.nan] * len(individuals)

    with pytest.raises(EvaluationError, match="non-finite"):
        MultiNicheCrowding(population_size=4, n_genes=2, random_state=0).fit(NaN())


@pytest.mark.parametrize(
    "params",
    [
        {"population_size": 3},
        {"cs": 0},
        {"cf": 30},
        {"group_size": 0},
        {"crossover_rate": 1.5},
        {"mutation_rate": -0.1},
        {"max_generations": 0},
        {"stale_best_generations": 0},
    ],
)
def test_invalid_params(params):
    with pytest.raises(ValueError):
        MultiNicheCrowding(**params).fit(ConstantFitness())


def test_estimator_protocol():
    est = MultiNicheCrowding(cs=4, cf=2, group_size=5, population_size=12)
    params = est.get_params()
    for key in ("cs", "cf", "group_size", "population_size", "stale_best_generations",
                "low_change_generations", "low_change_threshold", "max_generations"):
        assert key in params
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(cs=2)
    assert twin.cs == 2 and est.cs == 4


def test_sinx2_single_seed_finds_both_minima():
    bench = BENCHMARKS["sinx2"]
    ev = FunctionFitness(bench)
    est = benchmark_optimizer(bench, random_state=0).fit(ev)
    xs = np.array([p.genes[0] for p in est.population_])
    for m in bench.minima:
        assert np.min(np.abs(xs - m)) <= 0.05
    assert bench.minima[1] == pytest.approx(2.1708, abs=1e-4)
    assert est.history_[-1]["niche_count"] == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0), st.floats(0.0, 300.0))
def test_mutate_property_bounds(seed, rate, sigma):
    rng = np.random.RandomState(seed)
    ind = Individual(rng.uniform(GENE_MIN, GENE_MAX, 640))
    out = mutate(ind, rate, sigma, rng)
    assert out.genes.min() >= GENE_MIN and out.genes.max() <= GENE_MAX
    assert out.genes.shape == ind.genes.shape
