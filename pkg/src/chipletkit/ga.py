"""Genetic algorithm over chiplet-count and per-chiplet technology choice.

A genome is an ordered list of K_max technology ids; the partitioning core
decides how many chiplets are actually used, so trailing genes are inert.
Genomes are canonicalized to their sorted multiset representative before
fitness evaluation and caching: equivalent assignments share one evaluation,
and the inner optimization seed derives from the canonical form, so equal
genomes always score identically.

An exhaustive enumeration over all canonical assignments is provided as a
reference optimizer; it shares the fitness function (and its seeds) with the
GA, so GA results are directly comparable and can never beat it on the same
master seed.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import cost as costmod
from .configs import GAConfig, RefineBudget
from .model import Netlist, SystemConfig
from .partition import CoreResult, core_chipletpart
from .seeding import rng_for, stable_seed

Genome = tuple[str, ...]


def canonicalize(genome: Sequence[str]) -> Genome:
    """Sorted-multiset representative (stable order by tech id)."""
    return tuple(sorted(genome))


def init_population(config: GAConfig, tech_ids: Sequence[str],
                    rng) -> list[Genome]:
    """tot_pop random genomes of length K_max, canonicalized."""
    techs = sorted(tech_ids)
    population = []
    for _ in range(config.tot_pop):
        genes = [techs[int(rng.integers(len(techs)))]
                 for _ in range(config.K_max)]
        population.append(canonicalize(genes))
    return population


def tournament_select(population: Sequence[Genome],
                      fitnesses: Sequence[float], config: GAConfig,
                      rng) -> list[tuple[Genome, Genome]]:
    """k_pop parent pairs; each parent wins a tournament of zeta genomes.

    Entrants are drawn without replacement (a tournament as large as the
    population always crowns the global best); a genome can win any number
    of tournaments.
    """
    n = len(population)
    size = min(config.zeta, n)
    winners = []
    for _ in range(2 * config.k_pop):
        entrants = [int(i) for i in rng.choice(n, size=size, replace=False)]
        best = min(entrants, key=lambda i: (fitnesses[i], i))
        winners.append(population[best])
    return [(winners[2 * i], winners[2 * i + 1])
            for i in range(config.k_pop)]


def crossover(parent_a: Genome, parent_b: Genome, p_c: float, rng) -> Genome:
    """Uniform crossover with probability p_c, else a copy of parent_a.

    A shorter parent is virtually padded by cycling the longer one's tail.
    """
    if len(parent_a) != len(parent_b):
        longer, shorter = ((parent_a, parent_b)
                           if len(parent_a) >= len(parent_b)
                           else (parent_b, parent_a))
        shorter = shorter + longer[len(shorter):]
        parent_a, parent_b = ((longer, shorter)
                              if longer is parent_a else (shorter, longer))
    if rng.random() >= p_c:
        return tuple(parent_a)
    return tuple(parent_a[i] if rng.random() < 0.5 else parent_b[i]
                 for i in range(len(parent_a)))


def mutate(genome: Genome, p_m: float, tech_ids: Sequence[str],
           rng) -> Genome:
    """Random-resetting mutation: each gene redrawn uniformly with prob p_m."""
    techs = sorted(tech_ids)
    return tuple(techs[int(rng.integers(len(techs)))]
                 if rng.random() < p_m else g for g in genome)


def enumerate_assignments(tech_ids: Sequence[str],
                          k_max: int) -> list[Genome]:
    """All canonical technology assignments for 1..k_max chiplets."""
    techs = sorted(tech_ids)
    out = []
    for k in range(1, k_max + 1):
        out.extend(itertools.combinations_with_replacement(techs, k))
    return out


@dataclass
class FitnessOracle:
    """Memoized fitness of canonical genomes via the partitioning core."""

    netlist: Netlist
    config: SystemConfig
    master_seed: int
    budget: RefineBudget
    threads: int = 1
    memo: dict[Genome, float] = field(default_factory=dict)
    results: dict[Genome, CoreResult] = field(default_factory=dict)
    n_evaluations: int = 0
    n_hits: int = 0

    def __post_init__(self):
        self._baseline = costmod.monolithic_baseline(self.netlist, self.config)

    def _run(self, canon: Genome) -> tuple[Genome, float, CoreResult | None]:
        seed = stable_seed(self.master_seed, "fitness", canon)
        try:
            result = core_chipletpart(self.netlist, canon, self.config,
                                      budget=self.budget, seed=seed,
                                      baseline=self._baseline)
            return canon, result.evaluation.objective, result
        except costmod.CostError:
            return canon, math.inf, None

    def evaluate_all(self, genomes: Sequence[Genome]) -> list[float]:
        pending: list[Genome] = []
        queued: set[Genome] = set()
        for g in genomes:
            canon = canonicalize(g)
            if canon in self.memo:
                self.n_hits += 1
            elif canon not in queued:
                pending.append(canon)
                queued.add(canon)
        if pending:
            if self.threads > 1:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    outcomes = list(pool.map(self._run, pending))
            else:
                outcomes = [self._run(c) for c in pending]
            for canon, value, result in outcomes:
                self.memo[canon] = value
                if result is not None:
                    self.results[canon] = result
                self.n_evaluations += 1
        return [self.memo[canonicalize(g)] for g in genomes]

    @property
    def hit_rate(self) -> float:
        asked = self.n_hits + self.n_evaluations
        return self.n_hits / asked if asked else 0.0


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_ever: float
    population_best: float
    population_mean: float
    cache_hit_rate: float
    evaluations: int

    def as_line(self) -> str:
        return (f"gen={self.generation} best={self.best_ever:.6g} "
                f"pop_best={self.population_best:.6g} "
                f"pop_mean={self.population_mean:.6g} "
                f"hit_rate={self.cache_hit_rate:.3f} "
                f"evals={self.evaluations}")


@dataclass
class EvolveResult:
    genome: Genome
    core: CoreResult              # full-budget re-evaluation of the winner
    history: list[GenerationStats]
    n_fitness_evaluations: int


def evolve(netlist: Netlist, config: SystemConfig, seed: int | None = None,
           inner_budget: RefineBudget | None = None, threads: int = 1,
           log: Callable[[str], None] | None = None) -> EvolveResult:
    """Run the full loop: init, fitness, convergence check, selection,
    crossover/mutation with elitism; returns the best-ever genome re-scored
    at the full refinement budget.
    """
    ga = config.ga
    if seed is None:
        seed = ga.seed
    if inner_budget is None:
        inner_budget = RefineBudget.reduced()
    tech_ids = sorted(config.techs)
    rng = rng_for(seed, "ga")
    oracle = FitnessOracle(netlist=netlist, config=config, master_seed=seed,
                           budget=inner_budget, threads=threads)

    population = init_population(ga, tech_ids, rng)
    best_cost = math.inf
    best_genome: Genome | None = None
    cost_prev = math.inf
    stall = 0
    history: list[GenerationStats] = []

    generation = 0
    while True:
        fitnesses = oracle.evaluate_all(population)
        for genome, fit in zip(population, fitnesses):
            if fit < best_cost or best_genome is None:
                best_cost = fit
                best_genome = canonicalize(genome)
        generation += 1

        finite = [f for f in fitnesses if math.isfinite(f)]
        stats = GenerationStats(
            generation=generation, best_ever=best_cost,
            population_best=min(fitnesses),
            population_mean=(sum(finite) / len(finite) if finite
                             else math.inf),
            cache_hit_rate=oracle.hit_rate,
            evaluations=oracle.n_evaluations)
        history.append(stats)
        if log is not None:
            log(stats.as_line())

        if generation >= ga.psi:
            break
        delta = cost_prev - best_cost
        if delta <= ga.delta_threshold:
            stall += 1
            if stall > ga.epsilon:
                break
        else:
            stall = 0
        cost_prev = best_cost

        pairs = tournament_select(population, fitnesses, ga, rng)
        offspring = []
        for pa, pb in pairs:
            child = crossover(pa, pb, ga.p_c, rng)
            child = mutate(child, ga.p_m, tech_ids, rng)
            offspring.append(canonicalize(child))
        elite_idx = sorted(range(len(population)),
                           key=lambda i: (fitnesses[i], i))[:ga.sigma]
        population = [population[i] for i in elite_idx] + offspring

    final = core_chipletpart(
        netlist, best_genome, config, budget=config.refine,
        seed=stable_seed(seed, "final", best_genome))
    return EvolveResult(genome=best_genome, core=final, history=history,
                        n_fitness_evaluations=oracle.n_evaluations)


@dataclass
class EnumerationResult:
    genome: Genome
    core: CoreResult
    n_fitness_evaluations: int
    best_fitness: float


def enumerate_best(netlist: Netlist, config: SystemConfig,
                   seed: int | None = None,
                   inner_budget: RefineBudget | None = None,
                   threads: int = 1) -> EnumerationResult:
    """Exhaustive reference optimizer over every canonical assignment.

    Shares fitness seeds with evolve(), so for a fixed master seed the GA
    can match but never beat this result.
    """
    ga = config.ga
    if seed is None:
        seed = ga.seed
    if inner_budget is None:
        inner_budget = RefineBudget.reduced()
    oracle = FitnessOracle(netlist=netlist, config=config, master_seed=seed,
                           budget=inner_budget, threads=threads)
    genomes = enumerate_assignments(sorted(config.techs), ga.K_max)
    fitnesses = oracle.evaluate_all(genomes)
    best_idx = min(range(len(genomes)), key=lambda i: (fitnesses[i], i))
    best_genome = genomes[best_idx]
    final = core_chipletpart(
        netlist, best_genome, config, budget=config.refine,
        seed=stable_seed(seed, "final", best_genome))
    return EnumerationResult(genome=best_genome, core=final,
                             n_fitness_evaluations=oracle.n_evaluations,
                             best_fitness=fitnesses[best_idx])
