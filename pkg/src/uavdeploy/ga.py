"""Genetic algorithm for 2D placement of capacity-limited coverage disks.

A chromosome is a ``(Q, 3)`` array of genes ``(x, y, R)``, one per UAV; a
population is a ``(D, Q, 3)`` array. Fitness is the number of covered users,
or ``-100`` if any UAV is over capacity.

Each generation runs selection, crossover and mutation in that order, all
drawing from one ``"ga"`` random stream. Per generation the draws are: one
competitor index; one permutation of ``D`` (crossover pairing); ``D`` uniforms
(mutation coin flips), ``D`` gene indices and ``D x 3`` fresh gene values.
Fitness evaluation consumes no randomness.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels, channel
from . import rng as rng_mod
from .errors import ValidationError
from .placement import Placement, Solution, assign, circumcenters
from .scenario import Scenario

log = logging.getLogger(__name__)

PENALTY = -100


@dataclass(frozen=True)
class GaParams:
    iterations: int = 17000
    population: int = 100
    crossover_rate: float = 0.8
    mutation_rate: float = 0.01
    seed: int = 0
    readout: str = "best-ever"

    def __post_init__(self):
        if self.population < 2:
            raise ValidationError(f"population must be at least 2, got {self.population}")
        if self.iterations < 0:
            raise ValidationError(f"iterations must be non-negative, got {self.iterations}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")
        if self.readout not in ("best-ever", "final"):
            raise ValidationError(f"readout must be 'best-ever' or 'final', got {self.readout!r}")


DESK_PARAMS = dict(iterations=2000, population=50)


@dataclass
class GaState:
    population: np.ndarray
    fitness: np.ndarray
    best_chromosome: np.ndarray
    best_fitness: int
    generation: int = 0

    def observe(self):
        """Fold the current population into the best-ever archive."""
        k = int(np.argmax(self.fitness))
        if self.fitness[k] > self.best_fitness:
            self.best_fitness = int(self.fitness[k])
            self.best_chromosome = self.population[k].copy()


@dataclass
class GaResult:
    solution: Solution
    objective: int
    best_history: np.ndarray
    mean_history: np.ndarray
    state: GaState = field(repr=False)


def _check_r_max(r_max: float):
    if r_max < 1.0:
        raise ValidationError(f"R_max={r_max:.3f} m is below the 1 m minimum gene radius")


def population_fitness(population: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Fitness of every chromosome in a ``(D, Q, 3)`` batch."""
    return _kernels.population_fitness(np.ascontiguousarray(population, dtype=float),
                                       scenario.positions, scenario.rates,
                                       scenario.capacities, PENALTY)


def fitness(chromosome: np.ndarray, scenario: Scenario) -> int:
    chromosome = np.asarray(chromosome, dtype=float)
    if chromosome.shape != (scenario.fleet_size, 3):
        raise ValidationError(
            f"chromosome shape {chromosome.shape} does not match fleet size {scenario.fleet_size}")
    return int(population_fitness(chromosome[None], scenario)[0])


def _initial_centers(points: np.ndarray, n_genes: int, side: float, g: np.random.Generator):
    n = len(points)
    if n == 0:
        return g.uniform(0.0, side, size=(n_genes, 2))
    if n < 3:
        return np.broadcast_to(points.mean(axis=0), (n_genes, 2)).copy()
    # three distinct users per gene: first three of a random ordering
    keys = g.random((n_genes, n))
    tri = np.argpartition(keys, 2, axis=1)[:, :3]
    p1, p2, p3 = points[tri[:, 0]], points[tri[:, 1]], points[tri[:, 2]]
    cc, ok = circumcenters(p1, p2, p3)
    centroid = (p1 + p2 + p3) / 3.0
    centers = np.where(ok[:, None], cc, centroid)
    return np.clip(centers, 0.0, side)


def init_population(scenario: Scenario, params: GaParams,
                    g: Optional[np.random.Generator] = None) -> GaState:
    """Initial population: centers at circumcenters of three random users,
    radii uniform on ``[1, R_max]``. Collinear triples fall back to their centroid."""
    r_max = scenario.r_max
    _check_r_max(r_max)
    if g is None:
        g = rng_mod.stream(params.seed, "ga")
    d, q = params.population, scenario.fleet_size
    centers = _initial_centers(scenario.positions, d * q, scenario.region_side, g)
    radii = g.uniform(1.0, r_max, size=d * q)
    pop = np.concatenate([centers, radii[:, None]], axis=1).reshape(d, q, 3)
    fit = population_fitness(pop, scenario)
    state = GaState(pop, fit, pop[0].copy(), np.iinfo(np.int64).min)
    state.observe()
    return state


def select(state: GaState, g: np.random.Generator) -> np.ndarray:
    """Competitor replacement: every chromosome strictly less fit than a randomly
    drawn competitor becomes a copy of it."""
    c = int(g.integers(len(state.population)))
    pop = state.population.copy()
    worse = state.fitness < state.fitness[c]
    pop[worse] = state.population[c]
    return pop


def _select_with_fitness(state: GaState, g: np.random.Generator):
    c = int(g.integers(len(state.population)))
    worse = state.fitness < state.fitness[c]
    pop = state.population.copy()
    pop[worse] = state.population[c]
    fit = np.where(worse, state.fitness[c], state.fitness)
    return pop, fit


def _pairs(d: int, p_c: float, g: np.random.Generator):
    n_sel = int(np.floor(p_c * d))
    n_sel -= n_sel % 2
    perm = g.permutation(d)
    chosen = perm[:n_sel]
    return chosen[0::2], chosen[1::2]


def crossover(population: np.ndarray, p_c: float, g: np.random.Generator) -> np.ndarray:
    """Pair ``floor(p_c * D)`` (rounded down to even) random chromosomes and swap
    their second halves at gene index ``Q // 2``."""
    return _crossover(population, p_c, g)[0]


def _crossover(population, p_c, g):
    pop = population.copy()
    a, b = _pairs(len(pop), p_c, g)
    mid = pop.shape[1] // 2
    changed = np.zeros(len(pop), dtype=bool)
    differs = np.any(pop[a, mid:] != pop[b, mid:], axis=(1, 2))
    changed[a[differs]] = True
    changed[b[differs]] = True
    tail_a = pop[a, mid:].copy()
    pop[a, mid:] = pop[b, mid:]
    pop[b, mid:] = tail_a
    return pop, changed


def mutate(population: np.ndarray, p_m: float, r_max: float, side: float,
           g: np.random.Generator) -> np.ndarray:
    """With probability ``p_m`` per chromosome, replace one random gene by a
    uniform center in the region and a uniform radius on ``[1, R_max]``."""
    return _mutate(population, p_m, r_max, side, g)[0]


def _mutate(population, p_m, r_max, side, g):
    d, q, _ = population.shape
    flip = g.random(d) < p_m
    which = g.integers(q, size=d)
    fresh = np.column_stack([g.uniform(0.0, side, size=(d, 2)), g.uniform(1.0, r_max, size=d)])
    pop = population.copy()
    rows = np.flatnonzero(flip)
    pop[rows, which[rows]] = fresh[rows]
    return pop, flip


def to_placements(chromosome: np.ndarray, theta: float) -> list[Placement]:
    return [Placement(j, float(x), float(y), float(r), float(channel.optimal_altitude(float(r), theta)))
            for j, (x, y, r) in enumerate(chromosome)]


def run(scenario: Scenario, params: GaParams) -> GaResult:
    """Evolve ``params.iterations`` generations and return the deployment.

    Generation 0 is the initial population; each of the ``K`` following
    generations applies selection, crossover and mutation and is then
    evaluated. ``best_history[k]`` is the best-ever fitness after generation
    ``k``. Fitness is only recomputed for chromosomes that changed.
    """
    g = rng_mod.stream(params.seed, "ga")
    state = init_population(scenario, params, g)
    r_max, side = scenario.r_max, scenario.region_side
    k_iter = params.iterations
    best_hist = np.empty(k_iter + 1, dtype=np.int64)
    mean_hist = np.empty(k_iter + 1, dtype=float)
    best_hist[0] = state.best_fitness
    mean_hist[0] = state.fitness.mean()
    for k in range(1, k_iter + 1):
        pop, fit = _select_with_fitness(state, g)
        pop, changed = _crossover(pop, params.crossover_rate, g)
        pop, flipped = _mutate(pop, params.mutation_rate, r_max, side, g)
        changed |= flipped
        if changed.any():
            fit = fit.copy()
            fit[changed] = population_fitness(pop[changed], scenario)
        state.population, state.fitness, state.generation = pop, fit, k
        state.observe()
        best_hist[k] = state.best_fitness
        mean_hist[k] = fit.mean()

    if params.readout == "final":
        pick = state.population[int(np.argmax(state.fitness))]
    else:
        pick = state.best_chromosome
    placements = to_placements(pick, scenario.theta_max)
    sol = Solution("ga", placements, assign(scenario, placements),
                   meta={"seed": params.seed, "iterations": k_iter,
                         "population": params.population,
                         "crossover_rate": params.crossover_rate,
                         "mutation_rate": params.mutation_rate, "readout": params.readout})
    objective = int(fitness(pick, scenario))
    log.debug("ga seed=%d objective=%d", params.seed, objective)
    return GaResult(sol, objective, best_hist, mean_hist, state)
