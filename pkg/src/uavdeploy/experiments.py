"""Experiment drivers behind the CLI.

Each driver is a pure function of its arguments and returns plain row dicts;
``cli`` turns them into CSV. Seeds run through ``_map`` which preserves seed
order whether or not a process pool is used.

Coverage of a GA run is ``max(objective, 0) / |P|``: a run that never found a
capacity-feasible chromosome returns no usable deployment and counts as zero.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import baselines, ga, power, scenario as scn
from .channel import ChannelConfig, environment, pl_altitude_curve, radius_for_altitude
from .errors import ValidationError
from .placement import Placement, Solution, shed_overloaded

log = logging.getLogger(__name__)

METHODS = ("ga", "random", "kmeans", "greedy", "sequential-exact")
COVERAGE_SIZES = (80, 200, 450)
POPULATION_SWEEP = (50, 75, 100, 150, 200, 300, 500)
CROSSOVER_SWEEP = (0.5, 0.6, 0.7, 0.8)
MUTATION_SWEEP = (0.01, 0.02, 0.03, 0.04, 0.05)
POWER_SIZES = tuple(range(50, 401, 50))
CONVERGED_TAIL = 0.15
PERTURB_ERR_M = 5.0


def _map(fn: Callable, tasks: Sequence, jobs: int = 1) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


# ---- curves ---------------------------------------------------------------

def frontier_rows(channel: ChannelConfig, pl_max_list: Iterable[float],
                  h_grid: Iterable[float]) -> list[dict]:
    """Radius against altitude for each budget; infeasible points get ``r_m=None``."""
    rows = []
    for pl in pl_max_list:
        try:
            cfg = replace(channel, pl_max=float(pl))
        except ValidationError:
            cfg = None
        for h in h_grid:
            r = radius_for_altitude(cfg, float(h)) if cfg is not None else None
            rows.append({"pl_max_db": float(pl), "h_m": float(h), "r_m": r})
    return rows


def pl_altitude_rows(channel: ChannelConfig, radii: Iterable[float],
                     h_grid: Sequence[float]) -> list[dict]:
    rows = []
    for r in radii:
        for h, pl in pl_altitude_curve(channel, float(r), h_grid):
            rows.append({"r_m": float(r), "h_m": h, "pl_db": pl})
    return rows


# ---- solving --------------------------------------------------------------

def solve(s: scn.Scenario, method: str, seed: int,
          ga_params: Optional[ga.GaParams] = None) -> tuple[Solution, int, Optional[ga.GaResult]]:
    """Run one method; returns the solution, its objective and the GA result if any.

    The objective of a GA run is the fitness of the returned chromosome, so an
    infeasible best gives ``-100``.
    """
    if method == "ga":
        params = replace(ga_params or ga.GaParams(**ga.DESK_PARAMS), seed=seed)
        res = ga.run(s, params)
        return res.solution, res.objective, res
    if method not in baselines.METHODS:
        raise ValidationError(f"unknown method {method!r} (choose from {', '.join(METHODS)})")
    sol = baselines.METHODS[method](s, seed)
    return sol, sol.objective, None


def coverage(objective: int, n_ues: int) -> float:
    return max(objective, 0) / n_ues if n_ues else 1.0


def realized_coverage(true: scn.Scenario, placements: Sequence[Placement]) -> float:
    """Fraction of users served when a plan meets the true user positions.

    Users pick their nearest covering UAV; a UAV pushed over capacity serves
    its nearest users that fit and drops the rest.
    """
    if true.n_ues == 0:
        return 1.0
    return shed_overloaded(true, placements).covered_count / true.n_ues


def _scenario(seed, n_ues, fleet, channel, capacity):
    return scn.generate(seed, n_ues, fleet_size=fleet, capacity=capacity, channel=channel)


def _coverage_task(task):
    method, n_ues, seed, fleet, channel, capacity, params = task
    s = _scenario(seed, n_ues, fleet, channel, capacity)
    t0 = time.perf_counter()
    _, obj, _ = solve(s, method, seed, params)
    return {"method": method, "n_ues": n_ues, "seed": seed, "objective": obj,
            "coverage": coverage(obj, n_ues), "seconds": time.perf_counter() - t0}


def coverage_runs(seeds: Sequence[int], sizes: Sequence[int] = COVERAGE_SIZES,
                  methods: Sequence[str] = METHODS, fleet: int = 10,
                  channel: Optional[ChannelConfig] = None,
                  capacity: float = scn.DEFAULT_CAPACITY_BPS,
                  ga_params: Optional[ga.GaParams] = None, jobs: int = 1) -> list[dict]:
    """One row per (method, size, seed)."""
    channel = channel or ChannelConfig(environment("urban"))
    tasks = [(m, n, s, fleet, channel, capacity, ga_params)
             for m in methods for n in sizes for s in seeds]
    return _map(_coverage_task, tasks, jobs)


def mean_table(runs: Sequence[dict], row_key: str, value: str = "coverage") -> list[dict]:
    """Pivot per-seed rows into one row per ``row_key`` with a column per size."""
    keys = list(dict.fromkeys(r[row_key] for r in runs))
    sizes = list(dict.fromkeys(r["n_ues"] for r in runs))
    table = []
    for k in keys:
        row = {row_key: k}
        for n in sizes:
            vals = [r[value] for r in runs if r[row_key] == k and r["n_ues"] == n]
            row[f"n{n}"] = float(np.mean(vals))
        table.append(row)
    return table


# ---- robustness -----------------------------------------------------------

def _robustness_task(task):
    n_ues, seed, fleet, channel, capacity, params, err = task
    true = _scenario(seed, n_ues, fleet, channel, capacity)
    rows = []
    for arm, plan in (("clean", true), ("perturbed", scn.perturb_locations(true, err, seed))):
        sol, obj, _ = solve(plan, "ga", seed, params)
        cov = 0.0 if obj < 0 else realized_coverage(true, sol.placements)
        rows.append({"arm": arm, "n_ues": n_ues, "seed": seed, "plan_objective": obj,
                     "coverage": cov})
    return rows


def robustness_runs(seeds: Sequence[int], sizes: Sequence[int] = COVERAGE_SIZES,
                    fleet: int = 10, channel: Optional[ChannelConfig] = None,
                    capacity: float = scn.DEFAULT_CAPACITY_BPS,
                    ga_params: Optional[ga.GaParams] = None, max_err_m: float = PERTURB_ERR_M,
                    jobs: int = 1) -> list[dict]:
    """GA planned on exact and on perturbed positions, both scored on the exact ones."""
    channel = channel or ChannelConfig(environment("urban"))
    tasks = [(n, s, fleet, channel, capacity, ga_params, max_err_m) for n in sizes for s in seeds]
    rows = [r for pair in _map(_robustness_task, tasks, jobs) for r in pair]
    return sorted(rows, key=lambda r: (r["arm"] != "clean", r["n_ues"], r["seed"]))


# ---- GA tuning ------------------------------------------------------------

def min_required_iteration(best_history: np.ndarray, tail: float = CONVERGED_TAIL) -> Optional[int]:
    """Generation of the last improvement, if the best fitness then stays flat
    for at least the final ``tail`` share of the run; otherwise ``None``."""
    k = len(best_history) - 1
    if k <= 0:
        return 0
    rises = np.flatnonzero(np.diff(best_history) > 0)
    last = int(rises[-1]) + 1 if len(rises) else 0
    return last if k - last >= tail * k else None


def _tuning_task(task):
    s, params = task
    res = ga.run(s, params)
    return res.best_history, res.mean_history


def population_sweep(s: scn.Scenario, populations: Sequence[int] = POPULATION_SWEEP,
                     iterations: int = 2000, seed: int = 0, jobs: int = 1) -> list[dict]:
    tasks = [(s, ga.GaParams(iterations=iterations, population=d, seed=seed)) for d in populations]
    rows = []
    for d, (best, _) in zip(populations, _map(_tuning_task, tasks, jobs)):
        it = min_required_iteration(best)
        rows.append({"population": d, "min_required_iteration": it,
                     "multiplication": None if it is None else d * it,
                     "best_fitness": int(best[-1])})
    return rows


def rate_sweep(s: scn.Scenario, crossover_rates: Sequence[float] = CROSSOVER_SWEEP,
               mutation_rates: Sequence[float] = MUTATION_SWEEP, iterations: int = 2000,
               population: int = 100, seed: int = 0, jobs: int = 1) -> list[dict]:
    """Best-fitness history per rate, one sweep holding the other rate at its default."""
    base = ga.GaParams(iterations=iterations, population=population, seed=seed)
    specs = ([("crossover_rate", v) for v in crossover_rates]
             + [("mutation_rate", v) for v in mutation_rates])
    tasks = [(s, replace(base, **{name: v})) for name, v in specs]
    rows = []
    for (name, v), (best, mean) in zip(specs, _map(_tuning_task, tasks, jobs)):
        rows.extend({"parameter": name, "value": v, "generation": k,
                     "best_fitness": int(best[k]), "mean_fitness": float(mean[k])}
                    for k in range(len(best)))
    return rows


# ---- power ----------------------------------------------------------------

def _power_task(task):
    n_ues, seed, fleet, channel, capacity, params, rx_dbm = task
    s = _scenario(seed, n_ues, fleet, channel, capacity)
    sol, _, _ = solve(s, "ga", seed, params)
    return [{"n_ues": n_ues, "policy": pol, "seed": seed,
             "mean_tx_dbm": power.altitude_policy_power(sol, pol, channel, seed, rx_dbm)}
            for pol in power.POLICIES]


def power_runs(seeds: Sequence[int], sizes: Sequence[int] = POWER_SIZES, fleet: int = 15,
               channel: Optional[ChannelConfig] = None,
               capacity: float = scn.DEFAULT_CAPACITY_BPS,
               ga_params: Optional[ga.GaParams] = None,
               rx_dbm: float = power.DEFAULT_RX_DBM, jobs: int = 1) -> list[dict]:
    """Fleet-mean transmit power of GA deployments under each altitude policy."""
    channel = channel or ChannelConfig(environment("urban"))
    tasks = [(n, s, fleet, channel, capacity, ga_params, rx_dbm) for n in sizes for s in seeds]
    return [r for rows in _map(_power_task, tasks, jobs) for r in rows]


def power_summary(runs: Sequence[dict]) -> list[dict]:
    keys = list(dict.fromkeys((r["n_ues"], r["policy"]) for r in runs))
    return [{"n_ues": n, "policy": pol,
             "mean_tx_dbm": float(np.mean([r["mean_tx_dbm"] for r in runs
                                           if r["n_ues"] == n and r["policy"] == pol]))}
            for n, pol in keys]
