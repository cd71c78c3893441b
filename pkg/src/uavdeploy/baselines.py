"""Comparison placements: random, K-means, greedy and sequential-exact.

Every function returns a capacity-feasible :class:`~uavdeploy.placement.Solution`
with altitudes set to the optimal altitude of each radius.

``sequential_exact_placement`` stands in for a branch-and-cut baseline: it
places UAVs one at a time like greedy search, but solves each single-UAV
sub-problem exactly over a richer candidate set (UE positions, pairwise
midpoints and circumcenters of UE triples). When that set is too large for the
exact budget it falls back to the greedy candidate set for that stage.
"""
from __future__ import annotations

import logging
import numpy as np
from sklearn.cluster import KMeans

from . import rng as rng_mod
from .channel import optimal_altitude
from .errors import ValidationError
from .placement import (DEFAULT_MAX_CHECKS, Assignment, Placement, Solution,
                        best_single_disk, default_center_candidates,
                        shed_overloaded)
from .scenario import Scenario

log = logging.getLogger(__name__)

MIN_RADIUS_M = 1.0
KMEANS_MAX_ITER = 100
KMEANS_TOL_M = 1e-3


def _with_altitudes(placements, theta):
    return [Placement(p.uav_id, p.x, p.y, p.radius, optimal_altitude(p.radius, theta))
            for p in placements]


def _clamp_radius(r: float, r_max: float) -> float:
    return min(max(float(np.nextafter(r, np.inf)), MIN_RADIUS_M), r_max)


def random_placement(scenario: Scenario, seed: int) -> Solution:
    """Uniform centers in the region and radii on ``[1, R_max]``.

    Users take their nearest covering UAV; a UAV over capacity serves its
    nearest users that fit and leaves the rest unserved.
    """
    g = rng_mod.stream(seed, "random-placement")
    q, side = scenario.fleet_size, scenario.region_side
    xy = g.uniform(0.0, side, size=(q, 2))
    r = g.uniform(MIN_RADIUS_M, scenario.r_max, size=q)
    placements = _with_altitudes([Placement(j, float(xy[j, 0]), float(xy[j, 1]), float(r[j]))
                                  for j in range(q)], scenario.theta_max)
    return Solution("random", placements, shed_overloaded(scenario, placements),
                    meta={"seed": seed})


def _shed_farthest(members: np.ndarray, dist: np.ndarray, rates: np.ndarray, capacity: float):
    """Drop the farthest members one at a time until the load fits."""
    order = np.argsort(dist, kind="stable")
    members, dist = members[order], dist[order]
    load = rates[members].sum()
    k = len(members)
    while k > 0 and load > capacity:
        k -= 1
        load -= rates[members[k]]
    return members[:k], dist[:k]


def kmeans_placement(scenario: Scenario, seed: int) -> Solution:
    """Lloyd clustering with ``k = fleet size``; one UAV per centroid.

    Members beyond ``R_max`` are unserved, the radius is the distance to the
    farthest served member (at least 1 m), and an over-capacity cluster sheds
    its farthest members until it fits.
    """
    pts, rates = scenario.positions, scenario.rates
    k = scenario.fleet_size
    if scenario.n_ues < k:
        raise ValidationError(f"K-means needs at least {k} UEs, got {scenario.n_ues}")
    state = int(rng_mod.stream(seed, "kmeans").integers(2**31 - 1))
    # sklearn's tol is relative to the mean per-axis variance of the data
    var = float(np.mean(np.var(pts, axis=0)))
    tol = KMEANS_TOL_M**2 / var if var > 0 else 0.0
    km = KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=KMEANS_MAX_ITER, tol=tol,
                random_state=state, algorithm="lloyd").fit(pts)
    centers = np.clip(km.cluster_centers_, 0.0, scenario.region_side)
    r_max = scenario.r_max
    serving = {u.id: None for u in scenario.ues}
    load = {}
    placements = []
    for j in range(k):
        members = np.flatnonzero(km.labels_ == j)
        dist = np.hypot(*(pts[members] - centers[j]).T) if len(members) else np.empty(0)
        in_range = dist <= r_max
        members, dist = _shed_farthest(members[in_range], dist[in_range], rates,
                                       scenario.capacities[j])
        radius = _clamp_radius(dist.max() if len(dist) else 0.0, r_max)
        placements.append(Placement(j, float(centers[j, 0]), float(centers[j, 1]), radius))
        for i in members:
            serving[int(i)] = j
        load[j] = float(rates[members].sum())
    placements = _with_altitudes(placements, scenario.theta_max)
    return Solution("kmeans", placements, Assignment(serving, load),
                    meta={"seed": seed, "iterations": int(km.n_iter_)})


def _sequential(scenario: Scenario, method: str, stage_centers) -> Solution:
    pts, rates = scenario.positions, scenario.rates
    r_max = scenario.r_max
    pool = np.arange(scenario.n_ues)
    serving = {u.id: None for u in scenario.ues}
    load = {}
    placements = []
    stage_log = []
    for j in range(scenario.fleet_size):
        cap = float(scenario.capacities[j])
        count = 0
        if len(pool):
            centers, how = stage_centers(pts[pool])
            centers = np.clip(centers, 0.0, scenario.region_side)
            count, stage_load, ci, radius = best_single_disk(pts[pool], rates[pool], cap,
                                                             centers, r_max)
        else:
            how = "empty"
        if count == 0:
            # nothing left to serve: park a minimal disk at the region center
            c = (scenario.region_side / 2, scenario.region_side / 2)
            placements.append(Placement(j, c[0], c[1], MIN_RADIUS_M))
            load[j] = 0.0
            stage_log.append(how)
            continue
        c = centers[ci]
        d2 = ((pts[pool] - c) ** 2).sum(axis=1)
        order = np.argsort(d2, kind="stable")[:count]
        served = pool[order]
        for i in served:
            serving[int(i)] = j
        load[j] = float(rates[served].sum())
        placements.append(Placement(j, float(c[0]), float(c[1]), _clamp_radius(radius, r_max)))
        pool = np.setdiff1d(pool, served)
        stage_log.append(how)
    placements = _with_altitudes(placements, scenario.theta_max)
    return Solution(method, placements, Assignment(serving, load), meta={"stages": stage_log})


def greedy_placement(scenario: Scenario) -> Solution:
    """Place UAVs one by one, each maximizing newly served users.

    Candidate centers are the unserved users and their pairwise midpoints; each
    candidate serves its longest distance-ordered prefix within ``R_max`` and
    capacity. Ties go to the smaller load, then the earlier candidate.
    """
    return _sequential(scenario, "greedy",
                       lambda p: (default_center_candidates(p), "greedy"))


def sequential_exact_placement(scenario: Scenario,
                               max_checks: int = DEFAULT_MAX_CHECKS) -> Solution:
    def centers(p):
        n = len(p)
        n_cand = n + n * (n - 1) // 2 + n * (n - 1) * (n - 2) // 6
        if n_cand * n > max_checks:
            log.info("sequential-exact: %d candidates x %d UEs over budget, greedy stage",
                     n_cand, n)
            return default_center_candidates(p), "greedy-fallback"
        return default_center_candidates(p, triples=True), "exact"

    return _sequential(scenario, "sequential-exact", centers)


METHODS = {
    "random": lambda s, seed: random_placement(s, seed),
    "kmeans": lambda s, seed: kmeans_placement(s, seed),
    "greedy": lambda s, seed: greedy_placement(s),
    "sequential-exact": lambda s, seed: sequential_exact_placement(s),
}
