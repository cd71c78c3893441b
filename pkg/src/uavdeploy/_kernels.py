"""Compiled inner loops for the GA and the single-disk search."""
import numpy as np
from numba import njit


@njit(cache=True)
def population_fitness(pop, pts, rates, caps, penalty):
    d_pop, q, _ = pop.shape
    n = pts.shape[0]
    out = np.empty(d_pop, dtype=np.int64)
    load = np.empty(q)
    for d in range(d_pop):
        load[:] = 0.0
        count = 0
        for i in range(n):
            best = -1
            best_d2 = np.inf
            for j in range(q):
                dx = pts[i, 0] - pop[d, j, 0]
                dy = pts[i, 1] - pop[d, j, 1]
                d2 = dx * dx + dy * dy
                r = pop[d, j, 2]
                # strict < keeps the lower index on ties
                if d2 <= r * r and d2 < best_d2:
                    best = j
                    best_d2 = d2
            if best >= 0:
                count += 1
                load[best] += rates[i]
        over = False
        for j in range(q):
            if load[j] > caps[j]:
                over = True
        out[d] = penalty if over else count
    return out


@njit(cache=True)
def best_prefix_per_center(pts, rates, capacity, centers, r_max):
    """For every center: longest distance-ordered prefix within ``r_max`` and
    capacity that does not split equidistant users. Returns count, load and
    squared radius arrays."""
    m = centers.shape[0]
    n = pts.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    loads = np.zeros(m)
    radii2 = np.zeros(m)
    r2max = r_max * r_max
    # no prefix can hold more users than the cheapest ones that fit the capacity
    cheapest = np.sort(rates)
    k_cap = 0
    acc = 0.0
    while k_cap < n and acc + cheapest[k_cap] <= capacity:
        acc += cheapest[k_cap]
        k_cap += 1
    # one extra slot to detect a tie right after the last admissible user
    keep = min(n, k_cap + 1)
    d2 = np.empty(n)
    for c in range(m):
        for i in range(n):
            dx = pts[i, 0] - centers[c, 0]
            dy = pts[i, 1] - centers[c, 1]
            d2[i] = dx * dx + dy * dy
        if keep < n:
            thresh = np.partition(d2, keep - 1)[keep - 1]
            cand = np.flatnonzero(d2 <= thresh)
        else:
            cand = np.arange(n)
        order = cand[np.argsort(d2[cand], kind="mergesort")]
        cum = 0.0
        best_k = 0
        best_load = 0.0
        best_r2 = 0.0
        for k in range(len(order)):
            i = order[k]
            if d2[i] > r2max:
                break
            cum += rates[i]
            if cum > capacity:
                break
            if k + 1 < len(order) and d2[order[k + 1]] == d2[i]:
                continue
            best_k = k + 1
            best_load = cum
            best_r2 = d2[i]
        counts[c] = best_k
        loads[c] = best_load
        radii2[c] = best_r2
    return counts, loads, radii2
