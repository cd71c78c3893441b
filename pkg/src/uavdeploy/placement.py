"""Assigning users to UAV disks, checking constraints, scoring, and an exact oracle.

A user is served by the nearest UAV whose coverage disk contains it, with ties
going to the lower UAV id. Capacity is not considered during assignment; it is
checked afterwards, per UAV.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .errors import BudgetExceededError, ValidationError
from .scenario import Scenario

DEFAULT_MAX_CHECKS = 10_000_000


@dataclass(frozen=True)
class Placement:
    uav_id: int
    x: float
    y: float
    radius: float
    altitude: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "radius", "altitude"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.radius > 0:
            raise ValidationError(f"UAV {self.uav_id}: radius must be positive, got {self.radius}")


@dataclass
class Assignment:
    serving: dict[int, Optional[int]]
    load: dict[int, float]

    @property
    def covered_count(self) -> int:
        return sum(1 for j in self.serving.values() if j is not None)

    def covered_ids(self) -> list[int]:
        return [i for i, j in self.serving.items() if j is not None]


def nearest_covering(centers: np.ndarray, radii: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the serving disk for every point, or -1.

    ``centers`` has shape ``(..., Q, 2)``, ``radii`` ``(..., Q)`` and ``points``
    ``(P, 2)``; the result has shape ``(..., P)``. Containment is ``d <= R``,
    evaluated on squared distances.
    """
    diff = points[..., None, :, :] - centers[..., :, None, :]
    d2 = np.einsum("...k,...k->...", diff, diff)
    inside = d2 <= (radii * radii)[..., None]
    masked = np.where(inside, d2, np.inf)
    idx = np.argmin(masked, axis=-2)
    served = np.any(inside, axis=-2)
    return np.where(served, idx, -1)


def loads_from_index(idx: np.ndarray, rates: np.ndarray, n_uavs: int) -> np.ndarray:
    """Sum of served rates per UAV for a batch of assignments ``(..., P)``."""
    batch = idx.shape[:-1]
    flat = idx.reshape(-1, idx.shape[-1])
    rows = np.arange(flat.shape[0])[:, None] * n_uavs
    served = flat >= 0
    bins = (rows + flat)[served]
    w = np.broadcast_to(rates, flat.shape)[served]
    out = np.bincount(bins, weights=w, minlength=flat.shape[0] * n_uavs)
    return out.reshape(*batch, n_uavs)


def _arrays(placements: Sequence[Placement]):
    centers = np.array([(p.x, p.y) for p in placements], dtype=float).reshape(-1, 2)
    radii = np.array([p.radius for p in placements], dtype=float)
    return centers, radii


def assign(scenario: Scenario, placements: Sequence[Placement]) -> Assignment:
    ids = [p.uav_id for p in placements]
    if len(set(ids)) != len(ids):
        raise ValidationError(f"duplicate UAV ids in placements: {ids}")
    # order by id so argmin's first-index tie-break means lower id
    ordered = sorted(placements, key=lambda p: p.uav_id)
    load = {p.uav_id: 0.0 for p in ordered}
    if not ordered or scenario.n_ues == 0:
        return Assignment({u.id: None for u in scenario.ues}, load)
    centers, radii = _arrays(ordered)
    idx = nearest_covering(centers, radii, scenario.positions)
    serving: dict[int, Optional[int]] = {}
    for ue, k in zip(scenario.ues, idx):
        if k < 0:
            serving[ue.id] = None
        else:
            j = ordered[k].uav_id
            serving[ue.id] = j
            load[j] += ue.rate
    return Assignment(serving, load)


def shed_overloaded(scenario: Scenario, placements: Sequence[Placement]) -> Assignment:
    """Nearest-disk assignment where an overloaded UAV keeps its nearest users
    that fit its capacity and leaves the rest unserved."""
    a = assign(scenario, placements)
    by_id = {p.uav_id: p for p in placements}
    caps = scenario.capacities
    rates = scenario.rates
    pts = scenario.positions
    for j, load in a.load.items():
        if load <= caps[j]:
            continue
        members = np.array([i for i, k in a.serving.items() if k == j])
        d2 = ((pts[members] - (by_id[j].x, by_id[j].y)) ** 2).sum(axis=1)
        members = members[np.argsort(d2, kind="stable")]
        keep = int(np.searchsorted(np.cumsum(rates[members]), caps[j], side="right"))
        for i in members[keep:]:
            a.serving[int(i)] = None
        a.load[j] = float(rates[members[:keep]].sum())
    return a


def capacity_ok(assignment: Assignment, scenario: Scenario) -> list[bool]:
    """Per-UAV capacity check (inclusive), in ascending UAV id order."""
    caps = scenario.capacities
    return [assignment.load[j] <= caps[j] for j in sorted(assignment.load)]


def objective(assignment: Assignment) -> int:
    return assignment.covered_count


@dataclass
class Solution:
    """A deployment plus the assignment it realizes."""

    method: str
    placements: list[Placement]
    assignment: Assignment
    meta: dict = field(default_factory=dict)

    @property
    def objective(self) -> int:
        return self.assignment.covered_count

    def coverage_ratio(self, n_ues: int) -> float:
        return self.objective / n_ues if n_ues else 1.0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "objective": self.objective,
            "placements": [{"uav_id": p.uav_id, "x": p.x, "y": p.y, "radius_m": p.radius,
                            "altitude_m": p.altitude} for p in self.placements],
            "load_bps": {str(j): v for j, v in sorted(self.assignment.load.items())},
            "covered_ue_ids": self.assignment.covered_ids(),
            "serving": {str(i): j for i, j in self.assignment.serving.items()},
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        placements = [Placement(int(p["uav_id"]), float(p["x"]), float(p["y"]),
                                float(p["radius_m"]), float(p["altitude_m"]))
                      for p in d["placements"]]
        serving = {int(i): (None if j is None else int(j)) for i, j in d["serving"].items()}
        load = {int(j): float(v) for j, v in d["load_bps"].items()}
        return cls(d["method"], placements, Assignment(serving, load), dict(d.get("meta", {})))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.dumps())


def check_solution(solution: Solution, scenario: Scenario, r_max: Optional[float] = None,
                   rtol: float = 1e-9) -> list[str]:
    """List every constraint violation in ``solution`` (empty when feasible)."""
    problems = []
    by_id = {p.uav_id: p for p in solution.placements}
    r_max = scenario.r_max if r_max is None else r_max
    for p in solution.placements:
        if not (0 < p.radius <= r_max * (1 + rtol)):
            problems.append(f"UAV {p.uav_id}: radius {p.radius} outside (0, {r_max}]")
        if not (0 <= p.x <= scenario.region_side and 0 <= p.y <= scenario.region_side):
            problems.append(f"UAV {p.uav_id}: center outside region")
    load = {j: 0.0 for j in by_id}
    for i, j in solution.assignment.serving.items():
        if j is None:
            continue
        if j not in by_id:
            problems.append(f"UE {i} served by unknown UAV {j}")
            continue
        ue = scenario.ues[i]
        p = by_id[j]
        if np.hypot(ue.x - p.x, ue.y - p.y) > p.radius * (1 + rtol):
            problems.append(f"UE {i} outside the disk of UAV {j}")
        load[j] += ue.rate
    caps = scenario.capacities
    for j, v in load.items():
        if v > caps[j]:
            problems.append(f"UAV {j} overloaded: {v} > {caps[j]}")
    return problems


def default_center_candidates(points: np.ndarray, triples: bool = False) -> np.ndarray:
    """UE positions, pairwise midpoints and optionally triple circumcenters."""
    n = len(points)
    cands = [points]
    if n >= 2:
        i, j = np.triu_indices(n, k=1)
        cands.append(0.5 * (points[i] + points[j]))
    if triples and n >= 3:
        tri = np.array(list(itertools.combinations(range(n), 3)))
        cc, ok = circumcenters(points[tri[:, 0]], points[tri[:, 1]], points[tri[:, 2]])
        cands.append(cc[ok])
    return np.concatenate(cands, axis=0)


def circumcenters(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray, rel_eps: float = 1e-9):
    """Circumcenters of triangles given row-wise; also a mask of non-degenerate rows."""
    b = p2 - p1
    c = p3 - p1
    det = 2.0 * (b[..., 0] * c[..., 1] - b[..., 1] * c[..., 0])
    bb = np.einsum("...k,...k->...", b, b)
    cc = np.einsum("...k,...k->...", c, c)
    scale = np.maximum(bb, cc)
    ok = np.abs(det) > rel_eps * np.where(scale > 0, scale, 1.0)
    safe = np.where(ok, det, 1.0)
    ux = (c[..., 1] * bb - b[..., 1] * cc) / safe
    uy = (b[..., 0] * cc - c[..., 0] * bb) / safe
    return p1 + np.stack([ux, uy], axis=-1), ok


def _radius_options(centers: np.ndarray, points: np.ndarray, r_max: float,
                    radius_options: Optional[Iterable[float]]) -> np.ndarray:
    """(x, y, r) options: every center paired with every admissible radius."""
    rows = []
    if radius_options is not None:
        radii = np.array(sorted(set(float(r) for r in radius_options)))
        radii = radii[(radii > 0) & (radii <= r_max)]
        for c in centers:
            rows.extend((c[0], c[1], r) for r in radii)
    else:
        for c in centers:
            d = np.sqrt(((points - c) ** 2).sum(axis=1))
            d = np.unique(d[d <= r_max])
            # nudge up one ulp so the squared comparison keeps the boundary UE
            r = np.minimum(np.nextafter(d, np.inf), r_max)
            r = r[r > 0]
            if r.size == 0:
                r = np.array([min(1.0, r_max)])
            rows.extend((c[0], c[1], v) for v in r)
    return np.array(rows, dtype=float).reshape(-1, 3)


def best_single_disk(points: np.ndarray, rates: np.ndarray, capacity: float,
                     centers: np.ndarray, r_max: float):
    """Exact best disk for one UAV over the given centers.

    For a fixed center the best disk serves the longest distance-ordered prefix
    of users that fits the capacity and does not split a group of equidistant
    users. Returns ``(count, load, center_index, radius)``; ties go to the
    smaller load, then the smaller center index. ``center_index`` is -1 when
    nothing can be served.
    """
    if len(points) == 0 or len(centers) == 0:
        return (0, 0.0, -1, 0.0)
    counts, loads, radii2 = _kernels.best_prefix_per_center(
        np.ascontiguousarray(points, dtype=float), np.ascontiguousarray(rates, dtype=float),
        float(capacity), np.ascontiguousarray(centers, dtype=float), float(r_max))
    k = int(np.lexsort((np.arange(len(counts)), loads, -counts))[0])
    if counts[k] == 0:
        return (0, 0.0, -1, 0.0)
    return (int(counts[k]), float(loads[k]), k, float(np.sqrt(radii2[k])))


def exact_small_solver(scenario: Scenario, radius_options: Optional[Iterable[float]] = None,
                       center_candidates: Optional[np.ndarray] = None,
                       max_checks: int = DEFAULT_MAX_CHECKS) -> tuple[list[Placement], int]:
    """Exhaustive optimum over a finite candidate set.

    Each UAV independently picks a center from ``center_candidates`` (default:
    UE positions and pairwise midpoints) and a radius from ``radius_options``
    (default: every center-to-UE distance up to ``R_max``). Every combination is
    assigned and capacity-filtered; the best feasible one is returned. Raises
    :class:`BudgetExceededError` if ``combinations * |P|`` exceeds ``max_checks``.
    """
    pts = scenario.positions
    rates = scenario.rates
    r_max = scenario.r_max
    q = scenario.fleet_size
    caps = scenario.capacities
    if scenario.n_ues == 0:
        return [], 0
    if center_candidates is None:
        center_candidates = default_center_candidates(pts)
    centers = np.clip(np.asarray(center_candidates, dtype=float).reshape(-1, 2), 0.0,
                      scenario.region_side)
    if q == 1 and radius_options is None:
        checks = len(centers) * scenario.n_ues
        if checks > max_checks:
            raise BudgetExceededError(f"{checks} checks exceeds budget {max_checks}")
        count, _, ci, radius = best_single_disk(pts, rates, float(caps[0]), centers, r_max)
        if count == 0:
            return [], 0
        radius = min(float(np.nextafter(radius, np.inf)), r_max)
        return [Placement(0, float(centers[ci, 0]), float(centers[ci, 1]), radius)], count
    return _enumerate(scenario, centers, radius_options, max_checks)


def _enumerate(scenario: Scenario, centers: np.ndarray, radius_options, max_checks: int):
    pts = scenario.positions
    rates = scenario.rates
    q = scenario.fleet_size
    caps = scenario.capacities
    options = _radius_options(centers, pts, scenario.r_max, radius_options)
    m = len(options)
    uniform = bool(np.all(caps == caps[0]))
    # identical UAVs: unordered combinations suffice
    n_combos = (_n_multisets(m, q) if uniform else m ** q)
    if n_combos * scenario.n_ues > max_checks:
        raise BudgetExceededError(
            f"{n_combos} combinations x {scenario.n_ues} UEs exceeds budget {max_checks}")
    combos = (itertools.combinations_with_replacement(range(m), q) if uniform
              else itertools.product(range(m), repeat=q))
    best_val, best_combo = -1, None
    chunk = max(1, 200_000 // max(1, q * scenario.n_ues))
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, q)
        opt = options[block]
        idx = nearest_covering(opt[..., :2], opt[..., 2], pts)
        loads = loads_from_index(idx, rates, q)
        feasible = np.all(loads <= caps, axis=1)
        counts = np.where(feasible, (idx >= 0).sum(axis=1), -1)
        k = int(np.argmax(counts))
        if counts[k] > best_val:
            best_val, best_combo = int(counts[k]), block[k]
    placements = [Placement(j, float(options[o, 0]), float(options[o, 1]), float(options[o, 2]))
                  for j, o in enumerate(best_combo)]
    return placements, best_val


def _n_multisets(m: int, q: int) -> int:
    return math.comb(m + q - 1, q)
