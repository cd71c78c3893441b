"""Problem instances: ground users with rate demands, the UAV fleet, the channel.

Scenarios serialize to a JSON document::

    {
      "region_side_m": 5000.0,
      "seed": 7,
      "fleet_size": 10,
      "capacity_bps": 1e8,            # or one value per UAV
      "channel": {"env": "urban", "f_c_hz": 2e9, "pl_max_db": 110.0},
      "ues": [{"id": 0, "x": 12.5, "y": 4410.0, "rate_bps": 5e6}, ...]
    }

A custom environment is written as an object with keys ``a``, ``b``,
``eta_los``, ``eta_nlos`` in place of the preset name.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from . import rng as rng_mod
from .channel import ChannelConfig, Environment, environment, max_radius
from .errors import ValidationError

DEFAULT_RATES = (5e6, 2e6, 1e6)
DEFAULT_SIDE_M = 5000.0
DEFAULT_CAPACITY_BPS = 1e8
DEFAULT_FLEET_SIZE = 10


@dataclass(frozen=True)
class UserEquipment:
    id: int
    x: float
    y: float
    rate: float


@dataclass(frozen=True)
class Scenario:
    region_side: float
    ues: tuple[UserEquipment, ...]
    fleet_size: int
    uav_capacity: Union[float, tuple[float, ...]]
    channel: ChannelConfig
    seed: int = 0

    def __post_init__(self):
        if not self.region_side > 0:
            raise ValidationError(f"region side must be positive, got {self.region_side}")
        if self.fleet_size < 1:
            raise ValidationError(f"fleet size must be at least 1, got {self.fleet_size}")
        caps = self.capacities
        if np.any(caps <= 0):
            raise ValidationError("UAV capacity must be positive")
        for i, ue in enumerate(self.ues):
            if ue.id != i:
                raise ValidationError(f"UE ids must be 0..n-1 in order; position {i} has id {ue.id}")
            if not (0 <= ue.x <= self.region_side and 0 <= ue.y <= self.region_side):
                raise ValidationError(f"UE {ue.id} at ({ue.x}, {ue.y}) lies outside the region")
            if not ue.rate > 0:
                raise ValidationError(f"UE {ue.id} has non-positive rate {ue.rate}")
            if ue.rate > caps.min():
                raise ValidationError(f"UE {ue.id} demands {ue.rate} bps, above UAV capacity")

    @property
    def n_ues(self) -> int:
        return len(self.ues)

    @cached_property
    def positions(self) -> np.ndarray:
        pos = np.array([(u.x, u.y) for u in self.ues], dtype=float).reshape(-1, 2)
        pos.flags.writeable = False
        return pos

    @cached_property
    def rates(self) -> np.ndarray:
        r = np.array([u.rate for u in self.ues], dtype=float)
        r.flags.writeable = False
        return r

    @cached_property
    def capacities(self) -> np.ndarray:
        if isinstance(self.uav_capacity, tuple):
            if len(self.uav_capacity) != self.fleet_size:
                raise ValidationError("per-UAV capacity list must match the fleet size")
            caps = np.array(self.uav_capacity, dtype=float)
        else:
            caps = np.full(self.fleet_size, float(self.uav_capacity))
        caps.flags.writeable = False
        return caps

    @cached_property
    def r_max(self) -> float:
        return max_radius(self.channel).r_max

    @cached_property
    def theta_max(self) -> float:
        return max_radius(self.channel).theta_max

    def with_positions(self, positions: np.ndarray) -> "Scenario":
        ues = tuple(UserEquipment(u.id, float(p[0]), float(p[1]), u.rate)
                    for u, p in zip(self.ues, positions))
        return replace(self, ues=ues)


def generate(seed: int, n_ues: int, side_m: float = DEFAULT_SIDE_M,
             rate_mix: Optional[Mapping[float, float]] = None,
             fleet_size: int = DEFAULT_FLEET_SIZE, capacity: float = DEFAULT_CAPACITY_BPS,
             channel: Optional[ChannelConfig] = None) -> Scenario:
    """Uniformly scattered users with i.i.d. rate classes.

    ``rate_mix`` maps a rate (bps) to its probability; the default picks each of
    5, 2 and 1 Mbps with equal probability.
    """
    if n_ues < 0:
        raise ValidationError(f"number of UEs must be non-negative, got {n_ues}")
    if not side_m > 0:
        raise ValidationError(f"region side must be positive, got {side_m}")
    if rate_mix is None:
        rate_mix = {r: 1.0 / len(DEFAULT_RATES) for r in DEFAULT_RATES}
    rates = np.array(list(rate_mix.keys()), dtype=float)
    probs = np.array(list(rate_mix.values()), dtype=float)
    if np.any(rates <= 0) or np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-9):
        raise ValidationError(f"rate_mix must be a distribution over positive rates: {rate_mix}")
    if channel is None:
        channel = ChannelConfig(environment("urban"))

    pos = rng_mod.stream(seed, "positions").uniform(0.0, side_m, size=(n_ues, 2))
    idx = rng_mod.stream(seed, "rates").choice(len(rates), size=n_ues, p=probs / probs.sum())
    ues = tuple(UserEquipment(i, float(p[0]), float(p[1]), float(rates[k]))
                for i, (p, k) in enumerate(zip(pos, idx)))
    return Scenario(float(side_m), ues, int(fleet_size), float(capacity), channel, int(seed))


def perturb_locations(s: Scenario, max_err_m: float, seed: int) -> Scenario:
    """Displace every user by up to ``max_err_m`` in a uniform random direction.

    The displacement magnitude is Uniform[0, max_err_m]; results are clamped to
    the region. ``s`` is not modified.
    """
    if max_err_m < 0:
        raise ValidationError(f"max error must be non-negative, got {max_err_m}")
    g = rng_mod.stream(seed, "perturbation")
    n = s.n_ues
    mag = g.uniform(0.0, max_err_m, size=n)
    ang = g.uniform(0.0, 2.0 * math.pi, size=n)
    if max_err_m == 0:
        return s
    offset = np.column_stack([mag * np.cos(ang), mag * np.sin(ang)])
    moved = np.clip(s.positions + offset, 0.0, s.region_side)
    return s.with_positions(moved)


def _env_to_json(env: Environment):
    if env.label is not None:
        return env.label.value
    return {"a": env.a, "b": env.b, "eta_los": env.eta_los, "eta_nlos": env.eta_nlos}


def _env_from_json(obj) -> Environment:
    if isinstance(obj, str):
        return environment(obj)
    try:
        return Environment(float(obj["a"]), float(obj["b"]), float(obj["eta_los"]),
                           float(obj["eta_nlos"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed environment: {obj!r}") from exc


def to_dict(s: Scenario) -> dict:
    cap = list(s.uav_capacity) if isinstance(s.uav_capacity, tuple) else s.uav_capacity
    return {
        "region_side_m": s.region_side,
        "seed": s.seed,
        "fleet_size": s.fleet_size,
        "capacity_bps": cap,
        "channel": {"env": _env_to_json(s.channel.env), "f_c_hz": s.channel.f_c,
                    "pl_max_db": s.channel.pl_max},
        "ues": [{"id": u.id, "x": u.x, "y": u.y, "rate_bps": u.rate} for u in s.ues],
    }


def from_dict(d: Mapping) -> Scenario:
    try:
        ch = d["channel"]
        channel = ChannelConfig(_env_from_json(ch["env"]), float(ch["f_c_hz"]),
                                float(ch["pl_max_db"]))
        cap = d["capacity_bps"]
        cap = tuple(float(c) for c in cap) if isinstance(cap, (list, tuple)) else float(cap)
        ues = tuple(UserEquipment(int(u["id"]), float(u["x"]), float(u["y"]), float(u["rate_bps"]))
                    for u in d["ues"])
        return Scenario(float(d["region_side_m"]), ues, int(d["fleet_size"]), cap, channel,
                        int(d["seed"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed scenario: {exc}") from exc


def dumps(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=1) + "\n"


def save(s: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(s))


def load(path: Union[str, Path]) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ValidationError(f"cannot read scenario {path}: {exc}") from exc
    return from_dict(data)
