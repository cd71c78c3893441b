"""Shannon link budget and transmit power under different altitude policies.

Required transmit power is the required received power plus the cell-edge
path loss. The ``optimal`` policy flies each UAV at ``R * tan(theta_max)``;
``fixed`` flies the whole fleet at one altitude; ``random`` draws each UAV's
altitude uniformly from the band where its cell edge stays within budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import rng as rng_mod
from .channel import ChannelConfig, feasible_altitude_band, optimal_altitude, path_loss, theta_max
from .errors import InfeasibleModelError, ValidationError
from .placement import Placement, Solution

POLICIES = ("optimal", "fixed", "random")
DEFAULT_RX_DBM = -74.0


@dataclass(frozen=True)
class LinkBudget:
    bandwidth_hz: float = 1e7
    noise_dbm: float = -100.0
    rx_dbm: float = DEFAULT_RX_DBM
    capacity_bps: float = 1e8

    def __post_init__(self):
        if not (self.bandwidth_hz > 0 and self.capacity_bps > 0):
            raise ValidationError("bandwidth and capacity must be positive")

    @property
    def shannon_rx_dbm(self) -> float:
        """Received power that exactly supports ``capacity_bps`` over the noise floor."""
        return self.noise_dbm + required_snr_db(self.capacity_bps, self.bandwidth_hz)


def required_snr_db(capacity_bps: float, bandwidth_hz: float) -> float:
    """SNR (dB) at which a ``bandwidth_hz`` channel carries ``capacity_bps``."""
    if not (capacity_bps > 0 and bandwidth_hz > 0):
        raise ValidationError("capacity and bandwidth must be positive")
    # expm1 keeps tiny spectral efficiencies finite instead of log10(0)
    return 10.0 * math.log10(math.expm1(capacity_bps / bandwidth_hz * math.log(2.0)))


def tx_power_dbm(rx_dbm: float, pl_db: float) -> float:
    return rx_dbm + pl_db


def _altitudes(placements: Sequence[Placement], policy: str, channel: ChannelConfig,
               theta: float, seed: int, fixed_altitude: Optional[float]) -> np.ndarray:
    radii = np.array([p.radius for p in placements], dtype=float)
    if policy == "optimal":
        return np.array([optimal_altitude(r, theta) for r in radii])
    if policy == "fixed":
        if fixed_altitude is None:
            # the largest radius has the narrowest band, nested inside all others
            fixed_altitude = optimal_altitude(float(radii.max()), theta)
        for p in placements:
            band = feasible_altitude_band(channel, p.radius, theta)
            if band is None or not band[0] <= fixed_altitude <= band[1]:
                raise InfeasibleModelError(
                    f"fixed altitude {fixed_altitude:.1f} m violates the path-loss budget "
                    f"for UAV {p.uav_id} (radius {p.radius:.1f} m)")
        return np.full(len(radii), float(fixed_altitude))
    if policy == "random":
        g = rng_mod.stream(seed, "altitude")
        out = np.empty(len(radii))
        for k, p in enumerate(placements):
            band = feasible_altitude_band(channel, p.radius, theta)
            if band is None:
                raise InfeasibleModelError(f"UAV {p.uav_id}: radius {p.radius:.1f} m has no "
                                           "feasible altitude")
            out[k] = g.uniform(band[0], band[1])
        return out
    raise ValidationError(f"unknown altitude policy {policy!r} (choose from {POLICIES})")


def per_uav_tx_power(solution: Solution, policy: str, channel: ChannelConfig, seed: int = 0,
                     rx_dbm: float = DEFAULT_RX_DBM,
                     fixed_altitude: Optional[float] = None) -> np.ndarray:
    """Minimum transmit power (dBm) of each UAV under an altitude policy."""
    placements = solution.placements
    if not placements:
        return np.empty(0)
    theta = theta_max(channel.env)
    h = _altitudes(placements, policy, channel, theta, seed, fixed_altitude)
    radii = np.array([p.radius for p in placements], dtype=float)
    return tx_power_dbm(rx_dbm, np.asarray(path_loss(channel, radii, h)))


def altitude_policy_power(solution: Solution, policy: str, channel: ChannelConfig,
                          seed: int = 0, rx_dbm: float = DEFAULT_RX_DBM,
                          fixed_altitude: Optional[float] = None) -> float:
    """Fleet-mean transmit power (dBm) under ``policy``."""
    return float(np.mean(per_uav_tx_power(solution, policy, channel, seed, rx_dbm,
                                          fixed_altitude)))
