"""Probabilistic air-to-ground path loss and the geometry it implies.

A UAV at altitude ``h`` reaches a ground user at horizontal distance ``r``
through a line-of-sight link with a probability that depends only on the
elevation angle. The mean path loss mixes the LoS and NLoS excess losses with
that probability on top of free-space loss. For a fixed loss budget there is a
single elevation angle that maximizes the coverage radius; flying at that angle
also minimizes the cell-edge loss for any given radius.

All functions are pure. ``los_probability`` and ``path_loss`` accept scalars or
numpy arrays for the geometry arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import InfeasibleModelError, NoOptimalAngleError, ValidationError

SPEED_OF_LIGHT = 299_792_458.0

THETA_BRACKET_DEG = (0.1, 89.9)
THETA_SCAN_STEP_DEG = 0.1
THETA_RESIDUAL_TOL = 1e-9
RADIUS_TOL_M = 1e-6


class EnvironmentLabel(str, Enum):
    SUBURBAN = "suburban"
    URBAN = "urban"
    DENSE_URBAN = "dense-urban"
    HIGH_RISE = "high-rise"


@dataclass(frozen=True)
class Environment:
    """Propagation environment ``(a, b, eta_los, eta_nlos)``.

    ``a`` and ``b`` shape the LoS probability curve; the etas are the mean
    excess losses in dB for LoS and NLoS links.
    """

    a: float
    b: float
    eta_los: float
    eta_nlos: float
    label: Optional[EnvironmentLabel] = None

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError(f"a and b must be positive, got a={self.a}, b={self.b}")
        if not (self.eta_nlos >= self.eta_los >= 0):
            raise ValidationError(
                f"need eta_nlos >= eta_los >= 0, got {self.eta_los}, {self.eta_nlos}")

    @property
    def A(self) -> float:
        """LoS minus NLoS excess loss (dB, never positive)."""
        return self.eta_los - self.eta_nlos

    @property
    def name(self) -> str:
        return self.label.value if self.label is not None else "custom"


PRESETS = {
    EnvironmentLabel.SUBURBAN: Environment(4.88, 0.43, 0.1, 21.0, EnvironmentLabel.SUBURBAN),
    EnvironmentLabel.URBAN: Environment(9.61, 0.43, 0.1, 20.0, EnvironmentLabel.URBAN),
    EnvironmentLabel.DENSE_URBAN: Environment(12.08, 0.11, 1.6, 23.0, EnvironmentLabel.DENSE_URBAN),
    EnvironmentLabel.HIGH_RISE: Environment(27.23, 0.08, 2.3, 34.0, EnvironmentLabel.HIGH_RISE),
}


def environment(name: str | EnvironmentLabel) -> Environment:
    """Look up a preset by label, e.g. ``environment("urban")``."""
    try:
        return PRESETS[EnvironmentLabel(name)]
    except ValueError:
        choices = ", ".join(lbl.value for lbl in EnvironmentLabel)
        raise ValidationError(f"unknown environment {name!r} (choose from {choices})") from None


def fspl_db(d: float, f_c: float) -> float:
    """Free-space loss at distance ``d`` meters."""
    return 20.0 * math.log10(4.0 * math.pi * f_c * d / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class ChannelConfig:
    env: Environment
    f_c: float = 2e9
    pl_max: float = 110.0

    def __post_init__(self):
        if not self.f_c > 0:
            raise ValidationError(f"carrier frequency must be positive, got {self.f_c}")
        if not self.pl_max > fspl_db(1.0, self.f_c):
            raise ValidationError(
                f"pl_max={self.pl_max} dB does not exceed free-space loss at 1 m "
                f"({fspl_db(1.0, self.f_c):.2f} dB)")

    @property
    def B(self) -> float:
        """Free-space constant at 1 m plus the NLoS excess loss (dB)."""
        return 20.0 * math.log10(4.0 * math.pi * self.f_c / SPEED_OF_LIGHT) + self.env.eta_nlos


@dataclass(frozen=True)
class RadiusAltitudeSolution:
    r_max: float
    h_max: float
    theta_max: float


def _los_from_deg(env: Environment, elevation_deg):
    return 1.0 / (1.0 + env.a * np.exp(-env.b * (elevation_deg - env.a)))


def los_probability(env: Environment, r, h):
    """Probability of a line-of-sight link at horizontal distance ``r``, altitude ``h``.

    ``r = 0`` is the directly-overhead limit (90 degrees elevation).
    """
    elevation = np.degrees(np.arctan2(h, r))
    p = _los_from_deg(env, elevation)
    return float(p) if np.ndim(p) == 0 else p


def path_loss(cfg: ChannelConfig, r, h):
    """Mean air-to-ground path loss in dB."""
    r = np.asarray(r, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any((r == 0) & (h == 0)):
        raise ValidationError("path loss is undefined at zero distance")
    d = np.hypot(r, h)
    p_los = _los_from_deg(cfg.env, np.degrees(np.arctan2(h, r)))
    pl = cfg.env.A * p_los + 20.0 * np.log10(d) + cfg.B
    return float(pl) if pl.ndim == 0 else pl


def bisect(f: Callable[[float], float], lo: float, hi: float, *,
           xtol: float = 0.0, ftol: float = 0.0, max_iter: int = 200) -> float:
    """Root of ``f`` on ``[lo, hi]`` where ``f(lo) < 0 < f(hi)``.

    Stops when the bracket is narrower than ``xtol``, when ``|f(mid)| <= ftol``,
    or when the bracket cannot shrink in floating point. Returns the midpoint
    of the final bracket (or the point satisfying ``ftol``).
    """
    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0 < f_hi):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={f_lo}, {f_hi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if abs(f_mid) <= ftol:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def theta_residual(env: Environment, theta: float) -> float:
    """Stationarity condition of the coverage radius in the elevation angle (radians)."""
    e = math.exp(-env.b * (math.degrees(theta) - env.a))
    return (math.pi / (9.0 * math.log(10.0)) * math.tan(theta)
            + env.a * env.b * env.A * e / (env.a * e + 1.0) ** 2)


def _log_radius_gain(env: Environment, theta: float) -> float:
    # log10 of the frontier radius at angle theta, up to a budget-dependent constant
    return -env.A * float(_los_from_deg(env, math.degrees(theta))) / 20.0 + math.log10(math.cos(theta))


def theta_max(env: Environment) -> float:
    """Elevation angle (radians) that maximizes coverage radius for any budget.

    The residual can have several roots (high-rise has three). Every upward
    sign change on a 0.1 degree scan is refined by bisection and the root with
    the largest frontier radius wins.
    """
    lo_deg, hi_deg = THETA_BRACKET_DEG
    n = int(round((hi_deg - lo_deg) / THETA_SCAN_STEP_DEG))
    grid = np.radians(np.linspace(lo_deg, hi_deg, n + 1))
    res = [theta_residual(env, t) for t in grid]
    roots = []
    for k in range(n):
        if res[k] < 0 <= res[k + 1]:
            if res[k + 1] == 0:
                roots.append(float(grid[k + 1]))
                continue
            roots.append(bisect(lambda t: theta_residual(env, t), float(grid[k]), float(grid[k + 1]),
                                ftol=THETA_RESIDUAL_TOL))
    if not roots:
        raise NoOptimalAngleError(f"no optimal angle in ({lo_deg}, {hi_deg}) degrees for {env}")
    return max(roots, key=lambda t: _log_radius_gain(env, t))


def _upper_bracket(g: Callable[[float], float], start: float) -> float:
    hi = start
    while g(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise InfeasibleModelError("path loss never reaches the budget")
    return hi


def radius_for_altitude(cfg: ChannelConfig, h: float) -> Optional[float]:
    """Largest horizontal radius whose edge loss equals ``pl_max`` at altitude ``h``.

    Returns ``None`` when the altitude alone exhausts the budget.
    """
    if not h > 0:
        raise ValidationError(f"altitude must be positive, got {h}")
    if path_loss(cfg, 0.0, h) > cfg.pl_max:
        return None

    def g(r):
        return path_loss(cfg, r, h) - cfg.pl_max

    if g(0.0) == 0:
        return 0.0
    hi = _upper_bracket(g, max(h, 1.0))
    return bisect(g, 0.0, hi, xtol=RADIUS_TOL_M)


def max_radius(cfg: ChannelConfig) -> RadiusAltitudeSolution:
    """Maximum feasible coverage radius and the altitude that achieves it."""
    theta = theta_max(cfg.env)
    tan_t = math.tan(theta)

    def g(r):
        return path_loss(cfg, r, r * tan_t) - cfg.pl_max

    if g(1.0) >= 0:
        raise InfeasibleModelError("budget below minimum achievable loss")
    hi = _upper_bracket(g, 1.0)
    r = bisect(g, 1.0, hi, xtol=RADIUS_TOL_M)
    return RadiusAltitudeSolution(r_max=r, h_max=r * tan_t, theta_max=theta)


def optimal_altitude(r, theta_max: float):
    """Altitude that minimizes the cell-edge loss for radius ``r``."""
    return r * math.tan(theta_max) if np.ndim(r) == 0 else np.asarray(r) * math.tan(theta_max)


def pl_altitude_curve(cfg: ChannelConfig, r: float, h_grid) -> list[tuple[float, float]]:
    """Tabulate path loss against altitude for a fixed radius."""
    h = np.asarray(h_grid, dtype=float)
    if h.size == 0:
        raise ValidationError("altitude grid is empty")
    if h.size > 1 and np.any(np.diff(h) <= 0):
        raise ValidationError("altitude grid must be increasing")
    pl = np.atleast_1d(path_loss(cfg, np.full_like(h, r), h))
    return [(float(a), float(b)) for a, b in zip(h, pl)]


def feasible_altitude_band(cfg: ChannelConfig, r: float, theta: Optional[float] = None,
                           tol_db: float = 1e-6) -> Optional[tuple[float, float]]:
    """Altitude interval where the edge loss for radius ``r`` stays within budget.

    Edge loss is unimodal in altitude with its minimum at the optimal altitude,
    so each end of the band is one bisection. Returns ``None`` if even the
    optimal altitude exceeds the budget by more than ``tol_db`` (radii at
    ``R_max`` sit on the budget up to bisection error).
    """
    if theta is None:
        theta = theta_max(cfg.env)
    h_opt = optimal_altitude(r, theta)

    def g(h):
        return path_loss(cfg, r, h) - cfg.pl_max

    g_opt = g(h_opt)
    if g_opt > tol_db:
        return None
    if g_opt >= 0:
        return (h_opt, h_opt)
    if g(0.0) <= 0:
        h_lo = 0.0
    else:
        h_lo = min(bisect(lambda h: -g(h), 0.0, h_opt, xtol=RADIUS_TOL_M) + RADIUS_TOL_M, h_opt)
    h_hi = bisect(g, h_opt, _upper_bracket(g, max(2.0 * h_opt, 1.0)), xtol=RADIUS_TOL_M)
    h_hi = max(h_hi - RADIUS_TOL_M, h_opt)
    return (h_lo, h_hi)
