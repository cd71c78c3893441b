import numpy as np
import pytest

from uavdeploy.channel import ChannelConfig, environment
from uavdeploy.scenario import Scenario, UserEquipment, generate

URBAN = ChannelConfig(environment("urban"))


def make_scenario(points, rates, fleet=1, capacity=1e8, side=5000.0, channel=URBAN, seed=0):
    ues = tuple(UserEquipment(i, float(x), float(y), float(r))
                for i, ((x, y), r) in enumerate(zip(points, rates)))
    return Scenario(side, ues, fleet, capacity, channel, seed)


def small_instances():
    """Ten hand-built instances with at most 10 users and 2 UAVs."""
    M = 1e6
    out = []
    # 1: one tight cluster, ample capacity
    out.append(make_scenario([(2500, 2500), (2510, 2490), (2490, 2520), (2520, 2505), (2505, 2480)],
                             [5 * M] * 5))
    # 2: capacity admits four of six clustered users
    out.append(make_scenario([(1000 + 30 * k, 1000 + 20 * (k % 2)) for k in range(6)],
                             [5 * M] * 6, capacity=20 * M))
    # 3: two far clusters, two UAVs, five users each fit exactly
    pts = [(300 + 15 * k, 400) for k in range(5)] + [(4600 - 15 * k, 4500) for k in range(5)]
    out.append(make_scenario(pts, [5 * M] * 10, fleet=2, capacity=25 * M))
    # 4: mixed rates; cheap users clustered, expensive ones on the rim
    pts = [(2500, 2500), (2505, 2500), (2500, 2505), (2495, 2500), (2800, 2500), (2500, 2800)]
    out.append(make_scenario(pts, [1 * M, 1 * M, 2 * M, 2 * M, 5 * M, 5 * M], capacity=6 * M))
    # 5: one user out of reach of any disk holding the rest
    pts = [(100, 100), (150, 120), (130, 160), (4900, 4900)]
    out.append(make_scenario(pts, [2 * M] * 4, capacity=6 * M))
    # 6: two UAVs, one cluster too heavy for one
    pts = [(2000 + 40 * k, 2000 + 25 * (k % 3)) for k in range(8)]
    out.append(make_scenario(pts, [5 * M] * 8, fleet=2, capacity=20 * M))
    # 7: a line of users, single UAV with room for three
    pts = [(500 * k + 250, 2500) for k in range(8)]
    out.append(make_scenario(pts, [5 * M] * 8, capacity=15 * M))
    # 8: heterogeneous capacities
    pts = [(800, 800), (820, 810), (790, 830), (4200, 4100), (4180, 4120), (4220, 4090), (4210, 4140)]
    out.append(make_scenario(pts, [5 * M] * 7, fleet=2, capacity=(10 * M, 20 * M)))
    # 9: small region, dense users, capacity binds
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 600, size=(10, 2))
    out.append(make_scenario(pts, [2 * M, 1 * M] * 5, fleet=2, capacity=6 * M, side=600.0))
    # 10: uniform random scatter over the full region
    s = generate(10, 9, fleet_size=2, capacity=15e6)
    out.append(s)
    return out


@pytest.fixture(scope="session")
def urban():
    return URBAN


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(n: int, ok: bool, detail: str):
        _CRITERIA[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
