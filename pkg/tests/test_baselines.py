import numpy as np
import pytest

from uavdeploy import baselines as bl, placement as pl
from uavdeploy.errors import ValidationError
from uavdeploy.scenario import generate

from conftest import make_scenario

M = 1e6


@pytest.fixture(scope="module")
def scen():
    return generate(21, 150, fleet_size=5, capacity=6e7)


@pytest.mark.parametrize("method", list(bl.METHODS))
def test_feasible_and_in_region(scen, method):
    sol = bl.METHODS[method](scen, 3)
    assert pl.check_solution(sol, scen) == []
    assert len(sol.placements) == scen.fleet_size
    assert 0 <= sol.objective <= scen.n_ues
    for p in sol.placements:
        assert p.altitude == pytest.approx(p.radius * np.tan(scen.theta_max))


@pytest.mark.parametrize("method", ["random", "kmeans"])
def test_seeded(scen, method):
    a, b = bl.METHODS[method](scen, 5), bl.METHODS[method](scen, 5)
    assert a.dumps() == b.dumps()


class TestRandom:
    def test_uniform_draw_kept(self):
        s = generate(2, 300, fleet_size=10)
        sols = [bl.random_placement(s, seed=k) for k in range(30)]
        radii = np.array([p.radius for sol in sols for p in sol.placements])
        assert radii.min() >= 1.0 and radii.max() <= s.r_max
        # radii are not conditioned on feasibility
        assert radii.mean() > 0.4 * s.r_max

    def test_sheds_overload(self):
        # ten 5 Mbps users packed together; capacity fits two
        pts = [(2500 + k, 2500) for k in range(10)]
        s = make_scenario(pts, [5 * M] * 10, fleet=1, capacity=10 * M)
        for k in range(5):
            sol = bl.random_placement(s, seed=k)
            assert pl.check_solution(sol, s) == []
            assert sol.objective in (0, 2)


class TestKmeans:
    def test_two_clusters(self):
        pts = [(500 + k, 500) for k in range(5)] + [(4000 + k, 4000) for k in range(5)]
        s = make_scenario(pts, [M] * 10, fleet=2)
        sol = bl.kmeans_placement(s, seed=0)
        assert sol.objective == 10
        xs = sorted(p.x for p in sol.placements)
        assert xs[0] == pytest.approx(502) and xs[1] == pytest.approx(4002)

    def test_sheds_farthest(self):
        pts = [(1000, 1000), (1010, 1000), (1000, 1030), (1060, 1000)]
        s = make_scenario(pts, [5 * M] * 4, capacity=10 * M)
        sol = bl.kmeans_placement(s, seed=0)
        assert sol.objective == 2
        assert pl.check_solution(sol, s) == []

    def test_too_few_users(self):
        with pytest.raises(ValidationError):
            bl.kmeans_placement(make_scenario([(0, 0)], [M], fleet=2), seed=0)


class TestSequential:
    def test_greedy_fills_clusters_in_order(self):
        pts = [(500 + k, 500) for k in range(6)] + [(4000 + k, 4000) for k in range(3)]
        # one disk could reach both clusters; capacity keeps them apart
        s = make_scenario(pts, [M] * 9, fleet=2, capacity=6 * M)
        sol = bl.greedy_placement(s)
        assert sol.objective == 9
        assert sol.assignment.load[0] == 6 * M

    def test_leftover_uav_parked(self):
        s = make_scenario([(100, 100)], [M], fleet=3)
        sol = bl.greedy_placement(s)
        assert sol.objective == 1
        assert [p.radius for p in sol.placements[1:]] == [bl.MIN_RADIUS_M] * 2
        assert pl.check_solution(sol, s) == []

    def test_exact_at_least_greedy_first_stage(self, scen):
        g, e = bl.greedy_placement(scen), bl.sequential_exact_placement(scen, max_checks=10**7)
        assert e.assignment.load is not None
        first = lambda sol: sum(1 for j in sol.assignment.serving.values() if j == 0)
        assert first(e) >= first(g)

    def test_fallback_logged(self, scen):
        sol = bl.sequential_exact_placement(scen, max_checks=1000)
        assert sol.meta["stages"][0] == "greedy-fallback"
