import json

import numpy as np
import pytest

from uavdeploy import cli, experiments as ex, placement as pl
from uavdeploy.scenario import generate

from conftest import make_scenario

M = 1e6
FAST = ["--iterations", "40", "--population", "10"]


def run(argv, capsys=None):
    code = cli.main(argv)
    out = capsys.readouterr().out if capsys else ""
    return code, out


def meta_line(path):
    return path.read_text().splitlines()[0]


class TestHelpers:
    @pytest.mark.parametrize("hist,expected", [
        ([0, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2], 2),
        ([0, 0, 0, 0, 0], 0),
        ([0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10], None),
        # 10 generations: last improvement at 8 leaves 2 >= 1.5 flat
        ([0, 1, 1, 1, 1, 1, 1, 1, 5, 5, 5], 8),
        ([0, 1, 1, 1, 1, 1, 1, 1, 1, 5, 5], None),
    ])
    def test_min_required_iteration(self, hist, expected):
        assert ex.min_required_iteration(np.array(hist)) == expected

    def test_coverage_clips_penalty(self):
        assert ex.coverage(-100, 50) == 0.0
        assert ex.coverage(25, 50) == 0.5

    def test_realized_coverage_sheds(self):
        pts = [(0, 0), (1, 0), (2, 0), (3, 0)]
        s = make_scenario(pts, [5 * M] * 4, capacity=10 * M, side=10.0)
        ps = [pl.Placement(0, 0, 0, 5)]
        assert ex.realized_coverage(s, ps) == 0.5

    def test_realized_equals_objective_when_feasible(self):
        s = generate(3, 60, fleet_size=3)
        sol, obj, _ = ex.solve(s, "ga", 0, ex.ga.GaParams(100, 20))
        assert obj > 0
        assert ex.realized_coverage(s, sol.placements) == obj / 60

    def test_zero_perturbation_identical(self):
        rows = ex.robustness_runs([0, 1], sizes=[30], ga_params=ex.ga.GaParams(30, 10),
                                  max_err_m=0.0)
        by = {(r["arm"], r["seed"]): r["coverage"] for r in rows}
        assert by[("clean", 0)] == by[("perturbed", 0)]
        assert by[("clean", 1)] == by[("perturbed", 1)]

    def test_mean_table(self):
        runs = [{"m": "a", "n_ues": 1, "coverage": 0.2}, {"m": "a", "n_ues": 1, "coverage": 0.4},
                {"m": "b", "n_ues": 1, "coverage": 1.0}]
        assert ex.mean_table(runs, "m") == [{"m": "a", "n1": pytest.approx(0.3)},
                                            {"m": "b", "n1": 1.0}]

    def test_unknown_method(self):
        with pytest.raises(ex.ValidationError):
            ex.solve(generate(0, 5), "annealing", 0)


class TestCurves:
    def test_two_budgets(self, tmp_path, capsys):
        code, out = run(["curves", "--out", str(tmp_path), "--pl-max-list", "110,120",
                         "--h-step-m", "500", "--h-max-m", "3000", "--radii", "1000"], capsys)
        assert code == 0 and "r_max_m=3288.566" in out
        rows = cli.read_csv(tmp_path / "frontier.csv")
        assert {r["pl_max_db"] for r in rows} == {"110.0", "120.0"}
        assert meta_line(tmp_path / "frontier.csv").startswith("# seed=0 version=v")

    def test_frontier_rises_then_falls(self, tmp_path):
        run(["curves", "--out", str(tmp_path), "--pl-max-list", "110", "--h-step-m", "100",
             "--h-max-m", "3000"])
        r = [float(x["r_m"]) for x in cli.read_csv(tmp_path / "frontier.csv")]
        k = int(np.argmax(r))
        assert 0 < k < len(r) - 1
        assert np.all(np.diff(r[:k + 1]) > 0) and np.all(np.diff(r[k:]) < 0)

    def test_single_point_and_infeasible_rows(self, tmp_path):
        run(["curves", "--out", str(tmp_path), "--pl-max-list", "39,110", "--h-step-m", "100",
             "--h-max-m", "100", "--radii", "50"])
        rows = cli.read_csv(tmp_path / "frontier.csv")
        assert [r["r_m"] == "" for r in rows] == [True, False]
        assert len(cli.read_csv(tmp_path / "pl_altitude.csv")) == 1


class TestSolve:
    def test_reproducible_bytes(self, tmp_path, capsys):
        run(["gen-scenario", "--ues", "40", "--seed", "2", "--out", str(tmp_path)], capsys)
        scen = tmp_path / "scenario_seed2_n40.json"
        for d in ("a", "b"):
            code, out = run(["solve", "--scenario", str(scen), "--seed", "2",
                             "--out", str(tmp_path / d)] + FAST, capsys)
            assert code == 0
        assert (tmp_path / "a/solution.json").read_bytes() == (tmp_path / "b/solution.json").read_bytes()
        assert (tmp_path / "a/fitness_history.csv").read_bytes() == \
            (tmp_path / "b/fitness_history.csv").read_bytes()
        cov = float(out.split("coverage=")[1])
        assert 0 <= cov <= 1
        hist = cli.read_csv(tmp_path / "a/fitness_history.csv")
        assert len(hist) == 41 and list(hist[0]) == ["generation", "best_fitness", "mean_fitness"]

    @pytest.mark.parametrize("method", ["random", "kmeans", "greedy", "sequential-exact"])
    def test_baseline_methods(self, tmp_path, capsys, method):
        code, out = run(["solve", "--method", method, "--ues", "30", "--out", str(tmp_path)], capsys)
        assert code == 0 and f"method={method}" in out
        sol = json.loads((tmp_path / "solution.json").read_text())
        assert len(sol["placements"]) == 10

    def test_exit_codes(self, tmp_path, capsys):
        assert run(["solve", "--pl-max-db", "30", "--out", str(tmp_path)], capsys)[0] == 2
        assert run(["solve", "--pl-max-db", "39", "--out", str(tmp_path)], capsys)[0] == 3
        bad = tmp_path / "bad.json"
        bad.write_text("[]")
        assert run(["solve", "--scenario", str(bad), "--out", str(tmp_path)], capsys)[0] == 2
        with pytest.raises(SystemExit) as e:
            cli.main(["solve", "--method", "annealing"])
        assert e.value.code == 2

    def test_config_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("ues: 25\nmethod: greedy\nuavs: 3\n")
        _, out = run(["solve", "--config", str(cfg), "--out", str(tmp_path)], capsys)
        assert "method=greedy objective=25" in out
        run(["solve", "--config", str(cfg), "--uavs", "4", "--out", str(tmp_path)], capsys)
        assert len(json.loads((tmp_path / "solution.json").read_text())["placements"]) == 4
        cfg.write_text("colour: blue\n")
        assert run(["solve", "--config", str(cfg)], capsys)[0] == 2


class TestExperiments:
    def test_table_coverage_shape(self, tmp_path, capsys):
        code, _ = run(["table-coverage", "--sizes", "12,20,30", "--n-seeds", "2", "--uavs", "3",
                       "--out", str(tmp_path)] + FAST, capsys)
        assert code == 0
        table = cli.read_csv(tmp_path / "table_coverage.csv")
        assert [r["method"] for r in table] == list(ex.METHODS)
        assert list(table[0]) == ["method", "n12", "n20", "n30"]
        assert all(0 <= float(v) <= 1 for r in table for k, v in r.items() if k != "method")
        assert len(cli.read_csv(tmp_path / "coverage_runs.csv")) == 5 * 3 * 2

    def test_robustness_shape(self, tmp_path, capsys):
        run(["robustness", "--sizes", "15,25,35", "--n-seeds", "2", "--out", str(tmp_path)] + FAST,
            capsys)
        table = cli.read_csv(tmp_path / "table_robustness.csv")
        assert [r["arm"] for r in table] == ["clean", "perturbed"]
        assert list(table[0]) == ["arm", "n15", "n25", "n35"]

    def test_power_csv(self, tmp_path):
        args = ["power", "--power-sizes", "20,40", "--n-seeds", "2", "--out", str(tmp_path)] + FAST
        run(args)
        first = (tmp_path / "power_runs.csv").read_bytes()
        rows = cli.read_csv(tmp_path / "power_runs.csv")
        assert list(rows[0]) == ["n_ues", "policy", "mean_tx_dbm", "seed"]
        assert {r["policy"] for r in rows} == {"optimal", "fixed", "random"}
        summary = cli.read_csv(tmp_path / "power.csv")
        assert len(summary) == 2 * 3
        run(args)
        assert (tmp_path / "power_runs.csv").read_bytes() == first

    def test_ga_tuning(self, tmp_path):
        run(["ga-tuning", "--tuning-ues", "30", "--populations", "10,20", "--crossover-rates",
             "0.5,0.8", "--mutation-rates", "0.01", "--rate-population", "10",
             "--out", str(tmp_path)] + FAST)
        pops = cli.read_csv(tmp_path / "min_iterations.csv")
        assert [r["population"] for r in pops] == ["10", "20"]
        for r in pops:
            if r["min_required_iteration"]:
                assert int(r["multiplication"]) == int(r["population"]) * int(r["min_required_iteration"])
        rates = cli.read_csv(tmp_path / "rate_sweep.csv")
        assert len(rates) == 3 * 41

    def test_jobs_do_not_change_output(self, tmp_path):
        base = ["table-coverage", "--sizes", "15", "--n-seeds", "2", "--methods", "ga,random"] + FAST
        run(base + ["--out", str(tmp_path / "a")])
        run(base + ["--out", str(tmp_path / "b"), "--jobs", "2"])
        a = (tmp_path / "a/coverage_runs.csv").read_text().splitlines()[1:]
        b = (tmp_path / "b/coverage_runs.csv").read_text().splitlines()[1:]
        assert a == b
