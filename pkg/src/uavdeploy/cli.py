"""Command-line experiment harness.

Every subcommand is a pure function of its flags, input files and seed. CSV
outputs start with a ``#`` metadata line (seed, version, parameter echo)
followed by a header row. Settings resolve as flag, then ``--config`` YAML,
then built-in default.

Exit codes: 0 success, 2 validation error, 3 infeasible model.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import __version__, experiments as ex, ga, scenario as scn
from .channel import ChannelConfig, EnvironmentLabel, environment, max_radius
from .errors import InfeasibleModelError, ValidationError
from .power import DEFAULT_RX_DBM

log = logging.getLogger("uavdeploy")

VERSION_TAG = f"v{__version__}"

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "env": "urban",
    "pl_max_db": 110.0,
    "fc_hz": 2e9,
    "ues": 200,
    "uavs": 10,
    "capacity_bps": scn.DEFAULT_CAPACITY_BPS,
    "side_m": scn.DEFAULT_SIDE_M,
    "out": ".",
    "n_seeds": 15,
    "jobs": 1,
    "iterations": ga.DESK_PARAMS["iterations"],
    "population": ga.DESK_PARAMS["population"],
    "crossover_rate": 0.8,
    "mutation_rate": 0.01,
    "readout": "best-ever",
    # per-command
    "method": "ga",
    "scenario": None,
    "sizes": list(ex.COVERAGE_SIZES),
    "methods": list(ex.METHODS),
    "pl_max_list": [100.0, 110.0, 120.0],
    "h_max_m": 5000.0,
    "h_step_m": 10.0,
    "radii": [500.0, 1000.0, 2000.0],
    "populations": list(ex.POPULATION_SWEEP),
    "crossover_rates": list(ex.CROSSOVER_SWEEP),
    "mutation_rates": list(ex.MUTATION_SWEEP),
    "tuning_ues": 200,
    "rate_population": 100,
    "max_err_m": ex.PERTURB_ERR_M,
    "power_sizes": list(ex.POWER_SIZES),
    "power_uavs": 15,
    "rx_dbm": DEFAULT_RX_DBM,
}


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser, ga_flags: bool = True, multi_seed: bool = True):
    # defaults are None so that unset flags fall through to the config file
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--env", choices=[e.value for e in EnvironmentLabel])
    p.add_argument("--pl-max-db", type=float, help="path-loss budget in dB (default 110)")
    p.add_argument("--fc-hz", type=float, help="carrier frequency (default 2e9)")
    p.add_argument("--ues", type=int, help="number of ground users")
    p.add_argument("--uavs", type=int, help="fleet size")
    p.add_argument("--capacity-bps", type=float, help="per-UAV capacity (default 1e8)")
    p.add_argument("--side-m", type=float, help="region side length (default 5000)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--config", help="YAML file with default values for any flag")
    if multi_seed:
        p.add_argument("--n-seeds", type=int, help="seeds seed..seed+n-1 (default 15)")
        p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    if ga_flags:
        p.add_argument("--iterations", type=int, help="GA generations (default 2000)")
        p.add_argument("--population", type=int, help="GA population size (default 50)")
        p.add_argument("--crossover-rate", type=float)
        p.add_argument("--mutation-rate", type=float)
        p.add_argument("--readout", choices=["best-ever", "final"])
        p.add_argument("--full-scale", action="store_true",
                       help="use 17000 generations and population 100")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavdeploy",
                                     description="QoS-aware 3D placement of UAV base stations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION_TAG}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="radius/altitude frontier and PL-vs-altitude CSVs")
    _common(p, ga_flags=False, multi_seed=False)
    p.add_argument("--pl-max-list", type=_floats, help="comma-separated budgets in dB")
    p.add_argument("--h-max-m", type=float)
    p.add_argument("--h-step-m", type=float)
    p.add_argument("--radii", type=_floats, help="comma-separated radii for PL-vs-altitude")

    p = sub.add_parser("solve", help="solve one scenario with one method")
    _common(p, multi_seed=False)
    p.add_argument("--scenario", help="scenario JSON (otherwise generated from flags)")
    p.add_argument("--method", choices=list(ex.METHODS))

    p = sub.add_parser("table-coverage", help="coverage ratio per method and size")
    _common(p)
    p.add_argument("--sizes", type=_ints)
    p.add_argument("--methods", type=lambda s: [m.strip() for m in s.split(",") if m.strip()])

    p = sub.add_parser("ga-tuning", help="population and rate sweeps")
    _common(p)
    p.add_argument("--populations", type=_ints)
    p.add_argument("--crossover-rates", type=_floats)
    p.add_argument("--mutation-rates", type=_floats)
    p.add_argument("--tuning-ues", type=int)
    p.add_argument("--rate-population", type=int, help="population for rate sweeps (default 100)")

    p = sub.add_parser("robustness", help="GA with exact vs perturbed user positions")
    _common(p)
    p.add_argument("--sizes", type=_ints)
    p.add_argument("--max-err-m", type=float)

    p = sub.add_parser("power", help="mean transmit power per altitude policy")
    _common(p)
    p.add_argument("--power-sizes", type=_ints)
    p.add_argument("--power-uavs", type=int)
    p.add_argument("--rx-dbm", type=float, help="required received power (default -74)")

    p = sub.add_parser("gen-scenario", help="write a random scenario JSON")
    _common(p, ga_flags=False, multi_seed=False)
    return parser


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    """Merge built-in defaults, the config file and explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ValidationError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(loaded, dict):
            raise ValidationError(f"config {args.config} must be a mapping")
        unknown = set(k.replace("-", "_") for k in loaded) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "command", "verbose", "full_scale"):
            cfg[k] = v
    if getattr(args, "full_scale", False):
        cfg["iterations"], cfg["population"] = 17000, 100
    return cfg


def _channel(cfg) -> ChannelConfig:
    return ChannelConfig(environment(cfg["env"]), f_c=float(cfg["fc_hz"]),
                         pl_max=float(cfg["pl_max_db"]))


def _ga_params(cfg, seed: Optional[int] = None) -> ga.GaParams:
    return ga.GaParams(iterations=int(cfg["iterations"]), population=int(cfg["population"]),
                       crossover_rate=float(cfg["crossover_rate"]),
                       mutation_rate=float(cfg["mutation_rate"]),
                       seed=int(cfg["seed"] if seed is None else seed), readout=cfg["readout"])


def _seeds(cfg) -> list[int]:
    return list(range(int(cfg["seed"]), int(cfg["seed"]) + int(cfg["n_seeds"])))


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, rows: Sequence[dict], cfg: dict, columns: Optional[list] = None):
    """CSV with a ``#`` metadata line, then header and rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = columns or (list(rows[0]) if rows else [])
    params = {k: cfg[k] for k in sorted(cfg) if k != "out"}
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed={cfg['seed']} version={VERSION_TAG} "
                 f"params={json.dumps(params, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    log.info("wrote %s (%d rows)", path, len(rows))


def read_csv(path) -> list[dict]:
    """Read a CSV written by :func:`write_csv`, skipping the metadata line."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _scenario_from(cfg) -> scn.Scenario:
    if cfg.get("scenario"):
        return scn.load(cfg["scenario"])
    return scn.generate(int(cfg["seed"]), int(cfg["ues"]), side_m=float(cfg["side_m"]),
                        fleet_size=int(cfg["uavs"]), capacity=float(cfg["capacity_bps"]),
                        channel=_channel(cfg))


# ---- subcommands ----------------------------------------------------------

def cmd_curves(cfg) -> int:
    out = Path(cfg["out"])
    channel = _channel(cfg)
    step, h_max = float(cfg["h_step_m"]), float(cfg["h_max_m"])
    if not (step > 0 and h_max > 0):
        raise ValidationError("altitude grid needs positive step and maximum")
    h_grid = np.arange(step, h_max + step / 2, step)
    write_csv(out / "frontier.csv", ex.frontier_rows(channel, cfg["pl_max_list"], h_grid), cfg,
              ["pl_max_db", "h_m", "r_m"])
    write_csv(out / "pl_altitude.csv", ex.pl_altitude_rows(channel, cfg["radii"], h_grid), cfg,
              ["r_m", "h_m", "pl_db"])
    sol = max_radius(channel)
    print(f"theta_max_deg={math.degrees(sol.theta_max):.4f} r_max_m={sol.r_max:.3f} "
          f"h_max_m={sol.h_max:.3f}")
    return 0


def cmd_solve(cfg) -> int:
    out = Path(cfg["out"])
    s = _scenario_from(cfg)
    seed = int(cfg["seed"])
    sol, obj, res = ex.solve(s, cfg["method"], seed, _ga_params(cfg, seed))
    out.mkdir(parents=True, exist_ok=True)
    sol.meta["objective"] = obj
    sol.save(out / "solution.json")
    if res is not None:
        rows = [{"generation": k, "best_fitness": int(b), "mean_fitness": float(m)}
                for k, (b, m) in enumerate(zip(res.best_history, res.mean_history))]
        write_csv(out / "fitness_history.csv", rows, cfg)
    print(f"method={cfg['method']} objective={obj} coverage={ex.coverage(obj, s.n_ues):.6f}")
    return 0


def cmd_table_coverage(cfg) -> int:
    out = Path(cfg["out"])
    runs = ex.coverage_runs(_seeds(cfg), cfg["sizes"], cfg["methods"], int(cfg["uavs"]),
                            _channel(cfg), float(cfg["capacity_bps"]), _ga_params(cfg),
                            int(cfg["jobs"]))
    write_csv(out / "coverage_runs.csv", runs, cfg,
              ["method", "n_ues", "seed", "objective", "coverage"])
    table = ex.mean_table(runs, "method")
    write_csv(out / "table_coverage.csv", table, cfg)
    for row in table:
        print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in row.items()))
    return 0


def cmd_ga_tuning(cfg) -> int:
    out = Path(cfg["out"])
    seed = int(cfg["seed"])
    s = scn.generate(seed, int(cfg["tuning_ues"]), side_m=float(cfg["side_m"]),
                     fleet_size=int(cfg["uavs"]), capacity=float(cfg["capacity_bps"]),
                     channel=_channel(cfg))
    pop_rows = ex.population_sweep(s, cfg["populations"], int(cfg["iterations"]), seed,
                                   int(cfg["jobs"]))
    write_csv(out / "min_iterations.csv", pop_rows, cfg)
    rate_rows = ex.rate_sweep(s, cfg["crossover_rates"], cfg["mutation_rates"],
                              int(cfg["iterations"]), int(cfg["rate_population"]), seed,
                              int(cfg["jobs"]))
    write_csv(out / "rate_sweep.csv", rate_rows, cfg)
    return 0


def cmd_robustness(cfg) -> int:
    out = Path(cfg["out"])
    runs = ex.robustness_runs(_seeds(cfg), cfg["sizes"], int(cfg["uavs"]), _channel(cfg),
                              float(cfg["capacity_bps"]), _ga_params(cfg),
                              float(cfg["max_err_m"]), int(cfg["jobs"]))
    write_csv(out / "robustness_runs.csv", runs, cfg)
    table = ex.mean_table(runs, "arm")
    write_csv(out / "table_robustness.csv", table, cfg)
    for row in table:
        print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in row.items()))
    return 0


def cmd_power(cfg) -> int:
    out = Path(cfg["out"])
    runs = ex.power_runs(_seeds(cfg), cfg["power_sizes"], int(cfg["power_uavs"]), _channel(cfg),
                         float(cfg["capacity_bps"]), _ga_params(cfg), float(cfg["rx_dbm"]),
                         int(cfg["jobs"]))
    write_csv(out / "power_runs.csv", runs, cfg, ["n_ues", "policy", "mean_tx_dbm", "seed"])
    write_csv(out / "power.csv", ex.power_summary(runs), cfg)
    return 0


def cmd_gen_scenario(cfg) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"scenario_seed{cfg['seed']}_n{cfg['ues']}.json"
    scn.save(_scenario_from(cfg), path)
    print(path)
    return 0


COMMANDS = {
    "curves": cmd_curves,
    "solve": cmd_solve,
    "table-coverage": cmd_table_coverage,
    "ga-tuning": cmd_ga_tuning,
    "robustness": cmd_robustness,
    "power": cmd_power,
    "gen-scenario": cmd_gen_scenario,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except InfeasibleModelError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
