"""Command-line pipeline: generate, estimate, evaluate and report.

Usage::

    thermident generate|estimate|evaluate|report --config PATH [--out DIR] [--seed N]

Exit status is 0 on success, 2 on configuration errors (including missing
or mismatched upstream artifacts) and 3 when an estimation did not
converge; results are still written in that case. ``THERMIDENT_THREADS``
caps the number of worker processes used for estimation and evaluation
cells (default 1).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .almon import AlmonModel, coefficient_names, preset_specs
from .artifacts import (
    check_provenance,
    read_parameters,
    read_report,
    report_sort_key,
    write_parameters,
    write_report,
    write_trace,
)
from .config import ScenarioConfig, load_config
from .dataset import read_dataset, write_dataset
from .estimators import AlmonLagRegressor, RCNetworkRegressor
from .evaluation import run_sim1, run_sim2, run_sim3, trace_columns
from .exceptions import ConfigurationError, DatasetFormatError, RankDeficiencyError
from .grid_edge import PowerParams
from .plant import ThermostatConfig, WeatherConfig, commercial_plant, gen_weather, generate_dataset, house_plant
from .thermal_core import RcParameters, RcTopology

logger = logging.getLogger("thermident")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
DEFAULT_OUT = "thermident-out"
DATASET_FILE = Path("data") / "dataset.csv"
REPORT_FILE = Path("report") / "eval_report.csv"
TABLE_FILE = Path("report") / "accuracy_table.csv"


def thread_count() -> int:
    raw = os.environ.get("THERMIDENT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"THERMIDENT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError("THERMIDENT_THREADS must be >= 1")
    return n


def _map(fn, items, threads):
    """Ordered map, fanned out over processes when ``threads > 1``."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _provenance(cfg: ScenarioConfig, **extra) -> dict:
    seeds = cfg.seeds()
    meta = {"config_hash": cfg.hash(), "seed": cfg["seed"]}
    meta.update({f"seed.{k}": v for k, v in seeds.items()})
    meta.update(extra)
    return meta


def _plant(cfg: ScenarioConfig):
    return house_plant() if cfg["building"] == "house" else commercial_plant()


def _thermostat(cfg: ScenarioConfig, phase: str) -> ThermostatConfig:
    return ThermostatConfig(
        setpoint=cfg[f"{phase}.setpoint"],
        deadband=cfg[f"{phase}.deadband"],
        cool_capacity=cfg["hvac.cool_capacity"],
        heat_capacity=cfg["hvac.heat_capacity"],
    )


def _split(cfg: ScenarioConfig, ds):
    n_test = cfg["scenario.test_days"] * ds.samples_per_day
    if len(ds) <= n_test:
        raise ConfigurationError("dataset is shorter than the test window")
    return ds[: len(ds) - n_test], ds[len(ds) - n_test:]


def _load_dataset(cfg: ScenarioConfig, out: Path):
    path = out / DATASET_FILE
    check_provenance(path, cfg.hash())
    try:
        return read_dataset(path)
    except DatasetFormatError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def _rc_cells(cfg: ScenarioConfig):
    return [
        (method, arch, window)
        for window in cfg["scenario.windows"]
        for arch in cfg["scenario.architectures"]
        for method in cfg.rc_methods()
    ]


def _param_path(out: Path, method: str, arch: str, days: int) -> Path:
    return out / "params" / f"{method}_{arch}_{days}d.csv"


# generate ------------------------------------------------------------------

def cmd_generate(cfg: ScenarioConfig, out: Path) -> int:
    seeds = cfg.seeds()
    weather = gen_weather(
        WeatherConfig(
            n_days=cfg["scenario.total_days"],
            t_s=cfg["scenario.t_s"],
            ambient_mean=cfg["weather.ambient_mean"],
            ambient_amplitude=cfg["weather.ambient_amplitude"],
            solar_peak=cfg["weather.solar_peak"],
            internal_base=cfg["weather.internal_base"],
            internal_peak=cfg["weather.internal_peak"],
            noise_std=cfg["weather.noise_std"],
            daily_offset_std=cfg["weather.daily_offset_std"],
            clearness_min=cfg["weather.clearness_min"],
            occupied_from=cfg["weather.occupied_from"],
            occupied_to=cfg["weather.occupied_to"],
            rng_seed=seeds["weather"],
        )
    )
    plant = _plant(cfg)
    ds = generate_dataset(
        plant,
        _thermostat(cfg, "training"),
        weather,
        meas_noise_std=cfg["scenario.meas_noise_std"],
        rng_seed=seeds["noise"],
        t_s=cfg["scenario.t_s"],
    )
    path = out / DATASET_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, path, _provenance(cfg))
    logger.info("wrote %s (%d samples, plant %s)", path, len(ds), plant.name)
    return EXIT_OK


# estimate ------------------------------------------------------------------

def _fit_rc(job):
    cfg, train, method, arch, window = job
    model = RCNetworkRegressor(
        architecture=arch,
        method=method,
        t_s=train.t_s,
        q_proc=cfg["noise.q_proc"],
        r_meas=cfg["noise.r_meas"],
        p0=cfg["noise.p0"],
        max_iters=cfg["optimizer.max_iters"],
        grad_tol=cfg["optimizer.grad_tol"],
        multistart_count=cfg["optimizer.multistart_count"],
        random_state=cfg.seeds()["optimizer"],
    ).fit(train.rc_inputs(), train.t_z)
    res = model.result_
    values = model.theta_.to_dict(model.topology_)
    values.update({f"x0_{i}": float(v) for i, v in enumerate(model.x0_, start=1)})
    meta = dict(
        method=method, architecture=arch, training_days=window, converged=res.converged,
        objective=repr(float(res.objective)), iterations=res.iterations,
    )
    return values, meta


def cmd_estimate(cfg: ScenarioConfig, out: Path) -> int:
    ds = _load_dataset(cfg, out)
    pre, _ = _split(cfg, ds)
    threads = thread_count()
    status = EXIT_OK
    cells = _rc_cells(cfg)
    jobs = [(cfg, pre.last_days(w), m, a, w) for m, a, w in cells]
    for (method, arch, window), (values, meta) in zip(cells, _map(_fit_rc, jobs, threads)):
        path = _param_path(out, method, arch, window)
        write_parameters(values, path, _provenance(cfg, **meta))
        logger.info("%s %s %dd: converged=%s objective=%s", method, arch, window,
                    meta["converged"], meta["objective"])
        if not meta["converged"]:
            status = EXIT_NOT_CONVERGED
    if "ALS" in cfg["scenario.methods"]:
        days = cfg.als_training_days()
        train = pre.last_days(days)
        est = AlmonLagRegressor(preset=cfg["als.preset"]).fit(train.als_inputs(), train.t_z)
        names = coefficient_names(est.model_.specs)
        values = dict(zip(names, est.model_.coefficients()))
        path = _param_path(out, "ALS", cfg["als.preset"], days)
        write_parameters(values, path, _provenance(
            cfg, method="ALS", architecture=cfg["als.preset"], training_days=days, converged=True))
        logger.info("ALS %s %dd: fitted %d coefficients", cfg["als.preset"], days, len(values))
    if status != EXIT_OK:
        logger.warning("some estimations did not converge; parameter files were still written")
    return status


# evaluate ------------------------------------------------------------------

def _load_models(cfg: ScenarioConfig, out: Path, t_s: float):
    """``[(model, training_days, converged)]`` in a fixed order."""
    models = []
    for method, arch, window in _rc_cells(cfg):
        path = _param_path(out, method, arch, window)
        check_provenance(path, cfg.hash())
        values, meta = read_parameters(path)
        topology = RcTopology.preset(arch)
        theta = RcParameters.from_dict(topology, {k: v for k, v in values.items() if not k.startswith("x0_")})
        model = RCNetworkRegressor.from_parameters(topology, theta, t_s=t_s, method=method)
        models.append((model, window, meta.get("converged") == "True"))
    if "ALS" in cfg["scenario.methods"]:
        days = cfg.als_training_days()
        path = _param_path(out, "ALS", cfg["als.preset"], days)
        check_provenance(path, cfg.hash())
        values, _ = read_parameters(path)
        specs = preset_specs(cfg["als.preset"])
        try:
            beta = [values[name] for name in coefficient_names(specs)]
        except KeyError as exc:
            raise ConfigurationError(f"{path} lacks coefficient {exc}") from None
        model = AlmonLagRegressor.from_model(AlmonModel.from_coefficients(specs, beta, cfg["als.preset"]))
        models.append((model, days, True))
    return models


def _evaluate_model(job):
    cfg, model, days, pre, test = job
    label = "ALS" if isinstance(model, AlmonLagRegressor) else model.method
    arch = model.preset if label == "ALS" else model.architecture
    warmup = pre if label == "ALS" else None
    thermo = _thermostat(cfg, "evaluation")
    power = PowerParams(cop=cfg["power.cop"], p_other=cfg["power.p_other"],
                        power_factor=cfg["power.power_factor"])
    results = []
    for sim, runner in (("Sim1", run_sim1), ("Sim2", run_sim2), ("Sim3", run_sim3)):
        trace_id = f"{label}_{arch}_{days}d_{sim}"
        if sim == "Sim3":
            traj, rep = runner(model, test, thermo, warmup=warmup, cop=cfg["power.cop"],
                               training_days=days, trace_id=trace_id)
        else:
            traj, rep = runner(model, test, warmup=warmup, training_days=days, trace_id=trace_id)
        cols = trace_columns(test, traj, sim, power, thermo)
        results.append((rep, cols, traj.divergent))
    return results


def cmd_evaluate(cfg: ScenarioConfig, out: Path) -> int:
    ds = _load_dataset(cfg, out)
    pre, test = _split(cfg, ds)
    models = _load_models(cfg, out, ds.t_s)
    jobs = [(cfg, model, days, pre, test) for model, days, _ in models]
    reports = []
    for results in _map(_evaluate_model, jobs, thread_count()):
        for rep, cols, divergent in results:
            write_trace(cols, out / "traces" / f"{rep.trace_id}.csv",
                        _provenance(cfg, sim_type=rep.sim_type, divergent=divergent))
            if divergent:
                logger.warning("%s diverged (|T_z| > 100 degC)", rep.trace_id)
            reports.append(rep)
    write_report(reports, out / REPORT_FILE, _provenance(cfg))
    logger.info("wrote %d report rows to %s", len(reports), out / REPORT_FILE)
    if not all(ok for _, _, ok in models):
        logger.warning("evaluated models include non-converged estimates")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# report --------------------------------------------------------------------

def cmd_report(cfg: ScenarioConfig, out: Path) -> int:
    path = out / REPORT_FILE
    check_provenance(path, cfg.hash())
    reports, _ = read_report(path)
    cells: dict[tuple, dict] = {}
    for rep in sorted(reports, key=report_sort_key):
        key = (rep.method, rep.architecture, rep.training_days)
        row = cells.setdefault(key, {})
        if rep.sim_type == "Sim3":
            row["sim3_occupancy"] = rep.deadband_occupancy
        else:
            row[f"{rep.sim_type.lower()}_accuracy"] = rep.average_accuracy
    columns = ("sim1_accuracy", "sim2_accuracy", "sim3_occupancy")
    table = out / TABLE_FILE
    lines = [f"# {k}: {v}" for k, v in sorted(_provenance(cfg).items())]
    lines.append("method,architecture,training_days," + ",".join(columns))
    for (method, arch, days), row in cells.items():
        vals = ["" if row.get(c) is None else f"{row[c]:.4f}" for c in columns]
        lines.append(f"{method},{arch},{days}," + ",".join(vals))
    table.write_text("\n".join(lines) + "\n")

    print(f"{'method':<6} {'arch':<5} {'days':>4} {'Sim1 %':>9} {'Sim2 %':>9} {'Sim3 occ':>9}")
    for (method, arch, days), row in cells.items():
        cols = []
        for c in columns:
            cols.append(f"{row[c]:9.3f}" if row.get(c) is not None else f"{'-':>9}")
        print(f"{method:<6} {arch:<5} {days:>4} " + " ".join(cols))
    logger.info("wrote %s", table)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermident", description="Grey-box building thermal identification pipeline."
    )
    sub = parser.add_subparsers(dest="command", metavar="{generate,estimate,evaluate,report}")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", default=DEFAULT_OUT, help=f"output directory (default {DEFAULT_OUT})")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="thermident: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config).with_seed(args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigurationError as exc:
        print(f"thermident: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RankDeficiencyError as exc:
        print(f"thermident: the scenario data cannot identify the regression: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
