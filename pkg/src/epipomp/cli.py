"""Command-line front end: configuration, orchestration, and result persistence.

Subcommands: simulate | filter | fit-if2 | fit-ibpf | fit-traj | benchmark |
profile | mcap | forecast. Settings resolve with precedence command line
(``--set key.path=value``) over config file (``--config``) over built-in
defaults. Every run writes a manifest (resolved config, seed, version, input
hashes, wall time), CSV result tables, and a machine-readable summary.json
into the output directory.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import datetime as dt
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, io
from .benchmark import fit_benchmark
from .errors import ConfigError, CoverageError, DataFormatError, EpipompError, ValidationError
from .filtering import particle_filter
from .forecast import forecast_from_filter, trajectory_projection
from .grid import TimeGrid
from .haiti import (
    apply_vaccination_scenario,
    builtin_scenario,
    model1 as m1,
    model2 as m2,
    model3 as m3,
)
from .iterfilter import IbpfSettings, If2Settings, ibpf, if2
from .mcap import mcap_ci, profile_design
from .model import simulate
from .optimize import trajectory_match
from .params import ParameterSet
from .series import CovariateTable, ObservationSeries, standardize_rainfall
from .toys import (
    hmm_model,
    lgssm_model,
    metapop_model,
    pure_death_model,
    sir_model,
    toy_grid,
)
from .units import WEEK

DEFAULTS: dict = {
    "model": "model3",
    "seed": None,
    "workers": 1,
    "out": "epipomp-run",
    "data": {
        "cases": None,
        "rainfall": None,
        "geography": None,
        "distance_matrix": None,
        "river_matrix": None,
        "efficacy": None,
        "scenario_file": None,
        "weeks": None,
        "hurricane_date": "2016-10-04",
        "phase_break_date": None,
    },
    "grid": {"euler_days": 1.0, "toy_steps_per_week": 1},
    "params": {},
    "simulate": {"n_sims": 5, "horizon_weeks": 52},
    "filter": {"J": 500},
    "fit": {"J": 200, "M": 10, "cooling": 0.5, "rw_sd": {}, "eval_particles": None},
    "blocks": None,
    "fit_traj": {"free": []},
    "benchmark": {"per_unit": True},
    "profile": {"parameter": None, "values": [], "replicates": 3, "method": "if2"},
    "mcap": {"input": None, "confidence": 0.95, "span": 0.75},
    "forecast": {"scenario": "V0", "n_sims": 100, "horizon_weeks": 520, "J": 200, "window": 52,
                 "candidates": None},
}

COMMANDS = (
    "simulate",
    "filter",
    "fit-if2",
    "fit-ibpf",
    "fit-traj",
    "benchmark",
    "profile",
    "mcap",
    "forecast",
)

STOCHASTIC_COMMANDS = {"simulate", "filter", "fit-if2", "fit-ibpf", "profile", "forecast"}

EXIT_CODES = {
    "config": 2,
    "data": 3,
    "runtime": 4,
}


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("epipomp").joinpath("data", name)))


def deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_set(items: list[str]) -> dict:
    """Parse ``--set a.b=value`` overrides; values are JSON when possible."""
    out: dict = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config!r} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config!r} is not valid JSON: {exc}") from None
        cfg = deep_merge(cfg, file_cfg)
    cfg = deep_merge(cfg, parse_set(args.set or []))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.out is not None:
        cfg["out"] = args.out
    return cfg


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


@dataclasses.dataclass
class Bundle:
    """Everything a command needs for one model: data, grid, covariates."""

    model_id: str
    model: object
    grid: TimeGrid
    data: ObservationSeries | None
    covs: CovariateTable | None
    geography: object | None
    params: ParameterSet
    origin_date: dt.date | None
    start_date: dt.date | None
    inputs: dict[str, str]


def _load_geography(cfg: dict, inputs: dict):
    d = cfg["data"]
    geo_p = Path(d["geography"]) if d["geography"] else bundled_path("geography.csv")
    dist_p = Path(d["distance_matrix"]) if d["distance_matrix"] else bundled_path("distance.csv")
    river_p = Path(d["river_matrix"]) if d["river_matrix"] else bundled_path("river.csv")
    for p in (geo_p, dist_p, river_p):
        inputs[str(p)] = _sha256(p)
    return io.load_geography(geo_p, dist_p, river_p)


def _load_cases(cfg: dict, inputs: dict, expected_units: int | None = None) -> ObservationSeries:
    p = Path(cfg["data"]["cases"]) if cfg["data"]["cases"] else bundled_path("cases.csv")
    inputs[str(p)] = _sha256(p)
    return io.load_cases(p, expected_units)


def _load_efficacy(cfg: dict, inputs: dict):
    d = cfg["data"]
    p = Path(d["efficacy"]) if d["efficacy"] else bundled_path("efficacy.csv")
    inputs[str(p)] = _sha256(p)
    return io.load_efficacy(p)


def _rain_covariates(cfg: dict, inputs: dict, start_date: dt.date, geo) -> CovariateTable:
    d = cfg["data"]
    p = Path(d["rainfall"]) if d["rainfall"] else bundled_path("rainfall.csv")
    inputs[str(p)] = _sha256(p)
    depts, dates, raw = io.load_rainfall(p)
    if list(depts) != list(geo.units):
        raise DataFormatError(f"rainfall departments {depts} do not match geography {list(geo.units)}")
    rain = standardize_rainfall(raw, depts)
    times = np.array([io.week_time(start_date, x) for x in dates])
    hurricane = None
    if d.get("hurricane_date"):
        hurricane = io.week_time(start_date, io.parse_date(str(d["hurricane_date"])))
    return CovariateTable(
        times=times, step=WEEK, rainfall=rain, units=tuple(depts), hurricane_time=hurricane
    )


def _subset_weeks(cfg: dict, data: ObservationSeries, grid: TimeGrid):
    weeks = cfg["data"].get("weeks")
    if not weeks:
        return data, grid
    a, b = int(weeks[0]), int(weeks[1])
    if not 0 <= a < b <= data.n_obs:
        raise ConfigError(f"weeks subset {weeks} out of range [0, {data.n_obs}]")
    sub_grid = TimeGrid(
        t0=grid.t0 if a == 0 else float(grid.obs_times[a - 1]),
        obs_times=grid.obs_times[a:b],
        euler_step=grid.euler_step,
    )
    return data.subset(a, b), sub_grid


def build_bundle(cfg: dict, need_data: bool = True) -> Bundle:
    model_id = cfg["model"]
    inputs: dict[str, str] = {}
    euler_days = float(cfg["grid"]["euler_days"])

    if model_id.startswith("toy:"):
        return _build_toy_bundle(cfg, model_id, inputs, need_data)

    geo = _load_geography(cfg, inputs)
    curve = _load_efficacy(cfg, inputs)

    if model_id == "model3":
        cases = _load_cases(cfg, inputs, expected_units=geo.n_units)
        start_date = io.parse_date(cases.dates[0])
        init_weeks = 4
        if cases.n_obs <= init_weeks:
            raise DataFormatError("model3 needs more than 4 weeks of data (4 initialize)")
        init_obs = cases.values[:, :init_weeks]
        covs = _rain_covariates(cfg, inputs, start_date, geo)
        median_rain = float(np.median(covs.rainfall))
        model = m3.build_model3(init_obs, geo, curve=curve, median_rainfall=median_rain)
        t0 = (init_weeks - 1) * WEEK
        data = cases.subset(init_weeks, cases.n_obs)
        grid = TimeGrid(
            t0=t0,
            obs_times=t0 + np.arange(1, data.n_obs + 1) * WEEK,
            euler_step=euler_days * WEEK / 7.0,
        )
        data, grid = _subset_weeks(cfg, data, grid)
        params = _apply_param_overrides(model.params, cfg["params"])
        origin = io.parse_date(cases.dates[-1])
        return Bundle(model_id, model, grid, data, covs, geo, params, origin, start_date, inputs)

    if model_id == "model2":
        cases = _load_cases(cfg, inputs, expected_units=geo.n_units)
        start_date = io.parse_date(cases.dates[0])
        init_cases = np.nan_to_num(cases.values[:, 0])
        model = m2.build_model2(init_cases, geo)
        data = cases.subset(1, cases.n_obs)
        grid = TimeGrid(
            t0=0.0,
            obs_times=np.arange(1, data.n_obs + 1) * WEEK,
            euler_step=euler_days * WEEK / 7.0,
        )
        data, grid = _subset_weeks(cfg, data, grid)
        params = _apply_param_overrides(model.params, cfg["params"])
        origin = io.parse_date(cases.dates[-1])
        return Bundle(model_id, model, grid, data, covs_or_none(cfg, inputs, start_date, geo), geo, params, origin, start_date, inputs)

    if model_id == "model1":
        cases = _load_cases(cfg, inputs)
        if cases.n_units > 1:
            cases = cases.aggregate()
        start_date = io.parse_date(cases.dates[0])
        data = cases
        grid = TimeGrid(
            t0=0.0,
            obs_times=np.arange(1, data.n_obs + 1) * WEEK,
            euler_step=euler_days * WEEK / 7.0,
        )
        phase_break = None
        if cfg["data"].get("phase_break_date"):
            phase_break = io.week_time(start_date, io.parse_date(str(cfg["data"]["phase_break_date"])))
        model = m1.build_model1(
            trend_window=(grid.t0, grid.t_end),
            pop=float(np.sum(geo.populations)),
            curve=curve,
            phase_break=phase_break,
        )
        data, grid = _subset_weeks(cfg, data, grid)
        params = _apply_param_overrides(model.params, cfg["params"])
        origin = io.parse_date(cases.dates[-1])
        return Bundle(model_id, model, grid, data, None, geo, params, origin, start_date, inputs)

    raise ConfigError(f"unknown model {cfg['model']!r}")


def covs_or_none(cfg, inputs, start_date, geo):
    """Rainfall covariates when available; a malformed bundled default is
    tolerated, an explicitly configured file is not."""
    if cfg["data"]["rainfall"]:
        return _rain_covariates(cfg, inputs, start_date, geo)
    try:
        return _rain_covariates(cfg, inputs, start_date, geo)
    except DataFormatError:
        return None


def _build_toy_bundle(cfg: dict, model_id: str, inputs: dict, need_data: bool) -> Bundle:
    steps = int(cfg["grid"]["toy_steps_per_week"])
    builders = {
        "toy:sir": lambda: sir_model(),
        "toy:sir-det": lambda: sir_model(stochastic=False, name="toy:sir-det"),
        "toy:metapop": lambda: metapop_model(),
        "toy:puredeath": lambda: pure_death_model(),
        "toy:puredeath-det": lambda: pure_death_model(stochastic=False),
        "toy:hmm": lambda: hmm_model(),
        "toy:lgssm": lambda: lgssm_model(),
    }
    if model_id not in builders:
        raise ConfigError(f"unknown toy model {model_id!r}; options: {sorted(builders)}")
    model = builders[model_id]()
    data = None
    if cfg["data"]["cases"]:
        p = Path(cfg["data"]["cases"])
        inputs[str(p)] = _sha256(p)
        data = io.load_cases(p)
        if tuple(data.units) != tuple(model.units):
            raise DataFormatError(
                f"cases departments {data.units} do not match toy units {model.units}"
            )
        n_obs = data.n_obs
    elif need_data:
        raise ConfigError(f"command needs a cases file for {model_id}")
    else:
        n_obs = int(cfg["simulate"]["horizon_weeks"])
    grid = toy_grid(n_obs, euler_step=1.0 / steps)
    params = _apply_param_overrides(model.params, cfg["params"])
    return Bundle(model_id, model, grid, data, None, None, params, None, None, inputs)


def _apply_param_overrides(params: ParameterSet, overrides: dict) -> ParameterSet:
    if not overrides:
        return params
    unknown = [k for k in overrides if k not in params]
    if unknown:
        raise ConfigError(f"parameter overrides name unknown parameters {unknown}")
    return params.replace({k: float(v) for k, v in overrides.items()})


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Path) -> dict:
    bundle = build_bundle(cfg, need_data=False)
    n_sims = int(cfg["simulate"]["n_sims"])
    seed = _require_seed(cfg)
    res = simulate(bundle.model, bundle.params, bundle.grid, bundle.covs, n_sims=n_sims, seed=seed)
    rows = []
    true_idx = (
        bundle.model.indices(bundle.model.true_infection_states)
        if bundle.model.true_infection_states
        else None
    )
    for s in range(n_sims):
        for n, t in enumerate(res.times):
            for u, unit in enumerate(res.units):
                true_inc = res.states[s, n + 1, true_idx[u]] if true_idx is not None else np.nan
                rows.append([s, n, unit, _fmt(res.observations[s, n, u]), _fmt(true_inc)])
    io.write_table(out / "simulations.csv", ["sim", "week", "department", "reported", "true_infections"], rows)
    return {
        "model": bundle.model_id,
        "n_sims": n_sims,
        "weeks": int(res.times.size),
        "total_reported": float(np.nansum(res.observations)),
    }


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "NA"
    f = float(v)
    return str(int(f)) if f == int(f) else f"{f:.6g}"


def cmd_filter(cfg: dict, out: Path) -> dict:
    bundle = build_bundle(cfg)
    seed = _require_seed(cfg)
    J = int(cfg["filter"]["J"])
    res = particle_filter(
        bundle.model, bundle.params, bundle.data, bundle.grid, bundle.covs, J=J, seed=seed,
        blocks=cfg["blocks"],
    )
    rows = []
    for n in range(bundle.data.n_obs):
        row = [n, f"{res.cond_logliks[n]:.8g}", f"{res.ess[n]:.6g}"]
        rows.append(row + [f"{v:.6g}" for v in res.unit_cond_logliks[n]])
    io.write_table(
        out / "filter.csv",
        ["week", "cond_loglik", "ess"] + [f"cond_loglik[{u}]" for u in bundle.model.units],
        rows,
    )
    return {
        "model": bundle.model_id,
        "J": J,
        "loglik": res.loglik,
        "failed_times": list(res.failed_times),
    }


def _fit_settings(cfg: dict, params: ParameterSet, for_blocks: bool) -> If2Settings | IbpfSettings:
    fit = cfg["fit"]
    rw = {k: float(v) for k, v in fit["rw_sd"].items()}
    if not rw:
        raise ConfigError("fit.rw_sd must name at least one searched parameter")
    kwargs = dict(
        J=int(fit["J"]),
        M=int(fit["M"]),
        rw_sd=rw,
        cooling=float(fit["cooling"]),
        initial=params,
        eval_particles=int(fit["eval_particles"]) if fit.get("eval_particles") else None,
    )
    if for_blocks:
        return IbpfSettings(blocks=cfg["blocks"], **kwargs)
    return If2Settings(**kwargs)


def _write_fit_outputs(out: Path, result, bundle: Bundle) -> dict:
    searched = list(result.searched)
    rows = [
        [rec.iteration, f"{rec.pass_loglik:.8g}", f"{rec.eval_loglik:.8g}"]
        + [f"{rec.center[k]:.10g}" for k in searched]
        for rec in result.trace
    ]
    io.write_table(out / "trace.csv", ["iteration", "pass_loglik", "eval_loglik"] + searched, rows)
    io.write_table(
        out / "swarm.csv", searched, [[f"{v:.10g}" for v in row] for row in result.swarm]
    )
    io.write_table(
        out / "candidates.csv",
        ["loglik"] + searched,
        [
            [f"{rec.eval_loglik:.8g}"] + [f"{rec.center[k]:.10g}" for k in searched]
            for rec in result.trace
        ],
    )
    (out / "params.json").write_text(json.dumps(dict(result.best), indent=2, sort_keys=True))
    return {
        "model": bundle.model_id,
        "best_loglik": result.best_loglik,
        "best": {k: result.best[k] for k in searched},
        "iterations": len(result.trace),
        "aborted": result.aborted,
    }


def cmd_fit_if2(cfg: dict, out: Path) -> dict:
    bundle = build_bundle(cfg)
    seed = _require_seed(cfg)
    settings = _fit_settings(cfg, bundle.params, for_blocks=False)
    result = if2(bundle.model, bundle.data, bundle.grid, bundle.covs, settings, seed=seed)
    return _write_fit_outputs(out, result, bundle)


def cmd_fit_ibpf(cfg: dict, out: Path) -> dict:
    bundle = build_bundle(cfg)
    seed = _require_seed(cfg)
    settings = _fit_settings(cfg, bundle.params, for_blocks=True)
    result = ibpf(bundle.model, bundle.data, bundle.grid, bundle.covs, settings, seed=seed)
    return _write_fit_outputs(out, result, bundle)


def cmd_fit_traj(cfg: dict, out: Path) -> dict:
    bundle = build_bundle(cfg)
    free = list(cfg["fit_traj"]["free"])
    result = trajectory_match(
        bundle.model, bundle.data, bundle.grid, bundle.covs, bundle.params, free
    )
    (out / "params.json").write_text(json.dumps(dict(result.best), indent=2, sort_keys=True))
    io.write_table(
        out / "fit_traj.csv",
        ["parameter", "value"],
        [[k, f"{result.best[k]:.10g}"] for k in (free or result.best)],
    )
    return {
        "model": bundle.model_id,
        "loglik": result.loglik,
        "free": free,
        "n_eval": result.n_eval,
        "restarts": result.restarts,
    }


def cmd_benchmark(cfg: dict, out: Path) -> dict:
    inputs: dict[str, str] = {}
    data = _load_cases(cfg, inputs)
    fit = fit_benchmark(data, per_unit=bool(cfg["benchmark"]["per_unit"]))
    io.write_table(
        out / "benchmark.csv",
        ["department", "alpha", "b", "phi", "loglik"],
        [
            [u, f"{fit.params[u].alpha:.8g}", f"{fit.params[u].b:.8g}",
             f"{fit.params[u].phi:.8g}", f"{fit.unit_logliks[u]:.8g}"]
            for u in fit.units
        ],
    )
    return {
        "model": "benchmark",
        "loglik": fit.loglik,
        "k": fit.k,
        "aic": fit.aic,
        "notes": list(fit.notes),
    }


def _profile_job(cfg: dict, parameter: str, value: float, seed: int) -> float:
    """One clamped maximization; rebuilt from config so it can run in a worker."""
    bundle = build_bundle(cfg)
    if parameter not in bundle.params:
        raise ConfigError(f"profiled parameter {parameter!r} is not a model parameter")
    params = bundle.params.replace({parameter: value})
    method = cfg["profile"]["method"]
    if method == "traj":
        free = [p for p in cfg["fit_traj"]["free"] if p != parameter]
        return trajectory_match(bundle.model, bundle.data, bundle.grid, bundle.covs, params, free).loglik
    if method == "if2":
        rw = {k: v for k, v in cfg["fit"]["rw_sd"].items() if k != parameter}
        settings = _fit_settings({**cfg, "fit": {**cfg["fit"], "rw_sd": rw}}, params, False)
        return if2(bundle.model, bundle.data, bundle.grid, bundle.covs, settings, seed=seed).best_loglik
    raise ConfigError(f"unknown profile method {method!r} (expected 'if2' or 'traj')")


def cmd_profile(cfg: dict, out: Path) -> dict:
    pr = cfg["profile"]
    parameter = pr["parameter"]
    if not parameter:
        raise ConfigError("profile.parameter must be set")
    values = pr["values"]
    if isinstance(values, dict):
        values = list(np.linspace(float(values["lo"]), float(values["hi"]), int(values["n"])))
    values = [float(v) for v in values]
    seed = _require_seed(cfg)
    jobs = profile_design(parameter, values, settings=None, replicates=int(pr["replicates"]), base_seed=seed)
    workers = int(cfg["workers"])
    args = [(cfg, j.parameter, j.value, j.seed) for j in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            logliks = list(pool.map(_profile_job_star, args))
    else:
        logliks = [_profile_job_star(a) for a in args]
    rows = [
        [j.parameter, f"{j.value:.10g}", j.replicate, j.seed, f"{ll:.8g}"]
        for j, ll in zip(jobs, logliks)
    ]
    io.write_table(out / "profile.csv", ["parameter", "value", "replicate", "seed", "loglik"], rows)
    return {
        "parameter": parameter,
        "n_points": len(values),
        "replicates": int(pr["replicates"]),
        "best_loglik": float(np.nanmax(logliks)),
    }


def _profile_job_star(args):
    return _profile_job(*args)


def cmd_mcap(cfg: dict, out: Path) -> dict:
    src = cfg["mcap"]["input"]
    if not src:
        raise ConfigError("mcap.input must point at a profile.csv")
    path = Path(src)
    if not path.exists():
        raise DataFormatError(f"{path}: file does not exist")
    with path.open() as fh:
        reader = csv.DictReader(fh)
        values, logliks, names = [], [], set()
        for row in reader:
            names.add(row["parameter"])
            values.append(float(row["value"]))
            logliks.append(float(row["loglik"]))
    curve = mcap_ci(
        np.array(values),
        np.array(logliks),
        confidence=float(cfg["mcap"]["confidence"]),
        span=float(cfg["mcap"]["span"]),
        parameter=",".join(sorted(names)),
    )
    io.write_table(
        out / "mcap.csv",
        ["value", "smoothed_loglik"],
        [[f"{v:.10g}", f"{s:.8g}"] for v, s in zip(curve.grid, curve.smoothed)],
    )
    return {
        "parameter": curve.parameter,
        "mle": curve.mle,
        "ci_lower": curve.ci[0],
        "ci_upper": curve.ci[1],
        "cutoff": curve.cutoff,
        "se_stat": curve.se_stat,
        "se_mc": curve.se_mc,
        "open_lower": curve.open_lower,
        "open_upper": curve.open_upper,
        "confidence": curve.confidence,
    }


def _load_candidates(path: str | Path, params: ParameterSet) -> list[tuple[ParameterSet, float]]:
    """Rows of a candidates.csv (loglik + parameter columns) as parameter
    draws with likelihood weights, anchored on the given parameter set."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: file does not exist")
    out = []
    with path.open() as fh:
        for row in csv.DictReader(fh):
            ll = float(row.pop("loglik"))
            updates = {k: float(v) for k, v in row.items() if k in params}
            unknown = [k for k in row if k not in params]
            if unknown:
                raise ConfigError(f"{path}: candidate columns {unknown} are not model parameters")
            out.append((params.replace(updates), ll))
    if not out:
        raise DataFormatError(f"{path}: no candidate rows")
    return out


def _embed_states(old_model, new_model, X: np.ndarray) -> np.ndarray:
    """Map filter particles into a model with extra (zero) compartments."""
    out = np.zeros((X.shape[0], new_model.n_states))
    old_index = {n: i for i, n in enumerate(old_model.state_names)}
    for j, name in enumerate(new_model.state_names):
        if name in old_index:
            out[:, j] = X[:, old_index[name]]
    return out


def cmd_forecast(cfg: dict, out: Path) -> dict:
    bundle = build_bundle(cfg)
    fc = cfg["forecast"]
    seed = _require_seed(cfg)
    scenario_id = str(fc["scenario"])
    horizon = int(fc["horizon_weeks"])
    origin = bundle.grid.t_end

    if bundle.model_id.startswith("toy:"):
        pf = particle_filter(
            bundle.model, bundle.params, bundle.data, bundle.grid, bundle.covs,
            J=int(fc["J"]), seed=seed,
        )
        candidates = (
            _load_candidates(fc["candidates"], bundle.params) if fc.get("candidates") else None
        )
        res = forecast_from_filter(
            bundle.model, bundle.params, pf.filter_sample, scenario_id, bundle.covs,
            origin, horizon, int(fc["n_sims"]), seed=seed + 1, window=int(fc["window"]),
            euler_step=bundle.grid.euler_step, week_duration=1.0,
            param_candidates=candidates,
        )
        return _write_forecast(out, res, bundle)

    geo = bundle.geography
    if cfg["data"]["scenario_file"]:
        spec = io.load_scenario(
            Path(cfg["data"]["scenario_file"]), scenario_id, bundle.origin_date, horizon
        )
        schedule = apply_vaccination_scenario(spec, bundle.model_id, geo, origin=origin)
    else:
        spec = builtin_scenario(scenario_id, geo, horizon_weeks=horizon)
        schedule = apply_vaccination_scenario(spec, bundle.model_id, geo, origin=origin)

    inputs: dict[str, str] = {}
    curve = _load_efficacy(cfg, inputs)
    if bundle.model_id == "model2":
        model_fc = m2.build_model2(
            np.nan_to_num(_load_cases(cfg, inputs, geo.n_units).values[:, 0]), geo, schedule=schedule
        )
        proj = trajectory_projection(
            model_fc, bundle.params, scenario_id, bundle.covs, 0.0,
            int(round(origin / WEEK)) + horizon,
        )
        keep = proj.times > origin + 1e-12
        io.write_table(
            out / "projection.csv",
            ["week", "department", "mean_reported", "lower", "upper"],
            [
                [n, u, f"{proj.mean_reported[i, ui]:.6g}", f"{proj.lower[i, ui]:.6g}", f"{proj.upper[i, ui]:.6g}"]
                for n, i in enumerate(np.where(keep)[0])
                for ui, u in enumerate(proj.units)
            ],
        )
        return {
            "model": "model2",
            "scenario": scenario_id,
            "horizon_weeks": horizon,
            "elimination_probability": None,
            "notes": ["deterministic model: trajectories only, elimination probability not defined"],
        }

    if bundle.model_id == "model3":
        cases = _load_cases(cfg, inputs, geo.n_units)
        median_rain = float(np.median(bundle.covs.rainfall)) if bundle.covs is not None else 0.002376
        model_fc = m3.build_model3(
            cases.values[:, :4], geo, schedule=schedule, curve=curve, median_rainfall=median_rain
        )
    elif bundle.model_id == "model1":
        phase_break = None
        if cfg["data"].get("phase_break_date") and bundle.start_date is not None:
            phase_break = io.week_time(
                bundle.start_date, io.parse_date(str(cfg["data"]["phase_break_date"]))
            )
        model_fc = m1.build_model1(
            trend_window=(bundle.grid.t0, bundle.grid.t_end),
            pop=float(bundle.params["pop"]),
            schedule=schedule,
            curve=curve,
            phase_break=phase_break,
        )
    else:
        raise ConfigError(f"forecast does not support model {bundle.model_id!r}")

    pf = particle_filter(
        bundle.model, bundle.params, bundle.data, bundle.grid, bundle.covs,
        J=int(fc["J"]), seed=seed, blocks=cfg["blocks"],
    )
    sample = _embed_states(bundle.model, model_fc, pf.filter_sample)
    params_fc = _apply_param_overrides(model_fc.params, cfg["params"])
    candidates = (
        _load_candidates(fc["candidates"], params_fc) if fc.get("candidates") else None
    )
    res = forecast_from_filter(
        model_fc, params_fc, sample, scenario_id, bundle.covs,
        origin, horizon, int(fc["n_sims"]), seed=seed + 1, window=int(fc["window"]),
        euler_step=bundle.grid.euler_step, param_candidates=candidates,
    )
    summary = _write_forecast(out, res, bundle)
    summary["filter_loglik"] = pf.loglik
    return summary


def _write_forecast(out: Path, res, bundle: Bundle) -> dict:
    national_true = res.true_infections.sum(axis=2)
    national_rep = res.reported.sum(axis=2)
    rows = []
    for s in range(national_true.shape[0]):
        for h in range(national_true.shape[1]):
            rows.append([s, h + 1, _fmt(national_true[s, h]), _fmt(national_rep[s, h])])
    io.write_table(
        out / "forecast.csv",
        ["sim", "week", "true_infections_national", "reported_national"],
        rows,
    )
    io.write_table(
        out / "elimination.csv",
        ["sim", "eliminated"],
        [[s, int(res.eliminated[s])] for s in range(res.eliminated.size)],
    )
    return {
        "model": bundle.model_id,
        "scenario": res.scenario,
        "n_sims": int(res.eliminated.size),
        "horizon_weeks": int(res.times.size),
        "window": res.window,
        "elimination_probability": res.probability,
        "source": res.source,
    }


def _require_seed(cfg: dict) -> int:
    if cfg.get("seed") is None:
        raise ConfigError("a --seed is mandatory for stochastic commands")
    return int(cfg["seed"])


HANDLERS = {
    "simulate": cmd_simulate,
    "filter": cmd_filter,
    "fit-if2": cmd_fit_if2,
    "fit-ibpf": cmd_fit_ibpf,
    "fit-traj": cmd_fit_traj,
    "benchmark": cmd_benchmark,
    "profile": cmd_profile,
    "mcap": cmd_mcap,
    "forecast": cmd_forecast,
}


def run_command(command: str, cfg: dict) -> int:
    """Execute one command; returns the process exit status."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "version": __version__,
        "started": dt.datetime.now().isoformat(timespec="seconds"),
        "status": "running",
        "partial": True,
    }
    started = time.time()
    try:
        if command in STOCHASTIC_COMMANDS:
            _require_seed(cfg)
        summary = HANDLERS[command](cfg, out)
        manifest["status"] = "ok"
        manifest["partial"] = False
        code = 0
    except (ConfigError, ValidationError, CoverageError) as exc:
        manifest["status"] = f"config/validation error: {exc}"
        summary = {"error": str(exc), "category": "config"}
        code = EXIT_CODES["config"]
    except DataFormatError as exc:
        manifest["status"] = f"data error: {exc}"
        summary = {"error": str(exc), "category": "data"}
        code = EXIT_CODES["data"]
    except EpipompError as exc:
        manifest["status"] = f"runtime error: {exc}"
        summary = {"error": str(exc), "category": "runtime"}
        code = EXIT_CODES["runtime"]
    except Exception as exc:  # noqa: BLE001 - surfaced in the manifest, never silent
        manifest["status"] = f"unexpected error: {exc!r}"
        summary = {"error": repr(exc), "category": "runtime"}
        code = EXIT_CODES["runtime"]
    manifest["wall_time_s"] = round(time.time() - started, 3)
    manifest["outputs"] = sorted(p.name for p in out.iterdir() if p.is_file())
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default))
    if code == 0:
        print(f"{command}: ok ({out})")
    else:
        print(f"{command}: {summary['category']} error: {summary['error']}", file=sys.stderr)
    return code


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="epipomp",
        description="Simulation and likelihood-based inference for POMP epidemic models.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (mandatory for stochastic commands)")
    parser.add_argument("--workers", type=int, default=None, help="parallel workers for job-level parallelism")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. --set filter.J=1000")
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    return run_command(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
