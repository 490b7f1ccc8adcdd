"""Declarative experiment runner.

Subcommands:
    run <config.json>         execute an experiment, write result files
    compare <dirA> <dirB>     L1 distances between posterior pdfs + mean gaps
    validate <config.json>    check a config without running

Config schema (JSON object; unknown keys are rejected, defaults are
materialized into the manifest):

    experiment      "scalar-identify" | "lorenz84-track" | "diffusion1d-identify"
    seed            integer, required (all randomness derives from it)
    output_dir      directory; relative paths resolve under $PCEBAYES_OUTPUT_ROOT
    update          {degree: 0..3, basis: "monomial"|"dictionary", dictionary: path}
                    (a dictionary file is a JSON list of exponent vectors)
    measurement     {kind, noise_scale, noise_shape}; kinds per experiment:
                    identity / linear|cubic / model (+ proj_degree)
    observations    {count, source: "synthesized"|"file", file}
    pdf             {grid_min, grid_max, grid_points, samples, components}
    run             {recompress, quad_level, quantile_samples, degree_cap}
    -- experiment-specific --
    truth           scalar only: {shape: "gaussian"|"bimodal", mix_*}
    batch_size      scalar only: observations per update (noise scales 1/sqrt N)
    prior           scalar: {mean, std}; others: {mean, std, state_degree}
    model           lorenz84: {a, b, forcing_f, forcing_g, dt_inner,
                    days_per_update}; diffusion: {n_cells, n_patches,
                    obs_cells, q_true, loads}
    truth_x0        lorenz84 only: truth trajectory start

A run writes into its output directory: manifest.json (fully resolved
config, versions, seeds, numerical warnings), history.csv (one row per
update step), posterior_pdf.csv (prior/posterior density columns on a fixed
grid), error.csv (per-step RMSE against the synthesized truth, empty when
observations come from a file), and plain-text coefficient dumps of the
prior and posterior expansions.  All numbers carry 17 significant digits
and runs are byte-reproducible for a fixed config.  Exit codes: 0 success,
2 validation failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from dataclasses import replace

from . import __version__
from .filtering import (MeasurementModel, RunOptions, StateModel,
                        TrackingState, assimilate_step, history_rows,
                        recompress_gaussian, run_sequence)
from .models import (Diffusion1DSetup, Lorenz84Params, diffusion1d_solve,
                     diffusion_loads, lorenz84_model, lorenz84_step,
                     scalar_truth_prior)
from .moments import covariance, mean
from .multiindex import IndexSet
from .oracle import kde_pdf
from .pce import PceVector, sample_paths, write_pce
from .quadrature import QuadratureDimensionError
from .update import BasisDictionary, WarningRecord

OUTPUT_ROOT_ENV = "PCEBAYES_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Configuration problem, annotated with the offending field path."""


# -- schema ------------------------------------------------------------------
#
# Defaults double as the type schema: every legal key appears here, and a
# None default marks a required or experiment-specific field.

_COMMON_DEFAULTS = {
    "experiment": None,
    "seed": None,
    "output_dir": None,
    "update": {"degree": 1, "basis": "monomial", "dictionary": None},
    "measurement": {"kind": None, "noise_scale": 0.5, "noise_shape": None},
    "observations": {"count": 10, "source": "synthesized", "file": None},
    "pdf": {"grid_min": -4.0, "grid_max": 4.0, "grid_points": 401,
            "samples": 20000, "components": [0]},
    "run": {"recompress": False, "quad_level": 6, "quantile_samples": 4000,
            "degree_cap": 8},
}

_EXPERIMENT_DEFAULTS = {
    "scalar-identify": {
        "truth": {"shape": "gaussian", "mix_weights": [0.6, 0.4],
                  "mix_means": [-1.0, 1.5], "mix_stds": [0.35, 0.25]},
        "prior": {"mean": 0.0, "std": 2.0},
        "batch_size": 1,
        "measurement": {"kind": "identity"},
    },
    "lorenz84-track": {
        "model": {"a": 0.25, "b": 4.0, "forcing_f": 8.0, "forcing_g": 1.0,
                  "dt_inner": 0.05, "days_per_update": 1.0},
        "prior": {"mean": [1.0, 0.5, -0.5], "std": [0.4, 0.4, 0.4],
                  "state_degree": 2},
        "truth_x0": [1.2, 0.8, -0.4],
        "measurement": {"kind": "linear"},
        "run": {"recompress": True},
    },
    "diffusion1d-identify": {
        "model": {"n_cells": 40, "n_patches": 4,
                  "obs_cells": [7, 19, 31], "q_true": [0.6, -0.4, 0.3, -0.2],
                  "loads": ["constant", "sine", "bump"]},
        "prior": {"mean": 0.0, "std": 0.8, "state_degree": 1},
        "measurement": {"kind": "model", "proj_degree": 2},
        "run": {"recompress": True, "quad_level": 5},
    },
}


def _deep_merge(base: dict, extra: dict, path: str = "",
                strict: bool = True) -> dict:
    """Overlay extra onto base; unknown keys are errors when strict."""
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}.{key}" if path else key
        if key not in out:
            if strict:
                raise ConfigError(f"unknown key '{where}'")
            out[key] = copy.deepcopy(value)
            continue
        if isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value, where, strict)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def load_config(path: str | Path) -> dict:
    """Parse and validate a config file; returns the resolved config."""
    path = Path(path)
    _require(path.exists(), f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from exc
    _require(isinstance(raw, dict), "top-level config must be an object")
    experiment = raw.get("experiment")
    _require(experiment in _EXPERIMENT_DEFAULTS,
             f"experiment must be one of {sorted(_EXPERIMENT_DEFAULTS)}, "
             f"got {experiment!r}")
    defaults = _deep_merge(_COMMON_DEFAULTS, _EXPERIMENT_DEFAULTS[experiment],
                           strict=False)
    cfg = _deep_merge(defaults, raw)
    _require(isinstance(cfg["seed"], int) and not isinstance(cfg["seed"], bool),
             "seed: an integer seed is required")
    _require(isinstance(cfg["output_dir"], str) and cfg["output_dir"],
             "output_dir: a directory name is required")
    m = cfg["update"]["degree"]
    _require(isinstance(m, int) and not isinstance(m, bool) and 0 <= m <= 3,
             f"update.degree: must be an integer in 0..3, got {m!r}")
    basis = cfg["update"]["basis"]
    _require(basis in ("monomial", "dictionary"),
             f"update.basis: 'monomial' or 'dictionary', got {basis!r}")
    if basis == "dictionary":
        dict_path = cfg["update"]["dictionary"]
        _require(isinstance(dict_path, str),
                 "update.dictionary: path required for the dictionary basis")
        _require(Path(dict_path).exists(),
                 f"update.dictionary: file {dict_path} does not exist")
    obs = cfg["observations"]
    _require(obs["source"] in ("synthesized", "file"),
             "observations.source: 'synthesized' or 'file'")
    if obs["source"] == "file":
        _require(isinstance(obs["file"], str) and Path(obs["file"]).exists(),
                 f"observations.file: file {obs['file']!r} does not exist")
    _require(isinstance(obs["count"], int) and not isinstance(obs["count"], bool)
             and obs["count"] >= 0,
             "observations.count: must be an integer >= 0")
    _require(isinstance(cfg["measurement"]["noise_scale"], (int, float))
             and cfg["measurement"]["noise_scale"] >= 0,
             "measurement.noise_scale: must be a number >= 0")
    _require(cfg["pdf"]["grid_points"] >= 2, "pdf.grid_points: must be >= 2")
    _require(cfg["pdf"]["samples"] >= 100, "pdf.samples: must be >= 100")
    _require(cfg["run"]["quantile_samples"] >= 100,
             "run.quantile_samples: must be >= 100 (history quantile columns)")
    kind = cfg["measurement"]["kind"]
    allowed = {"scalar-identify": ("identity",),
               "lorenz84-track": ("linear", "cubic"),
               "diffusion1d-identify": ("model",)}[experiment]
    _require(kind in allowed,
             f"measurement.kind: must be one of {allowed} for {experiment}")
    return cfg


def _out_dir(cfg: dict) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV, "")
    out = Path(cfg["output_dir"])
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    columns = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return columns, data


# -- experiment drivers ---------------------------------------------------------

def _derived_seed(master: int, stream: int) -> int:
    return int(np.random.default_rng([master, stream]).integers(0, 2 ** 62))


def dictionary_from_file(path: str | Path, meas_dim: int) -> BasisDictionary:
    """Load a polynomial dictionary: a JSON list of exponent vectors.

    Each entry is a list of ``meas_dim`` nonnegative integers e, defining
    the basis function prod_j y_j^{e_j}.
    """
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from exc
    _require(isinstance(spec, list) and spec,
             f"{path}: expected a nonempty list of exponent vectors")
    funcs, labels = [], []
    max_degree = 0
    spans_linear = set()
    for entry in spec:
        _require(isinstance(entry, list) and len(entry) == meas_dim
                 and all(isinstance(e, int) and e >= 0 for e in entry),
                 f"{path}: each entry must be {meas_dim} nonnegative ints, "
                 f"got {entry!r}")
        exps = np.array(entry, dtype=float)
        funcs.append(lambda y, exps=exps: float(np.prod(np.asarray(y) ** exps)))
        labels.append("*".join(f"y{j}^{e}" for j, e in enumerate(entry) if e)
                      or "1")
        max_degree = max(max_degree, sum(entry))
        if sum(entry) == 1:
            spans_linear.add(entry.index(1))
    return BasisDictionary(tuple(funcs), tuple(labels),
                           spans_linear=len(spans_linear) == meas_dim,
                           max_degree=max_degree)


def _basis_dictionary(cfg: dict, meas_dim: int) -> BasisDictionary | None:
    if cfg["update"]["basis"] != "dictionary":
        return None
    return dictionary_from_file(cfg["update"]["dictionary"], meas_dim)


def _pdf_rows(cfg: dict, vectors: dict[str, PceVector],
              extra_samples: dict[str, np.ndarray] | None = None) -> tuple:
    pdf_cfg = cfg["pdf"]
    grid = np.linspace(pdf_cfg["grid_min"], pdf_cfg["grid_max"],
                       pdf_cfg["grid_points"])
    columns = ["grid"]
    table = {"grid": grid}
    seed = _derived_seed(cfg["seed"], 101)
    for name, vec in vectors.items():
        draws = sample_paths(vec, pdf_cfg["samples"], seed=seed)
        for comp in pdf_cfg["components"]:
            col = f"{name}_{comp}"
            columns.append(col)
            table[col] = kde_pdf(draws[:, comp], grid)
    for name, samples in (extra_samples or {}).items():
        columns.append(name)
        table[name] = kde_pdf(samples, grid)
    rows = [{c: table[c][i] for c in columns} for i in range(grid.size)]
    return columns, rows


def _history_csv_rows(ts: TrackingState, state_dim: int) -> tuple:
    rows = history_rows(ts)
    columns = ["step", "time"]
    columns += [f"forecast_mean_{i}" for i in range(state_dim)]
    columns += [f"assim_mean_{i}" for i in range(state_dim)]
    columns += ["cov_trace"]
    for q in (5, 25, 50, 75, 95):
        columns += [f"q{q:02d}_{i}" for i in range(state_dim)]
    return columns, rows


def _run_scalar(cfg: dict, warnings_out: list) -> dict:
    truth_cfg = cfg["truth"]
    truth = scalar_truth_prior(
        shape=truth_cfg["shape"],
        prior_mean=float(cfg["prior"]["mean"]),
        prior_std=float(cfg["prior"]["std"]),
        mix_weights=tuple(truth_cfg["mix_weights"]),
        mix_means=tuple(truth_cfg["mix_means"]),
        mix_stds=tuple(truth_cfg["mix_stds"]))
    n_updates = cfg["observations"]["count"]
    batch = cfg["batch_size"]
    eps = cfg["measurement"]["noise_scale"]
    eps_eff = eps / np.sqrt(batch)
    obs_from_file = cfg["observations"]["source"] == "file"
    if obs_from_file:
        truth_value = None
        _, data = read_csv(Path(cfg["observations"]["file"]))
        observations = [row for row in data]
    else:
        truth_value = float(truth.sampler(1, _derived_seed(cfg["seed"], 1))[0])
        rng = np.random.default_rng(_derived_seed(cfg["seed"], 2))
        observations = [
            np.array([truth_value + eps * rng.standard_normal(batch).mean()])
            for _ in range(n_updates)]
    model = StateModel()
    mm = MeasurementModel(observe=lambda s: s, meas_dim=1,
                          noise_scale=float(eps_eff), poly_degree=1,
                          vectorized=True)
    options = RunOptions(quad_level=cfg["run"]["quad_level"],
                         degree_cap=cfg["run"]["degree_cap"],
                         recompress=cfg["run"]["recompress"],
                         quantile_samples=cfg["run"]["quantile_samples"],
                         quantile_seed=_derived_seed(cfg["seed"], 3),
                         dictionary=_basis_dictionary(cfg, 1),
                         warnings_out=warnings_out)
    ts = run_sequence(TrackingState(state=truth.prior), model, mm,
                      observations, cfg["update"]["degree"], options)
    error_rows = []
    if truth_value is not None:
        error_rows = [{"step": 0,
                       "rmse": abs(float(mean(truth.prior)[0]) - truth_value)}]
        error_rows += [{"step": rec.step,
                        "rmse": abs(float(rec.assim_mean[0]) - truth_value)}
                       for rec in ts.history]
    truth_draws = truth.sampler(cfg["pdf"]["samples"],
                                _derived_seed(cfg["seed"], 4))
    pdf_columns, pdf_rows = _pdf_rows(
        cfg, {"prior": truth.prior, "posterior": ts.state},
        {"truth": truth_draws})
    return {"prior": truth.prior, "tracking": ts, "state_dim": 1,
            "error_rows": error_rows, "pdf": (pdf_columns, pdf_rows),
            "truth_value": None if truth_value is None else [truth_value]}


_LORENZ_OBSERVE = {
    "linear": (lambda s: s, 1),
    "cubic": (lambda s: s ** 3, 3),
}


def _run_lorenz(cfg: dict, warnings_out: list) -> dict:
    mc = cfg["model"]
    params = Lorenz84Params(a=mc["a"], b=mc["b"], forcing_f=mc["forcing_f"],
                            forcing_g=mc["forcing_g"], dt_inner=mc["dt_inner"],
                            days_per_update=mc["days_per_update"])
    prior_cfg = cfg["prior"]
    state_set = IndexSet.total_degree(3, int(prior_cfg["state_degree"]))
    prior = PceVector.gaussian(
        np.asarray(prior_cfg["mean"], dtype=float),
        np.diag(np.asarray(prior_cfg["std"], dtype=float))).with_index_set(state_set)
    observe, h_degree = _LORENZ_OBSERVE[cfg["measurement"]["kind"]]
    eps = float(cfg["measurement"]["noise_scale"])
    shape = cfg["measurement"]["noise_shape"]
    mm = MeasurementModel(observe=observe, meas_dim=3, noise_scale=eps,
                          noise_shape=None if shape is None
                          else np.asarray(shape, dtype=float),
                          poly_degree=h_degree, vectorized=True)
    n_updates = cfg["observations"]["count"]
    obs_from_file = cfg["observations"]["source"] == "file"
    truth_states = []
    if obs_from_file:
        _, data = read_csv(Path(cfg["observations"]["file"]))
        observations = [row for row in data]
    else:
        x_true = np.asarray(cfg["truth_x0"], dtype=float)
        for _ in range(n_updates):
            x_true = lorenz84_step(x_true, params)
            truth_states.append(x_true.copy())
        rng = np.random.default_rng(_derived_seed(cfg["seed"], 2))
        observations = [
            np.asarray(mm.apply(x[None, :])[0]) + eps * rng.standard_normal(3)
            for x in truth_states]
    options = RunOptions(quad_level=cfg["run"]["quad_level"],
                         degree_cap=cfg["run"]["degree_cap"],
                         recompress=cfg["run"]["recompress"],
                         quantile_samples=cfg["run"]["quantile_samples"],
                         quantile_seed=_derived_seed(cfg["seed"], 3),
                         dt_per_step=params.days_per_update,
                         dictionary=_basis_dictionary(cfg, 3),
                         warnings_out=warnings_out)
    ts = run_sequence(TrackingState(state=prior), lorenz84_model(params), mm,
                      observations, cfg["update"]["degree"], options)
    error_rows = []
    if truth_states:
        error_rows = [
            {"step": 0,
             "rmse": float(np.sqrt(np.mean((mean(prior)
                                            - np.asarray(cfg["truth_x0"])) ** 2)))}]
        error_rows += [
            {"step": rec.step,
             "rmse": float(np.sqrt(np.mean((rec.assim_mean - xt) ** 2)))}
            for rec, xt in zip(ts.history, truth_states)]
    pdf_columns, pdf_rows = _pdf_rows(cfg, {"prior": prior,
                                            "posterior": ts.state})
    return {"prior": prior, "tracking": ts, "state_dim": 3,
            "error_rows": error_rows, "pdf": (pdf_columns, pdf_rows),
            "truth_value": ([float(v) for v in truth_states[-1]]
                            if truth_states else None)}


def _run_diffusion(cfg: dict, warnings_out: list) -> dict:
    mc = cfg["model"]
    setup = Diffusion1DSetup(n_cells=int(mc["n_cells"]),
                             n_patches=int(mc["n_patches"]),
                             obs_cells=tuple(int(i) for i in mc["obs_cells"]),
                             q_true=tuple(float(v) for v in mc["q_true"]))
    loads = diffusion_loads(setup, tuple(mc["loads"]))
    p = setup.n_patches
    prior_cfg = cfg["prior"]
    state_set = IndexSet.total_degree(p, int(prior_cfg["state_degree"]))
    prior = PceVector.gaussian(
        np.full(p, float(prior_cfg["mean"])),
        float(prior_cfg["std"]) * np.eye(p)).with_index_set(state_set)
    eps = float(cfg["measurement"]["noise_scale"])
    n_obs = len(setup.obs_cells)
    n_updates = cfg["observations"]["count"]
    q_true = np.asarray(setup.q_true)
    obs_from_file = cfg["observations"]["source"] == "file"
    if obs_from_file:
        _, data = read_csv(Path(cfg["observations"]["file"]))
        observations = [row for row in data]
    else:
        rng = np.random.default_rng(_derived_seed(cfg["seed"], 2))
        observations = []
        for k in range(n_updates):
            clean = diffusion1d_solve(q_true, loads[k % len(loads)], setup)
            observations.append(clean + eps * rng.standard_normal(n_obs))
    options = RunOptions(quad_level=cfg["run"]["quad_level"],
                         degree_cap=cfg["run"]["degree_cap"],
                         recompress=cfg["run"]["recompress"],
                         quantile_samples=cfg["run"]["quantile_samples"],
                         quantile_seed=_derived_seed(cfg["seed"], 3),
                         dictionary=_basis_dictionary(cfg, n_obs),
                         warnings_out=warnings_out)
    model = StateModel()    # static parameters
    ts = TrackingState(state=prior)
    m = cfg["update"]["degree"]
    for k, y_hat in enumerate(observations):
        load = loads[k % len(loads)]
        mm = MeasurementModel(
            observe=lambda q, load=load: diffusion1d_solve(q, load, setup),
            meas_dim=n_obs, noise_scale=eps,
            proj_degree=int(cfg["measurement"]["proj_degree"]))
        ts = assimilate_step(ts, model, mm, y_hat, m, options)
        if options.recompress:
            ts = replace(ts, state=recompress_gaussian(
                ts.state, warnings_out=warnings_out))
    error_rows = []
    if not obs_from_file:
        error_rows = [
            {"step": 0,
             "rmse": float(np.sqrt(np.mean((mean(prior) - q_true) ** 2)))}]
        error_rows += [
            {"step": rec.step,
             "rmse": float(np.sqrt(np.mean((rec.assim_mean - q_true) ** 2)))}
            for rec in ts.history]
    pdf_columns, pdf_rows = _pdf_rows(cfg, {"prior": prior,
                                            "posterior": ts.state})
    return {"prior": prior, "tracking": ts, "state_dim": p,
            "error_rows": error_rows, "pdf": (pdf_columns, pdf_rows),
            "truth_value": ([float(v) for v in q_true]
                            if not obs_from_file else None)}


_DRIVERS = {
    "scalar-identify": _run_scalar,
    "lorenz84-track": _run_lorenz,
    "diffusion1d-identify": _run_diffusion,
}


def run(config_path: str | Path) -> Path:
    """Execute a config; returns the output directory (raises on failure)."""
    cfg = load_config(config_path)
    out = _out_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    warnings_out: list[WarningRecord] = []
    result = _DRIVERS[cfg["experiment"]](cfg, warnings_out)
    ts: TrackingState = result["tracking"]
    columns, rows = _history_csv_rows(ts, result["state_dim"])
    write_csv(out / "history.csv", columns, rows)
    write_csv(out / "error.csv", ["step", "rmse"], result["error_rows"])
    pdf_columns, pdf_rows = result["pdf"]
    write_csv(out / "posterior_pdf.csv", pdf_columns, pdf_rows)
    write_pce(result["prior"], out / "prior_state.txt")
    write_pce(ts.state, out / "posterior_state.txt")
    posterior_cov = covariance(ts.state, ts.state)
    manifest = {
        "experiment": cfg["experiment"],
        "package_version": __version__,
        "resolved_config": cfg,
        "truth_value": result["truth_value"],
        "posterior_mean": [float(v) for v in mean(ts.state)],
        "posterior_cov_trace": float(np.trace(posterior_cov)),
        "germ_used": ts.germ_used,
        "warnings": [{"kind": w.kind, "message": w.message, "value": w.value}
                     for w in warnings_out],
        "outputs": ["history.csv", "error.csv", "posterior_pdf.csv",
                    "prior_state.txt", "posterior_state.txt"],
    }
    with open(out / "manifest.json", "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def compare(dir_a: str | Path, dir_b: str | Path) -> Path:
    """L1 pdf distances and per-step mean gaps between two runs.

    Writes two files into dir_a: comparison_pdf_l1_vs_<b>.csv (one row per
    shared density column) and comparison_mean_diff_vs_<b>.csv (one row per
    step).  The runs must share the pdf grid and history schema.
    """
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    cols_a, pdf_a = read_csv(dir_a / "posterior_pdf.csv")
    cols_b, pdf_b = read_csv(dir_b / "posterior_pdf.csv")
    if cols_a[0] != "grid" or cols_b[0] != "grid":
        raise ConfigError("posterior_pdf.csv must start with a grid column")
    grid_a, grid_b = pdf_a[:, 0], pdf_b[:, 0]
    if grid_a.shape != grid_b.shape or not np.array_equal(grid_a, grid_b):
        raise ConfigError("runs use different pdf grids; cannot compare")
    shared = [c for c in cols_a[1:] if c in cols_b[1:]]
    pdf_rows = []
    for col in shared:
        a = pdf_a[:, cols_a.index(col)]
        b = pdf_b[:, cols_b.index(col)]
        pdf_rows.append({"column": col,
                         "l1_distance": float(np.trapezoid(np.abs(a - b),
                                                           grid_a))})
    hist_cols_a, hist_a = read_csv(dir_a / "history.csv")
    hist_cols_b, hist_b = read_csv(dir_b / "history.csv")
    if hist_cols_a != hist_cols_b or hist_a.shape != hist_b.shape:
        raise ConfigError("history schemas differ; cannot compare")
    mean_cols = [c for c in hist_cols_a if c.startswith("assim_mean_")]
    step_rows = []
    for i in range(hist_a.shape[0]):
        row = {"step": int(hist_a[i, hist_cols_a.index("step")])}
        for c in mean_cols:
            row[f"diff_{c}"] = float(hist_a[i, hist_cols_a.index(c)]
                                     - hist_b[i, hist_cols_b.index(c)])
        step_rows.append(row)
    out = dir_a / f"comparison_pdf_l1_vs_{dir_b.name}.csv"
    with open(out, "w", newline="\n") as fh:
        fh.write("column,l1_distance\n")
        for row in pdf_rows:
            fh.write(f"{row['column']},{_fmt(row['l1_distance'])}\n")
    mean_out = dir_a / f"comparison_mean_diff_vs_{dir_b.name}.csv"
    write_csv(mean_out, ["step"] + [f"diff_{c}" for c in mean_cols], step_rows)
    return out


def pdf_l1_distances(dir_a: str | Path, dir_b: str | Path) -> dict[str, float]:
    """Posterior-pdf L1 distances keyed by column (helper for tests/plots)."""
    dir_a, dir_b = Path(dir_a), Path(dir_b)
    cols_a, pdf_a = read_csv(dir_a / "posterior_pdf.csv")
    cols_b, pdf_b = read_csv(dir_b / "posterior_pdf.csv")
    if not np.array_equal(pdf_a[:, 0], pdf_b[:, 0]):
        raise ConfigError("runs use different pdf grids; cannot compare")
    out = {}
    for col in cols_a[1:]:
        if col in cols_b:
            a = pdf_a[:, cols_a.index(col)]
            b = pdf_b[:, cols_b.index(col)]
            out[col] = float(np.trapezoid(np.abs(a - b), pdf_a[:, 0]))
    return out


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pcebayes",
        description="Sampling-free Bayesian update experiments on polynomial "
                    "chaos expansions")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_cmp = sub.add_parser("compare", help="compare two run directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            load_config(args.config)
            print("config OK")
            return EXIT_OK
        if args.command == "run":
            out = run(args.config)
            print(f"run complete: {out}")
            return EXIT_OK
        out = compare(args.dir_a, args.dir_b)
        print(f"comparison written: {out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureDimensionError, OverflowError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
