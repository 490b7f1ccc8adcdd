"""Sequential tracking: propagate, forecast with fresh noise, assimilate.

Each update step advances the assimilated PCE state through the model by
pseudo-spectral projection, synthesizes the measurement forecast with
measurement noise carried on freshly adjoined germ dimensions (so the
noise is exactly independent of the forecast by construction), and applies
the degree-m update.  Germ growth is linear in the step count unless the
optional Gaussian recompression between steps is enabled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from . import quadrature
from .hermite import norm_sq
from .moments import covariance, mean
from .multiindex import IndexSet, MultiIndex
from .pce import PceVector, _design_matrix, germ_extend, pce_eval_batch, sample_paths
from .update import (APPLY_DEGREE_CAP, DEFAULT_CUTOFF, BasisDictionary,
                     WarningRecord, bayes_update, general_bayes_update)

QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)


@dataclass(frozen=True)
class StateModel:
    """Deterministic step map over one assimilation interval.

    ``step`` maps a state array to a state array; ``step=None`` means the
    identity (static parameters) and skips quadrature entirely.  With
    ``vectorized`` the map accepts (n, d) batches.  The optional white
    process-noise scale/shaping describe the truth dynamics for synthetic
    experiments; the tracking propagation itself runs the noise-free map.
    """
    step: Callable[[np.ndarray], np.ndarray] | None = None
    vectorized: bool = False
    poly_degree: int | None = None
    process_noise_scale: float = 0.0
    process_noise_shape: np.ndarray | None = None

    def apply(self, states: np.ndarray) -> np.ndarray:
        if self.step is None:
            return states
        if self.vectorized:
            return np.asarray(self.step(states), dtype=float)
        return np.array([self.step(row) for row in states], dtype=float)


@dataclass(frozen=True)
class MeasurementModel:
    """Observation map h plus the linear-in-noise error model eps * S_y v."""
    observe: Callable[[np.ndarray], np.ndarray]
    meas_dim: int
    noise_scale: float
    noise_shape: np.ndarray | None = None   # (R, R); identity when None
    noise_width: int | None = None          # fresh germ dims per step
    poly_degree: int | None = None          # degree of observe if polynomial
    proj_degree: int | None = None          # degree of the projected h(x)
    vectorized: bool = False

    def __post_init__(self):
        if self.noise_scale < 0:
            raise ValueError("noise scale must be >= 0")
        shape = self.noise_shape
        if shape is not None:
            shape = np.atleast_2d(np.asarray(shape, dtype=float))
            if shape.shape != (self.meas_dim, self.meas_dim):
                raise ValueError("noise shaping must be (meas_dim, meas_dim)")
            object.__setattr__(self, "noise_shape", shape)

    @property
    def width(self) -> int:
        return self.meas_dim if self.noise_width is None else self.noise_width

    def apply(self, states: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.observe(states), dtype=float)
        return np.array([np.atleast_1d(self.observe(row)) for row in states],
                        dtype=float)


class Forecast(NamedTuple):
    """Measurement forecast plus the record of which germ dims are noise."""
    y: PceVector
    noise_dims: tuple[int, ...]


@dataclass(frozen=True)
class StepRecord:
    step: int
    time: float
    forecast_mean: np.ndarray
    assim_mean: np.ndarray
    cov_trace: float
    degree: int
    quantiles: np.ndarray | None = None   # (5, state_dim), rows q05..q95


@dataclass(frozen=True)
class TrackingState:
    """Assimilated PCE state plus germ bookkeeping across update steps."""
    state: PceVector
    step_count: int = 0
    germ_used: int = 0        # cumulative fresh dims consumed; nondecreasing
    history: tuple[StepRecord, ...] = ()

    def __post_init__(self):
        if len(self.history) != self.step_count:
            raise ValueError("history length must equal the step counter")


@dataclass(frozen=True)
class RunOptions:
    quad_level: int = 6
    degree_cap: int = APPLY_DEGREE_CAP
    cutoff: float = DEFAULT_CUTOFF
    recompress: bool = False
    dt_per_step: float = 1.0
    quantile_samples: int = 0             # 0 disables quantile tracking
    quantile_seed: int = 0
    dictionary: BasisDictionary | None = None   # replaces the monomial basis
    warnings_out: list | None = None


def _support_grid(z: PceVector, quad_level: int):
    dims = z.index_set.support_dims()
    nodes, weights = quadrature.tensor_grid(len(dims), quad_level)
    thetas = np.zeros((nodes.shape[0], z.germ_dim))
    for col, d in enumerate(dims):
        thetas[:, d] = nodes[:, col]
    return thetas, weights


def _project_onto(values: np.ndarray, thetas: np.ndarray, weights: np.ndarray,
                  index_set: IndexSet) -> PceVector:
    design = _design_matrix(index_set, thetas)
    norms = np.array([norm_sq(a) for a in index_set.members])
    coeffs = (design * weights[:, None]).T @ values / norms[:, None]
    return PceVector(index_set, coeffs)


def propagate(z: PceVector, model: StateModel, quad_level: int) -> PceVector:
    """Push the state PCE through the step map by pseudo-spectral projection.

    Evaluates z on a tensor Gauss-Hermite grid spanning the germ dimensions
    it actually references, applies the map at every node, and projects the
    images back onto z's index set.  Exact for polynomial maps within the
    quadrature level; dimensions beyond the full-tensor limit are refused.
    """
    if model.step is None:
        return z
    thetas, weights = _support_grid(z, quad_level)
    fx = model.apply(pce_eval_batch(z, thetas))
    if fx.shape != (thetas.shape[0], z.dim):
        raise ValueError("step map must preserve the state dimension")
    return _project_onto(fx, thetas, weights, z.index_set)


def _total_degree_on_dims(dims: Sequence[int], degree: int,
                          germ_dim: int) -> IndexSet:
    base = IndexSet.total_degree(len(dims), degree)
    members = []
    for a in base.members:
        ent = [0] * germ_dim
        for col, d in enumerate(dims):
            ent[d] = a[col]
        members.append(MultiIndex(ent))
    return IndexSet(members, germ_dim=germ_dim)


def forecast_measurement(x_f: PceVector, mm: MeasurementModel,
                         quad_level: int | None = None) -> Forecast:
    """y_f = h(x_f) + eps * S_y * v with v on fresh germ dimensions.

    h is applied by pseudo-spectral projection onto a total-degree set over
    x_f's germ (exact for polynomial h within the quadrature level); the
    noise term is linear in ``width`` freshly adjoined independent standard
    Gaussian modes, so its covariance with the forecast vanishes exactly.
    """
    if mm.poly_degree == 1:
        # affine observation: coefficients transform exactly, with no
        # quadrature and no germ-width limit
        base = mm.apply(mean(x_f)[None, :])[0]
        if base.shape != (mm.meas_dim,):
            raise ValueError("observation map must produce meas_dim components")
        shifted = mm.apply(mean(x_f)[None, :] + x_f.centered().coeffs)
        coeffs = shifted - base
        coeffs[x_f.index_set.index_of(MultiIndex(()))] = base
        y_core = PceVector(x_f.index_set, coeffs)
    else:
        proj_degree = mm.proj_degree
        if proj_degree is None:
            if mm.poly_degree is None:
                raise ValueError(
                    "set proj_degree (or poly_degree) on the measurement model")
            proj_degree = min(mm.poly_degree * max(x_f.index_set.max_degree, 1),
                              APPLY_DEGREE_CAP)
        if quad_level is None:
            h_deg = mm.poly_degree if mm.poly_degree is not None else 2
            quad_level = quadrature.required_level(
                proj_degree + h_deg * max(x_f.index_set.max_degree, 1))
        thetas, weights = _support_grid(x_f, quad_level)
        hx = mm.apply(pce_eval_batch(x_f, thetas))
        if hx.shape != (thetas.shape[0], mm.meas_dim):
            raise ValueError("observation map must produce meas_dim components")
        out_set = _total_degree_on_dims(x_f.index_set.support_dims(),
                                        proj_degree, x_f.germ_dim)
        y_core = _project_onto(hx, thetas, weights, out_set)
    width = mm.width
    y_ext = germ_extend(y_core, width)
    noise_dims = tuple(range(x_f.germ_dim, x_f.germ_dim + width))
    if mm.noise_scale > 0.0 and width > 0:
        shape = (np.eye(mm.meas_dim) if mm.noise_shape is None
                 else mm.noise_shape)
        loads = mm.noise_scale * shape[:, :width]
        noise = {MultiIndex((0,) * d + (1,)): loads[:, col]
                 for col, d in enumerate(noise_dims)}
        y_ext = y_ext + PceVector.from_dict(
            noise, germ_dim=y_ext.germ_dim)
    return Forecast(y_ext, noise_dims)


def assimilate_step(ts: TrackingState, model: StateModel,
                    mm: MeasurementModel, y_hat, m: int,
                    options: RunOptions = RunOptions()) -> TrackingState:
    """One predict/update cycle: z_{n+1} = x_f + (Phi_m(y_hat) - Phi_m(y_f))."""
    x_f = propagate(ts.state, model, options.quad_level)
    fc = forecast_measurement(x_f, mm)
    x_ext = germ_extend(x_f, fc.y.germ_dim - x_f.germ_dim)
    noise_part = PceVector.from_dict(
        {MultiIndex((0,) * d + (1,)): [1.0] for d in fc.noise_dims},
        germ_dim=fc.y.germ_dim) if fc.noise_dims else None
    if noise_part is not None:
        if np.any(covariance(x_ext, noise_part) != 0.0):
            raise AssertionError(
                "forecast correlates with fresh noise modes; germ bookkeeping "
                "is broken")
    if options.dictionary is not None:
        z_next = general_bayes_update(x_ext, fc.y, y_hat, options.dictionary,
                                      cutoff=options.cutoff,
                                      degree_cap=options.degree_cap,
                                      warnings_out=options.warnings_out)
    else:
        z_next = bayes_update(x_ext, fc.y, y_hat, m, cutoff=options.cutoff,
                              degree_cap=options.degree_cap,
                              warnings_out=options.warnings_out)
    quant = None
    if options.quantile_samples > 0:
        draws = sample_paths(z_next, options.quantile_samples,
                             seed=options.quantile_seed + ts.step_count)
        quant = np.quantile(draws, QUANTILE_LEVELS, axis=0)
    record = StepRecord(
        step=ts.step_count + 1,
        time=(ts.step_count + 1) * options.dt_per_step,
        forecast_mean=mean(x_f),
        assim_mean=mean(z_next),
        cov_trace=float(np.trace(covariance(z_next, z_next))),
        degree=m,
        quantiles=quant,
    )
    return TrackingState(state=z_next, step_count=ts.step_count + 1,
                         germ_used=ts.germ_used + len(fc.noise_dims),
                         history=ts.history + (record,))


def recompress_gaussian(z: PceVector, cutoff: float = DEFAULT_CUTOFF,
                        warnings_out: list | None = None) -> PceVector:
    """Re-expand on a fresh germ, matching mean and covariance only.

    This is an approximation for non-Gaussian states and is recorded as
    such; it keeps germ growth bounded across long runs.
    """
    mu = mean(z)
    cov = covariance(z, z)
    w, v = scipy.linalg.eigh(cov)
    w = np.clip(w, 0.0, None)
    keep = w > cutoff * max(w[-1], 0.0) if w.size else w > 0
    order = np.argsort(w[keep])[::-1]
    cols = (v[:, keep] * np.sqrt(w[keep]))[:, order]
    # fix eigvector signs so the expansion is reproducible
    for j in range(cols.shape[1]):
        anchor = np.argmax(np.abs(cols[:, j]))
        if cols[anchor, j] < 0:
            cols[:, j] = -cols[:, j]
    if warnings_out is not None:
        warnings_out.append(WarningRecord(
            "recompression",
            f"state re-expanded on a fresh {cols.shape[1]}-dim germ; higher "
            "moments replaced by Gaussian ones", float(cols.shape[1])))
    return PceVector.gaussian(mu, cols)


def run_sequence(ts0: TrackingState, model: StateModel, mm: MeasurementModel,
                 observations: Sequence, m: int,
                 options: RunOptions = RunOptions()) -> TrackingState:
    """Fold assimilate_step over an observation sequence.

    With ``options.recompress`` the state is re-expanded as a Gaussian on a
    fresh germ between steps (recorded as an approximation); otherwise the
    germ grows by the noise width every step.
    """
    ts = ts0
    for y_hat in observations:
        ts = assimilate_step(ts, model, mm, y_hat, m, options)
        if options.recompress:
            ts = replace(ts, state=recompress_gaussian(
                ts.state, options.cutoff, options.warnings_out))
    return ts


def history_rows(ts: TrackingState) -> list[dict]:
    """Flatten the step history into CSV-ready dict rows."""
    rows = []
    for rec in ts.history:
        row: dict = {"step": rec.step, "time": rec.time, "degree": rec.degree,
                     "cov_trace": rec.cov_trace}
        for i, v in enumerate(rec.forecast_mean):
            row[f"forecast_mean_{i}"] = float(v)
        for i, v in enumerate(rec.assim_mean):
            row[f"assim_mean_{i}"] = float(v)
        if rec.quantiles is not None:
            for qi, q in enumerate((5, 25, 50, 75, 95)):
                for i in range(rec.quantiles.shape[1]):
                    row[f"q{q:02d}_{i}"] = float(rec.quantiles[qi, i])
        rows.append(row)
    return rows
