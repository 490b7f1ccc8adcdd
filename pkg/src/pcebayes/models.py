"""Virtual-experiment models: a scalar identity channel, the Lorenz-84
chaotic system, and a 1-D log-diffusion identification problem.

Every map here is deterministic: identical inputs give bit-identical
outputs, which the experiment runner relies on for reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .filtering import StateModel
from .hermite import hermite_table
from .multiindex import IndexSet
from .pce import PceVector
from .quadrature import gauss_hermite_1d


# -- Lorenz-84 --------------------------------------------------------------

@dataclass(frozen=True)
class Lorenz84Params:
    """Standard-literature coefficients; the model is run in its chaotic
    regime.  Times are in days."""
    a: float = 0.25
    b: float = 4.0
    forcing_f: float = 8.0
    forcing_g: float = 1.0
    dt_inner: float = 0.05
    days_per_update: float = 1.0

    def __post_init__(self):
        if self.dt_inner <= 0 or self.days_per_update <= 0:
            raise ValueError("dt_inner and days_per_update must be positive")


def lorenz84_rhs(state: np.ndarray, p: Lorenz84Params) -> np.ndarray:
    """Right-hand side; broadcasts over leading axes of state (..., 3)."""
    state = np.asarray(state, dtype=float)
    x1, x2, x3 = state[..., 0], state[..., 1], state[..., 2]
    return np.stack([
        -x2 ** 2 - x3 ** 2 - p.a * x1 + p.a * p.forcing_f,
        x1 * x2 - p.b * x1 * x3 - x2 + p.forcing_g,
        p.b * x1 * x2 + x1 * x3 - x3,
    ], axis=-1)


def lorenz84_jacobian_trace(state: np.ndarray, p: Lorenz84Params) -> float:
    """Divergence of the flow, -(a + 2) + 2*x1."""
    return -(p.a + 2.0) + 2.0 * float(np.asarray(state, dtype=float)[..., 0])


def rk4_integrate(rhs: Callable[[np.ndarray], np.ndarray], state: np.ndarray,
                  duration: float, dt: float) -> np.ndarray:
    """Classical fixed-step RK4 over the given duration (identity for 0)."""
    state = np.asarray(state, dtype=float)
    if duration == 0.0:
        return state.copy()
    n_steps = max(1, round(duration / dt))
    h = duration / n_steps
    for _ in range(n_steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return state


def lorenz84_step(state: np.ndarray, p: Lorenz84Params) -> np.ndarray:
    """Advance by one assimilation interval (days_per_update)."""
    return rk4_integrate(lambda s: lorenz84_rhs(s, p), state,
                         p.days_per_update, p.dt_inner)


def lorenz84_model(p: Lorenz84Params) -> StateModel:
    return StateModel(step=lambda batch: lorenz84_step(batch, p),
                      vectorized=True)


# -- 1-D log-diffusion ------------------------------------------------------

@dataclass(frozen=True)
class Diffusion1DSetup:
    """Cell-centered finite-volume grid for -(exp(q) u')' = f on [0, 1].

    The log-conductivity q is piecewise constant over ``n_patches`` equal
    patches; working with q keeps kappa = exp(q) positive by construction.
    Observation points are cell indices.
    """
    n_cells: int
    n_patches: int
    obs_cells: tuple[int, ...]
    q_true: tuple[float, ...]

    def __post_init__(self):
        if self.n_cells < 2 or self.n_patches < 1:
            raise ValueError("need at least 2 cells and 1 patch")
        if self.n_cells % self.n_patches:
            raise ValueError("cell count must be a multiple of the patch count")
        if len(self.q_true) != self.n_patches:
            raise ValueError("q_true must have one value per patch")
        if any(not 0 <= i < self.n_cells for i in self.obs_cells):
            raise ValueError("observation cell out of range")

    @property
    def cell_centers(self) -> np.ndarray:
        h = 1.0 / self.n_cells
        return (np.arange(self.n_cells) + 0.5) * h

    def patch_of_cell(self) -> np.ndarray:
        per = self.n_cells // self.n_patches
        return np.repeat(np.arange(self.n_patches), per)


def diffusion1d_solve(q: np.ndarray, load: np.ndarray,
                      setup: Diffusion1DSetup) -> np.ndarray:
    """Solve the two-point boundary problem and return u at the observation
    cells.

    Finite volumes with harmonic face averaging of kappa; homogeneous
    Dirichlet values at both ends enter through half-cell boundary fluxes.
    """
    q = np.asarray(q, dtype=float)
    load = np.asarray(load, dtype=float)
    n = setup.n_cells
    if q.shape != (setup.n_patches,) or load.shape != (n,):
        raise ValueError("parameter or load vector has the wrong shape")
    h = 1.0 / n
    kappa = np.exp(q)[setup.patch_of_cell()]
    face = 2.0 * kappa[:-1] * kappa[1:] / (kappa[:-1] + kappa[1:])
    lower = np.zeros(n)
    diag = np.zeros(n)
    upper = np.zeros(n)
    diag[:-1] += face / h ** 2
    diag[1:] += face / h ** 2
    upper[1:] = -face / h ** 2
    lower[:-1] = -face / h ** 2
    diag[0] += 2.0 * kappa[0] / h ** 2
    diag[-1] += 2.0 * kappa[-1] / h ** 2
    bands = np.vstack([upper, diag, lower])
    u = scipy.linalg.solve_banded((1, 1), bands, load)
    return u[np.array(setup.obs_cells, dtype=int)]


def diffusion_loads(setup: Diffusion1DSetup, kinds: tuple[str, ...]) -> list[np.ndarray]:
    """Named load fields evaluated at the cell centers."""
    x = setup.cell_centers
    table = {
        "constant": np.ones_like(x),
        "linear": x,
        "sine": np.sin(math.pi * x),
        "sine2": np.sin(2.0 * math.pi * x),
        "bump": np.exp(-((x - 0.5) / 0.15) ** 2),
    }
    loads = []
    for kind in kinds:
        if kind not in table:
            raise ValueError(f"unknown load kind {kind!r}")
        loads.append(table[kind])
    return loads


# -- scalar identification truth/prior --------------------------------------

@dataclass(frozen=True)
class ScalarTruth:
    """The scalar 'truth' random variable plus the matching broad prior.

    The truth is a fixed-degree polynomial of a single standard-normal germ
    variable; the sampler draws from exactly that expansion.
    """
    sampler: Callable[[int, int], np.ndarray]   # (n, seed) -> samples
    prior: PceVector
    truth_pce: PceVector
    shape: str


def _mixture_ppf(u: np.ndarray, weights, means, stds) -> np.ndarray:
    """Inverse CDF of a Gaussian mixture by bisection (vectorized)."""
    from scipy.stats import norm
    lo = min(m - 10 * s for m, s in zip(means, stds)) * np.ones_like(u)
    hi = max(m + 10 * s for m, s in zip(means, stds)) * np.ones_like(u)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        cdf = sum(w * norm.cdf((mid - m) / s)
                  for w, m, s in zip(weights, means, stds))
        below = cdf < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def scalar_truth_prior(shape: str = "bimodal",
                       prior_mean: float = 0.0,
                       prior_std: float = 2.0,
                       mix_weights=(0.6, 0.4),
                       mix_means=(-1.0, 1.5),
                       mix_stds=(0.35, 0.25),
                       truth_degree: int = 12) -> ScalarTruth:
    """Seeded truth sampler and a broad degree-1 Gaussian prior.

    The non-Gaussian truth is a two-component Gaussian mixture squashed
    through a fixed-degree polynomial: the inverse-CDF transform of a
    standard normal germ is projected onto Hermite polynomials, and the
    resulting expansion IS the truth (the sampler draws from it).  The
    Gaussian shape reduces to a degree-1 expansion exactly.
    """
    from scipy.stats import norm
    if shape == "gaussian":
        weights, means, stds = (1.0,), (mix_means[0],), (mix_stds[0],)
    elif shape == "bimodal":
        weights, means, stds = mix_weights, mix_means, mix_stds
        if not math.isclose(sum(weights), 1.0):
            raise ValueError("mixture weights must sum to 1")
    else:
        raise ValueError(f"unknown truth shape {shape!r}")

    nodes, wq = gauss_hermite_1d(8 * truth_degree)
    g_vals = _mixture_ppf(norm.cdf(nodes), weights, means, stds)
    htab = hermite_table(truth_degree, nodes)
    coeffs = np.array([
        float((wq * htab[j] * g_vals).sum()) / math.factorial(j)
        for j in range(truth_degree + 1)])
    truth_pce = PceVector(IndexSet.total_degree(1, truth_degree),
                          coeffs[:, None])

    def sampler(n: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        germ = rng.standard_normal(n)
        htab_s = hermite_table(truth_degree, germ)
        return coeffs @ htab_s

    prior = PceVector.gaussian([prior_mean], [[prior_std]])
    return ScalarTruth(sampler=sampler, prior=prior, truth_pce=truth_pce,
                       shape=shape)
