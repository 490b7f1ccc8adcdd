"""Independent reference routes used only to verify the primary paths.

Nothing here feeds results back into the update machinery: the Monte Carlo
regression re-estimates optimal maps from samples, the Kalman formulas give
the linear-Gaussian posterior in closed form, and the kernel density
estimator turns sample paths into pdf curves for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .moments import packed_tuples
from .pce import PceVector, match_germ, pce_eval_batch
from .update import PolyMap, WarningRecord, _tuple_multiplicity

_BOOTSTRAP_RESAMPLES = 200


@dataclass(frozen=True)
class McRegressionResult:
    """Sample least-squares estimate of a degree-m map.

    ``coeffs`` and ``stderr`` mirror the packed tensor layout of PolyMap
    (one array per order, shape (M, packed_size)).  ``stderr`` holds
    bootstrap standard errors from resampled refits.
    """
    degree: int
    value_dim: int
    meas_dim: int
    coeffs: tuple[np.ndarray, ...]
    stderr: tuple[np.ndarray, ...]
    n_samples: int
    residual_norm: float

    def as_polymap(self) -> PolyMap:
        return PolyMap(self.degree, self.value_dim, self.meas_dim, self.coeffs)


def _monomial_design(yv: np.ndarray, m: int) -> tuple[np.ndarray, list]:
    rdim = yv.shape[1]
    tuples = [t for k in range(m + 1) for t in packed_tuples(rdim, k)]
    cols = []
    for t in tuples:
        col = np.ones(yv.shape[0])
        for j in t:
            col = col * yv[:, j]
        cols.append(col)
    return np.column_stack(cols), tuples


def _weighted_normal_solve(design: np.ndarray, targets: np.ndarray,
                           weights: np.ndarray | None, rcond: float) -> np.ndarray:
    if weights is None:
        dt = design
    else:
        dt = design * weights[:, None]
    gram = dt.T @ design
    rhs = dt.T @ targets
    return np.linalg.lstsq(gram, rhs, rcond=rcond)[0]


def mc_optimal_map(r: PceVector, y: PceVector, m: int, n_samples: int,
                   seed: int, n_bootstrap: int = _BOOTSTRAP_RESAMPLES,
                   rcond: float = 1e-10,
                   warnings_out=None) -> McRegressionResult:
    """Estimate the degree-m optimal map by sampled least squares.

    Draws germ points, evaluates the (R, y) pair, and fits the raw monomial
    regression; bootstrap refits with multinomial weights give per-
    coefficient standard errors.  Requires at least 10 samples per fitted
    coefficient.
    """
    r, y = match_germ(r, y)
    rng = np.random.default_rng(seed)
    thetas = rng.standard_normal((n_samples, max(y.germ_dim, 1)))
    yv = pce_eval_batch(y, thetas)
    rv = pce_eval_batch(r, thetas)
    design, tuples = _monomial_design(yv, m)
    if n_samples < 10 * len(tuples):
        raise ValueError(
            f"need at least {10 * len(tuples)} samples for {len(tuples)} "
            f"coefficients, got {n_samples}")
    cond = np.linalg.cond(design.T @ design)
    if not np.isfinite(cond) or cond > 1.0 / rcond:
        if warnings_out is not None:
            warnings_out.append(WarningRecord(
                "ill-conditioned-design",
                f"monomial design condition {cond:.2e}; cutoff solve used", cond))
    beta = _weighted_normal_solve(design, rv, None, rcond)
    residual = design @ beta - rv
    residual_norm = float(np.sqrt((residual ** 2).sum() / n_samples))
    # Bootstrap over iid chunks of the sufficient statistics: resampling
    # precomputed chunk sums of (X^T X, X^T R) is equivalent to resampling
    # rows for these smooth estimators and avoids touching the raw samples
    # on every refit.
    p, mdim = beta.shape
    n_chunks = min(2000, n_samples)
    bounds = np.linspace(0, n_samples, n_chunks + 1, dtype=int)
    chunk_gram = np.empty((n_chunks, p, p))
    chunk_rhs = np.empty((n_chunks, p, mdim))
    for b, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        block = design[lo:hi]
        chunk_gram[b] = block.T @ block
        chunk_rhs[b] = block.T @ rv[lo:hi]
    boots = np.empty((n_bootstrap, p, mdim))
    for b in range(n_bootstrap):
        counts = rng.multinomial(n_chunks, np.full(n_chunks, 1.0 / n_chunks))
        weights = counts.astype(float)
        gram = np.tensordot(weights, chunk_gram, axes=(0, 0))
        rhs = np.tensordot(weights, chunk_rhs, axes=(0, 0))
        boots[b] = np.linalg.lstsq(gram, rhs, rcond=rcond)[0]
    se = boots.std(axis=0, ddof=1)
    coeffs, stderr = [], []
    pos = 0
    for k in range(m + 1):
        tups = packed_tuples(y.dim, k)
        mults = np.array([_tuple_multiplicity(t) for t in tups])
        coeffs.append((beta[pos:pos + len(tups)] / mults[:, None]).T)
        stderr.append((se[pos:pos + len(tups)] / mults[:, None]).T)
        pos += len(tups)
    return McRegressionResult(m, r.dim, y.dim, tuple(coeffs), tuple(stderr),
                              n_samples, residual_norm)


def kalman_reference(prior_mean, prior_cov, obs_matrix, noise_cov,
                     y_hat) -> tuple[np.ndarray, np.ndarray]:
    """Textbook Kalman update for y = H x + v, v ~ N(0, noise_cov).

    Returns the posterior mean and the Joseph-form posterior covariance
    (I - KH) C (I - KH)^T + K R K^T.
    """
    mu = np.atleast_1d(np.asarray(prior_mean, dtype=float))
    cov = np.atleast_2d(np.asarray(prior_cov, dtype=float))
    h = np.atleast_2d(np.asarray(obs_matrix, dtype=float))
    rn = np.atleast_2d(np.asarray(noise_cov, dtype=float))
    yh = np.atleast_1d(np.asarray(y_hat, dtype=float))
    if h.shape != (yh.shape[0], mu.shape[0]) or rn.shape != (yh.shape[0],) * 2:
        raise ValueError("dimension mismatch in Kalman reference inputs")
    innov_cov = h @ cov @ h.T + rn
    gain = np.linalg.solve(innov_cov.T, (cov @ h.T).T).T
    post_mean = mu + gain @ (yh - h @ mu)
    closed = np.eye(mu.shape[0]) - gain @ h
    post_cov = closed @ cov @ closed.T + gain @ rn @ gain.T
    return post_mean, post_cov


def kde_pdf(samples, grid, bandwidth_rule: str = "silverman",
            warnings_out=None) -> np.ndarray:
    """Gaussian kernel density estimate on a fixed grid.

    Uses the Silverman bandwidth by default; degenerate (zero-variance)
    samples fall back to a narrow kernel of one grid spacing with a
    warning record.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    grid = np.asarray(grid, dtype=float).ravel()
    n = samples.shape[0]
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    std = samples.std()
    iqr = np.subtract(*np.percentile(samples, [75, 25]))
    if bandwidth_rule == "silverman":
        spread = min(std, iqr / 1.34) if iqr > 0 else std
        bw = 0.9 * spread * n ** (-0.2)
    elif bandwidth_rule == "scott":
        bw = std * n ** (-0.2)
    else:
        raise ValueError(f"unknown bandwidth rule {bandwidth_rule!r}")
    if bw <= 0.0:
        bw = max(float(np.diff(grid).mean()) if grid.size > 1 else 1e-6, 1e-12)
        if warnings_out is not None:
            warnings_out.append(WarningRecord(
                "degenerate-kde",
                f"zero-variance samples; narrow kernel bw={bw:.3e} used", bw))
    dens = np.zeros_like(grid)
    chunk = max(1, 2 ** 22 // max(grid.size, 1))
    norm = 1.0 / (n * bw * math.sqrt(2.0 * math.pi))
    for lo in range(0, n, chunk):
        block = samples[lo:lo + chunk]
        z = (grid[None, :] - block[:, None]) / bw
        dens += norm * np.exp(-0.5 * z * z).sum(axis=0)
    return dens
