import numpy as np
import pytest

from pcebayes import PceVector, sample_paths, solve_optimal_map
from pcebayes.multiindex import unit_index
from pcebayes.oracle import kalman_reference, kde_pdf, mc_optimal_map

from .helpers import random_pce


def theta(dim, germ_dim=None):
    return PceVector.from_dict({unit_index(dim): [1.0]}, germ_dim=germ_dim)


# -- Monte Carlo regression -----------------------------------------------------

def test_mc_map_recovers_gaussian_gain():
    r = theta(0, germ_dim=2)
    y = theta(0, germ_dim=2) + theta(1, germ_dim=2)
    result = mc_optimal_map(r, y, 1, n_samples=200_000, seed=1)
    gain = result.coeffs[1][0, 0]
    se = result.stderr[1][0, 0]
    assert abs(gain - 0.5) < 4 * se
    assert se < 0.01


def test_mc_map_residual_vanishes_for_representable_target():
    y = theta(0)
    result = mc_optimal_map(y, y, 1, n_samples=50_000, seed=2)
    assert result.residual_norm < 1e-10


def test_mc_map_matches_analytic_solve():
    rng = np.random.default_rng(3)
    r = random_pce(rng, 2, 2, 1)
    y = random_pce(rng, 2, 1, 1).shifted([0.2])
    result = mc_optimal_map(r, y, 2, n_samples=400_000, seed=4)
    exact = solve_optimal_map(r, y, 2)
    for k in range(3):
        diff = np.abs(result.coeffs[k] - exact.tensors[k])
        assert np.all(diff < 4 * result.stderr[k] + 1e-12)


def test_mc_map_enforces_sample_floor():
    y = theta(0)
    with pytest.raises(ValueError):
        mc_optimal_map(y, y, 2, n_samples=25, seed=0)


def test_mc_map_deterministic():
    y = theta(0)
    a = mc_optimal_map(y, y, 1, n_samples=2000, seed=42)
    b = mc_optimal_map(y, y, 1, n_samples=2000, seed=42)
    for ca, cb in zip(a.coeffs, b.coeffs):
        assert np.array_equal(ca, cb)


def test_mc_result_as_polymap():
    y = theta(0)
    result = mc_optimal_map(y, y, 1, n_samples=5000, seed=7)
    phi = result.as_polymap()
    assert phi([2.0]) == pytest.approx([2.0], abs=0.05)


# -- Kalman reference ------------------------------------------------------------

def test_kalman_reference_conjugate():
    mean, cov = kalman_reference([0.0], [[1.0]], [[1.0]], [[1.0]], [1.0])
    assert mean == pytest.approx([0.5])
    assert cov == pytest.approx(np.array([[0.5]]))


def test_kalman_reference_uninformative_limit():
    mean, cov = kalman_reference([0.3], [[2.0]], [[1.0]], [[1e12]], [100.0])
    assert mean == pytest.approx([0.3], abs=1e-9)
    assert cov == pytest.approx(np.array([[2.0]]), rel=1e-9)


def test_kalman_reference_exact_observation_limit():
    h = np.array([[2.0, 0.0], [0.0, 4.0]])
    y = np.array([2.0, 8.0])
    mean, cov = kalman_reference([0.0, 0.0], np.eye(2), h,
                                 1e-12 * np.eye(2), y)
    assert mean == pytest.approx(np.linalg.solve(h, y), abs=1e-9)
    assert np.abs(cov).max() < 1e-10


def test_kalman_reference_dimension_mismatch():
    with pytest.raises(ValueError):
        kalman_reference([0.0], [[1.0]], [[1.0, 2.0]], [[1.0]], [1.0])


# -- kernel density estimate ------------------------------------------------------

def test_kde_standard_normal_peak_and_mass():
    rng = np.random.default_rng(8)
    samples = rng.standard_normal(100_000)
    grid = np.linspace(-6, 6, 601)
    dens = kde_pdf(samples, grid)
    assert abs(grid[np.argmax(dens)]) < 0.05
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=0.01)


def test_kde_degenerate_samples():
    records = []
    grid = np.linspace(0, 2, 201)
    dens = kde_pdf(np.full(500, 1.0), grid, warnings_out=records)
    assert any(rec.kind == "degenerate-kde" for rec in records)
    assert grid[np.argmax(dens)] == pytest.approx(1.0, abs=0.02)
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=0.02)


def test_kde_sample_floor():
    with pytest.raises(ValueError):
        kde_pdf(np.zeros(10), np.linspace(0, 1, 11))


def test_kde_bandwidth_rules():
    rng = np.random.default_rng(9)
    samples = rng.standard_normal(5000)
    grid = np.linspace(-5, 5, 301)
    silverman = kde_pdf(samples, grid, "silverman")
    scott = kde_pdf(samples, grid, "scott")
    assert np.trapezoid(scott, grid) == pytest.approx(1.0, abs=0.01)
    assert not np.array_equal(silverman, scott)
    with pytest.raises(ValueError):
        kde_pdf(samples, grid, "epanechnikov")


def test_kde_consumes_pce_sample_paths():
    x = PceVector.from_dict({unit_index(0): [2.0]})
    draws = sample_paths(x, 20_000, seed=10)[:, 0]
    grid = np.linspace(-8, 8, 401)
    dens = kde_pdf(draws, grid)
    # variance 4 normal: peak density ~ 1/(2 sqrt(2 pi))
    assert dens.max() == pytest.approx(1.0 / (2 * np.sqrt(2 * np.pi)),
                                       abs=0.01)
