"""Quadrature and sampling oracles shared by the test modules.

These deliberately avoid the closed-form moment engine: expectations are
estimated by tensorized Gauss-Hermite quadrature on the germ (exact node
counts for polynomial integrands) or by plain Monte Carlo, so they provide
an independent route for every analytic value they are compared against.
"""

import numpy as np

from pcebayes import pce_eval_batch, tensor_grid
from pcebayes.multiindex import IndexSet
from pcebayes.pce import PceVector, _design_matrix


def quad_expectation(func, germ_dim: int, level: int):
    """E[func(theta)] over the standard normal germ; func maps (n,d) -> (n,...)."""
    nodes, weights = tensor_grid(germ_dim, level)
    vals = np.asarray(func(nodes))
    return np.tensordot(weights, vals, axes=(0, 0))


def quad_basis_gram(index_set: IndexSet, level: int) -> np.ndarray:
    """Gram matrix <H_a H_b> over all members by quadrature."""
    nodes, weights = tensor_grid(index_set.germ_dim, level)
    design = _design_matrix(index_set, nodes)
    return design.T @ (weights[:, None] * design)


def quad_raw_moment(y: PceVector, comps: tuple, level: int | None = None) -> float:
    """E[prod_i y_{comps[i]}] by Gauss-Hermite quadrature."""
    if level is None:
        level = (len(comps) * y.index_set.max_degree) // 2 + 1
    nodes, weights = tensor_grid(y.germ_dim, level)
    vals = pce_eval_batch(y, nodes)
    prod = np.ones(len(nodes))
    for j in comps:
        prod *= vals[:, j]
    return float(weights @ prod)


def quad_cross_moment(r: PceVector, y: PceVector, comps: tuple,
                      level: int) -> np.ndarray:
    """E[R * prod_i y_{comps[i]}] by quadrature, vector over R's components."""
    nodes, weights = tensor_grid(y.germ_dim, level)
    yv = pce_eval_batch(y, nodes)
    rv = pce_eval_batch(r, nodes)
    prod = np.ones(len(nodes))
    for j in comps:
        prod *= yv[:, j]
    return (weights * prod) @ rv


def mc_moment(y: PceVector, comps: tuple, n: int, seed: int):
    """Monte Carlo estimate and standard error of E[prod y_{comps[i]}]."""
    rng = np.random.default_rng(seed)
    thetas = rng.standard_normal((n, max(y.germ_dim, 1)))
    vals = pce_eval_batch(y, thetas)
    prod = np.ones(n)
    for j in comps:
        prod *= vals[:, j]
    return float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(n))


def random_pce(rng, germ_dim: int, degree: int, value_dim: int,
               scale: float = 1.0) -> PceVector:
    iset = IndexSet.total_degree(germ_dim, degree)
    return PceVector(iset, scale * rng.standard_normal((len(iset), value_dim)))
