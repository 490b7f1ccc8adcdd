"""Tensorized Gauss-Hermite quadrature on the standard-normal germ."""

from __future__ import annotations

import itertools

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

MAX_TENSOR_DIMS = 6


class QuadratureDimensionError(RuntimeError):
    """Raised instead of silently degrading when the full tensor grid
    would span more germ dimensions than supported at desk scale."""


def required_level(poly_degree: int) -> int:
    """Nodes per dimension integrating polynomials of this degree exactly."""
    return poly_degree // 2 + 1


def gauss_hermite_1d(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and probability weights (summing to 1) for N(0,1)."""
    if level < 1:
        raise ValueError("level must be >= 1")
    nodes, weights = hermegauss(level)
    return nodes, weights / np.sqrt(2.0 * np.pi)


def tensor_grid(germ_dim: int, level: int,
                max_dims: int = MAX_TENSOR_DIMS) -> tuple[np.ndarray, np.ndarray]:
    """Full tensor grid over germ_dim dimensions; shapes (N, d) and (N,)."""
    if germ_dim > max_dims:
        raise QuadratureDimensionError(
            f"full tensor quadrature over {germ_dim} germ dims exceeds the "
            f"supported {max_dims}")
    if germ_dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    nodes1, w1 = gauss_hermite_1d(level)
    nodes = np.array(list(itertools.product(nodes1, repeat=germ_dim)))
    weights = np.prod(
        np.array(list(itertools.product(w1, repeat=germ_dim))), axis=1)
    return nodes, weights


def expectation(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted sum over the node axis (axis 0)."""
    return np.tensordot(weights, np.asarray(values), axes=(0, 0))
