"""Closed-form moments of PCE vectors via the Hermite multiplication algebra.

Every expectation here reduces to structure-coefficient folds: the product
of two expansions is re-expanded in the basis, and orthogonality turns
E[.] into a weighted coefficient sum.  No sampling, no quadrature.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .hermite import norm_sq, product_linearize
from .multiindex import ZERO_INDEX, MultiIndex
from .pce import PceVector

CoeffMap = dict[MultiIndex, float]


def packed_tuples(dim: int, order: int) -> list[tuple[int, ...]]:
    """Sorted index tuples j1 <= ... <= jk enumerating packed storage."""
    return list(itertools.combinations_with_replacement(range(dim), order))


def packed_size(dim: int, order: int) -> int:
    return math.comb(dim + order - 1, order)


class SymTensor:
    """Fully symmetric tensor stored packed over sorted index tuples.

    ``values`` has shape (packed_size, *entry_shape); scalar entries for
    plain moments, vector entries for cross moments.
    """

    __slots__ = ("order", "dim", "values", "_pos")

    def __init__(self, order: int, dim: int, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        expected = packed_size(dim, order)
        if values.shape[0] != expected:
            raise ValueError(
                f"packed storage needs {expected} entries, got {values.shape[0]}")
        self.order = order
        self.dim = dim
        self.values = values
        self._pos = {t: i for i, t in enumerate(packed_tuples(dim, order))}

    def __getitem__(self, idx) -> np.ndarray | float:
        if isinstance(idx, int):
            idx = (idx,)
        key = tuple(sorted(idx))
        if len(key) != self.order:
            raise KeyError(f"need {self.order} indices, got {len(key)}")
        out = self.values[self._pos[key]]
        return float(out) if out.ndim == 0 else out

    def to_full(self) -> np.ndarray:
        """Dense ndarray with the symmetric entries unpacked."""
        entry_shape = self.values.shape[1:]
        out = np.empty((self.dim,) * self.order + entry_shape)
        for t in itertools.product(range(self.dim), repeat=self.order):
            out[t] = self.values[self._pos[tuple(sorted(t))]]
        return out


def mean(x: PceVector) -> np.ndarray:
    """The zero-mode coefficient."""
    return x.coeff(ZERO_INDEX).copy()


def covariance(x: PceVector, y: PceVector) -> np.ndarray:
    """C_xy = sum_{alpha != 0} alpha! x^alpha (x) y^alpha on a shared germ."""
    if x.germ_dim != y.germ_dim:
        raise ValueError(
            f"germ mismatch: {x.germ_dim} vs {y.germ_dim}; extend germs first")
    cov = np.zeros((x.dim, y.dim))
    for a, row in zip(x.index_set.members, x.coeffs):
        if a == ZERO_INDEX:
            continue
        other = y.coeff(a)
        if np.any(row != 0.0) and np.any(other != 0.0):
            cov += norm_sq(a) * np.outer(row, other)
    return cov


def variance(x: PceVector) -> np.ndarray:
    return covariance(x, x)


def _product_maps(a: CoeffMap, b: CoeffMap) -> CoeffMap:
    out: CoeffMap = {}
    for alpha, ca in a.items():
        for beta, cb in b.items():
            w = ca * cb
            for gamma, c in product_linearize(alpha, beta).items():
                out[gamma] = out.get(gamma, 0.0) + w * c
    return out


def _inner(a: CoeffMap, b: CoeffMap) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(norm_sq(alpha) * ca * b[alpha] for alpha, ca in a.items() if alpha in b)


class MomentCache:
    """Per-vector memo of symmetric moments and component products.

    Products of components are keyed by sorted component tuples, so the
    expensive linearization folds are shared across all moment queries.
    The fill is idempotent: cached entries equal fresh recomputation.
    """

    def __init__(self, y: PceVector):
        self.y = y
        self._components = [y.component_dict(i) for i in range(y.dim)]
        self._products: dict[tuple[int, ...], CoeffMap] = {(): {ZERO_INDEX: 1.0}}
        self._sym: dict[int, SymTensor] = {}

    def product(self, comps: tuple[int, ...]) -> CoeffMap:
        """Expansion of the product prod_i y_{comps[i]} (comps sorted)."""
        hit = self._products.get(comps)
        if hit is None:
            if len(comps) == 1:
                hit = self._components[comps[0]]
            else:
                hit = _product_maps(self.product(comps[:-1]),
                                    self._components[comps[-1]])
            self._products[comps] = hit
        return hit

    def raw_moment(self, comps: tuple[int, ...]) -> float:
        """E[prod_i y_{comps[i]}] by splitting into two product halves."""
        comps = tuple(sorted(comps))
        if not comps:
            return 1.0
        half = (len(comps) + 1) // 2
        return _inner(self.product(comps[:half]), self.product(comps[half:]))

    def sym_moment(self, k: int) -> SymTensor:
        tensor = self._sym.get(k)
        if tensor is None:
            tuples = packed_tuples(self.y.dim, k)
            vals = np.array([self.raw_moment(t) for t in tuples])
            tensor = SymTensor(k, self.y.dim, vals)
            self._sym[k] = tensor
        return tensor

    def cross_moment(self, r: PceVector, k: int) -> SymTensor:
        """< R (x) y^{vee k} > with vector entries over R's components."""
        if r.germ_dim != self.y.germ_dim:
            raise ValueError("germ mismatch between R and y; extend germs first")
        tuples = packed_tuples(self.y.dim, k)
        vals = np.zeros((len(tuples), r.dim))
        rcomp = [r.component_dict(i) for i in range(r.dim)]
        for row, t in enumerate(tuples):
            prod = self.product(t)
            for i in range(r.dim):
                vals[row, i] = _inner(rcomp[i], prod)
        return SymTensor(k, self.y.dim, vals)


def sym_moment(y: PceVector, k: int) -> SymTensor:
    """Symmetric raw moment tensor <y^{vee k}> = Sym <y^(x)k>.

    The expectation of a product of components is symmetric in the indices
    already, so packed storage over sorted tuples is exact.
    """
    if k < 0:
        raise ValueError("moment order must be >= 0")
    return MomentCache(y).sym_moment(k)


def cross_moment(r: PceVector, y: PceVector, k: int) -> SymTensor:
    """< R (x) Sym(y^(x)k) > as a SymTensor with vector entries."""
    if k < 0:
        raise ValueError("moment order must be >= 0")
    return MomentCache(y).cross_moment(r, k)


def dumps_sym_tensor(tensor: SymTensor) -> str:
    """Debug dump in the same plain-text scheme as the expansion files:
    one row per packed entry, index tuple then value(s)."""
    lines = [f"symtensor order={tensor.order} dim={tensor.dim} "
             f"rows={tensor.values.shape[0]}"]
    for t, val in zip(packed_tuples(tensor.dim, tensor.order), tensor.values):
        vals = np.atleast_1d(val)
        lines.append(" ".join(str(j) for j in t).ljust(max(2 * tensor.order, 1))
                     + " " + " ".join(format(v, ".17e") for v in vals))
    return "\n".join(lines) + "\n"


def hermite_product_expectation(alphas: list[MultiIndex]) -> float:
    """E[prod_i H_{alpha_i}] by folding pairwise linearizations.

    The last factor is resolved through orthogonality: the expectation of
    (sum_gamma c_gamma H_gamma) * H_beta is c_beta * beta!.
    """
    if not alphas:
        raise ValueError("need at least one multi-index")
    if len(alphas) == 1:
        return 1.0 if alphas[0] == ZERO_INDEX else 0.0
    expansion: CoeffMap = {alphas[0]: 1.0}
    for alpha in alphas[1:-1]:
        expansion = _product_maps(expansion, {alpha: 1.0})
    last = alphas[-1]
    return expansion.get(last, 0.0) * norm_sq(last)
