"""Random vectors as polynomial chaos expansions over a Gaussian germ."""

from __future__ import annotations

import io
from typing import Iterable, Mapping

import numpy as np

from .hermite import hermite_table, norm_sq
from .multiindex import ZERO_INDEX, IndexSet, MultiIndex

_EVAL_CHUNK = 65536


class PceVector:
    """A finite-variance random vector x = sum_alpha x^alpha H_alpha(theta).

    Coefficients are stored densely as an array of shape (len(index_set), M)
    aligned with the index set's graded-lexicographic order.  Instances are
    immutable; all operations return new vectors.
    """

    __slots__ = ("index_set", "coeffs")

    def __init__(self, index_set: IndexSet, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.shape[0] != len(index_set):
            raise ValueError(
                f"coefficient rows {coeffs.shape[0]} != index set size {len(index_set)}")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "index_set", index_set)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("PceVector is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, germ_dim: int = 0) -> "PceVector":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        iset = IndexSet([ZERO_INDEX], germ_dim=germ_dim)
        return cls(iset, value[None, :])

    @classmethod
    def from_dict(cls, mapping: Mapping[MultiIndex, Iterable[float] | float],
                  germ_dim: int | None = None,
                  index_set: IndexSet | None = None) -> "PceVector":
        """Build from a sparse alpha -> coefficient mapping.

        Absent modes are zero.  Unless an explicit index set is given, the
        downward closure of the support is used.
        """
        vals = {a: np.atleast_1d(np.asarray(v, dtype=float))
                for a, v in mapping.items()}
        dims = {v.shape[0] for v in vals.values()}
        if len(dims) > 1:
            raise ValueError(f"inconsistent value dimensions {sorted(dims)}")
        m = dims.pop() if dims else 1
        if index_set is None:
            index_set = IndexSet.closure_of(vals.keys(), germ_dim=germ_dim)
        coeffs = np.zeros((len(index_set), m))
        for a, v in vals.items():
            coeffs[index_set.index_of(a)] = v
        return cls(index_set, coeffs)

    @classmethod
    def gaussian(cls, mean, cov_factor, germ_dim: int | None = None) -> "PceVector":
        """Degree-1 vector mean + cov_factor @ theta (columns are germ loads)."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        fac = np.atleast_2d(np.asarray(cov_factor, dtype=float))
        if fac.shape[0] != mean.shape[0]:
            raise ValueError("cov_factor rows must match mean dimension")
        d = fac.shape[1]
        iset = IndexSet.total_degree(d, 1)
        if germ_dim is not None:
            iset = iset.extend_germ(germ_dim - d)
        coeffs = np.zeros((len(iset), mean.shape[0]))
        coeffs[0] = mean
        for j in range(d):
            a = MultiIndex((0,) * j + (1,))
            coeffs[iset.index_of(a)] = fac[:, j]
        return cls(iset, coeffs)

    # -- basic accessors ---------------------------------------------------

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def germ_dim(self) -> int:
        return self.index_set.germ_dim

    def coeff(self, alpha: MultiIndex) -> np.ndarray:
        if alpha in self.index_set:
            return self.coeffs[self.index_set.index_of(alpha)]
        return np.zeros(self.dim)

    def component_dict(self, i: int) -> dict[MultiIndex, float]:
        """Sparse map of one value component (zeros dropped)."""
        col = self.coeffs[:, i]
        return {a: float(c) for a, c in zip(self.index_set.members, col) if c != 0.0}

    # -- algebra -----------------------------------------------------------

    def _binary(self, other: "PceVector", sign: float) -> "PceVector":
        if self.germ_dim != other.germ_dim:
            raise ValueError(
                f"germ mismatch: {self.germ_dim} vs {other.germ_dim}; "
                "extend germs first")
        if self.dim != other.dim:
            raise ValueError("value dimension mismatch")
        if self.index_set == other.index_set:
            return PceVector(self.index_set, self.coeffs + sign * other.coeffs)
        iset = self.index_set.union(other.index_set)
        coeffs = np.zeros((len(iset), self.dim))
        for a, row in zip(self.index_set.members, self.coeffs):
            coeffs[iset.index_of(a)] += row
        for a, row in zip(other.index_set.members, other.coeffs):
            coeffs[iset.index_of(a)] += sign * row
        return PceVector(iset, coeffs)

    def __add__(self, other: "PceVector") -> "PceVector":
        return self._binary(other, 1.0)

    def __sub__(self, other: "PceVector") -> "PceVector":
        return self._binary(other, -1.0)

    def scaled(self, factor: float) -> "PceVector":
        return PceVector(self.index_set, factor * self.coeffs)

    def shifted(self, offset) -> "PceVector":
        """Add a deterministic offset to the mean mode."""
        coeffs = self.coeffs.copy()
        coeffs[self.index_set.index_of(ZERO_INDEX)] += np.asarray(offset, dtype=float)
        return PceVector(self.index_set, coeffs)

    def centered(self) -> "PceVector":
        coeffs = self.coeffs.copy()
        coeffs[self.index_set.index_of(ZERO_INDEX)] = 0.0
        return PceVector(self.index_set, coeffs)

    def select(self, components: Iterable[int]) -> "PceVector":
        return PceVector(self.index_set, self.coeffs[:, list(components)])

    def with_index_set(self, index_set: IndexSet) -> "PceVector":
        """Re-embed into a superset (error if support would be dropped)."""
        coeffs = np.zeros((len(index_set), self.dim))
        for a, row in zip(self.index_set.members, self.coeffs):
            if a not in index_set:
                if np.any(row != 0.0):
                    raise ValueError(f"target set drops populated mode {a}")
                continue
            coeffs[index_set.index_of(a)] = row
        return PceVector(index_set, coeffs)

    def truncate(self, index_set: IndexSet) -> tuple["PceVector", float]:
        """Orthogonal projection onto a smaller set; returns the dropped
        L2 norm as well."""
        coeffs = np.zeros((len(index_set), self.dim))
        dropped = 0.0
        for a, row in zip(self.index_set.members, self.coeffs):
            if a in index_set:
                coeffs[index_set.index_of(a)] = row
            else:
                dropped += norm_sq(a) * float(row @ row)
        return PceVector(index_set, coeffs), float(np.sqrt(dropped))


def germ_extend(x: PceVector, extra_dims: int) -> PceVector:
    """Reinterpret x on a germ enlarged by extra_dims fresh variables.

    Multi-indices gain implicit trailing zeros, so every moment of the
    vector is unchanged exactly.
    """
    if extra_dims == 0:
        return x
    return PceVector(x.index_set.extend_germ(extra_dims), x.coeffs)


def match_germ(*vectors: PceVector) -> tuple[PceVector, ...]:
    """Extend all vectors to the largest germ among them."""
    d = max(v.germ_dim for v in vectors)
    return tuple(germ_extend(v, d - v.germ_dim) for v in vectors)


def _design_matrix(index_set: IndexSet, thetas: np.ndarray) -> np.ndarray:
    """H_alpha(theta_row) for every member; shape (n, len(index_set))."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    if thetas.shape[1] < index_set.germ_dim:
        raise ValueError(
            f"germ points have {thetas.shape[1]} dims, need {index_set.germ_dim}")
    tables = [hermite_table(index_set.max_degree, thetas[:, d])
              for d in range(thetas.shape[1])]
    out = np.empty((thetas.shape[0], len(index_set)))
    for j, a in enumerate(index_set.members):
        col = np.ones(thetas.shape[0])
        for d, e in enumerate(a.entries):
            if e:
                col = col * tables[d][e]
        out[:, j] = col
    return out


def pce_eval(x: PceVector, theta) -> np.ndarray:
    """Evaluate the expansion at one germ point."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[0] < x.germ_dim:
        raise ValueError(f"theta has {theta.shape[0]} dims, need {x.germ_dim}")
    return _design_matrix(x.index_set, theta[None, :])[0] @ x.coeffs


def pce_eval_batch(x: PceVector, thetas: np.ndarray) -> np.ndarray:
    """Evaluate at many germ points; shape (n, M)."""
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.shape[0]
    out = np.empty((n, x.dim))
    for lo in range(0, n, _EVAL_CHUNK):
        hi = min(lo + _EVAL_CHUNK, n)
        out[lo:hi] = _design_matrix(x.index_set, thetas[lo:hi]) @ x.coeffs
    return out


def sample_paths(x: PceVector, n: int, seed: int) -> np.ndarray:
    """n independent realizations from seeded standard-normal germ draws.

    Identical (seed, n) give bit-identical output.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    thetas = rng.standard_normal((n, max(x.germ_dim, 1)))
    return pce_eval_batch(x, thetas)


# -- plain-text serialization ---------------------------------------------
#
# One row per multi-index: degree, the germ_dim exponents, then M
# coefficients at 17 significant digits.  The header names M and germ_dim.

def dumps_pce(x: PceVector) -> str:
    buf = io.StringIO()
    buf.write(f"pce M={x.dim} germ_dim={x.germ_dim} rows={len(x.index_set)}\n")
    for a, row in zip(x.index_set.members, x.coeffs):
        parts = [str(a.degree)]
        parts += [str(e) for e in a.padded(x.germ_dim)]
        parts += [format(v, ".17e") for v in row]
        buf.write(" ".join(parts) + "\n")
    return buf.getvalue()


def loads_pce(text: str) -> PceVector:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "pce":
        raise ValueError("not a pce text block")
    fields = dict(kv.split("=") for kv in head[1:])
    m, germ_dim, rows = int(fields["M"]), int(fields["germ_dim"]), int(fields["rows"])
    if len(lines) - 1 != rows:
        raise ValueError("row count mismatch")
    mapping: dict[MultiIndex, np.ndarray] = {}
    for ln in lines[1:]:
        parts = ln.split()
        ent = tuple(int(v) for v in parts[1:1 + germ_dim])
        alpha = MultiIndex(ent)
        if alpha.degree != int(parts[0]):
            raise ValueError(f"degree column disagrees with exponents in {ln!r}")
        mapping[alpha] = np.array([float(v) for v in parts[1 + germ_dim:]])
        if mapping[alpha].shape[0] != m:
            raise ValueError("coefficient count mismatch")
    iset = IndexSet(mapping.keys(), germ_dim=germ_dim)
    coeffs = np.zeros((len(iset), m))
    for a, v in mapping.items():
        coeffs[iset.index_of(a)] = v
    return PceVector(iset, coeffs)


def write_pce(x: PceVector, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_pce(x))


def read_pce(path) -> PceVector:
    with open(path) as fh:
        return loads_pce(fh.read())
