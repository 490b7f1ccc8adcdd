"""Conditional-expectation maps of selectable degree and the update filters.

The degree-m optimal map Phi_m minimizes E|R - phi(y)|^2 over polynomials
phi of degree m.  Its normal equations couple the symmetric moment tensors
of y (the Hankel operator matrix) with cross moments of R and y; one Gram
matrix serves all value components of R.  Assembly uses centered
measurement monomials for conditioning and converts the solution back to
raw-argument coefficient tensors.

The update itself is

    R_a = R_f + (Phi_m(y_hat) - Phi_m(y_f)),

which leaves the component of R orthogonal to the measurement untouched.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg

from . import quadrature
from .hermite import norm_sq, product_linearize
from .moments import MomentCache, covariance, mean, packed_size, packed_tuples
from .multiindex import ZERO_INDEX, IndexSet, MultiIndex
from .pce import PceVector, _design_matrix, match_germ, pce_eval_batch

DEFAULT_CUTOFF = 1e-12
APPLY_DEGREE_CAP = 8


@dataclass(frozen=True)
class WarningRecord:
    """A numerical event the caller may want to surface (not an error)."""
    kind: str
    message: str
    value: float = 0.0


def _record(warnings_out, kind: str, message: str, value: float = 0.0) -> None:
    if warnings_out is not None:
        warnings_out.append(WarningRecord(kind, message, value))


def _psd_pinv(mat: np.ndarray, cutoff: float,
              warnings_out=None, what: str = "matrix") -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD matrix by eigendecomposition."""
    w, v = scipy.linalg.eigh(np.asarray(mat, dtype=float))
    wmax = float(w[-1]) if w.size else 0.0
    keep = w > max(cutoff * wmax, 0.0)
    if not np.all(keep):
        _record(warnings_out, "rank-cutoff",
                f"{what}: kept {int(keep.sum())}/{len(w)} eigenvalues",
                float(w[~keep].max(initial=0.0)))
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (v * inv) @ v.T


def _psd_solve(gram: np.ndarray, rhs: np.ndarray, cutoff: float,
               warnings_out=None, what: str = "gram") -> np.ndarray:
    """Minimal-norm solution of gram @ X = rhs with eigenvalue cutoff."""
    return _psd_pinv(gram, cutoff, warnings_out, what) @ rhs


def _sqrt_psd(mat: np.ndarray, invert: bool, cutoff: float,
              warnings_out=None, what: str = "covariance") -> np.ndarray:
    w, v = scipy.linalg.eigh(np.asarray(mat, dtype=float))
    wmax = float(w[-1]) if w.size else 0.0
    keep = w > max(cutoff * wmax, 0.0)
    if invert and not np.all(keep):
        _record(warnings_out, "rank-cutoff",
                f"{what}: inverse square root restricted to rank "
                f"{int(keep.sum())} range", float(w[~keep].max(initial=0.0)))
    root = np.zeros_like(w)
    root[keep] = w[keep] ** (-0.5 if invert else 0.5)
    if not invert:
        root[~keep] = 0.0
    return (v * root) @ v.T


def kalman_gain(c_xy: np.ndarray, c_yy: np.ndarray,
                cutoff: float = DEFAULT_CUTOFF, warnings_out=None) -> np.ndarray:
    """K = C_xy C_yy^+ through the symmetric pseudo-inverse.

    Singular values of C_yy below cutoff * max are discarded, matching a
    least-squares solve by orthogonal transformations rather than explicit
    inversion.
    """
    c_xy = np.atleast_2d(np.asarray(c_xy, dtype=float))
    c_yy = np.atleast_2d(np.asarray(c_yy, dtype=float))
    if c_xy.shape[1] != c_yy.shape[0] or c_yy.shape[0] != c_yy.shape[1]:
        raise ValueError(f"dimension mismatch: C_xy {c_xy.shape}, C_yy {c_yy.shape}")
    return c_xy @ _psd_pinv(c_yy, cutoff, warnings_out, "C_yy")


def _tuple_multiplicity(t: tuple[int, ...]) -> float:
    """Number of distinct orderings of the sorted tuple t."""
    counts: dict[int, int] = {}
    for j in t:
        counts[j] = counts.get(j, 0) + 1
    out = math.factorial(len(t))
    for c in counts.values():
        out //= math.factorial(c)
    return float(out)


class PolyMap:
    """A polynomial map y -> H0 + H1 y + ... + Hm y^{vee m}.

    ``tensors[k]`` holds the packed entries of the symmetric k-linear
    coefficient map, shape (M, packed_size(R, k)) over sorted argument
    tuples.  Application multiplies each packed entry by the number of
    distinct orderings of its tuple.
    """

    __slots__ = ("degree", "value_dim", "meas_dim", "tensors", "_mults", "_tuples")

    def __init__(self, degree: int, value_dim: int, meas_dim: int,
                 tensors: Sequence[np.ndarray]):
        if len(tensors) != degree + 1:
            raise ValueError("need one tensor per order 0..degree")
        self.degree = degree
        self.value_dim = value_dim
        self.meas_dim = meas_dim
        tens = []
        for k, t in enumerate(tensors):
            t = np.asarray(t, dtype=float).reshape(value_dim, packed_size(meas_dim, k))
            t = t.copy()
            t.flags.writeable = False
            tens.append(t)
        self.tensors = tuple(tens)
        self._tuples = [packed_tuples(meas_dim, k) for k in range(degree + 1)]
        self._mults = [np.array([_tuple_multiplicity(t) for t in tups])
                       for tups in self._tuples]

    def constant_term(self) -> np.ndarray:
        return self.tensors[0][:, 0]

    def __call__(self, y_value) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y_value, dtype=float))
        if y.shape[0] != self.meas_dim:
            raise ValueError(f"measurement has dim {y.shape[0]}, map expects "
                             f"{self.meas_dim}")
        out = self.tensors[0][:, 0].copy()
        for k in range(1, self.degree + 1):
            mono = np.array([math.prod(y[j] for j in t) for t in self._tuples[k]])
            out += self.tensors[k] @ (self._mults[k] * mono)
        return out


class GeneralBasisMap(NamedTuple):
    """Galerkin solution over a user dictionary: y -> sum_a v_a psi_a(y)."""
    dictionary: "BasisDictionary"
    coeffs: np.ndarray  # (P, M)

    def __call__(self, y_value) -> np.ndarray:
        vals = np.array([f(np.atleast_1d(np.asarray(y_value, dtype=float)))
                         for f in self.dictionary.functions])
        return vals @ self.coeffs


@dataclass(frozen=True)
class BasisDictionary:
    """Ordered scalar functions of the measurement used as a Galerkin basis.

    Functions take a measurement vector (R,) and return a float.  They need
    not be orthonormal; linear independence is checked through the rank of
    the assembled Gram matrix.  ``max_degree`` is the polynomial degree of
    the dictionary when it is polynomial (used to pick exact quadrature
    levels); non-polynomial dictionaries must supply a level explicitly.
    """
    functions: tuple[Callable[[np.ndarray], float], ...]
    labels: tuple[str, ...] = ()
    spans_linear: bool = False
    max_degree: int | None = None

    def __post_init__(self):
        if self.labels and len(self.labels) != len(self.functions):
            raise ValueError("one label per function")

    @classmethod
    def monomials(cls, meas_dim: int, degree: int) -> "BasisDictionary":
        funcs = []
        labels = []
        for k in range(degree + 1):
            for t in packed_tuples(meas_dim, k):
                funcs.append(lambda y, t=t: float(math.prod(y[j] for j in t)))
                labels.append("1" if not t else "*".join(f"y{j}" for j in t))
        return cls(tuple(funcs), tuple(labels), spans_linear=degree >= 1,
                   max_degree=degree)


@dataclass(frozen=True)
class GramSystem:
    """Moment normal equations for the degree-m map in centered monomials.

    One Gram matrix is shared by all value components of R (the system is
    block diagonal over components), so a single factorization solves every
    right-hand-side column.  ``cutoff`` is the relative eigenvalue cutoff
    the solve will apply.
    """
    degree: int
    meas_dim: int
    basis: tuple[tuple[int, ...], ...]   # packed tuples, orders 0..m
    gram: np.ndarray                      # (P, P)
    rhs: np.ndarray                       # (P, M)
    y_mean: np.ndarray                    # (R,)
    cutoff: float = DEFAULT_CUTOFF


def _monomial_tuples(meas_dim: int, degree: int) -> list[tuple[int, ...]]:
    return [t for k in range(degree + 1) for t in packed_tuples(meas_dim, k)]


def build_gram_system(r: PceVector, y: PceVector, m: int,
                      cutoff: float = DEFAULT_CUTOFF) -> GramSystem:
    """Assemble the degree-m normal equations from closed-form moments.

    Basis functions are centered monomials prod (y - ybar)_{t_i}; the Gram
    entry for tuples (u, w) is the central moment of order |u|+|w| at the
    merged index tuple, and the right-hand side pairs R against each basis
    function.
    """
    if m < 0:
        raise ValueError("degree must be >= 0")
    r, y = match_germ(r, y)
    ybar = mean(y)
    cache = MomentCache(y.centered())
    basis = _monomial_tuples(y.dim, m)
    p = len(basis)
    moments = {k: cache.sym_moment(k) for k in range(2 * m + 1)}
    gram = np.empty((p, p))
    for i, u in enumerate(basis):
        for j, w in enumerate(basis):
            if j < i:
                gram[i, j] = gram[j, i]
            else:
                merged = tuple(sorted(u + w))
                gram[i, j] = moments[len(merged)][merged] if merged else 1.0
    rhs = np.empty((p, r.dim))
    crosses = {k: cache.cross_moment(r, k) for k in range(m + 1)}
    for i, u in enumerate(basis):
        rhs[i] = crosses[len(u)][u] if u else mean(r)
    return GramSystem(degree=m, meas_dim=y.dim, basis=tuple(basis),
                      gram=gram, rhs=rhs, y_mean=ybar, cutoff=cutoff)


def _centered_solution_to_polymap(system: GramSystem, sol: np.ndarray) -> PolyMap:
    """Rewrite sum_u v_u prod (y-ybar)_u as raw coefficient tensors."""
    m, rdim = system.degree, system.meas_dim
    value_dim = sol.shape[1]
    mono = [np.zeros((value_dim, packed_size(rdim, k))) for k in range(m + 1)]
    positions = [{t: i for i, t in enumerate(packed_tuples(rdim, k))}
                 for k in range(m + 1)]
    ybar = system.y_mean
    for u, v in zip(system.basis, sol):
        k = len(u)
        for picked in itertools.chain.from_iterable(
                itertools.combinations(range(k), n) for n in range(k + 1)):
            w = tuple(sorted(u[i] for i in picked))
            rest = [u[i] for i in range(k) if i not in picked]
            factor = math.prod(-ybar[j] for j in rest) if rest else 1.0
            mono[len(w)][:, positions[len(w)][w]] += factor * v
    # Monomial coefficients c_w relate to symmetric tensor entries by the
    # orbit size of w: c_w = mult(w) * H_w.
    tensors = []
    for k in range(m + 1):
        mults = np.array([_tuple_multiplicity(t) for t in packed_tuples(rdim, k)])
        tensors.append(mono[k] / mults)
    return PolyMap(m, value_dim, rdim, tensors)


def solve_optimal_map(r: PceVector, y: PceVector, m: int,
                      cutoff: float = DEFAULT_CUTOFF,
                      warnings_out=None) -> PolyMap:
    """Best degree-m polynomial approximation of the conditional expectation.

    Solves the shared Gram system by symmetric eigendecomposition with a
    relative eigenvalue cutoff; rank-deficient systems yield the
    minimal-norm coefficient vector and a warning record.
    """
    system = build_gram_system(r, y, m, cutoff)
    sol = _psd_solve(system.gram, system.rhs, cutoff, warnings_out,
                     f"degree-{m} gram")
    return _centered_solution_to_polymap(system, sol)


def qbu_closed_form(r: PceVector, y: PceVector,
                    cutoff: float = DEFAULT_CUTOFF,
                    warnings_out=None) -> PolyMap:
    """Degree-2 map by symbolic elimination of the order-(0,1,2) system.

    Works directly in raw moments: with K the Kalman gain and
    A[(p,q),l] = <y_p y_q y_l> - <y_p y_q><y_l>, the second-order
    coefficient solves the fourth-order Schur complement
    (D - A C_yy^+ A^T) and the lower orders follow by back-substitution.
    Agrees with the generic degree-2 Gram solve on nondegenerate inputs.
    """
    r, y = match_germ(r, y)
    rdim, mdim = y.dim, r.dim
    cache = MomentCache(y)
    ybar = mean(y)
    t2 = cache.sym_moment(2).to_full()
    t3 = cache.sym_moment(3).to_full()
    t4 = cache.sym_moment(4).to_full()
    rbar = mean(r)
    c1 = cache.cross_moment(r, 1).to_full()          # (R, M)
    c2 = cache.cross_moment(r, 2).to_full()          # (R, R, M)
    c_yy = t2 - np.outer(ybar, ybar)
    c_ry = c1.T - np.outer(rbar, ybar)               # (M, R)
    cyy_pinv = _psd_pinv(c_yy, cutoff, warnings_out, "C_yy")
    gain = c_ry @ cyy_pinv
    a_mat = t3.reshape(rdim * rdim, rdim) - np.outer(t2.ravel(), ybar)
    f_mat = a_mat @ cyy_pinv                          # (R^2, R)
    d_mat = t4.reshape(rdim * rdim, rdim * rdim) - np.outer(t2.ravel(), t2.ravel())
    schur = d_mat - f_mat @ a_mat.T
    e_mat = (np.moveaxis(c2, 2, 0).reshape(mdim, rdim * rdim)
             - np.outer(rbar, t2.ravel()) - gain @ a_mat.T)
    h2_flat = e_mat @ _psd_pinv(schur, cutoff, warnings_out,
                                "fourth-order Schur complement")
    h2 = h2_flat.reshape(mdim, rdim, rdim)
    h2 = 0.5 * (h2 + np.swapaxes(h2, 1, 2))
    h1 = gain - h2.reshape(mdim, rdim * rdim) @ f_mat
    h0 = rbar - h1 @ ybar - h2.reshape(mdim, rdim * rdim) @ t2.ravel()
    pairs = packed_tuples(rdim, 2)
    tensors = [h0.reshape(mdim, 1), h1,
               np.stack([h2[:, p, q] for p, q in pairs], axis=1)]
    return PolyMap(2, mdim, rdim, tensors)


def solve_general_basis(r: PceVector, y: PceVector, dictionary: BasisDictionary,
                        quad_level: int | None = None,
                        cutoff: float = DEFAULT_CUTOFF,
                        warnings_out=None) -> GeneralBasisMap:
    """Galerkin solve over an arbitrary dictionary of measurement functions.

    Gram entries <psi_a(y) psi_b(y)> and pairings <psi_a(y) R> are computed
    by tensorized Gauss-Hermite quadrature on the germ.  The block
    structure over R's components means a single factorization of the
    small Gram matrix handles every component.
    """
    r, y = match_germ(r, y)
    if quad_level is None:
        if dictionary.max_degree is None:
            raise ValueError(
                "non-polynomial dictionary: a quadrature level is required")
        pairing_degree = (dictionary.max_degree * y.index_set.max_degree
                          + max(r.index_set.max_degree,
                                dictionary.max_degree * y.index_set.max_degree))
        quad_level = quadrature.required_level(pairing_degree)
    nodes, weights = quadrature.tensor_grid(y.germ_dim, quad_level)
    yv = pce_eval_batch(y, nodes)
    rv = pce_eval_batch(r, nodes)
    psi = np.column_stack([
        np.array([f(row) for row in yv]) for f in dictionary.functions])
    gram = psi.T @ (weights[:, None] * psi)
    rhs = psi.T @ (weights[:, None] * rv)
    rank = np.linalg.matrix_rank(gram, tol=cutoff * max(np.abs(gram).max(), 1.0))
    if rank < len(dictionary.functions):
        _record(warnings_out, "rank-deficient-dictionary",
                f"dictionary Gram rank {rank} < {len(dictionary.functions)}; "
                "minimal-norm solution returned", float(rank))
    coeffs = _psd_solve(gram, rhs, cutoff, warnings_out, "dictionary gram")
    return GeneralBasisMap(dictionary, coeffs)


def apply_map(phi: PolyMap | GeneralBasisMap, y_value) -> np.ndarray:
    """Evaluate a fitted map at a deterministic measurement vector."""
    return phi(y_value)


def apply_map_rv(phi: PolyMap | GeneralBasisMap, y: PceVector,
                 out_index_set: IndexSet | None = None,
                 degree_cap: int = APPLY_DEGREE_CAP,
                 quad_level: int | None = None,
                 warnings_out=None) -> PceVector:
    """Compose a fitted map with a PCE measurement, Phi(y(theta)).

    Polynomial maps compose exactly through the Hermite product algebra and
    are then truncated: by default to total degree min(m * deg(y),
    degree_cap), with the dropped L2 norm recorded.  Dictionary maps are
    projected pseudo-spectrally.
    """
    if isinstance(phi, GeneralBasisMap):
        if out_index_set is None:
            out_index_set = IndexSet.total_degree(
                y.germ_dim, min(degree_cap, 2 * y.index_set.max_degree))
        if quad_level is None:
            if phi.dictionary.max_degree is None:
                raise ValueError(
                    "non-polynomial dictionary: a quadrature level is required")
            quad_level = quadrature.required_level(
                phi.dictionary.max_degree * y.index_set.max_degree
                + out_index_set.max_degree)
        return _project_function(
            lambda yv: phi(yv), y, out_index_set, quad_level)
    if phi.meas_dim != y.dim:
        raise ValueError("measurement dimension mismatch")
    cache = MomentCache(y)
    acc: dict[MultiIndex, np.ndarray] = {
        ZERO_INDEX: phi.tensors[0][:, 0].copy()}
    for k in range(1, phi.degree + 1):
        for t, col, mult in zip(packed_tuples(y.dim, k), phi.tensors[k].T,
                                phi._mults[k]):
            if not np.any(col):
                continue
            vec = mult * col
            for gamma, c in cache.product(t).items():
                if gamma in acc:
                    acc[gamma] = acc[gamma] + c * vec
                else:
                    acc[gamma] = c * vec
    exact_degree = max(a.degree for a in acc)
    target = min(phi.degree * y.index_set.max_degree, degree_cap)
    full = PceVector.from_dict(acc, germ_dim=y.germ_dim)
    if out_index_set is None and exact_degree > target:
        out_index_set = IndexSet.closure_of(
            [a for a in acc if a.degree <= target], germ_dim=y.germ_dim)
    if out_index_set is not None:
        truncated, dropped = full.truncate(out_index_set)
        if dropped > 0.0:
            _record(warnings_out, "composition-truncated",
                    f"composition truncated to degree "
                    f"{out_index_set.max_degree}; dropped L2 norm {dropped:.3e}",
                    dropped)
        return truncated
    return full


def _project_function(func, y: PceVector, out_index_set: IndexSet,
                      quad_level: int) -> PceVector:
    nodes, weights = quadrature.tensor_grid(y.germ_dim, quad_level)
    yv = pce_eval_batch(y, nodes)
    vals = np.array([np.atleast_1d(func(row)) for row in yv])
    design = _design_matrix(out_index_set, nodes)
    norms = np.array([norm_sq(a) for a in out_index_set.members])
    coeffs = (design * weights[:, None]).T @ vals / norms[:, None]
    return PceVector(out_index_set, coeffs)


def bayes_update(r_f: PceVector, y_f: PceVector, y_hat, m: int,
                 cutoff: float = DEFAULT_CUTOFF,
                 degree_cap: int = APPLY_DEGREE_CAP,
                 warnings_out=None) -> PceVector:
    """Assimilate the observation y_hat: R_a = R_f + Phi_m(y_hat) - Phi_m(y_f).

    The constant coefficient cancels between the two map applications, and
    for m = 0 the whole innovation vanishes, so the forecast is returned
    unchanged.  m = 1 is the Gauss-Markov-Kalman filter acting on random
    variables; m = 2 the quadratic update.
    """
    if m == 0:
        return r_f
    r_f, y_f = match_germ(r_f, y_f)
    phi = solve_optimal_map(r_f, y_f, m, cutoff, warnings_out)
    at_obs = apply_map(phi, y_hat)
    composed = apply_map_rv(phi, y_f, degree_cap=degree_cap,
                            warnings_out=warnings_out)
    innovation = PceVector.constant(at_obs, germ_dim=r_f.germ_dim) - composed
    return r_f + innovation


def dumps_polymap(phi: PolyMap) -> str:
    """Plain-text form: header (m, M, R), then per order the packed
    symmetric entries in sorted-tuple order at 17 significant digits."""
    lines = [f"polymap m={phi.degree} M={phi.value_dim} R={phi.meas_dim}"]
    for k in range(phi.degree + 1):
        for row in phi.tensors[k]:
            lines.append(f"{k} " + " ".join(format(v, ".17e") for v in row))
    return "\n".join(lines) + "\n"


def loads_polymap(text: str) -> PolyMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "polymap":
        raise ValueError("not a polymap text block")
    fields = dict(kv.split("=") for kv in head[1:])
    m, mdim, rdim = int(fields["m"]), int(fields["M"]), int(fields["R"])
    tensors = [np.zeros((mdim, packed_size(rdim, k))) for k in range(m + 1)]
    rows = {k: 0 for k in range(m + 1)}
    for ln in lines[1:]:
        parts = ln.split()
        k = int(parts[0])
        tensors[k][rows[k]] = [float(v) for v in parts[1:]]
        rows[k] += 1
    if any(rows[k] != mdim for k in range(m + 1)):
        raise ValueError("row count mismatch in polymap text")
    return PolyMap(m, mdim, rdim, tensors)


def write_polymap(phi: PolyMap, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_polymap(phi))


def read_polymap(path) -> PolyMap:
    with open(path) as fh:
        return loads_polymap(fh.read())


def general_bayes_update(r_f: PceVector, y_f: PceVector, y_hat,
                         dictionary: BasisDictionary,
                         quad_level: int | None = None,
                         cutoff: float = DEFAULT_CUTOFF,
                         degree_cap: int = APPLY_DEGREE_CAP,
                         warnings_out=None) -> PceVector:
    """Assimilate through a Galerkin map over an arbitrary dictionary,
    R_a = R_f + Phi(y_hat) - Phi(y_f)."""
    r_f, y_f = match_germ(r_f, y_f)
    gmap = solve_general_basis(r_f, y_f, dictionary, quad_level, cutoff,
                               warnings_out)
    at_obs = apply_map(gmap, y_hat)
    composed = apply_map_rv(gmap, y_f, degree_cap=degree_cap,
                            quad_level=quad_level, warnings_out=warnings_out)
    innovation = PceVector.constant(at_obs, germ_dim=r_f.germ_dim) - composed
    return r_f + innovation


def pce_outer_product(x: PceVector) -> PceVector:
    """The matrix-valued random variable x (x) x, flattened row-major."""
    comps = [x.component_dict(i) for i in range(x.dim)]
    acc: dict[MultiIndex, np.ndarray] = {}
    m = x.dim
    for i, a_map in enumerate(comps):
        for j, b_map in enumerate(comps):
            if j < i:
                continue
            for alpha, ca in a_map.items():
                for beta, cb in b_map.items():
                    w = ca * cb
                    for gamma, c in product_linearize(alpha, beta).items():
                        row = acc.get(gamma)
                        if row is None:
                            row = np.zeros(m * m)
                            acc[gamma] = row
                        row[i * m + j] += w * c
                        if i != j:
                            row[j * m + i] += w * c
    return PceVector.from_dict(acc, germ_dim=x.germ_dim)


def posterior_covariance_exact(x_f: PceVector, y_f: PceVector, y_hat, m: int,
                               xx_degree: int | None = None,
                               cutoff: float = DEFAULT_CUTOFF,
                               floor_tol: float = 1e-8,
                               warnings_out=None) -> np.ndarray:
    """Posterior covariance from the map of the second-moment variable.

    C_p = Phi_{x(x)x}(y_hat) - Phi_{x,m}(y_hat) (x) Phi_{x,m}(y_hat),
    symmetrized and floored to PSD; flooring beyond floor_tol * trace is
    recorded as a warning rather than hidden.  The second-moment map runs
    at degree 2m by default: x (x) x is quadratic in x, so matching the
    fidelity of the degree-m mean map needs twice the degree (already the
    affine-Gaussian case has E[x (x) x | y] quadratic in y).
    """
    x_f, y_f = match_germ(x_f, y_f)
    if xx_degree is None:
        xx_degree = 2 * m
    xx = pce_outer_product(x_f)
    chat = apply_map(solve_optimal_map(xx, y_f, xx_degree, cutoff,
                                       warnings_out), y_hat)
    xbar = apply_map(solve_optimal_map(x_f, y_f, m, cutoff, warnings_out), y_hat)
    cp = chat.reshape(x_f.dim, x_f.dim) - np.outer(xbar, xbar)
    cp = 0.5 * (cp + cp.T)
    w, v = scipy.linalg.eigh(cp)
    floored = float(-w[w < 0].sum()) if np.any(w < 0) else 0.0
    if floored > 0.0:
        cp = (v * np.clip(w, 0.0, None)) @ v.T
        if floored > floor_tol * max(np.trace(cp), 0.0):
            _record(warnings_out, "psd-floor",
                    f"posterior covariance floored by {floored:.3e} "
                    f"(beyond {floor_tol:.0e} * trace)", floored)
    return cp


def covariance_match(x_a: PceVector, c_p: np.ndarray,
                     cutoff: float = DEFAULT_CUTOFF,
                     warnings_out=None) -> PceVector:
    """Rescale the fluctuating part of x_a to carry the target covariance.

    x_c = xbar + C_p^{1/2} C_{x_a x_a}^{-1/2} (x_a - xbar); the mean is
    preserved by construction.  A rank-deficient current covariance
    restricts the transform to its range (recorded).
    """
    c_p = np.atleast_2d(np.asarray(c_p, dtype=float))
    caa = covariance(x_a, x_a)
    transform = (_sqrt_psd(c_p, invert=False, cutoff=cutoff)
                 @ _sqrt_psd(caa, invert=True, cutoff=cutoff,
                             warnings_out=warnings_out,
                             what="assimilated covariance"))
    coeffs = x_a.coeffs @ transform.T
    zero_row = x_a.index_set.index_of(ZERO_INDEX)
    coeffs[zero_row] = x_a.coeffs[zero_row]
    return PceVector(x_a.index_set, coeffs)


class ConditionalProbability(NamedTuple):
    value: float   # clipped to [0, 1]
    raw: float     # as produced by the map


def conditional_probability(indicator_r: PceVector, y_f: PceVector, y_hat,
                            m: int, cutoff: float = DEFAULT_CUTOFF,
                            warnings_out=None) -> ConditionalProbability:
    """Posterior probability of an event through its indicator's map.

    ``indicator_r`` is the PCE projection of the event indicator (assembled
    non-intrusively; Gibbs oscillation makes raw values stray outside
    [0, 1], so both raw and clipped values are returned).
    """
    if indicator_r.dim != 1:
        raise ValueError("indicator must be scalar-valued")
    phi = solve_optimal_map(indicator_r, y_f, m, cutoff, warnings_out)
    raw = float(apply_map(phi, y_hat)[0])
    return ConditionalProbability(min(max(raw, 0.0), 1.0), raw)


def indicator_projection(r: PceVector, event: Callable[[np.ndarray], bool],
                         out_index_set: IndexSet, quad_level: int) -> PceVector:
    """Project chi_E(R) onto a PCE basis by germ quadrature."""
    return _project_function(
        lambda rv: np.array([1.0 if event(rv) else 0.0]),
        r, out_index_set, quad_level)
