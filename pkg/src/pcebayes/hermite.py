"""Probabilists' Hermite polynomials and their multiplication algebra.

Normalization: h0 = 1, h1(t) = t, h_{n+1}(t) = t*h_n(t) - n*h_{n-1}(t),
so E[h_a(T) h_b(T)] = delta_ab * a! for T standard normal.  Products of
basis polynomials expand back into the basis with integer structure
coefficients, computed dimension by dimension from the classical
univariate linearization.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .multiindex import MultiIndex

_FLOAT_MAX = float(np.finfo(np.float64).max)


def _as_float_checked(n: int, what: str) -> float:
    f = float(n)
    if not math.isfinite(f):
        raise OverflowError(f"{what} exceeds the representable factorial range")
    return f


def hermite_eval(j: int, t):
    """Evaluate h_j at t (scalar or ndarray) by the three-term recursion."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    t = np.asarray(t, dtype=float)
    prev = np.ones_like(t)
    if j == 0:
        return prev if prev.ndim else float(prev)
    cur = t.copy()
    for n in range(1, j):
        prev, cur = cur, t * cur - n * prev
    return cur if cur.ndim else float(cur)


def hermite_table(max_degree: int, t: np.ndarray) -> np.ndarray:
    """Stack h_0(t) .. h_max_degree(t); result shape (max_degree+1,) + t.shape."""
    t = np.asarray(t, dtype=float)
    out = np.empty((max_degree + 1,) + t.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = t
    for n in range(1, max_degree):
        out[n + 1] = t * out[n] - n * out[n - 1]
    return out


def multi_hermite_eval(alpha: MultiIndex, theta) -> float:
    """Evaluate H_alpha(theta) as the product of univariate factors."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("theta must be a 1-d germ vector")
    if alpha.support_dim > theta.shape[0]:
        raise ValueError(
            f"germ vector of length {theta.shape[0]} too short for {alpha}")
    val = 1.0
    for k, e in enumerate(alpha.entries):
        if e:
            val *= hermite_eval(e, theta[k])
    return float(val)


def norm_sq(alpha: MultiIndex) -> float:
    """Squared basis norm E[H_alpha^2] = alpha!."""
    return _as_float_checked(alpha.factorial(), f"{alpha}!")


def _univariate_linearize(a: int, b: int) -> tuple[tuple[int, float], ...]:
    # h_a h_b = sum_s C(a,s) C(b,s) s! h_{a+b-2s}
    out = []
    for s in range(min(a, b) + 1):
        c = math.comb(a, s) * math.comb(b, s) * math.factorial(s)
        out.append((a + b - 2 * s, _as_float_checked(c, "structure coefficient")))
    return tuple(out)


class StructureTable:
    """Memo of product linearizations keyed by the canonicalized index pair.

    Entries are immutable once stored, so concurrent fills are idempotent.
    """

    def __init__(self):
        self._cache: dict[tuple[MultiIndex, MultiIndex], dict[MultiIndex, float]] = {}
        self._uni: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}

    def _uni_linearize(self, a: int, b: int):
        key = (a, b) if a <= b else (b, a)
        hit = self._uni.get(key)
        if hit is None:
            hit = _univariate_linearize(*key)
            self._uni[key] = hit
        return hit

    def product(self, alpha: MultiIndex, beta: MultiIndex) -> dict[MultiIndex, float]:
        key = (alpha, beta) if alpha.sort_key() <= beta.sort_key() else (beta, alpha)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        ndim = max(alpha.support_dim, beta.support_dim)
        per_dim = [self._uni_linearize(alpha[k], beta[k]) for k in range(ndim)]
        result: dict[MultiIndex, float] = {}
        for combo in itertools.product(*per_dim) if per_dim else ((),):
            gamma = MultiIndex(tuple(c for c, _ in combo))
            coeff = math.prod(w for _, w in combo)
            result[gamma] = result.get(gamma, 0.0) + coeff
        self._cache[key] = result
        return result


_TABLE = StructureTable()


def product_linearize(alpha: MultiIndex, beta: MultiIndex) -> dict[MultiIndex, float]:
    """Structure coefficients of H_alpha * H_beta in the Hermite basis.

    Returns the finite map gamma -> c, meaning
    H_alpha H_beta = sum_gamma c[gamma] H_gamma.  Results are cached
    process-wide; callers must not mutate the returned mapping.
    """
    return _TABLE.product(alpha, beta)
