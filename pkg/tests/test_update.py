import numpy as np
import pytest

import pcebayes as pb
from pcebayes import (BasisDictionary, PceVector, apply_map, apply_map_rv,
                      bayes_update, build_gram_system, conditional_probability,
                      covariance_match, indicator_projection, kalman_gain,
                      posterior_covariance_exact, qbu_closed_form,
                      solve_general_basis, solve_optimal_map)
from pcebayes.multiindex import ZERO_INDEX, IndexSet, MultiIndex, unit_index
from pcebayes.oracle import kalman_reference
from pcebayes.pce import match_germ, pce_eval_batch
from pcebayes.quadrature import tensor_grid
from pcebayes.update import PolyMap, _monomial_tuples

from .helpers import random_pce


def theta(dim, germ_dim=None):
    return PceVector.from_dict({unit_index(dim): [1.0]}, germ_dim=germ_dim)


def gaussian_pair():
    """R = theta1, y = theta1 + theta2 (conditional expectation 0.5 y)."""
    r = theta(0, germ_dim=2)
    y = theta(0, germ_dim=2) + theta(1, germ_dim=2)
    return r, y


def map_coeff_stack(phi):
    return np.concatenate([t.ravel() for t in phi.tensors])


# -- kalman gain -------------------------------------------------------------

def test_kalman_gain_scalar():
    assert kalman_gain([[1.0]], [[2.0]]) == pytest.approx(np.array([[0.5]]))


def test_kalman_gain_pseudo_inverse():
    records = []
    gain = kalman_gain(np.array([[1.0, 0.0]]), np.diag([1.0, 0.0]),
                       warnings_out=records)
    assert gain == pytest.approx(np.array([[1.0, 0.0]]))
    assert any(rec.kind == "rank-cutoff" for rec in records)


def test_kalman_gain_zero():
    gain = kalman_gain(np.zeros((2, 2)), np.eye(2))
    assert np.all(gain == 0.0)


def test_kalman_gain_consistency_when_nonsingular():
    rng = np.random.default_rng(0)
    c_yy = rng.standard_normal((3, 3))
    c_yy = c_yy @ c_yy.T + 0.1 * np.eye(3)
    c_xy = rng.standard_normal((2, 3))
    gain = kalman_gain(c_xy, c_yy)
    assert np.abs(gain @ c_yy - c_xy).max() <= 1e-10 * np.abs(c_xy).max()


def test_kalman_gain_dimension_mismatch():
    with pytest.raises(ValueError):
        kalman_gain(np.ones((2, 3)), np.eye(2))


# -- gram system -------------------------------------------------------------

def test_gram_m0():
    r, y = gaussian_pair()
    sys0 = build_gram_system(r, y, 0)
    assert sys0.gram == pytest.approx(np.array([[1.0]]))
    assert sys0.rhs == pytest.approx(np.array([[pb.mean(r)[0]]]))


def test_gram_m1_standard_normal():
    y = theta(0)
    sys1 = build_gram_system(y, y, 1)
    assert sys1.gram == pytest.approx(np.eye(2))


def test_gram_symmetric_and_psd():
    rng = np.random.default_rng(3)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 2, 2)
    sys2 = build_gram_system(r, y, 2)
    assert np.array_equal(sys2.gram, sys2.gram.T)
    eigs = np.linalg.eigvalsh(sys2.gram)
    assert eigs.min() >= -1e-10 * np.abs(sys2.gram).max()


def test_gram_deterministic_assembly():
    rng = np.random.default_rng(4)
    r = random_pce(rng, 2, 2, 1)
    y = random_pce(rng, 2, 2, 2)
    a = build_gram_system(r, y, 2)
    b = build_gram_system(r, y, 2)
    assert np.array_equal(a.gram, b.gram) and np.array_equal(a.rhs, b.rhs)


# -- optimal map -------------------------------------------------------------

def test_solve_m0_is_mean():
    rng = np.random.default_rng(5)
    r = random_pce(rng, 2, 2, 3)
    y = random_pce(rng, 2, 1, 1)
    phi = solve_optimal_map(r, y, 0)
    assert phi.constant_term() == pytest.approx(pb.mean(r))
    assert apply_map(phi, [123.0]) == pytest.approx(pb.mean(r))


def test_solve_m1_conjugate_gaussian():
    r, y = gaussian_pair()
    phi = solve_optimal_map(r, y, 1)
    assert phi.tensors[0][:, 0] == pytest.approx([0.0], abs=1e-14)
    assert phi.tensors[1] == pytest.approx(np.array([[0.5]]))


def test_solve_reproduces_element_of_subspace():
    # R = theta1^2 measured through y = theta1^2: projection returns R itself
    y = PceVector.from_dict({ZERO_INDEX: [1.0], MultiIndex((2,)): [1.0]})
    phi = solve_optimal_map(y, y, 2)
    for val in (0.3, 1.7, -2.0):
        assert apply_map(phi, [val]) == pytest.approx([val])


def test_solve_rank_deficient_warns_minimal_norm():
    # duplicated measurement component makes C_yy singular
    t = theta(0)
    y2 = PceVector(t.index_set, np.hstack([t.coeffs, t.coeffs]))
    records = []
    phi = solve_optimal_map(t, y2, 1, warnings_out=records)
    assert any(rec.kind == "rank-cutoff" for rec in records)
    # minimal-norm solution splits the unit gain across the two copies
    assert phi.tensors[1] == pytest.approx(np.array([[0.5, 0.5]]))


# -- qbu closed form ----------------------------------------------------------

def test_qbu_gaussian_pair_is_affine():
    r, y = gaussian_pair()
    phi = qbu_closed_form(r, y)
    assert np.abs(phi.tensors[2]).max() < 1e-12
    assert phi.tensors[1] == pytest.approx(np.array([[0.5]]))


def test_qbu_exact_square():
    r = PceVector.from_dict({ZERO_INDEX: [1.0], MultiIndex((2,)): [1.0]})
    y = theta(0)
    phi = qbu_closed_form(r, y)
    assert phi.tensors[0][0, 0] == pytest.approx(0.0, abs=1e-12)
    assert phi.tensors[1][0, 0] == pytest.approx(0.0, abs=1e-12)
    assert phi.tensors[2][0, 0] == pytest.approx(1.0)


def test_qbu_degenerate_measurement_falls_back_with_warning():
    # a deterministic measurement makes C_yy and the fourth-order Schur
    # complement singular; the cutoff pseudo-solve must still return a map
    r = theta(0, germ_dim=1)
    y = PceVector.constant([2.0], germ_dim=1)
    records = []
    phi = qbu_closed_form(r, y, warnings_out=records)
    assert any(rec.kind == "rank-cutoff" for rec in records)
    # no information in y: the map carries the prior mean only
    assert apply_map(phi, [2.0]) == pytest.approx([0.0], abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_qbu_matches_gram_solve(seed):
    rng = np.random.default_rng(seed)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 2, 2).shifted([0.7, -0.3])
    a = map_coeff_stack(qbu_closed_form(r, y))
    b = map_coeff_stack(solve_optimal_map(r, y, 2))
    assert np.linalg.norm(a - b) <= 1e-8 * max(np.linalg.norm(b), 1.0)


# -- general basis ------------------------------------------------------------

def test_general_basis_constant_dictionary():
    rng = np.random.default_rng(6)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 1, 1)
    dictionary = BasisDictionary((lambda y_: 1.0,), ("1",), max_degree=0)
    gmap = solve_general_basis(r, y, dictionary)
    assert gmap.coeffs[0] == pytest.approx(pb.mean(r))


def test_general_basis_matches_monomial_solve():
    rng = np.random.default_rng(7)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 1, 2)
    dictionary = BasisDictionary.monomials(2, 2)
    gmap = solve_general_basis(r, y, dictionary)
    phi = solve_optimal_map(r, y, 2)
    for point in rng.standard_normal((20, 2)):
        a = apply_map(gmap, point)
        b = apply_map(phi, point)
        assert np.abs(a - b).max() <= 1e-8 * max(1.0, np.abs(b).max())


def test_general_basis_exact_span():
    y = theta(0)
    dictionary = BasisDictionary(
        (lambda v: 1.0, lambda v: float(v[0]), lambda v: float(v[0]) ** 3),
        ("1", "y", "y^3"), spans_linear=True, max_degree=3)
    gmap = solve_general_basis(y, y, dictionary)
    assert gmap.coeffs[:, 0] == pytest.approx([0.0, 1.0, 0.0], abs=1e-10)


def test_general_basis_requires_level_for_non_polynomial():
    y = theta(0)
    dictionary = BasisDictionary((lambda v: np.tanh(v[0]),), ("tanh",))
    with pytest.raises(ValueError):
        solve_general_basis(y, y, dictionary)
    gmap = solve_general_basis(y, y, dictionary, quad_level=20)
    assert gmap.coeffs.shape == (1, 1)


def test_general_basis_dependent_dictionary_warns():
    y = theta(0)
    dictionary = BasisDictionary(
        (lambda v: 1.0, lambda v: 2.0), ("1", "2"), max_degree=0)
    records = []
    solve_general_basis(y, y, dictionary, warnings_out=records)
    assert any(rec.kind == "rank-deficient-dictionary" for rec in records)


# -- applying maps ------------------------------------------------------------

def test_apply_map_values():
    const = PolyMap(0, 1, 1, [np.array([[2.0]])])
    assert apply_map(const, [9.0]) == pytest.approx([2.0])
    affine = PolyMap(1, 1, 1, [np.array([[1.0]]), np.array([[2.0]])])
    assert apply_map(affine, [3.0]) == pytest.approx([7.0])
    quad = PolyMap(2, 1, 1, [np.zeros((1, 1)), np.zeros((1, 1)),
                             np.array([[1.0]])])
    assert apply_map(quad, [2.0]) == pytest.approx([4.0])


def test_apply_map_dimension_mismatch():
    affine = PolyMap(1, 1, 2, [np.zeros((1, 1)), np.ones((1, 2))])
    with pytest.raises(ValueError):
        apply_map(affine, [1.0])


def test_apply_map_rv_constant_and_affine():
    y = theta(0)
    const = PolyMap(0, 1, 1, [np.array([[2.5]])])
    z = apply_map_rv(const, y)
    assert pb.mean(z) == pytest.approx([2.5])
    assert pb.variance(z) == pytest.approx(np.zeros((1, 1)))
    affine = PolyMap(1, 1, 1, [np.array([[1.0]]), np.array([[2.0]])])
    z = apply_map_rv(affine, y)
    assert z.coeff(ZERO_INDEX) == pytest.approx([1.0])
    assert z.coeff(MultiIndex((1,))) == pytest.approx([2.0])


def test_apply_map_rv_quadratic_lifts_degree():
    y = theta(0)
    quad = PolyMap(2, 1, 1, [np.zeros((1, 1)), np.zeros((1, 1)),
                             np.array([[1.0]])])
    z = apply_map_rv(quad, y)
    # theta^2 = H2 + 1
    assert z.coeff(ZERO_INDEX) == pytest.approx([1.0])
    assert z.coeff(MultiIndex((2,))) == pytest.approx([1.0])


def test_apply_map_rv_records_truncation():
    y = PceVector.from_dict({MultiIndex((1,)): [1.0], MultiIndex((3,)): [0.5]})
    quad = PolyMap(2, 1, 1, [np.zeros((1, 1)), np.zeros((1, 1)),
                             np.array([[1.0]])])
    records = []
    z = apply_map_rv(quad, y, degree_cap=4, warnings_out=records)
    assert z.index_set.max_degree <= 4
    assert any(rec.kind == "composition-truncated" for rec in records)
    exact = apply_map_rv(quad, y, degree_cap=12)
    assert exact.index_set.max_degree == 6


# -- bayes update -------------------------------------------------------------

def test_bayes_update_m0_identity():
    r, y = gaussian_pair()
    out = bayes_update(r, y, [1.0], 0)
    assert out is r


def test_bayes_update_conjugate_coefficients():
    x = theta(0, germ_dim=2)
    y = x + theta(1, germ_dim=2)
    xa = bayes_update(x, y, [1.0], 1)
    assert xa.coeff(ZERO_INDEX) == pytest.approx([0.5])
    assert xa.coeff(MultiIndex((1,))) == pytest.approx([0.5])
    assert xa.coeff(MultiIndex((0, 1))) == pytest.approx([-0.5])
    assert pb.mean(xa) == pytest.approx([0.5])
    assert pb.variance(xa) == pytest.approx(np.array([[0.5]]))


def test_m1_update_acts_coefficientwise():
    """The linear update is the gain applied mode by mode: the observation
    enters the mean mode only, every other coefficient row transforms as
    x^a - K y^a (the tensorised coefficient-array form of the filter)."""
    rng = np.random.default_rng(321)
    x = random_pce(rng, 3, 2, 2)
    y = random_pce(rng, 3, 2, 2).shifted([0.3, -0.4])
    x, y = match_germ(x, y)
    y_hat = np.array([0.8, -0.1])
    xa = bayes_update(x, y, y_hat, 1)
    gain = kalman_gain(pb.covariance(x, y), pb.covariance(y, y))
    for alpha in xa.index_set.members:
        expected = x.coeff(alpha) - gain @ y.coeff(alpha)
        if alpha == ZERO_INDEX:
            expected = expected + gain @ y_hat
        assert xa.coeff(alpha) == pytest.approx(expected, abs=1e-12)


def test_bayes_update_matches_kalman_matrix_case():
    rng = np.random.default_rng(8)
    d, rdim = 3, 2
    mu = rng.standard_normal(d)
    fac = rng.standard_normal((d, d)) * 0.6
    x = PceVector.gaussian(mu, fac, germ_dim=d + rdim)
    h_mat = rng.standard_normal((rdim, d))
    eps = 0.4
    noise = PceVector.from_dict(
        {unit_index(d + j): eps * np.eye(rdim)[j] for j in range(rdim)},
        germ_dim=d + rdim)
    hx = PceVector(x.index_set, x.coeffs @ h_mat.T)
    y = hx + noise
    y_hat = rng.standard_normal(rdim)
    xa = bayes_update(x, y, y_hat, 1)
    ref_mean, ref_cov = kalman_reference(mu, fac @ fac.T, h_mat,
                                         eps ** 2 * np.eye(rdim), y_hat)
    assert np.abs(pb.mean(xa) - ref_mean).max() < 1e-10
    assert np.abs(pb.covariance(xa, xa) - ref_cov).max() < 1e-10


# -- posterior covariance and matching ---------------------------------------

def test_posterior_covariance_conjugate():
    x = theta(0, germ_dim=2)
    y = x + theta(1, germ_dim=2)
    cp = posterior_covariance_exact(x, y, [1.0], 1)
    assert cp == pytest.approx(np.array([[0.5]]), rel=1e-10)


def test_posterior_covariance_constant_state():
    x = PceVector.constant([2.0, -1.0], germ_dim=1)
    y = theta(0)
    cp = posterior_covariance_exact(x, y, [0.3], 1)
    assert np.abs(cp).max() < 1e-12


def test_posterior_covariance_multivariate_gaussian():
    rng = np.random.default_rng(9)
    d, rdim = 2, 2
    mu = rng.standard_normal(d)
    fac = rng.standard_normal((d, d))
    x = PceVector.gaussian(mu, fac, germ_dim=d + rdim)
    h_mat = rng.standard_normal((rdim, d))
    eps = 0.7
    noise = PceVector.from_dict(
        {unit_index(d + j): eps * np.eye(rdim)[j] for j in range(rdim)},
        germ_dim=d + rdim)
    y = PceVector(x.index_set, x.coeffs @ h_mat.T) + noise
    y_hat = rng.standard_normal(rdim)
    cp = posterior_covariance_exact(x, y, y_hat, 1)
    _, ref_cov = kalman_reference(mu, fac @ fac.T, h_mat,
                                  eps ** 2 * np.eye(rdim), y_hat)
    assert np.abs(cp - ref_cov).max() <= 1e-8 * np.abs(ref_cov).max()


def test_covariance_match_identity():
    rng = np.random.default_rng(10)
    x = random_pce(rng, 2, 2, 2)
    current = pb.covariance(x, x)
    matched = covariance_match(x, current)
    assert np.abs(matched.coeffs - x.coeffs).max() < 1e-12


def test_covariance_match_scalar_scaling():
    x = PceVector.from_dict({ZERO_INDEX: [1.0],
                             MultiIndex((1,)): [np.sqrt(0.4)]})
    matched = covariance_match(x, [[0.5]])
    ratio = matched.coeff(MultiIndex((1,)))[0] / x.coeff(MultiIndex((1,)))[0]
    assert ratio == pytest.approx(np.sqrt(0.5 / 0.4))
    assert pb.mean(matched) == pytest.approx(pb.mean(x))


def test_covariance_match_hits_target():
    rng = np.random.default_rng(11)
    x = random_pce(rng, 3, 2, 3)
    a = rng.standard_normal((3, 3))
    target = a @ a.T
    matched = covariance_match(x, target)
    got = pb.covariance(matched, matched)
    assert np.abs(got - target).max() <= 1e-8 * np.abs(target).max()
    assert pb.mean(matched) == pytest.approx(pb.mean(x))


def test_covariance_match_rank_deficient_warns():
    x = PceVector.from_dict({ZERO_INDEX: [0.0, 0.0],
                             MultiIndex((1,)): [1.0, 0.0]})
    records = []
    covariance_match(x, np.diag([2.0, 0.0]), warnings_out=records)
    assert any(rec.kind == "rank-cutoff" for rec in records)


# -- conditional probability ---------------------------------------------------

def test_conditional_probability_trivial_events():
    y = theta(0)
    full = PceVector.constant([1.0], germ_dim=1)
    empty = PceVector.constant([0.0], germ_dim=1)
    assert conditional_probability(full, y, [0.2], 1).value == pytest.approx(1.0)
    assert conditional_probability(empty, y, [0.2], 1).value == pytest.approx(0.0)


def test_conditional_probability_halfspace():
    # x = theta1, y = x + 0.1 * noise; a strongly positive observation makes
    # the event {x > 0} very likely
    x = theta(0, germ_dim=2)
    y = x + theta(1, germ_dim=2).scaled(0.1)
    iset = IndexSet.total_degree(2, 8)
    chi = indicator_projection(x, lambda v: v[0] > 0.0, iset, quad_level=24)
    prob = conditional_probability(chi, y, [2.0], 2)
    assert prob.value > 0.8
    low = conditional_probability(chi, y, [-2.0], 2)
    assert low.value < 0.2
    assert 0.0 <= prob.value <= 1.0


def test_conditional_probability_tracks_mc_oracle():
    # moderate noise keeps the true conditional probability smooth enough
    # for a quadratic map; compare against a windowed MC estimate
    x = theta(0, germ_dim=2)
    y = x + theta(1, germ_dim=2)
    iset = IndexSet.total_degree(2, 8)
    chi = indicator_projection(x, lambda v: v[0] > 0.0, iset, quad_level=24)
    rng = np.random.default_rng(99)
    th = rng.standard_normal((10 ** 6, 2))
    yv = th[:, 0] + th[:, 1]
    for y_hat in (-2.0, -0.3, 0.3, 2.0):
        prob = conditional_probability(chi, y, [y_hat], 2)
        window = np.abs(yv - y_hat) < 0.05
        mc = float((th[window, 0] > 0).mean())
        assert abs(prob.value - mc) < 0.1


def test_conditional_probability_clips():
    y = theta(0)
    slightly_over = PceVector.constant([1.2], germ_dim=1)
    out = conditional_probability(slightly_over, y, [0.0], 1)
    assert out.raw == pytest.approx(1.2)
    assert out.value == 1.0


# -- variational invariants ----------------------------------------------------

def centered_basis_values(yv, ybar, m):
    cols = []
    for t in _monomial_tuples(yv.shape[1], m):
        col = np.ones(yv.shape[0])
        for j in t:
            col = col * (yv[:, j] - ybar[j])
        cols.append(col)
    return np.column_stack(cols)


def quad_eval_pair(r, y, level):
    nodes, weights = tensor_grid(r.germ_dim, level)
    return pce_eval_batch(r, nodes), pce_eval_batch(y, nodes), weights


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_galerkin_orthogonality_and_pythagoras(m):
    rng = np.random.default_rng(100 + m)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 2, 1).shifted([0.4])
    r, y = match_germ(r, y)
    phi = solve_optimal_map(r, y, m)
    rv, yv, w = quad_eval_pair(r, y, level=10)
    pv = np.array([apply_map(phi, row) for row in yv])
    resid = rv - pv
    psi = centered_basis_values(yv, pb.mean(y), m)
    r_norm = np.sqrt(float(w @ (rv ** 2).sum(axis=1)))
    for col in range(psi.shape[1]):
        pairing = np.abs((w * psi[:, col]) @ resid).max()
        psi_norm = np.sqrt(float(w @ psi[:, col] ** 2))
        assert pairing <= 1e-8 * max(r_norm * psi_norm, 1e-12)
    # Pythagoras: |phi|^2 + |r - phi|^2 == |r|^2
    lhs = float(w @ (pv ** 2).sum(axis=1)) + float(w @ (resid ** 2).sum(axis=1))
    assert lhs == pytest.approx(r_norm ** 2, rel=1e-8)


def test_nestedness_and_stability():
    rng = np.random.default_rng(200)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 2, 1).shifted([-0.2])
    r, y = match_germ(r, y)
    rv, yv, w = quad_eval_pair(r, y, level=12)
    r_norm = np.sqrt(float(w @ (rv ** 2).sum(axis=1)))
    norms = []
    for m in range(4):
        phi = solve_optimal_map(r, y, m)
        pv = np.array([apply_map(phi, row) for row in yv])
        norms.append(np.sqrt(float(w @ (pv ** 2).sum(axis=1))))
    for lo, hi in zip(norms, norms[1:]):
        assert hi >= lo - 1e-10
    assert norms[-1] <= r_norm + 1e-8


@pytest.mark.parametrize("m", [1, 2, 3])
def test_reproduction_of_polynomials(m):
    rng = np.random.default_rng(300 + m)
    y = random_pce(rng, 2, 1, 1).shifted([0.3])
    # R = p(y) with degree exactly m, composed through the product algebra
    coeffs = rng.standard_normal(m + 1)
    pmap = PolyMap(m, 1, 1, [np.array([[c]]) for c in coeffs])
    r = apply_map_rv(pmap, y, degree_cap=12)
    phi = solve_optimal_map(r, y, m)
    rv, yv, w = quad_eval_pair(r, y, level=12)
    pv = np.array([apply_map(phi, row) for row in yv])
    err = np.sqrt(float(w @ ((rv - pv) ** 2).sum(axis=1)))
    scale = np.sqrt(float(w @ (rv ** 2).sum(axis=1)))
    assert err <= 1e-8 * max(scale, 1.0)


def test_gaussian_exactness_affine_conditional_expectation():
    rng = np.random.default_rng(400)
    d, rdim = 3, 2
    x = PceVector.gaussian(rng.standard_normal(d),
                           rng.standard_normal((d, d)), germ_dim=d + rdim)
    h_mat = rng.standard_normal((rdim, d))
    noise = PceVector.from_dict(
        {unit_index(d + j): 0.5 * np.eye(rdim)[j] for j in range(rdim)},
        germ_dim=d + rdim)
    y = PceVector(x.index_set, x.coeffs @ h_mat.T) + noise
    phi1 = solve_optimal_map(x, y, 1)
    phi2 = solve_optimal_map(x, y, 2)
    # degree-2 coefficients collapse onto the affine map
    assert np.abs(phi2.tensors[2]).max() <= 1e-8
    for k in range(2):
        assert np.abs(phi2.tensors[k] - phi1.tensors[k]).max() <= 1e-8


def test_maps_converge_to_true_bayes_conditional_mean():
    """Degree-m maps approach the true conditional mean in L2 over y.

    Ground truth comes from an independent likelihood-quadrature oracle: a
    non-Gaussian cubic prior observed through additive Gaussian noise has
    posterior mean integral(prior * likelihood * x) / integral(prior *
    likelihood), computed on a dense grid in log space."""
    from scipy.stats import norm  # noqa: F401  (documenting the oracle)
    x = PceVector.from_dict({MultiIndex((1,)): [1.0], MultiIndex((2,)): [0.35],
                             MultiIndex((3,)): [0.1]}, germ_dim=2)
    eps = 0.5
    y = x + PceVector.from_dict({MultiIndex((0, 1)): [eps]}, germ_dim=2)

    t = np.linspace(-14, 14, 8001)
    xs = t + 0.35 * (t ** 2 - 1) + 0.1 * (t ** 3 - 3 * t)
    log_prior = -0.5 * t ** 2

    def true_posterior_mean(y_hat):
        logw = log_prior - 0.5 * ((y_hat - xs) / eps) ** 2
        w = np.exp(logw - logw.max())
        return float(np.trapezoid(w * xs, t) / np.trapezoid(w, t))

    nodes, wq = tensor_grid(2, 16)
    yv = pce_eval_batch(y, nodes)[:, 0]
    truth = np.array([true_posterior_mean(v) for v in yv])
    errors = []
    for m in range(4):
        phi = solve_optimal_map(x, y, m)
        pv = np.array([apply_map(phi, [v])[0] for v in yv])
        errors.append(float(np.sqrt(wq @ (pv - truth) ** 2)))
    for lo, hi in zip(errors, errors[1:]):
        assert hi <= lo + 1e-12
    assert errors[1] < 0.3 * errors[0]   # the linear update removes most error
    assert errors[3] < 0.15              # frozen from the measured 0.1027


def test_polymap_text_roundtrip(tmp_path):
    rng = np.random.default_rng(600)
    r = random_pce(rng, 2, 2, 2)
    y = random_pce(rng, 2, 1, 2)
    phi = solve_optimal_map(r, y, 2)
    back = pb.loads_polymap(pb.dumps_polymap(phi))
    for a, b in zip(phi.tensors, back.tensors):
        assert np.array_equal(a, b)
    path = tmp_path / "map.txt"
    pb.write_polymap(phi, path)
    again = pb.read_polymap(path)
    point = rng.standard_normal(2)
    assert apply_map(again, point) == pytest.approx(apply_map(phi, point))


def test_polymap_text_header():
    phi = PolyMap(1, 2, 3, [np.zeros((2, 1)), np.ones((2, 3))])
    head = pb.dumps_polymap(phi).splitlines()[0]
    assert head == "polymap m=1 M=2 R=3"


def test_sym_tensor_debug_dump():
    rng = np.random.default_rng(601)
    y = random_pce(rng, 2, 2, 2)
    text = pb.dumps_sym_tensor(pb.sym_moment(y, 2))
    lines = text.splitlines()
    assert lines[0].startswith("symtensor order=2 dim=2")
    assert len(lines) == 1 + 3  # packed size of a symmetric 2x2 tensor


@pytest.mark.parametrize("m", [1, 2])
def test_update_consistency_residual_projects_to_zero(m):
    rng = np.random.default_rng(500 + m)
    r = random_pce(rng, 2, 2, 1)
    y = random_pce(rng, 2, 2, 1).shifted([0.1])
    r, y = match_germ(r, y)
    phi = solve_optimal_map(r, y, m)
    residual = r - apply_map_rv(phi, y, degree_cap=12)
    phi_res = solve_optimal_map(residual, y, m)
    for k in range(1, m + 1):
        assert np.abs(phi_res.tensors[k]).max() <= 1e-8
