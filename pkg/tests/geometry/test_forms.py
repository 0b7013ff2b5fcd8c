"""Multi-index storage, pointwise algebra and form fields"""

import itertools
import math

import numpy as np
import pytest

from emcheck.errors import DegreeError, DomainError
from emcheck.forms import (
    BumpFunction,
    ConnectionField,
    add_forms,
    bump_form,
    constant_form,
    finite_difference_form,
    inner_product,
    interior,
    multi_indices,
    orthonormal_frame,
    polynomial_connection,
    polynomial_form,
    reorder_sign,
    to_compact,
    to_full,
    wedge,
    wedge_values,
)
from emcheck.jets import fd_gradient, fd_hessian
from emcheck.manifold import ModelSpace, metric_jet
from tests.helpers import sample_points


def test_multi_indices_are_lexicographic():
    indices = multi_indices(4, 2)
    assert len(indices) == math.comb(4, 2)
    assert indices[0] == (0, 1)
    assert indices[-1] == (2, 3)
    with pytest.raises(DegreeError):
        multi_indices(3, 4)


def test_reorder_sign():
    assert reorder_sign((1, 0)) == (-1, (0, 1))
    assert reorder_sign((2, 0, 1)) == (1, (0, 1, 2))
    assert reorder_sign((1, 1))[0] == 0


def test_full_array_is_antisymmetric(rng):
    compact = rng.normal(size=(2, math.comb(4, 3)))
    full = to_full(compact, 4, 3)
    np.testing.assert_allclose(full, -np.swapaxes(full, -1, -2))
    np.testing.assert_allclose(full, -np.swapaxes(full, -2, -3))
    np.testing.assert_allclose(to_compact(full, 4, 3), compact)


def test_interior_product_of_area_form(r3):
    psi = np.array([[1.0, 0.0, 0.0]])  # dx0 ^ dx1
    np.testing.assert_allclose(interior(r3, np.array([1.0, 0.0, 0.0]), psi, 2), [[0.0, 1.0, 0.0]])
    np.testing.assert_allclose(interior(r3, np.array([0.0, 1.0, 0.0]), psi, 2), [[-1.0, 0.0, 0.0]])
    with pytest.raises(DegreeError):
        interior(r3, np.zeros(3), np.zeros((1, 3)), 0)


def test_wedge_of_coordinate_forms():
    dx0 = np.array([1.0, 0.0, 0.0])
    dx1 = np.array([[0.0, 1.0, 0.0]])
    np.testing.assert_allclose(wedge_values(dx0, dx1, 3, 1, 1), [[1.0, 0.0, 0.0]])
    np.testing.assert_allclose(wedge_values(dx1[0], dx0[None, :], 3, 1, 1), [[-1.0, 0.0, 0.0]])
    with pytest.raises(DegreeError):
        wedge_values(np.ones(3), np.ones((1, 1)), 3, 2, 3)


def _wedge_by_permutations(alpha, beta, n, k1, k2):
    """Full-array wedge: sum over permutations of sign * alpha * beta / (k1! k2!)"""
    k = k1 + k2
    alpha_full = to_full(alpha, n, k1)
    beta_full = to_full(beta, n, k2)
    result = np.zeros(beta.shape[:-1] + (math.comb(n, k),))
    for c, index in enumerate(multi_indices(n, k)):
        for perm in itertools.permutations(range(k)):
            sign = reorder_sign(perm)[0]
            target = tuple(index[q] for q in perm)
            result[..., c] += sign * alpha_full[target[:k1]] * beta_full[(Ellipsis,) + target[k1:]]
    return result / (math.factorial(k1) * math.factorial(k2))


@pytest.mark.parametrize("k1,k2", [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3)])
def test_wedge_matches_permutation_sum(k1, k2, rng):
    alpha = rng.normal(size=math.comb(4, k1))
    beta = rng.normal(size=(2, math.comb(4, k2)))
    np.testing.assert_allclose(wedge_values(alpha, beta, 4, k1, k2),
                               _wedge_by_permutations(alpha, beta, 4, k1, k2), rtol=1e-13, atol=1e-13)


def test_wedge_with_repeated_coordinate():
    alpha = np.array([1.0, 1.0, 0.0, 0.0])  # dx0 + dx1
    beta = np.zeros((1, 6))
    beta[0, multi_indices(4, 2).index((0, 2))] = 1.0  # dx0 ^ dx2
    expected = np.zeros((1, 4))
    expected[0, multi_indices(4, 3).index((0, 1, 2))] = -1.0
    np.testing.assert_allclose(wedge_values(alpha, beta, 4, 1, 2), expected)
    np.testing.assert_allclose(_wedge_by_permutations(alpha, beta, 4, 1, 2), expected)


@pytest.mark.parametrize("k1,k2", [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)])
def test_interior_product_is_an_antiderivation(k1, k2, r4, rng):
    X = rng.normal(size=(5, 4))
    alpha = rng.normal(size=(5, math.comb(4, k1)))
    beta = rng.normal(size=(5, 2, math.comb(4, k2)))
    left = interior(r4, X, wedge_values(alpha, beta, 4, k1, k2), k1 + k2)
    inner_alpha = interior(r4, X, alpha[..., None, :], k1)[..., 0, :]
    right = (wedge_values(inner_alpha, beta, 4, k1 - 1, k2)
             + (-1) ** k1 * wedge_values(alpha, interior(r4, X, beta, k2), 4, k1, k2 - 1))
    np.testing.assert_allclose(left, right, rtol=1e-13, atol=1e-13)


def _inner_product_by_tuples(psi1, psi2, ginv, n, k):
    """sum over all index tuples of psi1 psi2 prod g^{i_r j_r}, divided by k!"""
    full1 = to_full(psi1, n, k)
    full2 = to_full(psi2, n, k)
    total = 0.0
    for first in itertools.product(range(n), repeat=k):
        for second in itertools.product(range(n), repeat=k):
            weight = np.prod([ginv[i, j] for i, j in zip(first, second)])
            total += weight * np.sum(full1[(slice(None),) + first] * full2[(slice(None),) + second])
    return total / math.factorial(k)


@pytest.mark.parametrize("n,k", [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (4, 1), (4, 2), (4, 3)])
def test_inner_product_matches_tuple_sum(n, k, rng):
    root = rng.normal(size=(n, n))
    ginv = root @ root.T + n * np.eye(n)
    psi1 = rng.normal(size=(2, math.comb(n, k)))
    psi2 = rng.normal(size=(2, math.comb(n, k)))
    space = ModelSpace.euclidean(n)
    np.testing.assert_allclose(inner_product(space, space.origin(), psi1, psi2, k, ginv=ginv),
                               _inner_product_by_tuples(psi1, psi2, ginv, n, k), rtol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_hyperbolic_inner_product_matches_tuple_sum(k, rng):
    space = ModelSpace.hyperbolic(4, 1.0)
    x = np.array([0.2, -0.1, 0.3, 0.7])
    psi1 = rng.normal(size=(2, math.comb(4, k)))
    psi2 = rng.normal(size=(2, math.comb(4, k)))
    expected = _inner_product_by_tuples(psi1, psi2, metric_jet(space, x).ginv, 4, k)
    np.testing.assert_allclose(inner_product(space, x, psi1, psi2, k), expected, rtol=1e-12)


def test_inner_product_scales_with_hyperbolic_metric(h3):
    x = np.array([0.1, 0.2, 2.0])
    one_form = np.array([[1.0, 0.0, 0.0]])
    two_form = np.array([[1.0, 0.0, 0.0]])
    np.testing.assert_allclose(inner_product(h3, x, one_form, one_form, 1), 4.0)
    np.testing.assert_allclose(inner_product(h3, x, two_form, two_form, 2), 16.0)


def test_inner_product_sums_over_the_fibre(r3, rng):
    psi = rng.normal(size=(5, 2, 3))
    x = rng.normal(size=(5, 3))
    np.testing.assert_allclose(inner_product(r3, x, psi, psi, 1), np.sum(psi ** 2, axis=(-1, -2)))
    with pytest.raises(DegreeError):
        inner_product(r3, x, psi, psi[..., :1, :], 1)


def test_orthonormal_frame(h3, rng):
    x = sample_points(h3, rng, 6)
    frame = orthonormal_frame(h3, x)
    g = np.einsum("...ia,...jb,...ab->...ij", frame.frame, frame.frame,
                  np.eye(3) / (x[..., -1, None, None] ** 2))
    np.testing.assert_allclose(g, np.broadcast_to(np.eye(3), g.shape), atol=1e-14)
    np.testing.assert_allclose(np.einsum("...ia,...ja->...ij", frame.frame, frame.coframe),
                               np.broadcast_to(np.eye(3), g.shape), atol=1e-14)
    with pytest.raises(DomainError):
        orthonormal_frame(h3, x, rotation=2.0 * np.eye(3))


def test_polynomial_form_jets_match_finite_differences(h3, rng):
    psi = polynomial_form(h3, 2, 2, rng, poly_degree=3)
    x = sample_points(h3, rng, 10)
    jet = psi.jet(x)
    values = lambda points: psi.components(points).value
    np.testing.assert_allclose(jet.grad, fd_gradient(values, x), rtol=1e-7, atol=1e-8)
    np.testing.assert_allclose(jet.hess, fd_hessian(values, x), rtol=1e-5, atol=1e-6)


def test_constant_form_checks_component_count(r3):
    with pytest.raises(DegreeError):
        constant_form(r3, 2, [[1.0, 0.0]])
    psi = constant_form(r3, 1, [[1.0, 2.0, 3.0]])
    assert psi.rank == 1 and psi.component_count == 3
    assert np.all(psi.jet(np.zeros((4, 3))).grad == 0.0)


def test_polynomial_connection_is_skew(r4, rng):
    conn = polynomial_connection(r4, 3, rng)
    x = sample_points(r4, rng, 10)
    assert conn.skew_residual(x) < 1e-14
    jet = conn.jet(x)
    np.testing.assert_allclose(jet.grad, -np.swapaxes(jet.grad, -2, -3), atol=1e-14)


def test_trivial_connection_vanishes():
    conn = ConnectionField.trivial(3, 2)
    assert conn.jet(np.zeros((5, 3))).value.shape == (5, 3, 2, 2)
    assert conn.skew_residual(np.zeros((5, 3))) == 0.0


def test_bump_is_compactly_supported(rng):
    bump = BumpFunction(np.zeros(3), 0.5)
    outside = rng.normal(size=(10, 3))
    outside = 0.6 * outside / np.linalg.norm(outside, axis=-1, keepdims=True)
    jet = bump(outside)
    assert np.all(jet.value == 0.0) and np.all(jet.grad == 0.0) and np.all(jet.hess == 0.0)
    np.testing.assert_allclose(bump(np.zeros((1, 3))).value, [math.exp(-1.0)])


def test_bump_form_jets_match_finite_differences(r3, rng):
    psi = bump_form(polynomial_form(r3, 1, 2, rng), np.zeros(3), 0.8)
    x = rng.uniform(-0.3, 0.3, size=(8, 3))
    values = lambda points: psi.components(points).value
    step = np.full(8, 1e-4)
    np.testing.assert_allclose(psi.jet(x).grad, fd_gradient(values, x, step), rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(psi.jet(x).hess, fd_hessian(values, x, step), rtol=1e-4, atol=1e-6)


def test_add_forms_requires_matching_shapes(r3, rng):
    first = polynomial_form(r3, 1, 2, rng)
    second = polynomial_form(r3, 1, 2, rng)
    x = sample_points(r3, rng, 4)
    np.testing.assert_allclose(add_forms(first, second).value(x), first.value(x) + second.value(x))
    with pytest.raises(DegreeError):
        add_forms(first, polynomial_form(r3, 2, 2, rng))


def test_wedge_field_jets(r4, rng):
    alpha = polynomial_form(r4, 1, 1, rng)
    beta = polynomial_form(r4, 2, 2, rng)
    product = wedge(alpha, beta)
    x = sample_points(r4, rng, 6)
    values = lambda points: product.components(points).value
    assert product.degree == 3
    np.testing.assert_allclose(product.jet(x).grad, fd_gradient(values, x), rtol=1e-7, atol=1e-8)
    with pytest.raises(DegreeError):
        wedge(beta, alpha)


def test_finite_difference_form_reproduces_analytic_jets(r3, rng):
    psi = polynomial_form(r3, 1, 1, rng)
    x = sample_points(r3, rng, 5)
    np.testing.assert_allclose(finite_difference_form(psi).jet(x).grad, psi.jet(x).grad, rtol=1e-7, atol=1e-9)
