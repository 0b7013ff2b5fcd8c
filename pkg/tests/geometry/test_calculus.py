"""Exterior covariant derivative, codifferentials and integration by parts"""

import numpy as np
import pytest
from scipy.stats import special_ortho_group

from emcheck.calculus import (
    Box,
    adjointness_residual,
    codifferential,
    covariant_derivative,
    exterior_covariant_derivative,
    exterior_derivative_field,
    p_codifferential,
)
from emcheck.errors import DegreeError, DomainError, SingularWeightError, SupportLeakError
from emcheck.forms import (
    BumpFunction,
    BundleForm,
    BundleSpec,
    FormJet,
    bump_form,
    constant_form,
    multiply_form,
    polynomial_connection,
    polynomial_form,
    wedge_values,
    zero_form,
)
from emcheck.jets import fd_gradient
from emcheck.manifold import ModelSpace
from tests.helpers import sample_points

SPACES = [ModelSpace.euclidean(3), ModelSpace.hyperbolic(3, 1.0)]


def test_constant_form_is_closed_and_coclosed(r3, rng):
    psi = constant_form(r3, 1, [[1.0, 0.0, 0.0]])
    x = sample_points(r3, rng, 10)
    assert np.all(exterior_covariant_derivative(r3, None, psi, x) == 0.0)
    assert np.all(codifferential(r3, None, psi, x) == 0.0)


def test_exterior_derivative_of_linear_one_form(r3):
    # psi = x^0 dx^1 has d psi = dx^0 ^ dx^1
    def components(x):
        value = np.zeros(x.shape[:-1] + (1, 3))
        value[..., 0, 1] = x[..., 0]
        grad = np.zeros(value.shape + (3,))
        grad[..., 0, 1, 0] = 1.0
        return FormJet(value, grad, np.zeros(grad.shape + (3,)))

    psi = BundleForm(1, BundleSpec(1), r3, components)
    d_psi = exterior_covariant_derivative(r3, None, psi, np.array([[0.3, 0.1, -0.2]]))
    np.testing.assert_allclose(d_psi, [[[1.0, 0.0, 0.0]]])


def test_covariant_derivative_on_euclidean_space_is_the_gradient(r3, rng):
    psi = polynomial_form(r3, 2, 1, rng)
    x = sample_points(r3, rng, 5)
    nabla = covariant_derivative(r3, None, psi, x)
    np.testing.assert_allclose(nabla, np.moveaxis(psi.jet(x).grad, -1, -3))
    np.testing.assert_allclose(covariant_derivative(r3, None, psi, x, direction=1), nabla[..., 1, :, :])
    with pytest.raises(DomainError):
        covariant_derivative(r3, None, psi, x, direction=3)


@pytest.mark.parametrize("space", SPACES)
def test_exterior_derivative_squares_to_zero(space, rng):
    psi = polynomial_form(space, 1, 2, rng, poly_degree=3)
    x = sample_points(space, rng, 12)
    d_psi = exterior_derivative_field(None, psi)
    np.testing.assert_allclose(exterior_covariant_derivative(space, None, d_psi, x), 0.0, atol=1e-10)


@pytest.mark.parametrize("space", SPACES)
@pytest.mark.parametrize("degree", [0, 1, 2])
def test_exterior_derivative_obeys_leibniz_rule(space, degree, rng):
    psi = polynomial_form(space, degree, 2, rng, poly_degree=2)
    conn = polynomial_connection(space, 2, rng)
    bump = BumpFunction(space.origin(), 2.5)
    x = sample_points(space, rng, 20)
    f = bump(x)
    left = exterior_covariant_derivative(space, conn, multiply_form(psi, bump), x)
    right = (wedge_values(f.grad, psi.value(x), space.dim, 1, degree)
             + f.value[..., None, None] * exterior_covariant_derivative(space, conn, psi, x))
    np.testing.assert_allclose(left, right, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("space", SPACES)
def test_exterior_derivative_field_matches_pointwise_operator(space, rng):
    psi = polynomial_form(space, 1, 2, rng)
    conn = polynomial_connection(space, 2, rng)
    x = sample_points(space, rng, 10)
    field = exterior_derivative_field(conn, psi)
    np.testing.assert_allclose(field.value(x), exterior_covariant_derivative(space, conn, psi, x),
                               rtol=1e-12, atol=1e-12)
    values = lambda points: field.components(points).value
    np.testing.assert_allclose(field.jet(x).grad, fd_gradient(values, x), rtol=1e-7, atol=1e-8)


def test_codifferential_of_top_degree_and_zero_forms(r3, rng):
    x = sample_points(r3, rng, 3)
    with pytest.raises(DegreeError):
        codifferential(r3, None, zero_form(r3, 0), x)
    with pytest.raises(DegreeError):
        exterior_covariant_derivative(r3, None, zero_form(r3, 3), x)


def test_codifferential_of_radial_one_form(r3, rng):
    # delta(x^i dx^i) = -div x = -3
    def components(x):
        value = x[..., None, :].copy()
        grad = np.broadcast_to(np.eye(3), x.shape[:-1] + (1, 3, 3)).copy()
        return FormJet(value, grad, np.zeros(grad.shape + (3,)))

    psi = BundleForm(1, BundleSpec(1), r3, components)
    x = sample_points(r3, rng, 4)
    np.testing.assert_allclose(codifferential(r3, None, psi, x), -3.0)


@pytest.mark.parametrize("space", SPACES)
def test_codifferential_is_frame_independent(space, rng):
    psi = polynomial_form(space, 2, 2, rng)
    conn = polynomial_connection(space, 2, rng)
    x = sample_points(space, rng, 8)
    rotation = special_ortho_group.rvs(space.dim, random_state=3)
    np.testing.assert_allclose(codifferential(space, conn, psi, x, rotation=rotation),
                               codifferential(space, conn, psi, x), rtol=1e-10, atol=1e-11)


@pytest.mark.parametrize("space", SPACES)
def test_p_codifferential_reduces_to_codifferential_at_p_two(space, rng):
    psi = polynomial_form(space, 1, 2, rng)
    x = sample_points(space, rng, 8)
    np.testing.assert_allclose(p_codifferential(space, None, psi, x, 2.0), codifferential(space, None, psi, x),
                               rtol=1e-12, atol=1e-12)


def test_p_codifferential_matches_product_rule_by_differences(r3, rng):
    psi = polynomial_form(r3, 1, 1, rng)
    x = sample_points(r3, rng, 6)
    p = 3.0

    def weighted(points):
        value = psi.components(points).value
        return np.linalg.norm(value, axis=(-1, -2))[..., None, None] * value

    # on flat space with the trivial connection delta(w psi) = -div(w psi)
    divergence = np.einsum("...mii->...m", fd_gradient(weighted, x))
    np.testing.assert_allclose(p_codifferential(r3, None, psi, x, p)[..., 0], -divergence, rtol=1e-7, atol=1e-8)


def test_p_codifferential_singular_weight(r3):
    with pytest.raises(SingularWeightError):
        p_codifferential(r3, None, zero_form(r3, 1), np.zeros((2, 3)), 1.5)
    with pytest.raises(DomainError):
        p_codifferential(r3, None, zero_form(r3, 1), np.zeros((2, 3)), 1.0)
    assert np.all(p_codifferential(r3, None, zero_form(r3, 1), np.zeros((2, 3)), 3.0) == 0.0)


def test_box_rule_integrates_polynomials():
    box = Box(np.array([0.0, -1.0]), np.array([2.0, 1.0]))
    points, weights = box.tensor_rule(6)
    np.testing.assert_allclose(np.sum(weights), 4.0)
    np.testing.assert_allclose(np.sum(weights * points[:, 0] ** 2 * points[:, 1] ** 2), (8.0 / 3.0) * (2.0 / 3.0))
    with pytest.raises(DomainError):
        Box(np.zeros(2), np.zeros(2))


@pytest.mark.slow
@pytest.mark.parametrize("space", SPACES)
def test_d_and_delta_are_adjoint(space, rng):
    center = space.origin()
    psi1 = bump_form(polynomial_form(space, 0, 2, rng), center, 0.5)
    psi2 = bump_form(polynomial_form(space, 1, 2, rng), center, 0.5)
    conn = polynomial_connection(space, 2, rng)
    residual = adjointness_residual(space, conn, psi1, psi2, Box.around(center, 0.6), nodes=48)
    assert residual < 1e-6


def test_adjointness_requires_compact_support(r3, rng):
    psi1 = polynomial_form(r3, 0, 1, rng)
    psi2 = polynomial_form(r3, 1, 1, rng)
    with pytest.raises(SupportLeakError):
        adjointness_residual(r3, None, psi1, psi2, Box.around(np.zeros(3), 0.6), nodes=8)
    with pytest.raises(DegreeError):
        adjointness_residual(r3, None, psi2, psi2, Box.around(np.zeros(3), 0.6), nodes=8)
