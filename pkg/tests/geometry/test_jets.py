"""Forward-mode jets and finite-difference helpers"""

import numpy as np
import pytest

from emcheck.jets import (
    Dual,
    einsum,
    fd_gradient,
    fd_hessian,
    five_point_derivative,
    inverse,
    richardson_derivative,
)


def variable(value):
    return Dual(np.array([value]), np.array([[1.0]]))


def test_dual_arithmetic_follows_product_and_chain_rules():
    x = variable(2.0)
    np.testing.assert_allclose((x * x).grad, [[4.0]])
    np.testing.assert_allclose((1.0 / x).grad, [[-0.25]])
    np.testing.assert_allclose((x ** 3).grad, [[12.0]])
    np.testing.assert_allclose((3.0 - x).value, [1.0])
    np.testing.assert_allclose((3.0 - x).grad, [[-1.0]])


def test_dual_rejects_mismatched_gradient():
    with pytest.raises(ValueError):
        Dual(np.zeros(3), np.zeros((2, 1)))


def test_einsum_propagates_derivatives(rng):
    A = Dual(rng.normal(size=(3, 3)), rng.normal(size=(3, 3, 2)))
    v = rng.normal(size=3)
    result = einsum("ij,j->i", A, v)
    np.testing.assert_allclose(result.value, A.value @ v)
    np.testing.assert_allclose(result.grad, np.einsum("ijz,j->iz", A.grad, v))


def test_einsum_without_duals_returns_plain_array(rng):
    a = rng.normal(size=(2, 3))
    assert isinstance(einsum("ij->ji", a), np.ndarray)


def test_inverse_derivative_matches_difference_quotient(rng):
    M0 = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
    M1 = rng.normal(size=(3, 3))
    jet = inverse(Dual(M0, M1[..., None]))
    numeric = richardson_derivative(lambda t: np.linalg.inv(M0 + t * M1), 0.0, 1e-3)
    np.testing.assert_allclose(jet.grad[..., 0], numeric, rtol=1e-8, atol=1e-10)


def test_five_point_derivative_is_fourth_order():
    np.testing.assert_allclose(five_point_derivative(np.sin, 0.3, 1e-2), np.cos(0.3), atol=1e-8)


def test_richardson_derivative():
    np.testing.assert_allclose(richardson_derivative(np.exp, 0.0, 1e-4), 1.0, atol=1e-10)


def _field(x):
    return np.stack([x[..., 0] * x[..., 1], x[..., 2] ** 2], axis=-1)


def test_fd_gradient_of_vector_field(rng):
    x = rng.uniform(-1.0, 1.0, size=(5, 3))
    expected = np.zeros((5, 2, 3))
    expected[:, 0, 0] = x[:, 1]
    expected[:, 0, 1] = x[:, 0]
    expected[:, 1, 2] = 2.0 * x[:, 2]
    np.testing.assert_allclose(fd_gradient(_field, x), expected, atol=1e-9)


def test_fd_hessian_of_vector_field(rng):
    x = rng.uniform(-1.0, 1.0, size=(4, 3))
    expected = np.zeros((4, 2, 3, 3))
    expected[:, 0, 0, 1] = expected[:, 0, 1, 0] = 1.0
    expected[:, 1, 2, 2] = 2.0
    np.testing.assert_allclose(fd_hessian(_field, x), expected, atol=1e-6)
