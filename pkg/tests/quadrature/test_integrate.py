"""Polar quadrature over geodesic balls and spheres"""

import math

import numpy as np
import pytest

from emcheck.config import QuadratureSpec
from emcheck.errors import DomainError, IntegrandError
from emcheck.integrate import (
    ball_integral,
    ball_nodes,
    evaluate,
    sphere_integral,
    sphere_nodes,
    sphere_rule,
)
from emcheck.jets import five_point_derivative
from emcheck.manifold import ModelSpace, distance_jet, unit_sphere_area


def _ones(x):
    return np.ones(x.shape[:-1])


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_sphere_rule_weights_sum_to_the_area(n):
    rule = sphere_rule(n, 8, 16)
    np.testing.assert_allclose(np.sum(rule.weights), unit_sphere_area(n), rtol=1e-13)
    np.testing.assert_allclose(np.linalg.norm(rule.directions, axis=-1), 1.0, rtol=1e-14)


def test_sphere_rule_needs_two_dimensions():
    with pytest.raises(DomainError):
        sphere_rule(1, 8, 16)


@pytest.mark.parametrize("rotate", [False, True])
def test_second_moment_on_the_unit_sphere(r3, rotate):
    spec = QuadratureSpec(rotate=rotate, seed=7)
    result = sphere_integral(r3, r3.origin(), 1.0, lambda x: x[..., 0] ** 2, spec)
    np.testing.assert_allclose(result.value, 4.0 * math.pi / 3.0, rtol=1e-13)
    assert result.error < 1e-12


def test_sphere_area_of_radius_two(r3):
    np.testing.assert_allclose(float(sphere_integral(r3, r3.origin(), 2.0, _ones)), 16.0 * math.pi, rtol=1e-13)


def test_euclidean_ball_volume(r3):
    result = ball_integral(r3, r3.origin(), 1.0, _ones)
    np.testing.assert_allclose(result.value, 4.0 * math.pi / 3.0, rtol=1e-13)
    assert result.nodes == 12 * 8 * 16


def test_hyperbolic_disc_area(h2):
    result = ball_integral(h2, h2.origin(), 1.0, _ones)
    np.testing.assert_allclose(result.value, 2.0 * math.pi * (math.cosh(1.0) - 1.0), rtol=1e-12)


@pytest.mark.parametrize("space", [ModelSpace.hyperbolic(3, 1.0), ModelSpace.hyperbolic(4, 0.5)])
def test_hyperbolic_ball_volume(space):
    result = ball_integral(space, space.origin(), 1.5, _ones)
    np.testing.assert_allclose(result.value, space.ball_volume(1.5), rtol=1e-10)
    assert result.relative_error < 1e-4


def test_nodes_lie_on_and_inside_the_geodesic_sphere(h3):
    x0 = np.array([0.3, -0.2, 1.4])
    spec = QuadratureSpec()
    points, _ = sphere_nodes(h3, x0, 0.8, spec)
    np.testing.assert_allclose(distance_jet(h3, x0, points).r, 0.8, rtol=1e-10)
    points, weights = ball_nodes(h3, x0, 0.8, spec)
    assert np.all(distance_jet(h3, x0, points).r < 0.8)
    assert np.all(weights > 0.0)


def test_radial_moment_on_hyperbolic_space(h3):
    # int_B r^2 = int_0^R s^2 4 pi sinh^2 s ds
    R = 1.2
    x0 = h3.origin()
    result = ball_integral(h3, x0, R, lambda x: distance_jet(h3, x0, x).r ** 2)
    expected = math.pi * (
        (2.0 * R ** 2 + 1.0) * math.sinh(2.0 * R) / 2.0 - R * math.cosh(2.0 * R) - 2.0 * R ** 3 / 3.0
    )
    np.testing.assert_allclose(result.value, expected, rtol=1e-10)


def test_threaded_chunks_match_serial_evaluation(r4, rng):
    shift = rng.normal(size=4)
    integrand = lambda x: np.exp(-np.sum((x - shift) ** 2, axis=-1))
    serial = ball_integral(r4, r4.origin(), 1.0, integrand)
    threaded = ball_integral(r4, r4.origin(), 1.0, integrand, QuadratureSpec(workers=2, chunk_size=100))
    assert threaded.value == serial.value
    assert threaded.error == serial.error


def test_evaluate_keeps_node_order(rng):
    points = rng.normal(size=(37, 3))
    values = evaluate(lambda x: x[..., 0], points, QuadratureSpec(workers=3, chunk_size=5))
    np.testing.assert_array_equal(values, points[:, 0])


def test_failing_integrand_reports_a_point(r3):
    def fragile(x):
        if np.any(x[..., 0] > 0.9):
            raise ValueError("outside the chart")
        return _ones(x)

    with pytest.raises(IntegrandError) as info:
        ball_integral(r3, r3.origin(), 1.0, fragile)
    assert info.value.point is not None
    assert info.value.point[0] > 0.9


def test_non_finite_integrand_reports_a_point(r3):
    with pytest.raises(IntegrandError) as info:
        ball_integral(r3, r3.origin(), 1.0, lambda x: np.where(x[..., 0] > 0.9, np.nan, 1.0))
    assert info.value.point[0] > 0.9


def test_integrand_must_return_one_value_per_point(r3):
    with pytest.raises(IntegrandError):
        ball_integral(r3, r3.origin(), 1.0, lambda x: np.ones(3))


@pytest.mark.parametrize("R", [0.0, -1.0, math.inf])
def test_radius_must_be_positive(r3, R):
    with pytest.raises(DomainError):
        ball_integral(r3, r3.origin(), R, _ones)
    with pytest.raises(DomainError):
        sphere_integral(r3, r3.origin(), R, _ones)


def test_halved_rule_may_drop_below_the_minimum():
    spec = QuadratureSpec(radial_nodes=4, sphere_nodes=4, periodic_nodes=4)
    assert spec.halved().radial_nodes == 2
    with pytest.raises(DomainError):
        QuadratureSpec(radial_nodes=3)


def _smooth(x):
    return np.exp(0.3 * x[..., 0]) * (1.0 + x[..., 1] ** 2) + x[..., -1]


@pytest.mark.parametrize("space", [ModelSpace.euclidean(3), ModelSpace.hyperbolic(3, 1.0)])
def test_ball_integral_grows_at_the_rate_of_the_sphere_integral(space):
    spec = QuadratureSpec(radial_nodes=24, sphere_nodes=16, periodic_nodes=32)
    x0 = space.origin()
    derivative = five_point_derivative(lambda R: ball_integral(space, x0, R, _smooth, spec).value, 1.0, 1e-3)
    np.testing.assert_allclose(derivative, sphere_integral(space, x0, 1.0, _smooth, spec).value, rtol=1e-6)


@pytest.mark.parametrize("space", [ModelSpace.euclidean(3), ModelSpace.hyperbolic(3, 1.0)])
def test_doubling_nodes_shrinks_the_error_estimate(space):
    integrand = lambda x: np.exp(2.0 * x[..., 0] + x[..., 1])
    spec = QuadratureSpec(radial_nodes=8, sphere_nodes=6, periodic_nodes=12)
    coarse = ball_integral(space, space.origin(), 1.5, integrand, spec)
    fine = ball_integral(space, space.origin(), 1.5, integrand, spec.doubled())
    assert fine.error <= max(coarse.error / 4.0, 1e-12 * abs(fine.value))
