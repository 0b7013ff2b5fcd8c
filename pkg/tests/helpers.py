"""Point samplers shared by the test modules"""

import numpy as np

from emcheck.manifold import ModelSpace


def sample_points(space: ModelSpace, rng: np.random.Generator, count: int = 25) -> np.ndarray:
    """Points in a unit box about the origin; y in [0.5, 1.5] on hyperbolic space"""
    if space.is_hyperbolic:
        horizontal = rng.uniform(-0.5, 0.5, size=(count, space.dim - 1))
        return np.concatenate([horizontal, rng.uniform(0.5, 1.5, size=(count, 1))], axis=-1)
    return rng.uniform(-1.0, 1.0, size=(count, space.dim))


def sphere_points(space: ModelSpace, rng: np.random.Generator, count: int, low: float, high: float) -> np.ndarray:
    """Points at geodesic distance in [low, high] from the origin"""
    directions = rng.normal(size=(count, space.dim))
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    return space.exp_polar(space.origin(), rng.uniform(low, high, size=count), directions)
