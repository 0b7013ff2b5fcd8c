"""
Numerical configuration objects

Plain dataclasses with documented defaults; validation happens on construction.
"""

import logging
from dataclasses import dataclass, replace

from emcheck.errors import DomainError, StandingAssumptionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyConfig:
    """Exponent, form degree and dimension of a p-energy"""
    p: float  # exponent, p > 1
    k: int  # form degree, k >= 1
    n: int  # manifold dimension, n > kp

    def __post_init__(self):
        if not self.p > 1:
            raise StandingAssumptionError(f"exponent p must exceed 1, got p={self.p}")
        if self.k < 1 or self.k > self.n:
            raise DomainError(f"form degree must lie in [1, n], got k={self.k}, n={self.n}")
        if not self.n > self.k * self.p:
            raise StandingAssumptionError(
                f"dimension n must exceed kp (standing assumption n > kp): "
                f"got n={self.n}, k={self.k}, p={self.p}"
            )

    @property
    def p_conjugate(self) -> float:
        """Conjugate exponent p' with 1/p + 1/p' = 1"""
        return self.p / (self.p - 1.0)

    @property
    def scaling_exponent(self) -> float:
        """kp - n, the power of R in the monotone ratio"""
        return self.k * self.p - self.n


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the polar ball and sphere rules"""
    radial_nodes: int = 12  # Gauss-Legendre nodes on [0, R]
    sphere_nodes: int = 8  # Gauss-Jacobi nodes per latitude angle
    periodic_nodes: int = 16  # uniform nodes on the innermost circle
    seed: int = 0  # seeds the random sphere rotation
    rotate: bool = False  # apply a seeded random rotation to the sphere rule
    workers: int = 1  # threads used to evaluate integrand chunks
    chunk_size: int = 8192  # points per integrand call

    def __post_init__(self):
        for name in ("radial_nodes", "sphere_nodes", "periodic_nodes"):
            if getattr(self, name) < 4:
                raise DomainError(f"{name} must be at least 4, got {getattr(self, name)}")
        if self.workers < 1:
            raise DomainError(f"workers must be positive, got {self.workers}")
        if self.chunk_size < 1:
            raise DomainError(f"chunk_size must be positive, got {self.chunk_size}")

    def halved(self) -> "QuadratureSpec":
        """Half-resolution rule used for error estimates"""
        return _unchecked_replace(
            self,
            radial_nodes=max(2, self.radial_nodes // 2),
            sphere_nodes=max(2, self.sphere_nodes // 2),
            periodic_nodes=max(2, self.periodic_nodes // 2),
        )

    def doubled(self) -> "QuadratureSpec":
        return replace(
            self,
            radial_nodes=2 * self.radial_nodes,
            sphere_nodes=2 * self.sphere_nodes,
            periodic_nodes=2 * self.periodic_nodes,
        )


def _unchecked_replace(spec: QuadratureSpec, **changes) -> QuadratureSpec:
    # the half rule may drop below the user-facing minimum of 4 nodes
    clone = object.__new__(QuadratureSpec)
    for name in spec.__dataclass_fields__:
        object.__setattr__(clone, name, changes.get(name, getattr(spec, name)))
    return clone


@dataclass(frozen=True)
class SlackPolicy:
    """Tolerance for monotonicity assertions: absolute + relative * |theta|"""
    absolute: float = 1e-6
    relative: float = 1e-6

    def slack(self, theta: float) -> float:
        return self.absolute + self.relative * abs(theta)


@dataclass(frozen=True)
class Tolerances:
    """Residual thresholds used by the pointwise suites and profile runs"""
    route_flat: float = 1e-7  # relative, div T direct vs identity on flat space
    route_curved: float = 1e-6  # relative, same on hyperbolic space
    metric_variation: float = 1e-6
    conservation: float = 1e-8
    trace: float = 1e-12  # relative to 1 + |e|
    contraction_flat: float = 1e-10
    contraction_curved: float = 1e-8
    ymhe: float = 1e-8
    ymh_route: float = 1e-6
    ymh_conservation: float = 1e-10
    odot: float = 1e-13
    adjointness: float = 1e-6
    identity_flat: float = 5e-3
    identity_curved: float = 1e-2
    quadrature_relative: float = 1e-4  # error estimate above this marks a result inconclusive
