"""
Model Riemannian geometries

Euclidean space and the upper half-space model of hyperbolic space with
sectional curvature -kappa^2, each described in one global chart. Metric data,
Christoffel symbols, geodesic distance and the Hessian of r^2/2 are all closed
form. Points are arrays of shape (..., n); every operation is vectorized over
the leading axes.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

from emcheck.errors import DegeneratePointError, DomainError, StandingAssumptionError
from emcheck.jets import Dual

logger = logging.getLogger(__name__)

ChartPoint = np.ndarray

# below this value of kappa*r the radial factor uses its Taylor series
_SERIES_CUTOFF = 2e-2


class SpaceKind(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class ModelSpace:
    """
    A model space in its global chart

    Hyperbolic space uses g = (kappa * y)^-2 * (flat metric) on y > 0, where y
    is the last coordinate.
    """
    kind: SpaceKind
    dim: int
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.dim < 2:
            raise DomainError(f"dimension must be at least 2, got {self.dim}")
        if self.kind is SpaceKind.HYPERBOLIC and not self.kappa > 0:
            raise DomainError(f"hyperbolic space needs kappa > 0, got {self.kappa}")
        if self.kind is SpaceKind.EUCLIDEAN and self.kappa != 0:
            raise DomainError(f"euclidean space takes kappa = 0, got {self.kappa}")

    @classmethod
    def euclidean(cls, dim: int) -> "ModelSpace":
        return cls(SpaceKind.EUCLIDEAN, dim)

    @classmethod
    def hyperbolic(cls, dim: int, kappa: float = 1.0) -> "ModelSpace":
        return cls(SpaceKind.HYPERBOLIC, dim, float(kappa))

    @property
    def is_hyperbolic(self) -> bool:
        return self.kind is SpaceKind.HYPERBOLIC

    @property
    def label(self) -> str:
        if self.is_hyperbolic:
            return f"H^{self.dim}(kappa={self.kappa:g})"
        return f"R^{self.dim}"

    def origin(self) -> ChartPoint:
        """Canonical base point: 0 for R^n, (0, ..., 0, 1) for H^n"""
        point = np.zeros(self.dim)
        if self.is_hyperbolic:
            point[-1] = 1.0
        return point

    def points(self, x) -> ChartPoint:
        """
        Validate chart points

        Raises:
            DomainError: wrong trailing size, non-finite entries, or y <= 0
        """
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DomainError(f"expected points with trailing size {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("chart points must be finite")
        if self.is_hyperbolic and np.any(x[..., -1] <= 0):
            bad = x.reshape(-1, self.dim)[np.argmax(x.reshape(-1, self.dim)[:, -1] <= 0)]
            raise DomainError(f"point {bad} lies outside the upper half-space (y <= 0)")
        return x

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.all(np.isfinite(x), axis=-1)
        if self.is_hyperbolic:
            inside &= x[..., -1] > 0
        return inside

    def conformal_factor(self, x: ChartPoint) -> np.ndarray:
        """sigma with g = sigma^-2 * flat: kappa*y on H^n, 1 on R^n"""
        if self.is_hyperbolic:
            return self.kappa * x[..., -1]
        return np.ones(x.shape[:-1])

    def volume_density(self, x: ChartPoint) -> np.ndarray:
        """sqrt(det g) in chart coordinates"""
        return self.conformal_factor(x) ** (-self.dim)

    def sphere_jacobian(self, s) -> np.ndarray:
        """Area density of the geodesic sphere of radius s in polar coordinates"""
        s = np.asarray(s, dtype=float)
        if self.is_hyperbolic:
            return (np.sinh(self.kappa * s) / self.kappa) ** (self.dim - 1)
        return s ** (self.dim - 1)

    def sphere_area(self, R: float) -> float:
        return unit_sphere_area(self.dim) * float(self.sphere_jacobian(R))

    def ball_volume(self, R: float) -> float:
        """Vol(B_R); closed form on R^n, one-dimensional quadrature on H^n"""
        if R <= 0:
            return 0.0
        if not self.is_hyperbolic:
            return unit_sphere_area(self.dim) * R ** self.dim / self.dim
        radial, _ = integrate.quad(lambda t: float(self.sphere_jacobian(t)), 0.0, R,
                                   epsabs=0.0, epsrel=1e-13, limit=200)
        return unit_sphere_area(self.dim) * radial

    def exp_polar(self, x0: ChartPoint, s, directions: np.ndarray) -> ChartPoint:
        """
        Geodesic polar map x0 -> exp_x0(s * theta)

        Args:
            x0: center, shape (n,)
            s: geodesic radii, broadcastable against directions[..., 0]
            directions: unit vectors (..., n) in the orthonormal frame at x0

        Returns:
            Chart points (..., n)
        """
        x0 = self.points(x0)
        s = np.asarray(s, dtype=float)[..., None]
        if not self.is_hyperbolic:
            return x0 + s * directions
        t = self.kappa * s
        y0 = x0[-1]
        sh, ch = np.sinh(t), np.cosh(t)
        denom = ch - sh * directions[..., -1:]
        horizontal = x0[:-1] + y0 * sh * directions[..., :-1] / denom
        vertical = y0 / denom
        return np.concatenate([horizontal, vertical], axis=-1)


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^(n-1) in R^n"""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class MetricJet:
    """Metric components, their partials dg[..., a, b, c] = d_c g_ab, and the inverse"""
    g: np.ndarray
    dg: np.ndarray
    ginv: np.ndarray

    @property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.g))

    def dual_metric(self) -> Dual:
        return Dual(self.g, self.dg)

    def dual_inverse(self) -> Dual:
        grad = -np.einsum("...ab,...bcz,...cd->...adz", self.ginv, self.dg, self.ginv, optimize=True)
        return Dual(self.ginv, grad)


def metric_jet(space: ModelSpace, x: ChartPoint) -> MetricJet:
    """
    Metric 1-jet at chart points

    Raises:
        DomainError: point outside the chart
    """
    x = space.points(x)
    n = space.dim
    sigma = space.conformal_factor(x)
    eye = np.eye(n)
    g = sigma[..., None, None] ** -2 * eye
    ginv = sigma[..., None, None] ** 2 * eye
    dg = np.zeros(x.shape[:-1] + (n, n, n))
    if space.is_hyperbolic:
        # d_y (kappa y)^-2 = -2 kappa (kappa y)^-3
        dg[..., -1] = -2.0 * space.kappa * sigma[..., None, None] ** -3 * eye
    return MetricJet(g=g, dg=dg, ginv=ginv)


def christoffel(space: ModelSpace, x: ChartPoint) -> np.ndarray:
    """Levi-Civita symbols gamma[..., l, i, j] = Gamma^l_ij"""
    jet = metric_jet(space, x)
    return christoffel_from_jet(jet)


def christoffel_from_jet(jet: MetricJet) -> np.ndarray:
    first = np.einsum("...lm,...jmi->...lij", jet.ginv, jet.dg, optimize=True)
    second = np.einsum("...lm,...imj->...lij", jet.ginv, jet.dg, optimize=True)
    third = np.einsum("...lm,...ijm->...lij", jet.ginv, jet.dg, optimize=True)
    return 0.5 * (first + second - third)


@dataclass(frozen=True)
class DistanceJet:
    """r = d(x0, x) with coordinate partials dr, coordinate second partials ddr, and grad r = g^-1 dr"""
    r: np.ndarray
    dr: np.ndarray
    ddr: np.ndarray
    gradient: np.ndarray


def distance_jet(space: ModelSpace, x0: ChartPoint, x: ChartPoint) -> DistanceJet:
    """
    2-jet of the geodesic distance from x0

    Raises:
        DegeneratePointError: some x coincides with x0
    """
    x0 = space.points(x0)
    x = space.points(x)
    diff = x - x0
    sq = np.sum(diff ** 2, axis=-1)
    if np.any(sq == 0):
        raise DegeneratePointError(f"distance gradient undefined at the center {x0}")
    n = space.dim
    eye = np.eye(n)

    if not space.is_hyperbolic:
        r = np.sqrt(sq)
        dr = diff / r[..., None]
        ddr = (eye - dr[..., :, None] * dr[..., None, :]) / r[..., None, None]
        return DistanceJet(r=r, dr=dr, ddr=ddr, gradient=dr)

    kappa = space.kappa
    y = x[..., -1]
    y0 = x0[..., -1]
    w = sq / (2.0 * y * y0)  # u - 1 for u = cosh(kappa r)
    u = 1.0 + w
    root = np.sqrt(w * (w + 2.0))  # sqrt(u^2 - 1)
    r = np.log1p(w + root) / kappa

    e_n = eye[-1]
    du = diff / (y * y0)[..., None] - e_n * (sq / (2.0 * y ** 2 * y0))[..., None]
    ddu = (
        eye / (y * y0)[..., None, None]
        - (e_n[:, None] * diff[..., None, :] + diff[..., :, None] * e_n[None, :]) / (y ** 2 * y0)[..., None, None]
        + np.outer(e_n, e_n) * (sq / (y ** 3 * y0))[..., None, None]
    )
    first = 1.0 / (kappa * root)
    second = -u / (kappa * root ** 3)
    dr = first[..., None] * du
    ddr = second[..., None, None] * du[..., :, None] * du[..., None, :] + first[..., None, None] * ddu
    sigma = space.conformal_factor(x)
    gradient = sigma[..., None] ** 2 * dr
    return DistanceJet(r=r, dr=dr, ddr=ddr, gradient=gradient)


def radial_factor(kappa: float, r) -> np.ndarray:
    """1 - kappa r coth(kappa r), with its Taylor series near r = 0; 0 when kappa = 0"""
    r = np.asarray(r, dtype=float)
    if kappa == 0:
        return np.zeros_like(r)
    t = kappa * r
    small = np.abs(t) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    exact = 1.0 - safe / np.tanh(safe)
    t2 = t * t
    series = -t2 / 3.0 + t2 * t2 / 45.0 - 2.0 * t2 ** 3 / 945.0
    return np.where(small, series, exact)


def radial_factor_over_r2(kappa: float, r) -> np.ndarray:
    """(1 - kappa r coth(kappa r)) / r^2, continuous at r = 0 with value -kappa^2/3"""
    r = np.asarray(r, dtype=float)
    if kappa == 0:
        return np.zeros_like(r)
    t = kappa * r
    small = np.abs(t) < _SERIES_CUTOFF
    safe_r = np.where(small, 1.0, r)
    exact = radial_factor(kappa, safe_r) / safe_r ** 2
    t2 = t * t
    series = kappa ** 2 * (-1.0 / 3.0 + t2 / 45.0 - 2.0 * t2 * t2 / 945.0)
    return np.where(small, series, exact)


@dataclass(frozen=True)
class HessianComparison:
    """Covariant Hessian of r^2/2 and the comparison tensor g - Hess(r^2/2)"""
    r: np.ndarray
    hessian: np.ndarray
    comparison: np.ndarray
    factor: np.ndarray  # scalar with comparison = factor * radial_metric
    radial_metric: np.ndarray  # g_r = g - dr (x) dr


def hessian_half_r2(space: ModelSpace, x0: ChartPoint, x: ChartPoint) -> HessianComparison:
    """
    Closed-form Hessian of r^2/2

    On R^n the comparison tensor vanishes; on H^n it equals
    (1 - kappa r coth(kappa r)) g_r.

    Raises:
        DegeneratePointError: x coincides with x0
    """
    dist = distance_jet(space, x0, x)
    g = metric_jet(space, x).g
    radial_metric = g - dist.dr[..., :, None] * dist.dr[..., None, :]
    factor = radial_factor(space.kappa, dist.r)
    comparison = factor[..., None, None] * radial_metric
    return HessianComparison(
        r=dist.r,
        hessian=g - comparison,
        comparison=comparison,
        factor=factor,
        radial_metric=radial_metric,
    )


def hessian_half_r2_from_jet(space: ModelSpace, x0: ChartPoint, x: ChartPoint) -> np.ndarray:
    """Covariant Hessian of r^2/2 assembled from the distance 2-jet and Christoffel symbols"""
    dist = distance_jet(space, x0, x)
    gamma = christoffel(space, x)
    first = dist.r[..., None] * dist.dr
    second = dist.dr[..., :, None] * dist.dr[..., None, :] + dist.r[..., None, None] * dist.ddr
    return second - np.einsum("...lij,...l->...ij", gamma, first)

@dataclass(frozen=True)
class GeometryBounds:
    """Hessian comparison constants on a ball of radius ``radius`` for a fixed (k, p, n)"""
    lambda_lower: float
    lambda_upper: float
    Lambda: float
    radius: float
    kp: float
    n: int
    edge_factor: float = 0.0  # (1 - kappa R coth(kappa R)) / R^2 at the ball edge
    injectivity_radius: float = math.inf

    def __post_init__(self):
        if self.lambda_lower > self.lambda_upper:
            raise DomainError(
                f"lambda_lower={self.lambda_lower} exceeds lambda_upper={self.lambda_upper}"
            )

    @property
    def Lambda_edge(self) -> float:
        """Lambda evaluated with the edge factor in place of the infimum"""
        return monotonicity_constant(self.edge_factor, self.lambda_upper, self.kp, self.n)


def monotonicity_constant(lower: float, upper: float, kp: float, n: int) -> float:
    """Lambda = -1/2 (kp min(lower, 0) - (n - 1) upper)_-"""
    return -0.5 * min(kp * min(lower, 0.0) - (n - 1) * upper, 0.0)


def geometry_bounds(space: ModelSpace, R: float, k: int, p: float, n: Optional[int] = None,
                    samples: int = 2001) -> GeometryBounds:
    """
    Comparison constants lambda_lower <= lambda_upper and the monotonicity constant Lambda

    On H^n the lower constant is the infimum over (0, R] of the radial factor
    divided by r^2, found by sampling a grid together with the r -> 0 limit.

    Raises:
        DomainError: R is not positive or n differs from the space dimension
        StandingAssumptionError: n <= kp
    """
    n = space.dim if n is None else n
    if n != space.dim:
        raise DomainError(f"n={n} does not match the dimension of {space.label}")
    if not R > 0:
        raise DomainError(f"ball radius must be positive, got R={R}")
    kp = k * p
    if not n > kp:
        raise StandingAssumptionError(
            f"dimension n must exceed kp (standing assumption n > kp): got n={n}, k={k}, p={p}"
        )

    if not space.is_hyperbolic:
        return GeometryBounds(0.0, 0.0, 0.0, float(R), kp, n)

    grid = np.linspace(0.0, R, samples)
    lower = float(np.min(radial_factor_over_r2(space.kappa, grid)))
    edge = float(radial_factor_over_r2(space.kappa, R))
    bounds = GeometryBounds(
        lambda_lower=lower,
        lambda_upper=0.0,
        Lambda=monotonicity_constant(lower, 0.0, kp, n),
        radius=float(R),
        kp=kp,
        n=n,
        edge_factor=edge,
    )
    logger.debug(f"Geometry bounds on {space.label}, R={R}: {bounds}")
    return bounds
