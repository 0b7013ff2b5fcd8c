"""
Quadrature over geodesic balls and spheres, and the monotonicity checks built on it

Balls are integrated in geodesic polar coordinates around the center: a
Gauss-Legendre rule in the radius times a product rule on the unit sphere
(Gauss-Jacobi in the latitude angles, uniform on the innermost circle).
Every integral is also computed with the half-resolution rule and the
difference is reported as its error estimate.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as scipy_integrate
from scipy.special import roots_jacobi
from scipy.stats import special_ortho_group

from emcheck.calculus import exterior_full, local_calculus, weighted_codifferential_full
from emcheck.config import EnergyConfig, QuadratureSpec, SlackPolicy, Tolerances
from emcheck.errors import DomainError, IntegrandError, PreconditionError, StandingAssumptionError
from emcheck.forms import BundleForm, ConnectionField, contract_forms
from emcheck.jets import five_point_derivative
from emcheck.manifold import ChartPoint, ModelSpace, distance_jet
from emcheck.stress import div_stress_direct, energy_density, radial_terms
from emcheck.ymh import YMHPair, ymh_radial_terms

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

DENOMINATOR_FLOOR = 1e-14


@dataclass(frozen=True)
class SphereRule:
    """Unit directions (M, n) with weights summing to the area of S^(n-1)"""
    directions: np.ndarray
    weights: np.ndarray


def _circle(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    angles = 2.0 * np.pi * np.arange(nodes) / nodes
    points = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return points, np.full(nodes, 2.0 * np.pi / nodes)


def _sphere_points(dim: int, latitude_nodes: int, periodic_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Product rule on S^dim in R^(dim+1)"""
    if dim == 1:
        return _circle(periodic_nodes)
    lower_points, lower_weights = _sphere_points(dim - 1, latitude_nodes, periodic_nodes)
    alpha = 0.5 * (dim - 2)
    t, wt = roots_jacobi(latitude_nodes, alpha, alpha)
    radius = np.sqrt(1.0 - t ** 2)
    points = np.concatenate(
        [
            np.broadcast_to(t[:, None, None], (t.size, lower_points.shape[0], 1)),
            radius[:, None, None] * lower_points[None, :, :],
        ],
        axis=-1,
    )
    weights = wt[:, None] * lower_weights[None, :]
    return points.reshape(-1, dim + 1), weights.reshape(-1)


@lru_cache(maxsize=64)
def sphere_rule(n: int, latitude_nodes: int, periodic_nodes: int, seed: int = 0,
                rotate: bool = False) -> SphereRule:
    """
    Product rule on the unit sphere S^(n-1)

    Exact for polynomials of degree below 2 * latitude_nodes in each latitude
    and below periodic_nodes on the circle.
    """
    if n < 2:
        raise DomainError(f"sphere rule needs n >= 2, got {n}")
    directions, weights = _sphere_points(n - 1, latitude_nodes, periodic_nodes)
    if rotate:
        rotation = special_ortho_group.rvs(n, random_state=seed)
        directions = directions @ rotation.T
    directions.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(directions, weights)


def _spec_sphere_rule(n: int, spec: QuadratureSpec) -> SphereRule:
    return sphere_rule(n, spec.sphere_nodes, spec.periodic_nodes, spec.seed, spec.rotate)


def sphere_nodes(space: ModelSpace, x0: ChartPoint, R: float,
                 spec: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Points and weights on the geodesic sphere of radius R around x0"""
    rule = _spec_sphere_rule(space.dim, spec)
    points = space.exp_polar(x0, np.full(rule.weights.shape, R), rule.directions)
    return points, rule.weights * float(space.sphere_jacobian(R))


def ball_nodes(space: ModelSpace, x0: ChartPoint, R: float,
               spec: QuadratureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Points and weights on the geodesic ball of radius R around x0"""
    rule = _spec_sphere_rule(space.dim, spec)
    t, wt = np.polynomial.legendre.leggauss(spec.radial_nodes)
    s = 0.5 * R * (t + 1.0)
    ws = 0.5 * R * wt * space.sphere_jacobian(s)
    points = space.exp_polar(x0, s[:, None], rule.directions[None, :, :])
    weights = ws[:, None] * rule.weights[None, :]
    return points.reshape(-1, space.dim), weights.reshape(-1)


def _check_radius(R: float):
    if not (R > 0 and math.isfinite(R)):
        raise DomainError(f"radius must be positive and finite, got R={R}")


def _locate_failure(integrand: Integrand, points: np.ndarray) -> Optional[np.ndarray]:
    for point in points:
        try:
            value = np.asarray(integrand(point[None, :]))
        except Exception:
            return point
        if not np.all(np.isfinite(value)):
            return point
    return None


def _evaluate_chunk(integrand: Integrand, points: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(integrand(points), dtype=float)
    except IntegrandError:
        raise
    except Exception as e:
        point = _locate_failure(integrand, points)
        raise IntegrandError(f"integrand failed: {e}", point=point) from e
    if values.shape != points.shape[:1]:
        raise IntegrandError(f"integrand returned shape {values.shape}, expected {points.shape[:1]}")
    if not np.all(np.isfinite(values)):
        bad = points[np.argmax(~np.isfinite(values))]
        raise IntegrandError("integrand returned a non-finite value", point=bad)
    return values


def evaluate(integrand: Integrand, points: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    """Integrand values in node order, chunked and optionally threaded"""
    chunks = [points[i:i + spec.chunk_size] for i in range(0, points.shape[0], spec.chunk_size)]
    if spec.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            values = list(pool.map(lambda chunk: _evaluate_chunk(integrand, chunk), chunks))
    else:
        values = [_evaluate_chunk(integrand, chunk) for chunk in chunks]
    return np.concatenate(values)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float  # |fine - half-resolution|
    nodes: int

    @property
    def relative_error(self) -> float:
        return self.error / max(abs(self.value), DENOMINATOR_FLOOR)

    def __float__(self) -> float:
        return self.value


def _integral(nodes: Callable[[QuadratureSpec], Tuple[np.ndarray, np.ndarray]], integrand: Integrand,
              spec: QuadratureSpec) -> QuadratureResult:
    points, weights = nodes(spec)
    value = float(np.sum(evaluate(integrand, points, spec) * weights))
    coarse_points, coarse_weights = nodes(spec.halved())
    coarse = float(np.sum(evaluate(integrand, coarse_points, spec) * coarse_weights))
    return QuadratureResult(value=value, error=abs(value - coarse), nodes=points.shape[0])


def ball_integral(space: ModelSpace, x0: ChartPoint, R: float, integrand: Integrand,
                  spec: Optional[QuadratureSpec] = None) -> QuadratureResult:
    """
    Integral of a batched integrand over the geodesic ball B_R(x0)

    Raises:
        DomainError: R is not positive
        IntegrandError: the integrand raised or returned a non-finite value
    """
    _check_radius(R)
    spec = spec or QuadratureSpec()
    return _integral(lambda s: ball_nodes(space, x0, R, s), integrand, spec)


def sphere_integral(space: ModelSpace, x0: ChartPoint, R: float, integrand: Integrand,
                    spec: Optional[QuadratureSpec] = None) -> QuadratureResult:
    """Integral over the geodesic sphere of radius R around x0"""
    _check_radius(R)
    spec = spec or QuadratureSpec()
    return _integral(lambda s: sphere_nodes(space, x0, R, s), integrand, spec)


@dataclass(frozen=True)
class RadialProblem:
    """
    Integrands of a monotonicity identity

    d/dR (R^a int_B e) = R^(a-1) int_B bulk + R^a int_dB boundary
    """
    space: ModelSpace
    x0: ChartPoint
    exponent: float
    energy: Integrand
    boundary: Integrand
    bulk: Integrand
    label: str = ""


def form_problem(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                 x0: ChartPoint) -> RadialProblem:
    """p-energy of a bundle-valued k-form; bulk = <T, C> - iota_{r grad r} div T"""
    x0 = space.points(x0)
    if psi.degree != cfg.k or space.dim != cfg.n:
        raise DomainError(f"config (k={cfg.k}, n={cfg.n}) does not match the {psi.degree}-form on {space.label}")

    def energy(x):
        return energy_density(cfg, space, psi, x)

    def boundary(x):
        return radial_terms(cfg, space, psi, x0, x).radial_flux

    def bulk(x):
        terms = radial_terms(cfg, space, psi, x0, x)
        div_T = div_stress_direct(cfg, space, conn, psi, x)
        dist = distance_jet(space, x0, x)
        return terms.hessian_pairing - dist.r * np.einsum("...c,...c->...", dist.gradient, div_T)

    return RadialProblem(space, x0, cfg.scaling_exponent, energy, boundary, bulk, label=psi.name)


def ymh_problem(pair: YMHPair, x0: ChartPoint) -> RadialProblem:
    """Yang-Mills-Higgs energy with scaling exponent 4 - n"""
    space = pair.space
    x0 = space.points(x0)
    if not space.dim > 4:
        raise StandingAssumptionError(f"Yang-Mills-Higgs monotonicity needs n > 4, got n={space.dim}")
    return RadialProblem(
        space,
        x0,
        4.0 - space.dim,
        energy=lambda x: ymh_radial_terms(pair, x0, x).density,
        boundary=lambda x: ymh_radial_terms(pair, x0, x).radial_flux,
        bulk=lambda x: ymh_radial_terms(pair, x0, x).bulk,
        label=pair.name,
    )


@dataclass(frozen=True)
class IdentityResult:
    radius: float
    lhs: float  # d/dR (R^a int_B e) by five-point differences
    rhs: float
    bulk: float
    boundary: float
    residual: float
    inconclusive: bool
    quadrature_error: float  # worst relative error estimate among the integrals


def _scaled_energy(problem: RadialProblem, spec: QuadratureSpec) -> Callable[[float], QuadratureResult]:
    def theta(rho: float) -> QuadratureResult:
        result = ball_integral(problem.space, problem.x0, rho, problem.energy, spec)
        scale = rho ** problem.exponent
        return QuadratureResult(result.value * scale, result.error * scale, result.nodes)
    return theta


def _right_side(problem: RadialProblem, R: float, spec: QuadratureSpec) -> Tuple[QuadratureResult, QuadratureResult]:
    bulk = ball_integral(problem.space, problem.x0, R, problem.bulk, spec)
    boundary = sphere_integral(problem.space, problem.x0, R, problem.boundary, spec)
    a = problem.exponent
    return (
        QuadratureResult(bulk.value * R ** (a - 1), bulk.error * R ** (a - 1), bulk.nodes),
        QuadratureResult(boundary.value * R ** a, boundary.error * R ** a, boundary.nodes),
    )


def _identity(problem: RadialProblem, R: float, spec: QuadratureSpec, tolerance: float,
              bulk: Optional[QuadratureResult] = None,
              boundary: Optional[QuadratureResult] = None) -> IdentityResult:
    _check_radius(R)
    theta = _scaled_energy(problem, spec)
    step = 0.01 * R
    samples = {}

    def value(rho):
        samples[rho] = theta(rho)
        return samples[rho].value

    lhs = five_point_derivative(value, R, step)
    if bulk is None or boundary is None:
        bulk, boundary = _right_side(problem, R, spec)
    rhs = bulk.value + boundary.value
    residual = abs(lhs - rhs) / (abs(lhs) + abs(rhs) + DENOMINATOR_FLOOR)
    # energy errors enter the difference quotient amplified by 1/step
    energy_error = sum(s.error for s in samples.values()) / (12.0 * step)
    scale = abs(lhs) + abs(rhs) + DENOMINATOR_FLOOR
    quadrature_error = (energy_error + bulk.error + boundary.error) / scale
    inconclusive = quadrature_error > tolerance
    if inconclusive:
        logger.warning(
            f"Identity at R={R:g} for {problem.label or 'field'} is inconclusive: "
            f"quadrature error {quadrature_error:.2e} exceeds {tolerance:.1e}"
        )
    return IdentityResult(
        radius=float(R),
        lhs=float(lhs),
        rhs=float(rhs),
        bulk=bulk.value,
        boundary=boundary.value,
        residual=float(residual),
        inconclusive=inconclusive,
        quadrature_error=float(quadrature_error),
    )


def monotonicity_identity_residual(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField],
                                   psi: BundleForm, x0: ChartPoint, R: float,
                                   spec: Optional[QuadratureSpec] = None,
                                   tolerance: Optional[float] = None) -> IdentityResult:
    """
    Compare d/dR (R^(kp-n) int_B e) with its bulk and boundary representation

    The result is flagged inconclusive when the quadrature error estimate
    exceeds ``tolerance`` rather than reported as a failure.
    """
    tolerance = Tolerances().quadrature_relative if tolerance is None else tolerance
    problem = form_problem(cfg, space, conn, psi, x0)
    return _identity(problem, R, spec or QuadratureSpec(), tolerance)


def ymh_identity_residual(pair: YMHPair, x0: ChartPoint, R: float, spec: Optional[QuadratureSpec] = None,
                          tolerance: Optional[float] = None) -> IdentityResult:
    """
    Yang-Mills-Higgs identity with exponent 4 - n and the extra bulk term |d u|^2 + 4 W

    Raises:
        StandingAssumptionError: n <= 4
    """
    tolerance = Tolerances().quadrature_relative if tolerance is None else tolerance
    return _identity(ymh_problem(pair, x0), R, spec or QuadratureSpec(), tolerance)


@dataclass(frozen=True)
class Violation:
    """A pair of radii R_i < R_j with Theta(R_i) > Theta(R_j) + slack"""
    first: int
    second: int
    first_radius: float
    second_radius: float
    first_value: float
    second_value: float


@dataclass
class RadialProfile:
    label: str
    space_label: str
    exponent: float
    Lambda: float
    radii: np.ndarray
    raw_energy: np.ndarray
    theta: np.ndarray
    boundary_term: np.ndarray
    bulk_term: np.ndarray
    identity_lhs: Optional[np.ndarray] = None
    identity_rhs: Optional[np.ndarray] = None
    identity_residual: Optional[np.ndarray] = None
    combined: Optional[np.ndarray] = None
    violations: List[Violation] = field(default_factory=list)
    inconclusive: bool = False
    quadrature_error: Optional[np.ndarray] = None

    @property
    def monotone(self) -> bool:
        return not self.violations

    @property
    def checked_values(self) -> np.ndarray:
        """The column whose ordering is checked: combined when present, else theta"""
        return self.theta if self.combined is None else self.combined

    def columns(self) -> dict:
        columns = {
            "R": self.radii,
            "raw_energy": self.raw_energy,
            "theta": self.theta,
            "boundary_term": self.boundary_term,
            "bulk_term": self.bulk_term,
        }
        optional = {
            "identity_lhs": self.identity_lhs,
            "identity_rhs": self.identity_rhs,
            "residual": self.identity_residual,
            "combined": self.combined,
        }
        columns.update({name: value for name, value in optional.items() if value is not None})
        return columns


def _check_radii(radii: Sequence[float]) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0:
        raise DomainError("radii must be a non-empty one-dimensional sequence")
    if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
        raise DomainError(f"radii must be positive and finite, got {radii}")
    if np.any(np.diff(radii) <= 0):
        raise DomainError(f"radii must be strictly increasing, got {radii}")
    return radii


def liouville_ratio_check(profile: RadialProfile, slack: Optional[SlackPolicy] = None) -> List[Violation]:
    """All pairs i < j whose checked values decrease by more than the slack"""
    slack = slack or SlackPolicy()
    values = profile.checked_values
    violations = []
    for i in range(values.size):
        for j in range(i + 1, values.size):
            if values[i] > values[j] + slack.slack(values[j]):
                violations.append(
                    Violation(i, j, float(profile.radii[i]), float(profile.radii[j]),
                              float(values[i]), float(values[j]))
                )
    return violations


def _profile(problem: RadialProblem, radii: Sequence[float], Lambda: float, spec: QuadratureSpec,
             slack: SlackPolicy, with_identity: bool, tolerance: float,
             combine: Optional[Callable[[float, float], float]] = None) -> RadialProfile:
    radii = _check_radii(radii)
    if Lambda < 0:
        raise DomainError(f"Lambda must be non-negative, got {Lambda}")
    count = radii.size
    raw = np.empty(count)
    bulk_term = np.empty(count)
    boundary_term = np.empty(count)
    errors = np.empty(count)
    lhs = np.empty(count) if with_identity else None
    rhs = np.empty(count) if with_identity else None
    residual = np.empty(count) if with_identity else None
    inconclusive = False
    for i, R in enumerate(radii):
        energy = ball_integral(problem.space, problem.x0, R, problem.energy, spec)
        bulk, boundary = _right_side(problem, R, spec)
        raw[i] = energy.value
        bulk_term[i] = bulk.value
        boundary_term[i] = boundary.value
        errors[i] = energy.relative_error
        if with_identity:
            identity = _identity(problem, R, spec, tolerance, bulk=bulk, boundary=boundary)
            lhs[i], rhs[i], residual[i] = identity.lhs, identity.rhs, identity.residual
            inconclusive |= identity.inconclusive
        logger.debug(f"{problem.label or 'field'}: R={R:g} energy={energy.value:.6e} (+-{energy.error:.1e})")

    theta = np.exp(Lambda * radii ** 2) * radii ** problem.exponent * raw
    combined = None
    if combine is not None:
        combined = np.array([combine(R, value) for R, value in zip(radii, raw)])
    profile = RadialProfile(
        label=problem.label,
        space_label=problem.space.label,
        exponent=problem.exponent,
        Lambda=float(Lambda),
        radii=radii,
        raw_energy=raw,
        theta=theta,
        boundary_term=boundary_term,
        bulk_term=bulk_term,
        identity_lhs=lhs,
        identity_rhs=rhs,
        identity_residual=residual,
        combined=combined,
        inconclusive=bool(inconclusive or np.any(errors > tolerance)),
        quadrature_error=errors,
    )
    profile.violations = liouville_ratio_check(profile, slack)
    if profile.violations:
        logger.warning(f"{problem.label or 'field'}: {len(profile.violations)} monotonicity violations")
    return profile


def theta_profile(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                  x0: ChartPoint, radii: Sequence[float], Lambda: float,
                  spec: Optional[QuadratureSpec] = None, slack: Optional[SlackPolicy] = None,
                  with_identity: bool = False, tolerance: Optional[float] = None) -> RadialProfile:
    """
    Theta(R) = exp(Lambda R^2) R^(kp-n) int_{B_R} e at each radius

    Raises:
        DomainError: radii empty, non-positive or not strictly increasing
    """
    tolerance = Tolerances().quadrature_relative if tolerance is None else tolerance
    problem = form_problem(cfg, space, conn, psi, x0)
    return _profile(problem, radii, Lambda, spec or QuadratureSpec(), slack or SlackPolicy(),
                    with_identity, tolerance)


def ymh_identity_and_profile(pair: YMHPair, x0: ChartPoint, radii: Sequence[float], Lambda: float = 0.0,
                             spec: Optional[QuadratureSpec] = None, slack: Optional[SlackPolicy] = None,
                             with_identity: bool = True,
                             tolerance: Optional[float] = None) -> RadialProfile:
    """Profile of exp(Lambda R^2) R^(4-n) int_{B_R} e for a Yang-Mills-Higgs pair"""
    tolerance = Tolerances().quadrature_relative if tolerance is None else tolerance
    return _profile(ymh_problem(pair, x0), radii, Lambda, spec or QuadratureSpec(), slack or SlackPolicy(),
                    with_identity, tolerance)


def q_psi(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
          x: ChartPoint) -> np.ndarray:
    """|delta(|psi|^(p-2) psi)| + |psi|^(p-2) |d psi| at each point"""
    x = space.points(x)
    local = local_calculus(space, conn, psi, x)
    k = psi.degree
    weighted = weighted_codifferential_full(local, cfg.p)
    d_psi = exterior_full(local)
    s = np.maximum(local.norm_squared(), 0.0)
    w = np.ones_like(s) if cfg.p == 2 else np.where(s > 0, s ** ((cfg.p - 2.0) / 2.0), 0.0)
    first = np.sqrt(np.maximum(contract_forms(weighted, weighted, local.ginv, k - 1), 0.0))
    second = np.sqrt(np.maximum(contract_forms(d_psi, d_psi, local.ginv, k + 1), 0.0))
    return first + w * second


def check_q_bound(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                  x0: ChartPoint, R: float, Gamma: float, spec: Optional[QuadratureSpec] = None) -> float:
    """
    Largest q_psi over the quadrature nodes of B_R(x0)

    Raises:
        PreconditionError: q_psi exceeds Gamma at some node
    """
    spec = spec or QuadratureSpec()
    points, _ = ball_nodes(space, x0, R, spec)
    values = evaluate(lambda x: q_psi(cfg, space, conn, psi, x), points, spec)
    worst = int(np.argmax(values))
    if values[worst] > Gamma * (1.0 + 1e-9) + 1e-12:
        raise PreconditionError(
            f"q_psi = {values[worst]:.6g} exceeds Gamma = {Gamma:.6g} inside B_{R:g}",
            witness=points[worst],
        )
    return float(values[worst])


def young_bound_margin(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                       x0: ChartPoint, x: ChartPoint, R: float, Gamma: float) -> np.ndarray:
    """
    -iota_{r grad r} div T + R (e + Gamma^p' / p'), non-negative wherever q_psi <= Gamma and r <= R
    """
    x = space.points(x)
    dist = distance_jet(space, x0, x)
    div_T = div_stress_direct(cfg, space, conn, psi, x)
    radial = dist.r * np.einsum("...c,...c->...", dist.gradient, div_T)
    energy = radial_terms(cfg, space, psi, x0, x).energy
    pc = cfg.p_conjugate
    return -radial + R * (energy + Gamma ** pc / pc)


def inhomogeneous_correction(cfg: EnergyConfig, space: ModelSpace, R: float, Gamma: float,
                             Lambda: float) -> float:
    """(Gamma^p' / p') int_0^R exp(Lambda s^2 + s) s^(kp-n) Vol(B_s) ds"""
    if Gamma == 0 or R <= 0:
        return 0.0
    pc = cfg.p_conjugate
    a = cfg.scaling_exponent

    def integrand(s):
        return math.exp(Lambda * s * s + s) * s ** a * space.ball_volume(s)

    value, _ = scipy_integrate.quad(integrand, 0.0, R, epsabs=0.0, epsrel=1e-10, limit=200)
    return Gamma ** pc / pc * value


def inhomogeneous_profile(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField],
                          psi: BundleForm, x0: ChartPoint, radii: Sequence[float], Gamma: float, Lambda: float,
                          spec: Optional[QuadratureSpec] = None, slack: Optional[SlackPolicy] = None,
                          tolerance: Optional[float] = None) -> RadialProfile:
    """
    Profile of exp(Lambda R^2 + R) R^(kp-n) int_B e plus the Gamma correction

    Raises:
        PreconditionError: q_psi exceeds Gamma somewhere in the largest ball
    """
    spec = spec or QuadratureSpec()
    radii = _check_radii(radii)
    if Gamma < 0:
        raise DomainError(f"Gamma must be non-negative, got {Gamma}")
    check_q_bound(cfg, space, conn, psi, x0, float(radii[-1]), Gamma, spec)
    tolerance = Tolerances().quadrature_relative if tolerance is None else tolerance
    a = cfg.scaling_exponent

    def combine(R: float, raw: float) -> float:
        scaled = math.exp(Lambda * R * R + R) * R ** a * raw
        return scaled + inhomogeneous_correction(cfg, space, R, Gamma, Lambda)

    problem = form_problem(cfg, space, conn, psi, x0)
    return _profile(problem, radii, Lambda, spec, slack or SlackPolicy(), False, tolerance, combine=combine)
