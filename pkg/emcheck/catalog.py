"""
Library of analytic test fields

Every entry supplies exact jets, the energy configuration it is meant for,
its tags and the region where it is valid. Tags are verified by sampling when
the catalog is built; a failed check aborts construction.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, FrozenSet, Optional, Tuple

import numpy as np

from emcheck.calculus import exterior_covariant_derivative, p_codifferential
from emcheck.config import EnergyConfig, QuadratureSpec
from emcheck.errors import RegistrationError, UsageError
from emcheck.forms import (
    BundleForm,
    BundleSpec,
    ConnectionField,
    FormJet,
    add_forms,
    bump_form,
    constant_form,
    zero_form,
)
from emcheck.integrate import ball_nodes, q_psi
from emcheck.jets import fd_gradient, fd_hessian
from emcheck.manifold import ModelSpace
from emcheck.ymh import GaugeField, GaugeJet, LieAlgebraAction, Potential, YMHPair, higgs_field, ymhe_residual

logger = logging.getLogger(__name__)

CLOSED = "closed"
COCLOSED = "p-coclosed"
HARMONIC = "p-harmonic"
YMH_PAIR = "ymh-pair"
INHOMOGENEOUS = "inhomogeneous"

REGISTRATION_POINTS = 100
REGISTRATION_TOLERANCE = 1e-8
GAMMA_MARGIN = 1.25

Sampler = Callable[[np.random.Generator, int], np.ndarray]
Region = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExampleField:
    """A catalog entry; ``psi`` is set for form examples and ``pair`` for Yang-Mills-Higgs pairs"""
    name: str
    key: str
    description: str
    space: ModelSpace
    cfg: EnergyConfig
    tags: FrozenSet[str]
    valid_region: Region
    sampler: Sampler
    center: np.ndarray
    radii: np.ndarray
    region_label: str
    psi: Optional[BundleForm] = None
    connection: Optional[ConnectionField] = None
    pair: Optional[YMHPair] = None
    gauge: Optional[GaugeField] = None  # potential behind a curvature example
    gamma: Optional[float] = None
    Lambda: float = 0.0

    @property
    def is_pair(self) -> bool:
        return self.pair is not None

    def sample(self, rng: np.random.Generator, count: int = REGISTRATION_POINTS) -> np.ndarray:
        points = self.sampler(rng, count)
        if not np.all(self.valid_region(points)):
            raise RegistrationError(f"{self.name}: sampler produced points outside the valid region")
        return points


def _box_sampler(lower, upper) -> Sampler:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return lambda rng, count: rng.uniform(lower, upper, size=(count, lower.size))


def _shell_sampler(inner: float, outer: float, dim: int) -> Sampler:
    def sample(rng, count):
        directions = rng.normal(size=(count, dim))
        directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
        radius = rng.uniform(inner, outer, size=(count, 1))
        return radius * directions
    return sample


def _everywhere(x: np.ndarray) -> np.ndarray:
    return np.all(np.isfinite(x), axis=-1)


def _profile_radii(low: float, high: float, count: int = 20) -> np.ndarray:
    return np.linspace(low, high, count)


def radial_p_harmonic_form(space: ModelSpace, p: float) -> BundleForm:
    """d u for u = |x|^a with a = (p - n)/(p - 1), p-harmonic off the origin"""
    n = space.dim
    a = (p - n) / (p - 1.0)
    eye = np.eye(n)

    def components(x):
        rho2 = np.sum(x ** 2, axis=-1)
        r_a2 = (a * rho2 ** ((a - 2.0) / 2.0))[..., None]
        r_a4 = (a * (a - 2.0) * rho2 ** ((a - 4.0) / 2.0))[..., None, None]
        r_a6 = (a * (a - 2.0) * (a - 4.0) * rho2 ** ((a - 6.0) / 2.0))[..., None, None, None]
        outer = x[..., :, None] * x[..., None, :]
        value = r_a2 * x
        grad = r_a4 * outer + r_a2[..., None] * eye
        hess = r_a6 * outer[..., None] * x[..., None, None, :] + r_a4[..., None] * (
            eye[:, None, :] * x[..., None, :, None]
            + eye[None, :, :] * x[..., :, None, None]
            + eye[:, :, None] * x[..., None, None, :]
        )
        return FormJet(value[..., None, :], grad[..., None, :, :], hess[..., None, :, :, :])

    return BundleForm(1, BundleSpec(1), space, components, name=f"d|x|^{a:g}")


def hyperbolic_harmonic_form(space: ModelSpace) -> BundleForm:
    """d u for u = y^(n-1), harmonic on the upper half-space"""
    n = space.dim
    e = n - 1

    def components(x):
        y = x[..., -1]
        value = np.zeros(x.shape[:-1] + (1, n))
        grad = np.zeros(value.shape + (n,))
        hess = np.zeros(value.shape + (n, n))
        value[..., 0, -1] = e * y ** (e - 1)
        grad[..., 0, -1, -1] = e * (e - 1) * y ** (e - 2) if e >= 2 else 0.0
        hess[..., 0, -1, -1, -1] = e * (e - 1) * (e - 2) * y ** (e - 3) if e >= 3 else 0.0
        return FormJet(value, grad, hess)

    return BundleForm(1, BundleSpec(1), space, components, name=f"d(y^{e})")


def thooft_symbols(dim: int) -> np.ndarray:
    """Self-dual symbols eta[a, mu, nu] on the first four coordinates, zero elsewhere"""
    eta = np.zeros((3, dim, dim))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eta[a, b, c] = 1.0
        eta[a, c, b] = -1.0
    for a in range(3):
        eta[a, a, 3] = 1.0
        eta[a, 3, a] = -1.0
    return eta


def instanton_gauge(space: ModelSpace, scale: float = 1.0) -> GaugeField:
    """
    Regular-gauge unit-charge instanton on the first four coordinates

    A_i^a = 2 eta[a, i, j] x^j h with h = 1 / (|x'|^2 + scale^2), where x' drops
    every coordinate past the fourth.
    """
    n = space.dim
    eta = thooft_symbols(n)
    project = np.diag([1.0] * 4 + [0.0] * (n - 4))

    def potential(x):
        xt = x @ project
        h = 1.0 / (np.sum(xt ** 2, axis=-1) + scale ** 2)
        dh = -2.0 * xt * (h ** 2)[..., None]
        ddh = -2.0 * project * (h ** 2)[..., None, None] + 8.0 * xt[..., :, None] * xt[..., None, :] * (
            h ** 3
        )[..., None, None]
        ex = np.einsum("aij,...j->...ia", eta, x)  # eta[a, i, j] x^j
        eta_ic = np.einsum("aic->iac", eta)
        value = 2.0 * ex * h[..., None, None]
        grad = 2.0 * (eta_ic * h[..., None, None, None] + ex[..., None] * dh[..., None, None, :])
        cross = eta_ic[..., :, None] * dh[..., None, None, None, :]
        hess = 2.0 * (cross + np.swapaxes(cross, -1, -2) + ex[..., None, None] * ddh[..., None, None, :, :])
        return GaugeJet(value, grad, hess)

    return GaugeField(LieAlgebraAction.so3(), n, potential, name="instanton")


def abelian_gauge(dim: int) -> GaugeField:
    """A = (x^1 dx^2 - x^2 dx^1) / 2 with values in so(2), curvature dx^1 ^ dx^2"""

    def potential(x):
        value = np.zeros(x.shape[:-1] + (dim, 1))
        value[..., 0, 0] = -0.5 * x[..., 1]
        value[..., 1, 0] = 0.5 * x[..., 0]
        grad = np.zeros(value.shape + (dim,))
        grad[..., 0, 0, 1] = -0.5
        grad[..., 1, 0, 0] = 0.5
        return GaugeJet(value, grad, np.zeros(grad.shape + (dim,)))

    return GaugeField(LieAlgebraAction.so2(), dim, potential, name="abelian")


def _form_entry(name, key, description, space, cfg, psi, tags, sampler, center, radii, region_label,
                valid_region=_everywhere, connection=None, gauge=None, gamma=None) -> ExampleField:
    return ExampleField(
        name=name,
        key=key,
        description=description,
        space=space,
        cfg=cfg,
        tags=frozenset(tags),
        valid_region=valid_region,
        sampler=sampler,
        center=np.asarray(center, dtype=float),
        radii=radii,
        region_label=region_label,
        psi=psi,
        connection=connection,
        gauge=gauge,
        gamma=gamma,
    )


def _pair_entry(name, key, description, pair: YMHPair) -> ExampleField:
    n = pair.space.dim
    return ExampleField(
        name=name,
        key=key,
        description=description,
        space=pair.space,
        cfg=EnergyConfig(p=2.0, k=2, n=n),
        tags=frozenset({YMH_PAIR}),
        valid_region=_everywhere,
        sampler=_box_sampler(-np.ones(n), np.ones(n)),
        center=pair.space.origin(),
        radii=_profile_radii(0.2, 2.0),
        region_label="R^5",
        pair=pair,
    )


def _measured_gamma(cfg: EnergyConfig, space: ModelSpace, psi: BundleForm, center: np.ndarray,
                    radius: float) -> float:
    points, _ = ball_nodes(space, center, radius, QuadratureSpec().doubled())
    return GAMMA_MARGIN * float(np.max(q_psi(cfg, space, None, psi, points)))


def _build() -> Tuple[ExampleField, ...]:
    r3 = ModelSpace.euclidean(3)
    r4 = ModelSpace.euclidean(4)
    r5 = ModelSpace.euclidean(5)
    h3 = ModelSpace.hyperbolic(3, 1.0)
    unit_box3 = _box_sampler(-np.ones(3), np.ones(3))
    unit_box5 = _box_sampler(-np.ones(5), np.ones(5))
    harmonic = {CLOSED, COCLOSED, HARMONIC}

    entries = [
        _form_entry("zero", "a", "zero 1-form", r3, EnergyConfig(2.0, 1, 3), zero_form(r3, 1),
                    harmonic, unit_box3, r3.origin(), _profile_radii(0.2, 2.0), "R^3"),
        _form_entry("dx1", "b", "constant 1-form dx^1", r3, EnergyConfig(2.0, 1, 3),
                    constant_form(r3, 1, [[1.0, 0.0, 0.0]], name="dx1"),
                    harmonic, unit_box3, r3.origin(), _profile_radii(0.2, 2.0), "R^3"),
        _form_entry("abelian-2form", "c", "constant 2-form dx^1 ^ dx^2 as abelian curvature", r5,
                    EnergyConfig(2.0, 2, 5),
                    constant_form(r5, 2, np.eye(1, math.comb(5, 2)), name="dx1^dx2"),
                    harmonic, unit_box5, r5.origin(), _profile_radii(0.2, 2.0), "R^5"),
    ]

    radial_center = np.array([3.0, 0.0, 0.0, 0.0])
    entries.append(_form_entry(
        "radial-p-harmonic", "d", "d|x|^a, a = (p - n)/(p - 1), n = 4, p = 3", r4,
        EnergyConfig(3.0, 1, 4), radial_p_harmonic_form(r4, 3.0), harmonic,
        _shell_sampler(0.5, 2.0, 4), radial_center, _profile_radii(0.5, 2.0),
        "|x| > 0.25", valid_region=lambda x: np.linalg.norm(x, axis=-1) > 0.25,
    ))

    entries.append(_form_entry(
        "hyperbolic-harmonic", "e", "d(y^(n-1)) on H^3", h3, EnergyConfig(2.0, 1, 3),
        hyperbolic_harmonic_form(h3), harmonic,
        _box_sampler([-1.0, -1.0, 0.5], [1.0, 1.0, 2.0]), h3.origin(), np.geomspace(0.1, 1.0, 20),
        "y > 0", valid_region=h3.contains,
    ))

    instanton = YMHPair(r5, instanton_gauge(r5), higgs_field(r5, 3, constant=np.zeros(3)),
                        potential=Potential.zero(), name="instanton")
    entries.append(_form_entry(
        "instanton", "f", "self-dual so(3) instanton on R^4 pulled back to R^5", r5,
        EnergyConfig(2.0, 2, 5), instanton.curvature, harmonic, unit_box5, r5.origin(),
        _profile_radii(0.2, 2.0), "R^5", connection=instanton.adjoint_connection, gauge=instanton.gauge,
    ))

    so2 = LieAlgebraAction.so2()
    entries.append(_pair_entry(
        "ymh-vacuum", "g1", "flat connection with unit Higgs field, W(1) = 0",
        YMHPair(r5, GaugeField.zero(so2, 5), higgs_field(r5, 2, constant=[1.0, 0.0]), name="vacuum"),
    ))
    entries.append(_pair_entry(
        "ymh-zero-higgs", "g2", "flat connection with u = 0, W(0) = 1/4",
        YMHPair(r5, GaugeField.zero(so2, 5), higgs_field(r5, 2, constant=[0.0, 0.0]), name="zero-higgs"),
    ))
    entries.append(_pair_entry(
        "ymh-abelian", "g3", "constant so(2) curvature dx^1 ^ dx^2 with u = 0",
        YMHPair(r5, abelian_gauge(5), higgs_field(r5, 2, constant=[0.0, 0.0]), name="abelian"),
    ))

    base = constant_form(r3, 1, [[1.0, 0.0, 0.0]], name="dx1")
    bump = bump_form(constant_form(r3, 1, [[0.0, 0.1, 0.0]], name="0.1dx2"), [0.5, 0.0, 0.0], 0.5)
    perturbed = add_forms(base, bump)
    cfg_h = EnergyConfig(2.0, 1, 3)
    radii_h = _profile_radii(0.2, 2.0)
    entries.append(_form_entry(
        "inhomogeneous", "h", "dx^1 plus a bump times 0.1 dx^2", r3, cfg_h, perturbed,
        {INHOMOGENEOUS}, unit_box3, r3.origin(), radii_h, "R^3",
        gamma=_measured_gamma(cfg_h, r3, perturbed, r3.origin(), float(radii_h[-1])),
    ))
    return tuple(entries)


def _max_abs(array) -> float:
    return float(np.max(np.abs(array), initial=0.0))


def verify_tags(example: ExampleField, rng: Optional[np.random.Generator] = None) -> dict:
    """
    Sampled residual for every checkable tag

    Raises:
        RegistrationError: a residual exceeds the registration tolerance
    """
    rng = rng or np.random.default_rng(0)
    points = example.sample(rng, REGISTRATION_POINTS)
    residuals = {}
    if example.psi is not None:
        psi, conn = example.psi, example.connection
        if CLOSED in example.tags:
            residuals[CLOSED] = _max_abs(exterior_covariant_derivative(example.space, conn, psi, points))
        if COCLOSED in example.tags:
            residuals[COCLOSED] = _max_abs(p_codifferential(example.space, conn, psi, points, example.cfg.p))
    if example.pair is not None:
        first, second = ymhe_residual(example.pair, points)
        residuals[YMH_PAIR] = max(_max_abs(first), _max_abs(second))
    for tag, residual in residuals.items():
        if residual > REGISTRATION_TOLERANCE:
            raise RegistrationError(
                f"{example.name}: tag '{tag}' fails with residual {residual:.3e} > {REGISTRATION_TOLERANCE:.0e}"
            )
    return residuals


@lru_cache(maxsize=1)
def catalog() -> Tuple[ExampleField, ...]:
    """All examples, tag-checked at construction"""
    entries = _build()
    names = [entry.name for entry in entries]
    if len(set(names)) != len(names):
        raise RegistrationError(f"duplicate example names in {names}")
    for entry in entries:
        residuals = verify_tags(entry)
        logger.debug(f"Registered {entry.name} ({entry.space.label}): {residuals}")
    logger.info(f"Example catalog ready with {len(entries)} fields")
    return entries


def example_names() -> Tuple[str, ...]:
    return tuple(entry.name for entry in catalog())


def get_example(name: str) -> ExampleField:
    """
    Look up an example by name or key

    Raises:
        UsageError: unknown name; the message lists the catalog
    """
    for entry in catalog():
        if name in (entry.name, entry.key):
            return entry
    choices = example_names()
    raise UsageError(f"unknown example '{name}'; choose from: {', '.join(choices)}", choices=choices)


def _relative_deviation(analytic: np.ndarray, numeric: np.ndarray) -> float:
    return _max_abs(analytic - numeric) / (1.0 + _max_abs(analytic))


def _form_deviation(form: BundleForm, x: np.ndarray, step: float) -> float:
    def values(points):
        return form.components(points).value

    jet = form.components(x)
    h = np.full(x.shape[:-1], step)
    worst = 0.0
    if jet.grad is not None:
        worst = max(worst, _relative_deviation(jet.grad, fd_gradient(values, x, h)))
    if jet.hess is not None:
        worst = max(worst, _relative_deviation(jet.hess, fd_hessian(values, x, h)))
    return worst


def _gauge_deviation(gauge: GaugeField, x: np.ndarray, step: float) -> float:
    def values(points):
        return gauge.jet(points).value

    def grads(points):
        return gauge.jet(points).grad

    jet = gauge.jet(x)
    h = np.full(x.shape[:-1], step)
    return max(
        _relative_deviation(jet.grad, fd_gradient(values, x, h)),
        _relative_deviation(jet.hess, fd_gradient(grads, x, h)),
    )


def jet_selftest(example: ExampleField, rng: Optional[np.random.Generator] = None, count: int = 20,
                 step: float = 1e-4) -> float:
    """Largest relative deviation of the supplied jets from central differences"""
    rng = rng or np.random.default_rng(0)
    x = example.sample(rng, count)
    worst = 0.0
    if example.psi is not None:
        worst = max(worst, _form_deviation(example.psi, x, step))
    if example.pair is not None:
        worst = max(worst, _form_deviation(example.pair.higgs, x, step))
        worst = max(worst, _gauge_deviation(example.pair.gauge, x, step))
        worst = max(worst, _form_deviation(example.pair.curvature, x, step))
    if example.gauge is not None:
        worst = max(worst, _gauge_deviation(example.gauge, x, step))
    return worst
