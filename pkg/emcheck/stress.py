"""
Energy density and energy-momentum tensor of bundle-valued forms

T = |psi|^(p-2) sum_ij <iota_{e_i} psi, iota_{e_j} psi> w^i w^j - e g
with e = |psi|^p / p. The tensor is evaluated in the orthonormal frame and
returned in coordinates; its 1-jet comes from forward-mode differentiation of
the coordinate formula. The divergence is available both directly and through
the closed-form identity in terms of d psi and delta(|psi|^(p-2) psi).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from emcheck.calculus import exterior_full, local_calculus, weighted_codifferential_full
from emcheck.config import EnergyConfig
from emcheck.errors import DegreeError, DomainError, MetricError, SingularWeightError
from emcheck.forms import (
    PARTNER_SLOTS,
    SLOTS,
    BundleForm,
    ConnectionField,
    PolynomialField,
    contract_forms,
    inner_product,
    interior,
    orthonormal_frame,
    to_frame,
    to_full,
)
from emcheck.jets import Dual, richardson_derivative
from emcheck.jets import einsum as jet_einsum
from emcheck.manifold import (
    ChartPoint,
    GeometryBounds,
    ModelSpace,
    christoffel_from_jet,
    distance_jet,
    hessian_half_r2,
    metric_jet,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TensorJet:
    """Covariant 2-tensor components (..., n, n) with optional partials (..., n, n, n)"""
    value: np.ndarray
    grad: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SymTensorField:
    space: ModelSpace
    components: Callable[[np.ndarray], TensorJet]
    name: str = ""

    def jet(self, x) -> TensorJet:
        return self.components(self.space.points(x))


@dataclass(frozen=True)
class VectorJet:
    """Vector components (..., n) with partials grad[..., i, c] = d_c X^i"""
    value: np.ndarray
    grad: np.ndarray


@dataclass(frozen=True)
class VectorField:
    space: ModelSpace
    components: Callable[[np.ndarray], VectorJet]
    name: str = ""

    def jet(self, x) -> VectorJet:
        return self.components(self.space.points(x))


def _check_config(cfg: EnergyConfig, space: ModelSpace, psi: BundleForm):
    if cfg.n != space.dim or psi.space != space:
        raise DegreeError(f"energy configured for n={cfg.n} but the form lives on {psi.space.label}")
    if cfg.k != psi.degree:
        raise DegreeError(f"energy configured for k={cfg.k} but the form has degree {psi.degree}")


def _weights(s: np.ndarray, p: float) -> Tuple[np.ndarray, np.ndarray]:
    """|psi|^(p-2) and e = |psi|^p / p from s = |psi|^2"""
    zero = s <= 0.0
    if p < 2 and np.any(zero):
        raise SingularWeightError(f"|psi| = 0 with p = {p} < 2: weight |psi|^(p-2) is singular")
    safe = np.where(zero, 1.0, s)
    if p == 2:
        w = np.ones_like(s)
    else:
        w = np.where(zero, 0.0, safe ** ((p - 2.0) / 2.0))
    e = np.where(zero, 0.0, safe ** (p / 2.0)) / p
    return w, e


def energy_density(cfg: EnergyConfig, space: ModelSpace, psi: BundleForm, x: ChartPoint) -> np.ndarray:
    """e(psi) = |psi|^p / p"""
    _check_config(cfg, space, psi)
    x = space.points(x)
    value = psi.components(x).value
    s = np.maximum(inner_product(space, x, value, value, psi.degree), 0.0)
    return s ** (cfg.p / 2.0) / cfg.p


def trace(space: ModelSpace, x: ChartPoint, T: np.ndarray) -> np.ndarray:
    """tr_g T = g^ij T_ij"""
    return np.einsum("...ij,...ij->...", metric_jet(space, x).ginv, T)


def pair_tensors(ginv: np.ndarray, S: np.ndarray, H: np.ndarray) -> np.ndarray:
    """<S, H>_g = g^ia g^jb S_ab H_ij"""
    return np.einsum("...ia,...jb,...ab,...ij->...", ginv, ginv, S, H, optimize=True)


def frame_gram(full: np.ndarray, frame: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal-frame data of a full k-array

    Returns:
        (|psi|^2, G) with G_ij = <iota_{e_i} psi, iota_{e_j} psi>
    """
    hat = to_frame(full, frame, k)
    s = np.sum(hat ** 2, axis=tuple(range(hat.ndim - k - 1, hat.ndim))) / math.factorial(k)
    rest = SLOTS[1:k]
    G = np.einsum(f"...ai{rest},...aj{rest}->...ij", hat, hat, optimize=True) / math.factorial(k - 1)
    return s, G


def stress_tensor(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                  x: ChartPoint) -> np.ndarray:
    """
    Energy-momentum tensor in coordinate components (..., n, n)

    Raises:
        SingularWeightError: psi vanishes and p < 2
    """
    _check_config(cfg, space, psi)
    x = space.points(x)
    n, k = space.dim, psi.degree
    frame = orthonormal_frame(space, x)
    s, G = frame_gram(to_full(psi.components(x).value, n, k), frame.frame, k)
    w, e = _weights(s, cfg.p)
    T_hat = w[..., None, None] * G - e[..., None, None] * np.eye(n)
    T = np.einsum("...iu,...jv,...ij->...uv", frame.coframe, frame.coframe, T_hat, optimize=True)
    return 0.5 * (T + np.swapaxes(T, -1, -2))


def stress_field(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField],
                 psi: BundleForm) -> SymTensorField:
    """T as a field whose 1-jet is propagated through the coordinate formula"""
    _check_config(cfg, space, psi)
    n, k, p = space.dim, psi.degree, cfg.p
    left, right = SLOTS[1:k], PARTNER_SLOTS[1:k]

    def components(x):
        jet = psi.components(x)
        if jet.grad is None:
            raise DegreeError(f"form '{psi.name}' does not supply first derivatives")
        metric = metric_jet(space, x)
        P = Dual(
            to_full(jet.value, n, k),
            np.moveaxis(to_full(np.moveaxis(jet.grad, -1, -2), n, k), -(k + 1), -1),
        )
        ginv = metric.dual_inverse()
        s = contract_forms(P, P, ginv, k)
        terms = [f"...ai{left}", f"...aj{right}"] + [f"...{a}{b}" for a, b in zip(left, right)]
        G = jet_einsum(",".join(terms) + "->...ij", P, P, *([ginv] * (k - 1))) / math.factorial(k - 1)

        zero = s.value <= 0.0
        if p < 2 and np.any(zero):
            raise SingularWeightError(f"|psi| = 0 with p = {p} < 2: weight |psi|^(p-2) is singular")
        safe = Dual(np.where(zero, 1.0, s.value), np.where(zero[..., None], 0.0, s.grad))
        w = safe ** ((p - 2.0) / 2.0)
        e = (safe ** (p / 2.0)) / p
        T = w.expand(2) * G - e.expand(2) * metric.dual_metric()
        T = (T + T.swap_last()) * 0.5
        mask = zero[..., None, None]
        return TensorJet(np.where(mask, 0.0, T.value), np.where(mask[..., None], 0.0, T.grad))

    return SymTensorField(space, components, name=f"T({psi.name})")


def covariant_divergence(space: ModelSpace, x: ChartPoint, jet: TensorJet) -> np.ndarray:
    """(div S)_j = g^ik (d_i S_kj - Gamma^l_ik S_lj - Gamma^l_ij S_kl)"""
    metric = metric_jet(space, x)
    gamma = christoffel_from_jet(metric)
    ginv, S = metric.ginv, jet.value
    derivative = np.einsum("...ik,...kji->...j", ginv, jet.grad, optimize=True)
    first = np.einsum("...ik,...lik,...lj->...j", ginv, gamma, S, optimize=True)
    second = np.einsum("...ik,...lij,...kl->...j", ginv, gamma, S, optimize=True)
    return derivative - first - second


def div_stress_direct(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                      x: ChartPoint) -> np.ndarray:
    """Covariant divergence of the forward-mode 1-jet of T, a covector (..., n)"""
    x = space.points(x)
    return covariant_divergence(space, x, stress_field(cfg, space, conn, psi).components(x))


def div_stress_identity(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField],
                        psi: BundleForm, x: ChartPoint) -> np.ndarray:
    """
    div T from -(<delta(w psi), iota_{e_j} psi> + w <iota_{e_j} d psi, psi>) in the frame

    Returns coordinate components (..., n).
    """
    _check_config(cfg, space, psi)
    local = local_calculus(space, conn, psi, x)
    n, k, p = space.dim, psi.degree, cfg.p
    frame = local.frame
    psi_hat = to_frame(local.full, frame, k)
    s = np.sum(psi_hat ** 2, axis=tuple(range(psi_hat.ndim - k - 1, psi_hat.ndim))) / math.factorial(k)
    w, _ = _weights(s, p)

    rest = SLOTS[1:k]
    weighted_hat = to_frame(weighted_codifferential_full(local, p), frame, k - 1)
    first = np.einsum(f"...a{rest},...aj{rest}->...j", weighted_hat, psi_hat, optimize=True)
    first = first / math.factorial(k - 1)

    if k < n:
        d_hat = to_frame(exterior_full(local), frame, k + 1)
        slots = SLOTS[:k]
        second = np.einsum(f"...aj{slots},...a{slots}->...j", d_hat, psi_hat, optimize=True)
        second = w[..., None] * second / math.factorial(k)
    else:
        second = np.zeros_like(first)

    return np.einsum("...ju,...j->...u", local.coframe, -(first + second))


def contraction_divergence_residual(space: ModelSpace, S: SymTensorField, X: VectorField,
                                    x: ChartPoint) -> np.ndarray:
    """|div(iota_X S) - <S, nabla X^flat> - iota_X div S| per point"""
    x = space.points(x)
    metric = metric_jet(space, x)
    gamma = christoffel_from_jet(metric)
    s_jet, x_jet = S.components(x), X.components(x)
    Sv, Xv = s_jet.value, x_jet.value

    Y = np.einsum("...k,...kj->...j", Xv, Sv)
    dY = np.einsum("...kc,...kj->...jc", x_jet.grad, Sv) + np.einsum("...k,...kjc->...jc", Xv, s_jet.grad)
    lhs = np.einsum("...cj,...jc->...", metric.ginv, dY) - np.einsum(
        "...cj,...lcj,...l->...", metric.ginv, gamma, Y, optimize=True
    )

    flat = np.einsum("...jk,...k->...j", metric.g, Xv)
    nabla_flat = (
        np.einsum("...jkc,...k->...cj", metric.dg, Xv)
        + np.einsum("...jk,...kc->...cj", metric.g, x_jet.grad)
        - np.einsum("...lcj,...l->...cj", gamma, flat)
    )
    rhs = pair_tensors(metric.ginv, Sv, nabla_flat) + np.einsum(
        "...j,...j->...", Xv, covariant_divergence(space, x, s_jet)
    )
    return np.abs(lhs - rhs)


def random_symmetric_tensor_field(space: ModelSpace, rng: np.random.Generator, poly_degree: int = 2,
                                  scale: float = 1.0) -> SymTensorField:
    field = PolynomialField.random((space.dim, space.dim), space.origin(), rng, poly_degree, scale)

    def components(x):
        value, grad, _ = field(x)
        return TensorJet(
            0.5 * (value + np.swapaxes(value, -1, -2)),
            0.5 * (grad + np.swapaxes(grad, -2, -3)),
        )

    return SymTensorField(space, components, name="polynomial")


def random_vector_field(space: ModelSpace, rng: np.random.Generator, poly_degree: int = 2,
                        scale: float = 1.0) -> VectorField:
    field = PolynomialField.random((space.dim,), space.origin(), rng, poly_degree, scale)

    def components(x):
        value, grad, _ = field(x)
        return VectorJet(value, grad)

    return VectorField(space, components, name="polynomial")


def _check_perturbation(g: np.ndarray, h: np.ndarray, step: float):
    for t in (-step, step):
        if np.any(np.linalg.eigvalsh(g + t * h)[..., 0] <= 0):
            raise MetricError(f"g + t h is not positive definite at t = {t:g}")


def metric_variation_residual(cfg: EnergyConfig, space: ModelSpace, conn: Optional[ConnectionField],
                              psi: BundleForm, x: ChartPoint, h: np.ndarray,
                              step: float = 1e-4) -> np.ndarray:
    """
    |d/dt e_{g+th}(psi) dvol_{g+th} at t=0 - <-T/2, h>_g dvol_g| per point

    Components of psi are held fixed while the metric varies.

    Raises:
        DomainError: h is not symmetric
        MetricError: g + t h fails to be positive definite within the step
    """
    _check_config(cfg, space, psi)
    x = space.points(x)
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape[:-1] + (space.dim, space.dim))
    if not np.allclose(h, np.swapaxes(h, -1, -2), atol=1e-14):
        raise DomainError("metric perturbation h must be symmetric")
    metric = metric_jet(space, x)
    _check_perturbation(metric.g, h, step)
    value = psi.components(x).value
    k, p = psi.degree, cfg.p

    def density(t):
        g_t = metric.g + t * h
        s = inner_product(space, x, value, value, k, ginv=np.linalg.inv(g_t))
        return np.maximum(s, 0.0) ** (p / 2.0) / p * np.sqrt(np.linalg.det(g_t))

    derivative = richardson_derivative(density, 0.0, step)
    T = stress_tensor(cfg, space, conn, psi, x)
    expected = -0.5 * pair_tensors(metric.ginv, T, h) * metric.sqrt_det
    return np.abs(derivative - expected)


def volume_variation_residual(space: ModelSpace, x: ChartPoint, h: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """|d/dt dvol_{g+th} - (1/2) tr_g h dvol_g| per point"""
    x = space.points(x)
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape[:-1] + (space.dim, space.dim))
    metric = metric_jet(space, x)
    _check_perturbation(metric.g, h, step)
    derivative = richardson_derivative(lambda t: np.sqrt(np.linalg.det(metric.g + t * h)), 0.0, step)
    expected = 0.5 * np.einsum("...ij,...ij->...", metric.ginv, h) * metric.sqrt_det
    return np.abs(derivative - expected)


@dataclass(frozen=True)
class RadialTerms:
    """Pointwise ingredients of the monotonicity identity at distance r from x0"""
    r: np.ndarray
    energy: np.ndarray
    radial_flux: np.ndarray  # |psi|^(p-2) |iota_{grad r} psi|^2
    hessian_pairing: np.ndarray  # <T, g - Hess(r^2/2)>_g
    closed_form: np.ndarray  # factor * ((kp - n + 1) e - radial_flux)


def radial_terms(cfg: EnergyConfig, space: ModelSpace, psi: BundleForm, x0: ChartPoint,
                 x: ChartPoint) -> RadialTerms:
    """Hessian pairing computed directly and from the hyperbolic closed form"""
    _check_config(cfg, space, psi)
    x = space.points(x)
    k, p, n = psi.degree, cfg.p, space.dim
    value = psi.components(x).value
    metric = metric_jet(space, x)
    s = np.maximum(inner_product(space, x, value, value, k, ginv=metric.ginv), 0.0)
    w, e = _weights(s, p)
    dist = distance_jet(space, x0, x)
    along = interior(space, dist.gradient, value, k)
    flux = w * inner_product(space, x, along, along, k - 1, ginv=metric.ginv)
    comparison = hessian_half_r2(space, x0, x)
    T = stress_tensor(cfg, space, None, psi, x)
    direct = pair_tensors(metric.ginv, T, comparison.comparison)
    closed = comparison.factor * ((k * p - (n - 1)) * e - flux)
    return RadialTerms(r=dist.r, energy=e, radial_flux=flux, hessian_pairing=direct, closed_form=closed)


def hessian_pairing(cfg: EnergyConfig, space: ModelSpace, psi: BundleForm, x0: ChartPoint,
                    x: ChartPoint) -> Tuple[np.ndarray, np.ndarray]:
    """(<T, g - Hess(r^2/2)>_g, closed-form value) at each point"""
    terms = radial_terms(cfg, space, psi, x0, x)
    return terms.hessian_pairing, terms.closed_form


def scaling_lower_bound(cfg: EnergyConfig, space: ModelSpace, psi: BundleForm, x0: ChartPoint,
                        x: ChartPoint, bounds: GeometryBounds) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hessian pairing and its lower bound from the comparison constants

    bound = (kp L- - (n-1) U)_- R^2 e - L- r^2 |psi|^(p-2) |iota_{grad r} psi|^2
    with L- = min(lambda_lower, 0), U = lambda_upper and R the bounds radius;
    valid for points with r <= R.
    """
    terms = radial_terms(cfg, space, psi, x0, x)
    lower = min(bounds.lambda_lower, 0.0)
    coefficient = min(cfg.k * cfg.p * lower - (space.dim - 1) * bounds.lambda_upper, 0.0)
    bound = coefficient * bounds.radius ** 2 * terms.energy - lower * terms.r ** 2 * terms.radial_flux
    return terms.hessian_pairing, bound
