"""
Yang-Mills-Higgs fields

A gauge potential A = A_i^a X_a dx^i takes values in a Lie algebra with an
orthonormal basis X_a acting on a Higgs fibre V through skew matrices. The
curvature lives in the adjoint bundle, the Higgs field u is a V-valued 0-form,
and the pair carries density e = |F|^2/2 + |d u|^2/2 + W(|u|^2).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np

from emcheck.calculus import (
    LocalCalculus,
    codifferential_full,
    exterior_derivative_field,
    exterior_full,
    local_calculus,
)
from emcheck.errors import DegreeError, DomainError
from emcheck.forms import (
    BundleForm,
    BundleSpec,
    ConnectionField,
    ConnectionJet,
    FormJet,
    PolynomialField,
    constant_form,
    contract_forms,
    polynomial_form,
    to_compact,
    to_frame,
    to_full,
)
from emcheck.jets import Dual
from emcheck.jets import einsum as jet_einsum
from emcheck.manifold import ChartPoint, ModelSpace, distance_jet, hessian_half_r2, metric_jet
from emcheck.stress import TensorJet, covariant_divergence, pair_tensors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LieAlgebraAction:
    """
    Orthonormal Lie algebra basis acting on V

    ``basis[a]`` is the skew matrix of X_a on V. The algebra metric is
    <X, Y> = tr(X^T Y) / 2, so the basis must be orthonormal for it.
    """
    basis: np.ndarray
    name: str = ""

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise DegreeError(f"action basis must have shape (dim_g, dim_V, dim_V), got {basis.shape}")
        if not np.allclose(basis, -np.swapaxes(basis, 1, 2), atol=1e-14):
            raise DomainError("Lie algebra action matrices must be skew-symmetric")
        gram = 0.5 * np.einsum("avw,bvw->ab", basis, basis)
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=1e-12):
            raise DomainError("Lie algebra basis must be orthonormal for tr(X^T Y)/2")
        object.__setattr__(self, "basis", basis)
        constants = self.structure_constants
        commutators = np.einsum("avw,bwx->abvx", basis, basis) - np.einsum("bvw,awx->abvx", basis, basis)
        if not np.allclose(commutators, np.einsum("abc,cvw->abvw", constants, basis), atol=1e-12):
            raise DomainError("action matrices do not close under the commutator")

    @classmethod
    def so3(cls) -> "LieAlgebraAction":
        """so(3) in its defining representation, (L_a)_bc = -eps_abc"""
        eps = np.zeros((3, 3, 3))
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            eps[a, b, c] = 1.0
            eps[a, c, b] = -1.0
        return cls(-eps, name="so(3)")

    @classmethod
    def so2(cls) -> "LieAlgebraAction":
        return cls(np.array([[[0.0, -1.0], [1.0, 0.0]]]), name="so(2)")

    @property
    def dim_g(self) -> int:
        return self.basis.shape[0]

    @property
    def dim_V(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """f[a, b, c] with [X_a, X_b] = f_abc X_c"""
        commutators = (
            np.einsum("avw,bwx->abvx", self.basis, self.basis)
            - np.einsum("bvw,awx->abvx", self.basis, self.basis)
        )
        return 0.5 * np.einsum("abvw,cvw->abc", commutators, self.basis)

    @cached_property
    def adjoint_matrices(self) -> np.ndarray:
        """ad(X_a) on coefficient vectors: ad[a, c, b] = f_abc"""
        return np.transpose(self.structure_constants, (0, 2, 1))


@dataclass(frozen=True)
class GaugeJet:
    """Potential coefficients A_i^a: value (..., n, g), grad (..., n, g, n), hess (..., n, g, n, n)"""
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


@dataclass(frozen=True)
class GaugeField:
    action: LieAlgebraAction
    dim: int
    potential: Callable[[np.ndarray], GaugeJet]
    name: str = ""

    @classmethod
    def zero(cls, action: LieAlgebraAction, dim: int) -> "GaugeField":
        def potential(x):
            lead = x.shape[:-1] + (dim, action.dim_g)
            return GaugeJet(np.zeros(lead), np.zeros(lead + (dim,)), np.zeros(lead + (dim, dim)))
        return cls(action, dim, potential, name="flat")

    @classmethod
    def polynomial(cls, space: ModelSpace, action: LieAlgebraAction, rng: np.random.Generator,
                   poly_degree: int = 2, scale: float = 0.5) -> "GaugeField":
        poly = PolynomialField.random((space.dim, action.dim_g), space.origin(), rng, poly_degree, scale)

        def potential(x):
            return GaugeJet(*poly(x))

        return cls(action, space.dim, potential, name="polynomial")

    def jet(self, x) -> GaugeJet:
        return self.potential(np.asarray(x, dtype=float))

    def connection(self, matrices: np.ndarray, name: str) -> ConnectionField:
        """Connection A_i = A_i^a R_a for representation matrices R (g, m, m)"""

        def coefficients(x):
            jet = self.potential(x)
            return ConnectionJet(
                value=np.einsum("...ia,avw->...ivw", jet.value, matrices),
                grad=np.einsum("...iac,avw->...ivwc", jet.grad, matrices),
                hess=np.einsum("...iacd,avw->...ivwcd", jet.hess, matrices),
            )

        return ConnectionField(self.dim, matrices.shape[1], coefficients, name=name)

    def adjoint_connection(self) -> ConnectionField:
        return self.connection(self.action.adjoint_matrices, f"ad({self.name})")

    def higgs_connection(self) -> ConnectionField:
        return self.connection(self.action.basis, f"rho({self.name})")


def curvature_from_connection(space: ModelSpace, gauge: GaugeField, x: ChartPoint) -> np.ndarray:
    """
    Curvature F_ij = d_i A_j - d_j A_i + [A_i, A_j] in the adjoint basis

    Returns compact components (..., dim_g, C(n, 2)).
    """
    x = space.points(x)
    jet = gauge.jet(x)
    return to_compact(_curvature_full(gauge.action, jet), space.dim, 2)


def _curvature_full(action: LieAlgebraAction, jet: GaugeJet) -> np.ndarray:
    dA = np.einsum("...jci->...cij", jet.grad)  # d_i A_j^c
    bracket = np.einsum("abc,...ia,...jb->...cij", action.structure_constants, jet.value, jet.value)
    return dA - np.swapaxes(dA, -1, -2) + bracket


def curvature_form(space: ModelSpace, gauge: GaugeField) -> BundleForm:
    """Curvature as an adjoint-valued 2-form field with 1-jets"""
    if gauge.dim != space.dim:
        raise DegreeError(f"gauge field on dimension {gauge.dim} used over {space.label}")
    n = space.dim
    f = gauge.action.structure_constants

    def components(x):
        jet = gauge.potential(x)
        full = _curvature_full(gauge.action, jet)
        ddA = np.einsum("...jcid->...cijd", jet.hess)  # d_d d_i A_j^c
        bracket = np.einsum("abc,...iad,...jb->...cijd", f, jet.grad, jet.value) + np.einsum(
            "abc,...ia,...jbd->...cijd", f, jet.value, jet.grad
        )
        grad_full = ddA - np.swapaxes(ddA, -2, -3) + bracket
        grad = np.moveaxis(to_compact(np.moveaxis(grad_full, -1, -3), n, 2), -2, -1)
        return FormJet(to_compact(full, n, 2), grad, None)

    return BundleForm(2, BundleSpec(gauge.action.dim_g), space, components, name=f"F({gauge.name})")


def odot(action: LieAlgebraAction, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    """
    Moment pairing: (e1 (.) e2)^a_I = <X_a e1, (e2)_I>

    Args:
        e1: V-vectors (..., dim_V)
        e2: V-valued form values (..., dim_V, C)

    Raises:
        DegreeError: fibre sizes do not match the action
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if e1.shape[-1] != action.dim_V or e2.shape[-2] != action.dim_V:
        raise DegreeError(
            f"odot expects V-vectors of size {action.dim_V}, got {e1.shape} and {e2.shape}"
        )
    return np.einsum("avw,...w,...vI->...aI", action.basis, e1, e2)


@dataclass(frozen=True)
class Potential:
    """Higgs potential W(s) of s = |u|^2 with its derivative"""
    W: Callable[[np.ndarray], np.ndarray]
    dW: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    @classmethod
    def quartic(cls) -> "Potential":
        """W(s) = (s - 1)^2 / 4"""
        return cls(lambda s: 0.25 * (s - 1.0) ** 2, lambda s: 0.5 * (s - 1.0), name="quartic")

    @classmethod
    def zero(cls) -> "Potential":
        return cls(lambda s: np.zeros_like(s), lambda s: np.zeros_like(s), name="zero")


def higgs_field(space: ModelSpace, dim_V: int, rng: Optional[np.random.Generator] = None,
                constant: Optional[np.ndarray] = None, poly_degree: int = 2, scale: float = 0.5) -> BundleForm:
    """V-valued 0-form: constant when ``constant`` is given, random polynomial otherwise"""
    if constant is not None:
        return constant_form(space, 0, np.asarray(constant, dtype=float).reshape(dim_V, 1), name="higgs")
    return polynomial_form(space, 0, dim_V, rng, poly_degree=poly_degree, scale=scale)


@dataclass(frozen=True)
class YMHPair:
    """Gauge potential and Higgs field with a potential W over a model space"""
    space: ModelSpace
    gauge: GaugeField
    higgs: BundleForm
    potential: Potential = field(default_factory=Potential.quartic)
    name: str = ""

    def __post_init__(self):
        if self.gauge.dim != self.space.dim or self.higgs.space != self.space:
            raise DegreeError("gauge and Higgs fields must live on the pair's space")
        if self.higgs.degree != 0 or self.higgs.rank != self.gauge.action.dim_V:
            raise DegreeError(
                f"Higgs field must be a 0-form of rank {self.gauge.action.dim_V}, "
                f"got degree {self.higgs.degree} rank {self.higgs.rank}"
            )

    @property
    def action(self) -> LieAlgebraAction:
        return self.gauge.action

    @cached_property
    def adjoint_connection(self) -> ConnectionField:
        return self.gauge.adjoint_connection()

    @cached_property
    def higgs_connection(self) -> ConnectionField:
        return self.gauge.higgs_connection()

    @cached_property
    def curvature(self) -> BundleForm:
        return curvature_form(self.space, self.gauge)

    @cached_property
    def higgs_differential(self) -> BundleForm:
        """d^nabla u as a V-valued 1-form field with 1-jets"""
        return exterior_derivative_field(self.higgs_connection, self.higgs)


@dataclass(frozen=True)
class YMHLocal:
    curvature: LocalCalculus
    higgs: LocalCalculus
    u: np.ndarray  # (..., V)
    du: np.ndarray  # D_c u^v as (..., V, c)


def _local(pair: YMHPair, x: ChartPoint) -> YMHLocal:
    x = pair.space.points(x)
    F_local = local_calculus(pair.space, pair.adjoint_connection, pair.curvature, x)
    u_local = local_calculus(pair.space, pair.higgs_connection, pair.higgs, x)
    return YMHLocal(
        curvature=F_local,
        higgs=u_local,
        u=u_local.full,
        du=exterior_full(u_local),
    )


def _density_parts(pair: YMHPair, local: YMHLocal):
    ginv = local.curvature.ginv
    F2 = local.curvature.norm_squared()
    du2 = contract_forms(local.du, local.du, ginv, 1)
    W = pair.potential.W(np.sum(local.u ** 2, axis=-1))
    return F2, du2, W


def ymh_density(pair: YMHPair, x: ChartPoint) -> np.ndarray:
    """|F|^2/2 + |d u|^2/2 + W(|u|^2)"""
    F2, du2, W = _density_parts(pair, _local(pair, x))
    return 0.5 * F2 + 0.5 * du2 + W


def ymh_stress(pair: YMHPair, x: ChartPoint) -> np.ndarray:
    """
    sum_ij (<iota_i F, iota_j F> + <D_i u, D_j u>) w^i w^j - e g in coordinates
    """
    local = _local(pair, x)
    frame = local.curvature.frame
    F_hat = to_frame(local.curvature.full, frame, 2)
    du_hat = to_frame(local.du, frame, 1)
    F2, du2, W = _density_parts(pair, local)
    density = 0.5 * F2 + 0.5 * du2 + W
    T_hat = (
        np.einsum("...aiq,...ajq->...ij", F_hat, F_hat)
        + np.einsum("...vi,...vj->...ij", du_hat, du_hat)
        - density[..., None, None] * np.eye(pair.space.dim)
    )
    coframe = local.curvature.coframe
    T = np.einsum("...iu,...jv,...ij->...uv", coframe, coframe, T_hat, optimize=True)
    return 0.5 * (T + np.swapaxes(T, -1, -2))


def ymh_trace_expected(pair: YMHPair, x: ChartPoint) -> np.ndarray:
    """(4 - n) e - (|d u|^2 + 4 W(|u|^2)), the closed form of tr_g T"""
    F2, du2, W = _density_parts(pair, _local(pair, x))
    density = 0.5 * F2 + 0.5 * du2 + W
    return (4 - pair.space.dim) * density - (du2 + 4.0 * W)


def ymh_stress_jet(pair: YMHPair, x: ChartPoint) -> TensorJet:
    """Stress tensor with 1-jet by forward-mode differentiation of the coordinate formula"""
    space = pair.space
    x = space.points(x)
    n = space.dim
    metric = metric_jet(space, x)
    ginv = metric.dual_inverse()

    F_jet = pair.curvature.components(x)
    F = Dual(
        to_full(F_jet.value, n, 2),
        np.moveaxis(to_full(np.moveaxis(F_jet.grad, -1, -2), n, 2), -3, -1),
    )
    u_jet = pair.higgs.components(x)
    conn = pair.higgs_connection.jet(x)
    u = Dual(u_jet.value[..., 0], u_jet.grad[..., 0, :])
    du = Dual(
        np.moveaxis(u_jet.grad[..., 0, :], -1, -2) + np.einsum("...cvw,...w->...cv", conn.value, u.value),
        np.moveaxis(u_jet.hess[..., 0, :, :], -3, -2)
        + np.einsum("...cvwd,...w->...cvd", conn.grad, u.value)
        + np.einsum("...cvw,...wd->...cvd", conn.value, u.grad),
    )

    G_F = jet_einsum("...aiq,...ajQ,...qQ->...ij", F, F, ginv)
    G_u = jet_einsum("...iv,...jv->...ij", du, du)
    F2 = contract_forms(F, F, ginv, 2)
    du2 = jet_einsum("...iv,...jv,...ij->...", du, du, ginv)
    s = jet_einsum("...v,...v->...", u, u)
    W = s.apply(pair.potential.W, pair.potential.dW)
    density = F2 * 0.5 + du2 * 0.5 + W
    T = G_F + G_u - density.expand(2) * metric.dual_metric()
    T = (T + T.swap_last()) * 0.5
    return TensorJet(T.value, T.grad)


def _equations(pair: YMHPair, local: YMHLocal, x: ChartPoint) -> Tuple[np.ndarray, np.ndarray]:
    """Left-hand sides: delta F + u (.) d u as (..., g, c) and delta d u + 2 W'(|u|^2) u as (..., V)"""
    first = codifferential_full(local.curvature) + odot(pair.action, local.u, local.du)
    du_local = local_calculus(pair.space, pair.higgs_connection, pair.higgs_differential, x)
    s = np.sum(local.u ** 2, axis=-1)
    second = codifferential_full(du_local) + 2.0 * pair.potential.dW(s)[..., None] * local.u
    return first, second


def ymhe_residual(pair: YMHPair, x: ChartPoint) -> Tuple[np.ndarray, np.ndarray]:
    """Norms of the two Yang-Mills-Higgs equations at each point"""
    x = pair.space.points(x)
    local = _local(pair, x)
    first, second = _equations(pair, local, x)
    norm1 = np.sqrt(np.maximum(contract_forms(first, first, local.curvature.ginv, 1), 0.0))
    norm2 = np.sqrt(np.sum(second ** 2, axis=-1))
    return norm1, norm2


@dataclass(frozen=True)
class DivergenceRoutes:
    identity: np.ndarray
    direct: np.ndarray

    def relative_gap(self) -> np.ndarray:
        scale = 1.0 + np.maximum(np.abs(self.identity), np.abs(self.direct)).max(axis=-1)
        return np.max(np.abs(self.identity - self.direct), axis=-1) / scale


def ymh_div_stress(pair: YMHPair, x: ChartPoint) -> DivergenceRoutes:
    """div T through the equation identity and by direct covariant divergence"""
    x = pair.space.points(x)
    local = _local(pair, x)
    first, second = _equations(pair, local, x)
    frame = local.curvature.frame
    first_hat = to_frame(first, frame, 1)
    F_hat = to_frame(local.curvature.full, frame, 2)
    du_hat = to_frame(local.du, frame, 1)
    frame_div = -(
        np.einsum("...ai,...aji->...j", first_hat, F_hat)
        + np.einsum("...v,...vj->...j", second, du_hat)
    )
    identity = np.einsum("...ju,...j->...u", local.curvature.coframe, frame_div)
    direct = covariant_divergence(pair.space, x, ymh_stress_jet(pair, x))
    return DivergenceRoutes(identity=identity, direct=direct)


@dataclass(frozen=True)
class YMHRadialTerms:
    """Pointwise integrands of the Yang-Mills-Higgs monotonicity identity"""
    r: np.ndarray
    density: np.ndarray
    radial_flux: np.ndarray  # |iota_{grad r} F|^2 + |D_{grad r} u|^2
    bulk: np.ndarray  # <T, C> - iota_{r grad r} div T + |d u|^2 + 4 W


def ymh_radial_terms(pair: YMHPair, x0: ChartPoint, x: ChartPoint) -> YMHRadialTerms:
    space = pair.space
    x = space.points(x)
    local = _local(pair, x)
    ginv = local.curvature.ginv
    F2, du2, W = _density_parts(pair, local)
    dist = distance_jet(space, x0, x)

    along_F = np.einsum("...c,...acd->...ad", dist.gradient, local.curvature.full)
    along_u = np.einsum("...c,...vc->...v", dist.gradient, local.du)
    flux = np.einsum("...ad,...ae,...de->...", along_F, along_F, ginv) + np.sum(along_u ** 2, axis=-1)

    comparison = hessian_half_r2(space, x0, x).comparison
    div_T = covariant_divergence(space, x, ymh_stress_jet(pair, x))
    radial_div = dist.r * np.einsum("...c,...c->...", dist.gradient, div_T)
    bulk = pair_tensors(ginv, ymh_stress(pair, x), comparison) - radial_div + du2 + 4.0 * W
    return YMHRadialTerms(r=dist.r, density=0.5 * F2 + 0.5 * du2 + W, radial_flux=flux, bulk=bulk)
