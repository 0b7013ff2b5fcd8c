"""
Exterior covariant calculus on bundle-valued forms

Covariant derivative (Levi-Civita tensored with the bundle connection),
exterior covariant derivative, codifferential in an orthonormal frame, the
weighted codifferential delta(|psi|^(p-2) psi) and the integration-by-parts
check between d and delta.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from emcheck.errors import DegreeError, DomainError, SingularWeightError, SupportLeakError
from emcheck.forms import (
    SLOTS,
    BundleForm,
    ConnectionField,
    FormJet,
    contract_forms,
    inner_product,
    orthonormal_frame,
    resolve_connection,
    to_compact,
    to_full,
)
from emcheck.manifold import ChartPoint, MetricJet, ModelSpace, christoffel_from_jet, metric_jet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocalCalculus:
    """
    Derivative data of one form at a batch of points

    Full arrays: ``full`` (..., a, slots) and ``nabla`` (..., c, a, slots)
    with the derivative direction c first.
    """
    space: ModelSpace
    degree: int
    metric: MetricJet
    full: np.ndarray
    nabla: np.ndarray
    frame: np.ndarray
    coframe: np.ndarray

    @property
    def ginv(self) -> np.ndarray:
        return self.metric.ginv

    def norm_squared(self) -> np.ndarray:
        return contract_forms(self.full, self.full, self.ginv, self.degree)

    def norm_squared_gradient(self) -> np.ndarray:
        """Coordinate partials of |psi|^2 from 2 <nabla_c psi, psi>"""
        return 2.0 * contract_forms(self.nabla, self.full, self.ginv, self.degree, alpha_lead="c")


def local_calculus(space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm, x: ChartPoint,
                   rotation: Optional[np.ndarray] = None) -> LocalCalculus:
    """Evaluate psi's jet and build its covariant derivative at the points x"""
    x = space.points(x)
    conn = resolve_connection(conn, psi)
    jet = psi.components(x)
    if jet.grad is None:
        raise DegreeError(f"form '{psi.name}' does not supply first derivatives")
    metric = metric_jet(space, x)
    gamma = christoffel_from_jet(metric)
    A = conn.jet(x).value
    nabla = _nabla_full(space.dim, psi.degree, jet, A, gamma)
    frame = orthonormal_frame(space, x, rotation)
    return LocalCalculus(
        space=space,
        degree=psi.degree,
        metric=metric,
        full=to_full(jet.value, space.dim, psi.degree),
        nabla=nabla,
        frame=frame.frame,
        coframe=frame.coframe,
    )


def _nabla_full(n: int, k: int, jet: FormJet, A: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    slots = SLOTS[:k]
    P = to_full(jet.value, n, k)
    dP = to_full(np.moveaxis(jet.grad, -1, -2), n, k)  # (..., a, c, slots)
    nabla = np.moveaxis(dP, -(k + 1), -(k + 2))  # (..., c, a, slots)
    nabla = nabla + np.einsum(f"...cab,...b{slots}->...ca{slots}", A, P, optimize=True)
    for s in range(k):
        shifted = slots[:s] + "l" + slots[s + 1:]
        nabla = nabla - np.einsum(
            f"...lc{slots[s]},...a{shifted}->...ca{slots}", gamma, P, optimize=True
        )
    return nabla


def _alternate(M: np.ndarray, k: int, trailing: int = 0) -> np.ndarray:
    """sum_s (-1)^s M with the leading slot moved to position s among k+1 slots"""
    first = M.ndim - trailing - (k + 1)
    out = M.copy()
    for s in range(1, k + 1):
        out = out + (-1) ** s * np.moveaxis(M, first, first + s)
    return out


def covariant_derivative(space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                         x: ChartPoint, direction: Optional[int] = None) -> np.ndarray:
    """
    Covariant derivative of psi in coordinate direction ``direction``

    Returns (..., m, C(n,k)), or (..., n, m, C(n,k)) for all directions when
    ``direction`` is None.
    """
    local = local_calculus(space, conn, psi, x)
    compact = to_compact(local.nabla, space.dim, psi.degree)
    if direction is None:
        return compact
    if not 0 <= direction < space.dim:
        raise DomainError(f"direction {direction} outside [0, {space.dim})")
    return compact[..., direction, :, :]


def exterior_full(local: LocalCalculus) -> np.ndarray:
    """d psi as a full (k+1)-array (..., a, slots)"""
    k = local.degree
    if k >= local.space.dim:
        raise DegreeError(f"exterior derivative of a {k}-form on a {local.space.dim}-manifold")
    ordered = np.moveaxis(local.nabla, -(k + 2), -(k + 1))  # (..., a, c, slots)
    return _alternate(ordered, k)


def exterior_covariant_derivative(space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm,
                                  x: ChartPoint) -> np.ndarray:
    """
    d^nabla psi at x, components (..., m, C(n, k+1))

    Raises:
        DegreeError: k = n
    """
    if psi.degree >= space.dim:
        raise DegreeError(f"exterior derivative of a {psi.degree}-form on a {space.dim}-manifold")
    local = local_calculus(space, conn, psi, x)
    return to_compact(exterior_full(local), space.dim, psi.degree + 1)


def codifferential_full(local: LocalCalculus) -> np.ndarray:
    """delta psi = -sum_i iota_{e_i} nabla_{e_i} psi as a full (k-1)-array"""
    k = local.degree
    if k < 1:
        raise DegreeError("codifferential of a 0-form")
    rest = SLOTS[1:k]
    return -np.einsum(
        f"...ic,...id,...cad{rest}->...a{rest}", local.frame, local.frame, local.nabla, optimize=True
    )


def codifferential(space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm, x: ChartPoint,
                   rotation: Optional[np.ndarray] = None) -> np.ndarray:
    """
    delta^nabla psi at x in the (optionally rotated) orthonormal frame

    Raises:
        DegreeError: k = 0
    """
    if psi.degree < 1:
        raise DegreeError("codifferential of a 0-form")
    local = local_calculus(space, conn, psi, x, rotation)
    return to_compact(codifferential_full(local), space.dim, psi.degree - 1)


def weighted_codifferential_full(local: LocalCalculus, p: float) -> np.ndarray:
    """
    delta(|psi|^(p-2) psi) = w delta psi - iota_{grad w} psi as a full array

    Raises:
        SingularWeightError: psi vanishes at some point and p < 2
    """
    k = local.degree
    s = local.norm_squared()
    zero = s <= 0.0
    if p < 2 and np.any(zero):
        raise SingularWeightError(f"|psi| = 0 with p = {p} < 2: weight |psi|^(p-2) is singular")
    safe = np.where(zero, 1.0, s)
    w = np.where(zero, 0.0, safe ** ((p - 2.0) / 2.0))
    if p == 2:
        w = np.ones_like(s)
    dw = (0.5 * (p - 2.0) * np.where(zero, 0.0, safe ** ((p - 4.0) / 2.0)))[..., None] * local.norm_squared_gradient()
    grad_w = np.einsum("...uc,...c->...u", local.ginv, dw)
    rest = SLOTS[1:k]
    interior = np.einsum(f"...u,...au{rest}->...a{rest}", grad_w, local.full, optimize=True)
    result = w[(...,) + (None,) * k] * codifferential_full(local) - interior
    if p == 2:
        return result
    return np.where(zero[(...,) + (None,) * k], 0.0, result)


def p_codifferential(space: ModelSpace, conn: Optional[ConnectionField], psi: BundleForm, x: ChartPoint,
                     p: float) -> np.ndarray:
    """
    delta^nabla(|psi|^(p-2) psi) at x via the product rule

    Raises:
        DomainError: p <= 1
        SingularWeightError: psi(x) = 0 and p < 2
    """
    if not p > 1:
        raise DomainError(f"exponent p must exceed 1, got {p}")
    if psi.degree < 1:
        raise DegreeError("codifferential of a 0-form")
    local = local_calculus(space, conn, psi, x)
    return to_compact(weighted_codifferential_full(local, p), space.dim, psi.degree - 1)


def exterior_derivative_field(conn: Optional[ConnectionField], psi: BundleForm) -> BundleForm:
    """
    d^nabla psi as a field with 1-jets

    Uses the torsion-free coordinate formula: the alternation of
    d_c psi + A_c psi, which needs the 2-jet of psi and the 1-jet of A.
    """
    space = psi.space
    n, k = space.dim, psi.degree
    if k >= n:
        raise DegreeError(f"exterior derivative of a {k}-form on a {n}-manifold")
    conn = resolve_connection(conn, psi)
    slots = SLOTS[:k]

    def components(x):
        jet = psi.components(x)
        if jet.hess is None:
            raise DegreeError(f"form '{psi.name}' does not supply second derivatives")
        A = conn.jet(x)
        P = to_full(jet.value, n, k)  # (..., a, S)
        dP = to_full(np.moveaxis(jet.grad, -1, -2), n, k)  # (..., a, c, S)
        ddP = to_full(np.moveaxis(jet.hess, -3, -1), n, k)  # (..., a, c, d, S)
        D = dP + np.einsum(f"...cab,...b{slots}->...ac{slots}", A.value, P, optimize=True)
        dD = (
            np.moveaxis(ddP, -(k + 1), -1)  # (..., a, c, S, d)
            + np.einsum(f"...cabd,...b{slots}->...ac{slots}d", A.grad, P, optimize=True)
            + np.einsum(f"...cab,...bd{slots}->...ac{slots}d", A.value, dP, optimize=True)
        )
        value = _alternate(D, k)
        grad = _alternate(dD, k, trailing=1)
        compact_grad = np.moveaxis(to_compact(np.moveaxis(grad, -1, -(k + 2)), n, k + 1), -2, -1)
        return FormJet(to_compact(value, n, k + 1), compact_grad, None)

    return BundleForm(k + 1, psi.bundle, space, components, name=f"d({psi.name})")


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box"""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise DomainError(f"box bounds must satisfy lower < upper, got {lower} and {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def around(cls, center, half_width: float) -> "Box":
        center = np.asarray(center, dtype=float)
        return cls(center - half_width, center + half_width)

    def tensor_rule(self, nodes: int):
        """Tensor-product Gauss-Legendre points (N, n) and weights (N,)"""
        t, w = np.polynomial.legendre.leggauss(nodes)
        half = 0.5 * (self.upper - self.lower)
        axes = [self.lower[i] + half[i] * (t + 1.0) for i in range(self.lower.size)]
        weights = [half[i] * w for i in range(self.lower.size)]
        points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.lower.size)
        total = np.ones(1)
        for wi in weights:
            total = np.multiply.outer(total, wi)
        return points, total.reshape(-1)

    def boundary_samples(self, per_axis: int = 9) -> np.ndarray:
        n = self.lower.size
        grid = [np.linspace(self.lower[i], self.upper[i], per_axis) for i in range(n)]
        faces = []
        for axis in range(n):
            for bound in (self.lower[axis], self.upper[axis]):
                axes = list(grid)
                axes[axis] = np.array([bound])
                faces.append(np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n))
        return np.concatenate(faces)


def adjointness_residual(space: ModelSpace, conn: Optional[ConnectionField], psi1: BundleForm,
                         psi2: BundleForm, box: Box, nodes: int = 64,
                         leak_tolerance: float = 1e-10) -> float:
    """
    |int <d psi1, psi2> dvol - int <psi1, delta psi2> dvol| over a coordinate box

    Raises:
        DegreeError: degrees are not (k-1, k) or ranks differ
        SupportLeakError: either field is non-negligible on the box boundary
    """
    if psi1.degree + 1 != psi2.degree or psi1.rank != psi2.rank:
        raise DegreeError(
            f"adjointness pairs degrees (k-1, k) of equal rank, got {psi1.degree} and {psi2.degree}"
        )
    boundary = space.points(box.boundary_samples())
    for label, psi in (("first", psi1), ("second", psi2)):
        leak = float(np.max(np.abs(psi.components(boundary).value), initial=0.0))
        if leak > leak_tolerance:
            raise SupportLeakError(
                f"{label} field reaches {leak:.3e} on the box boundary; it must be compactly supported inside"
            )

    points, weights = box.tensor_rule(nodes)
    points = space.points(points)
    k = psi2.degree
    d_psi1 = exterior_covariant_derivative(space, conn, psi1, points)
    delta_psi2 = codifferential(space, conn, psi2, points)
    dvol = weights * space.volume_density(points)
    lhs = float(np.sum(inner_product(space, points, d_psi1, psi2.components(points).value, k) * dvol))
    rhs = float(np.sum(inner_product(space, points, psi1.components(points).value, delta_psi2, k - 1) * dvol))
    logger.debug(f"Adjointness on {space.label}: <d psi1, psi2> = {lhs:.12e}, <psi1, delta psi2> = {rhs:.12e}")
    return abs(lhs - rhs)
