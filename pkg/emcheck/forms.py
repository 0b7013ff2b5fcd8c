"""
Bundle-valued differential forms

A k-form with values in a rank-m bundle is stored compactly at each point as
an array (..., m, C(n, k)) of components over increasing multi-indices in the
coordinate coframe. Full antisymmetric arrays (..., m, n, ..., n) are produced
on demand through cached expansion matrices. Fields carry 2-jets: value,
coordinate gradient (trailing axis) and coordinate Hessian (two trailing axes).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from emcheck.errors import DegreeError, DomainError
from emcheck.jets import einsum as jet_einsum
from emcheck.jets import fd_gradient, fd_hessian
from emcheck.manifold import ChartPoint, ModelSpace, metric_jet

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

# einsum letters for form slots; lower case for one operand, upper case for its partner
SLOTS = "pqrstuvw"
PARTNER_SLOTS = "PQRSTUVW"


# ---------------------------------------------------------------------------
# Multi-index combinatorics
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> Tuple[MultiIndex, ...]:
    """Increasing k-multi-indices over axes 0..n-1 in lexicographic order"""
    if not 0 <= k <= n:
        raise DegreeError(f"degree k={k} outside [0, {n}]")
    return tuple(itertools.combinations(range(n), k))


def reorder_sign(indices: Sequence[int]) -> Tuple[int, MultiIndex]:
    """
    Sign of the permutation sorting ``indices`` together with the sorted tuple

    Returns sign 0 when an index repeats.
    """
    items = list(indices)
    if len(set(items)) < len(items):
        return 0, tuple(sorted(items))
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


@lru_cache(maxsize=None)
def _expansion(n: int, k: int) -> np.ndarray:
    basis = multi_indices(n, k)
    table = np.zeros((len(basis), n ** k))
    for c, index in enumerate(basis):
        for perm in itertools.permutations(range(k)):
            target = tuple(index[q] for q in perm)
            flat = int(np.ravel_multi_index(target, (n,) * k)) if k else 0
            table[c, flat] = reorder_sign(perm)[0]
    table.flags.writeable = False
    return table


@lru_cache(maxsize=None)
def _positions(n: int, k: int) -> np.ndarray:
    basis = multi_indices(n, k)
    if k == 0:
        return np.zeros(1, dtype=int)
    return np.array([np.ravel_multi_index(index, (n,) * k) for index in basis])


def to_full(compact: np.ndarray, n: int, k: int) -> np.ndarray:
    """Compact components (..., C(n,k)) to the full antisymmetric array (..., n, ..., n)"""
    flat = compact @ _expansion(n, k)
    return flat.reshape(compact.shape[:-1] + (n,) * k)


def to_compact(full: np.ndarray, n: int, k: int) -> np.ndarray:
    """Full antisymmetric array (..., n, ..., n) to components over increasing indices"""
    lead = full.shape[:full.ndim - k]
    flat = full.reshape(lead + (n ** k,))
    return flat[..., _positions(n, k)]


@lru_cache(maxsize=None)
def _wedge_table(n: int, k1: int, k2: int) -> np.ndarray:
    left = multi_indices(n, k1)
    right = multi_indices(n, k2)
    position = {index: c for c, index in enumerate(multi_indices(n, k1 + k2))}
    table = np.zeros((len(left), len(right), len(position)))
    for a, first in enumerate(left):
        for b, second in enumerate(right):
            sign, merged = reorder_sign(first + second)
            if sign:
                table[a, b, position[merged]] = sign
    table.flags.writeable = False
    return table


@lru_cache(maxsize=None)
def _interior_table(n: int, k: int) -> np.ndarray:
    position = {index: c for c, index in enumerate(multi_indices(n, k))}
    lower = multi_indices(n, k - 1)
    table = np.zeros((n, len(position), len(lower)))
    for i in range(n):
        for j, rest in enumerate(lower):
            sign, merged = reorder_sign((i,) + rest)
            if sign:
                table[i, position[merged], j] = sign
    table.flags.writeable = False
    return table


def wedge_values(alpha: np.ndarray, beta: np.ndarray, n: int, k1: int, k2: int) -> np.ndarray:
    """
    Pointwise wedge of a scalar k1-form (..., C1) with a bundle-valued k2-form (..., m, C2)

    Raises:
        DegreeError: k1 + k2 > n
    """
    if k1 + k2 > n:
        raise DegreeError(f"wedge degree {k1}+{k2} exceeds dimension {n}")
    return np.einsum("...A,...mB,ABK->...mK", alpha, beta, _wedge_table(n, k1, k2), optimize=True)


def interior(space: ModelSpace, X: np.ndarray, psi: np.ndarray, degree: int) -> np.ndarray:
    """
    Interior product of vector components X (..., n) with a k-form value (..., m, C(n,k))

    Raises:
        DegreeError: degree 0 or a component count that does not match the degree
    """
    n = space.dim
    if degree < 1:
        raise DegreeError("interior product needs a form of degree k >= 1")
    _check_components(psi, n, degree)
    return np.einsum("...i,...mK,iKJ->...mJ", X, psi, _interior_table(n, degree), optimize=True)


def _check_components(psi: np.ndarray, n: int, k: int):
    expected = math.comb(n, k)
    if psi.shape[-1] != expected:
        raise DegreeError(
            f"a {k}-form on a {n}-manifold has {expected} components per fibre, got {psi.shape[-1]}"
        )


# ---------------------------------------------------------------------------
# Inner products and frames
# ---------------------------------------------------------------------------

def gram_matrix(ginv: np.ndarray, n: int, k: int) -> np.ndarray:
    """Gram determinants det(g^{i_r j_s}) for all pairs of increasing k-indices, (..., C, C)"""
    if k == 0:
        return np.ones(ginv.shape[:-2] + (1, 1))
    basis = np.array(multi_indices(n, k))
    block = ginv[..., basis[:, None, :, None], basis[None, :, None, :]]
    return np.linalg.det(block)


def inner_product(space: ModelSpace, x: ChartPoint, psi1: np.ndarray, psi2: np.ndarray,
                  degree: int, ginv: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Pointwise inner product of two bundle-valued k-forms

    Fibre metric is the identity; the form part uses the Gram determinant of
    the inverse metric. ``ginv`` overrides the metric of the space.

    Raises:
        DegreeError: mismatched shapes or degree
    """
    n = space.dim
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    if psi1.shape[-2:] != psi2.shape[-2:]:
        raise DegreeError(f"inner product of mismatched forms {psi1.shape} and {psi2.shape}")
    _check_components(psi1, n, degree)
    if ginv is None:
        ginv = metric_jet(space, x).ginv
    gram = gram_matrix(ginv, n, degree)
    return np.einsum("...aI,...aJ,...IJ->...", psi1, psi2, gram, optimize=True)


def norm_squared(space: ModelSpace, x: ChartPoint, psi: np.ndarray, degree: int) -> np.ndarray:
    return inner_product(space, x, psi, psi, degree)


def contract_forms(alpha, beta, ginv, k: int, alpha_lead: str = "", beta_lead: str = ""):
    """
    Pairing of full arrays through ginv on each form slot, divided by k!

    ``alpha`` has axes (..., *alpha_lead, a, slots) and ``beta`` has
    (..., *beta_lead, a, slots); lead letters are kept in the output. Dual
    operands propagate derivatives.
    """
    left = SLOTS[:k]
    right = PARTNER_SLOTS[:k]
    terms = [f"...{alpha_lead}a{left}", f"...{beta_lead}a{right}"]
    terms += [f"...{s}{t}" for s, t in zip(left, right)]
    spec = ",".join(terms) + f"->...{alpha_lead}{beta_lead}"
    return jet_einsum(spec, alpha, beta, *([ginv] * k)) / math.factorial(k)


@dataclass(frozen=True)
class Frame:
    """Orthonormal frame rows e_i^mu and dual coframe rows omega^i_mu"""
    frame: np.ndarray
    coframe: np.ndarray


def orthonormal_frame(space: ModelSpace, x: ChartPoint, rotation: Optional[np.ndarray] = None) -> Frame:
    """
    Diagonal orthonormal frame e_i = sigma * d_i, optionally rotated by an orthogonal matrix

    Raises:
        DomainError: rotation is not orthogonal
    """
    x = space.points(x)
    n = space.dim
    sigma = space.conformal_factor(x)[..., None, None]
    base = np.eye(n) if rotation is None else np.asarray(rotation, dtype=float)
    if rotation is not None and not np.allclose(base @ base.T, np.eye(n), atol=1e-12):
        raise DomainError("frame rotation must be an orthogonal matrix")
    return Frame(frame=sigma * base, coframe=base / sigma)


def to_frame(full: np.ndarray, frame: np.ndarray, k: int) -> np.ndarray:
    """Evaluate every slot of a full array (..., a, slots) on the frame vectors"""
    out = full
    for s in range(k):
        slots = SLOTS[:k]
        renamed = slots[:s] + "i" + slots[s + 1:]
        out = np.einsum(f"...a{slots},...i{slots[s]}->...a{renamed}", out, frame, optimize=True)
    return out


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BundleSpec:
    """Fibre of E; the fibre metric is the identity in the working gauge"""
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise DegreeError(f"bundle rank must be at least 1, got {self.rank}")


@dataclass(frozen=True)
class FormJet:
    """Pointwise jet of all components: value (..., m, C), grad (..., m, C, n), hess (..., m, C, n, n)"""
    value: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None


@dataclass(frozen=True)
class BundleForm:
    """
    A bundle-valued k-form field

    ``components`` maps chart points (..., n) to a FormJet; it must be pure so
    that it can be evaluated from several threads.
    """
    degree: int
    bundle: BundleSpec
    space: ModelSpace
    components: Callable[[np.ndarray], FormJet]
    name: str = ""

    def __post_init__(self):
        if not 0 <= self.degree <= self.space.dim:
            raise DegreeError(f"degree {self.degree} outside [0, {self.space.dim}]")

    @property
    def rank(self) -> int:
        return self.bundle.rank

    @property
    def component_count(self) -> int:
        return self.rank * math.comb(self.space.dim, self.degree)

    def jet(self, x) -> FormJet:
        return self.components(self.space.points(x))

    def value(self, x) -> np.ndarray:
        return self.jet(x).value


@dataclass(frozen=True)
class ConnectionJet:
    """A_i matrices per coordinate direction: value (..., n, m, m), grad (..., n, m, m, n), hess (..., n, m, m, n, n)"""
    value: np.ndarray
    grad: np.ndarray
    hess: Optional[np.ndarray] = None


@dataclass(frozen=True)
class ConnectionField:
    """Metric connection on a trivialized bundle, given by skew matrices A_i with jets"""
    dim: int
    rank: int
    coefficients: Callable[[np.ndarray], ConnectionJet]
    name: str = ""

    @classmethod
    def trivial(cls, dim: int, rank: int) -> "ConnectionField":
        def coefficients(x):
            lead = x.shape[:-1]
            return ConnectionJet(
                value=np.zeros(lead + (dim, rank, rank)),
                grad=np.zeros(lead + (dim, rank, rank, dim)),
                hess=np.zeros(lead + (dim, rank, rank, dim, dim)),
            )
        return cls(dim, rank, coefficients, name="trivial")

    def jet(self, x) -> ConnectionJet:
        return self.coefficients(np.asarray(x, dtype=float))

    def skew_residual(self, x) -> float:
        A = self.jet(x).value
        return float(np.max(np.abs(A + np.swapaxes(A, -1, -2)), initial=0.0))


def resolve_connection(conn: Optional[ConnectionField], psi: BundleForm) -> ConnectionField:
    """Default to the trivial connection and check that ranks agree"""
    if conn is None:
        return ConnectionField.trivial(psi.space.dim, psi.rank)
    if conn.rank != psi.rank or conn.dim != psi.space.dim:
        raise DegreeError(
            f"connection of rank {conn.rank} on dimension {conn.dim} does not act on "
            f"a rank-{psi.rank} form over {psi.space.label}"
        )
    return conn


@dataclass(frozen=True)
class PolynomialField:
    """
    Componentwise cubic polynomial about ``center`` with exact 2-jets

    Coefficient arrays carry the component shape in front:
    constant S, linear S+(n,), quadratic S+(n, n), cubic S+(n, n, n), the last
    two fully symmetric.
    """
    center: np.ndarray
    constant: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray
    cubic: np.ndarray

    @classmethod
    def random(cls, shape: Tuple[int, ...], center: np.ndarray, rng: np.random.Generator,
               degree: int = 2, scale: float = 1.0) -> "PolynomialField":
        center = np.asarray(center, dtype=float)
        n = center.shape[-1]
        constant = scale * rng.standard_normal(shape)
        linear = scale * rng.standard_normal(shape + (n,)) if degree >= 1 else np.zeros(shape + (n,))
        quadratic = np.zeros(shape + (n, n))
        cubic = np.zeros(shape + (n, n, n))
        if degree >= 2:
            raw = scale * rng.standard_normal(shape + (n, n))
            quadratic = 0.5 * (raw + np.swapaxes(raw, -1, -2))
        if degree >= 3:
            raw = scale * rng.standard_normal(shape + (n, n, n))
            axes = len(shape)
            cubic = sum(
                np.transpose(raw, tuple(range(axes)) + tuple(axes + q for q in perm))
                for perm in itertools.permutations(range(3))
            ) / 6.0
        return cls(center, constant, linear, quadratic, cubic)

    def __call__(self, x: np.ndarray):
        shape = self.constant.shape
        n = self.center.shape[-1]
        size = int(np.prod(shape, dtype=int))
        c0 = self.constant.reshape(size)
        c1 = self.linear.reshape(size, n)
        c2 = self.quadratic.reshape(size, n, n)
        c3 = self.cubic.reshape(size, n, n, n)
        z = x - self.center
        lead = x.shape[:-1]
        cz = np.einsum("fijk,...k->...fij", c3, z, optimize=True)
        hess = c2 + cz
        grad = c1 + np.einsum("...fij,...j->...fi", c2 + 0.5 * cz, z, optimize=True)
        inner = c1 + np.einsum("...fij,...j->...fi", 0.5 * c2 + cz / 6.0, z, optimize=True)
        value = c0 + np.einsum("...fi,...i->...f", inner, z, optimize=True)
        return (
            value.reshape(lead + shape),
            grad.reshape(lead + shape + (n,)),
            hess.reshape(lead + shape + (n, n)),
        )


def polynomial_form(space: ModelSpace, degree: int, rank: int, rng: np.random.Generator,
                    poly_degree: int = 2, scale: float = 1.0,
                    center: Optional[np.ndarray] = None) -> BundleForm:
    """Random polynomial bundle-valued form with exact jets"""
    center = space.origin() if center is None else np.asarray(center, dtype=float)
    field = PolynomialField.random((rank, math.comb(space.dim, degree)), center, rng, poly_degree, scale)

    def components(x):
        value, grad, hess = field(x)
        return FormJet(value, grad, hess)

    return BundleForm(degree, BundleSpec(rank), space, components, name="polynomial")


def constant_form(space: ModelSpace, degree: int, coefficients, name: str = "constant") -> BundleForm:
    """Form with constant coordinate components (m, C)"""
    coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))
    _check_components(coefficients, space.dim, degree)
    n = space.dim

    def components(x):
        lead = x.shape[:-1]
        value = np.broadcast_to(coefficients, lead + coefficients.shape).copy()
        return FormJet(
            value,
            np.zeros(value.shape + (n,)),
            np.zeros(value.shape + (n, n)),
        )

    return BundleForm(degree, BundleSpec(coefficients.shape[0]), space, components, name=name)


def zero_form(space: ModelSpace, degree: int, rank: int = 1) -> BundleForm:
    return constant_form(space, degree, np.zeros((rank, math.comb(space.dim, degree))), name="zero")


def polynomial_connection(space: ModelSpace, rank: int, rng: np.random.Generator,
                          poly_degree: int = 2, scale: float = 0.5,
                          center: Optional[np.ndarray] = None) -> ConnectionField:
    """Random skew connection matrices with exact 2-jets"""
    n = space.dim
    center = space.origin() if center is None else np.asarray(center, dtype=float)
    field = PolynomialField.random((n, rank, rank), center, rng, poly_degree, scale)

    def skew(a, lead_axes):
        return 0.5 * (a - np.swapaxes(a, lead_axes + 1, lead_axes + 2))

    def coefficients(x):
        value, grad, hess = field(x)
        lead = x.ndim - 1
        return ConnectionJet(skew(value, lead), skew(grad, lead), skew(hess, lead))

    return ConnectionField(n, rank, coefficients, name="polynomial")


@dataclass(frozen=True)
class ScalarJet:
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


@dataclass(frozen=True)
class BumpFunction:
    """exp(-1 / (1 - |x - c|^2 / rho^2)) inside the ball of radius rho, zero outside"""
    center: np.ndarray
    radius: float

    def __call__(self, x: np.ndarray) -> ScalarJet:
        z = x - np.asarray(self.center, dtype=float)
        n = z.shape[-1]
        rho2 = self.radius ** 2
        q = 1.0 - np.sum(z ** 2, axis=-1) / rho2
        inside = q > 0
        safe = np.where(inside, q, 1.0)
        value = np.where(inside, np.exp(-1.0 / safe), 0.0)
        dq = -2.0 * z / rho2
        grad = (value / safe ** 2)[..., None] * dq
        outer = dq[..., :, None] * dq[..., None, :]
        hess = value[..., None, None] * (
            (1.0 / safe ** 4 - 2.0 / safe ** 3)[..., None, None] * outer
            + (1.0 / safe ** 2)[..., None, None] * (-2.0 / rho2) * np.eye(n)
        )
        return ScalarJet(value, grad, hess)


def multiply_form(form: BundleForm, scalar: Callable[[np.ndarray], ScalarJet]) -> BundleForm:
    """Pointwise product f * psi with the Leibniz rule on 2-jets"""

    def components(x):
        f = scalar(x)
        psi = form.components(x)
        fv = f.value[..., None, None]
        value = fv * psi.value
        grad = f.grad[..., None, None, :] * psi.value[..., None] + fv[..., None] * psi.grad
        cross = f.grad[..., None, None, :, None] * psi.grad[..., None, :]
        hess = (
            f.hess[..., None, None, :, :] * psi.value[..., None, None]
            + cross + np.swapaxes(cross, -1, -2)
            + fv[..., None, None] * psi.hess
        )
        return FormJet(value, grad, hess)

    return BundleForm(form.degree, form.bundle, form.space, components, name=f"bump*{form.name}")


def bump_form(form: BundleForm, center: np.ndarray, radius: float) -> BundleForm:
    """Localize a form inside a ball of chart radius ``radius``"""
    return multiply_form(form, BumpFunction(np.asarray(center, dtype=float), float(radius)))


def add_forms(*forms: BundleForm) -> BundleForm:
    first = forms[0]
    for other in forms[1:]:
        if (other.degree, other.rank, other.space) != (first.degree, first.rank, first.space):
            raise DegreeError("only forms of equal degree, rank and base space can be added")

    def components(x):
        jets = [form.components(x) for form in forms]
        return FormJet(
            sum(j.value for j in jets),
            None if any(j.grad is None for j in jets) else sum(j.grad for j in jets),
            None if any(j.hess is None for j in jets) else sum(j.hess for j in jets),
        )

    return BundleForm(first.degree, first.bundle, first.space, components,
                      name="+".join(form.name for form in forms))


def wedge(alpha: BundleForm, beta: BundleForm) -> BundleForm:
    """
    Wedge product of a scalar-valued form with a bundle-valued form, with jets

    Raises:
        DegreeError: alpha is not scalar-valued, spaces differ, or degrees overflow
    """
    if alpha.rank != 1:
        raise DegreeError(f"left factor of a wedge must be scalar-valued, got rank {alpha.rank}")
    if alpha.space != beta.space:
        raise DegreeError("wedge factors live on different spaces")
    n = alpha.space.dim
    k1, k2 = alpha.degree, beta.degree
    if k1 + k2 > n:
        raise DegreeError(f"wedge degree {k1}+{k2} exceeds dimension {n}")
    table = _wedge_table(n, k1, k2)

    def components(x):
        a = alpha.components(x)
        b = beta.components(x)
        av, bv = a.value[..., 0, :], b.value
        value = np.einsum("...A,...mB,ABK->...mK", av, bv, table, optimize=True)
        grad = hess = None
        if a.grad is not None and b.grad is not None:
            ag = a.grad[..., 0, :, :]
            grad = (
                np.einsum("...Az,...mB,ABK->...mKz", ag, bv, table, optimize=True)
                + np.einsum("...A,...mBz,ABK->...mKz", av, b.grad, table, optimize=True)
            )
            if a.hess is not None and b.hess is not None:
                cross = np.einsum("...Az,...mBy,ABK->...mKzy", ag, b.grad, table, optimize=True)
                hess = (
                    np.einsum("...Azy,...mB,ABK->...mKzy", a.hess[..., 0, :, :, :], bv, table, optimize=True)
                    + cross + np.swapaxes(cross, -1, -2)
                    + np.einsum("...A,...mBzy,ABK->...mKzy", av, b.hess, table, optimize=True)
                )
        return FormJet(value, grad, hess)

    return BundleForm(k1 + k2, beta.bundle, beta.space, components, name=f"{alpha.name}^{beta.name}")


def finite_difference_form(form: BundleForm, step: Optional[float] = None) -> BundleForm:
    """Same values as ``form`` with jets from Richardson-extrapolated central differences"""

    def values(x):
        return form.components(x).value

    def components(x):
        h = None if step is None else np.full(x.shape[:-1], step)
        return FormJet(values(x), fd_gradient(values, x, h), fd_hessian(values, x, h))

    return BundleForm(form.degree, form.bundle, form.space, components, name=f"fd({form.name})")
