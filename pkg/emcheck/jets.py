"""
Forward-mode first-order jets and finite-difference helpers

Dual carries a value array together with its partial derivatives along a
trailing axis, so formulas written once produce both the value and its
coordinate gradient. The finite-difference helpers supply oracle jets and
t-derivatives (central differences with Richardson extrapolation).
"""

import logging
import string
from typing import Callable, Optional, Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float]


class Dual:
    """
    Value with first derivatives: ``grad`` has shape ``value.shape + (d,)``

    Arithmetic follows the product and chain rules. Plain arrays and scalars
    are treated as constants.
    """

    __array_ufunc__ = None  # make ndarray operators defer to Dual

    def __init__(self, value: ArrayLike, grad: ArrayLike):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        if self.grad.shape[:-1] != self.value.shape:
            raise ValueError(
                f"gradient shape {self.grad.shape} does not extend value shape {self.value.shape}"
            )

    @classmethod
    def constant(cls, value: ArrayLike, ndirs: int) -> "Dual":
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros(value.shape + (ndirs,)))

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndirs(self) -> int:
        return self.grad.shape[-1]

    def __repr__(self):
        return f"Dual(shape={self.shape}, ndirs={self.ndirs})"

    def __neg__(self):
        return Dual(-self.value, -self.grad)

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.grad + other.grad)
        other = np.asarray(other, dtype=float)
        return Dual(self.value + other, np.broadcast_to(self.grad, (self.value + other).shape + (self.ndirs,)))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.grad * other.value[..., None] + self.value[..., None] * other.grad,
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.value * other, self.grad * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        return Dual(self.value / other, self.grad / other[..., None])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent: float):
        if exponent == 0:
            return Dual.constant(np.ones_like(self.value), self.ndirs)
        return self.apply(
            lambda v: v ** exponent,
            lambda v: exponent * v ** (exponent - 1),
        )

    def reciprocal(self) -> "Dual":
        return Dual(1.0 / self.value, -self.grad / (self.value ** 2)[..., None])

    def apply(self, f: Callable, df: Callable) -> "Dual":
        """Chain rule for an elementwise function with known derivative"""
        return Dual(f(self.value), df(self.value)[..., None] * self.grad)

    def expand(self, count: int) -> "Dual":
        """Append ``count`` singleton value axes so the Dual broadcasts like value[..., None, ...]"""
        index = (Ellipsis,) + (None,) * count
        return Dual(self.value[index], self.grad[index + (slice(None),)])

    def swap_last(self) -> "Dual":
        """Transpose the two trailing value axes"""
        return Dual(np.swapaxes(self.value, -1, -2), np.swapaxes(self.grad, -2, -3))


def value_of(x):
    return x.value if isinstance(x, Dual) else np.asarray(x, dtype=float)


def einsum(subscripts: str, *operands):
    """
    ``np.einsum`` with the product rule for Dual operands

    Subscripts must be explicit (contain ``->``). The derivative axis is
    appended to each Dual operand and to the output.
    """
    inputs, output = subscripts.split("->")
    terms = inputs.split(",")
    values = [value_of(op) for op in operands]
    value = np.einsum(subscripts, *values, optimize=True)

    duals = [pos for pos, op in enumerate(operands) if isinstance(op, Dual)]
    if not duals:
        return value

    free = next(c for c in string.ascii_letters if c not in subscripts)
    grad = None
    for pos in duals:
        spec_terms = list(terms)
        spec_terms[pos] += free
        args = list(values)
        args[pos] = operands[pos].grad
        part = np.einsum(",".join(spec_terms) + "->" + output + free, *args, optimize=True)
        grad = part if grad is None else grad + part
    return Dual(value, grad)


def inverse(matrix) -> Union[np.ndarray, Dual]:
    """Matrix inverse over the trailing two axes, d(M^-1) = -M^-1 dM M^-1"""
    if not isinstance(matrix, Dual):
        return np.linalg.inv(matrix)
    inv = np.linalg.inv(matrix.value)
    grad = -np.einsum("...ab,...bcz,...cd->...adz", inv, matrix.grad, inv, optimize=True)
    return Dual(inv, grad)


def central_difference(f: Callable[[float], ArrayLike], t: float, h: float):
    return (np.asarray(f(t + h)) - np.asarray(f(t - h))) / (2.0 * h)


def richardson_derivative(f: Callable[[float], ArrayLike], t: float = 0.0, step: float = 1e-4):
    """Central difference at steps h and h/2 combined to fourth order"""
    coarse = central_difference(f, t, step)
    fine = central_difference(f, t, step / 2.0)
    return fine + (fine - coarse) / 3.0


def five_point_derivative(f: Callable[[float], ArrayLike], t: float, step: float):
    """Fourth-order 5-point central difference"""
    return (
        np.asarray(f(t - 2 * step)) - 8 * np.asarray(f(t - step))
        + 8 * np.asarray(f(t + step)) - np.asarray(f(t + 2 * step))
    ) / (12.0 * step)


def default_step(x: np.ndarray) -> np.ndarray:
    """Per-point step h = 1e-3 (1 + |x|)"""
    return 1e-3 * (1.0 + np.linalg.norm(x, axis=-1))


def _expand(h: np.ndarray, ndim: int) -> np.ndarray:
    return h.reshape(h.shape + (1,) * (ndim - h.ndim))


def fd_gradient(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                step: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Richardson-extrapolated central-difference gradient of a vectorized field

    Args:
        fn: maps points (..., n) to values (..., *shape)
        x: evaluation points (..., n)
        step: per-point step, defaults to ``default_step(x)``

    Returns:
        Array (..., *shape, n) with the derivative axis last
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    batch = x.ndim - 1
    h0 = default_step(x) if step is None else np.broadcast_to(np.asarray(step, dtype=float), x.shape[:-1])
    eye = np.eye(n)

    def difference(h):
        shift = h[..., None, None] * eye
        delta = fn(x[..., None, :] + shift) - fn(x[..., None, :] - shift)
        delta = delta / (2.0 * _expand(h, delta.ndim))
        return np.moveaxis(delta, batch, -1)

    coarse = difference(h0)
    fine = difference(h0 / 2.0)
    return fine + (fine - coarse) / 3.0


def fd_hessian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
               step: Optional[np.ndarray] = None) -> np.ndarray:
    """Richardson-extrapolated central-difference Hessian, axes (..., *shape, n, n)"""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    batch = x.ndim - 1
    h0 = default_step(x) if step is None else np.broadcast_to(np.asarray(step, dtype=float), x.shape[:-1])
    eye = np.eye(n)

    def difference(h):
        hh = h[..., None, None, None]
        base = x[..., None, None, :]
        ei = eye[:, None, :]
        ej = eye[None, :, :]
        pp = fn(base + hh * (ei + ej))
        pm = fn(base + hh * (ei - ej))
        mp = fn(base + hh * (-ei + ej))
        mm = fn(base - hh * (ei + ej))
        delta = (pp - pm - mp + mm) / (4.0 * _expand(h, pp.ndim) ** 2)
        return np.moveaxis(np.moveaxis(delta, batch, -1), batch, -1)

    coarse = difference(h0)
    fine = difference(h0 / 2.0)
    return fine + (fine - coarse) / 3.0
