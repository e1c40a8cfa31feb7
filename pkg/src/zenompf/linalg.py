"""Dense complex linear algebra used everywhere else.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. The
functions here validate their input, then hand off to the kernels in
:mod:`zenompf._kernels`.
"""
import contextlib
import contextvars
import itertools
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .errors import DimensionError, ValidationError

__all__ = [
    "QuadratureRule",
    "as_matrix",
    "count_ops",
    "gauss_legendre",
    "integrate_matrix",
    "mat_exp",
    "mat_pow",
    "spectral_norm",
]


# -- instrumentation ---------------------------------------------------------

_COUNTER = contextvars.ContextVar("zenompf_op_counter", default=None)


class OpCounter:
    """Tally of matrix exponentials and matrix products issued by this module."""

    def __init__(self):
        self.exponentials = 0
        self.multiplications = 0

    def __repr__(self):
        return (f"OpCounter(exponentials={self.exponentials}, "
                f"multiplications={self.multiplications})")


@contextlib.contextmanager
def count_ops():
    """Count :func:`mat_exp` calls and the products done inside :func:`mat_pow`.

    >>> with count_ops() as ops:
    ...     _ = mat_pow(np.eye(2), 5)
    >>> ops.multiplications
    3
    """
    counter = OpCounter()
    token = _COUNTER.set(counter)
    try:
        yield counter
    finally:
        _COUNTER.reset(token)


def _tally(exponentials=0, multiplications=0):
    counter = _COUNTER.get()
    if counter is not None:
        counter.exponentials += exponentials
        counter.multiplications += multiplications


# -- validation --------------------------------------------------------------

def as_matrix(a, square=False, name="matrix") -> np.ndarray:
    """Return ``a`` as a C-contiguous complex128 2-D array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


# -- exponentials and powers -------------------------------------------------

def mat_exp(a, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade approximant.

    The approximant degree (3, 5, 7, 9 or 13) and the number of squarings are
    picked from the 1-norm of ``a`` so that the backward error is at unit
    roundoff, which is below every admissible ``tol``.

    Parameters
    ----------
    a : array_like
        Square complex matrix.
    tol : float
        Requested backward-error bound, in ``(0, 1e-6]``.
    """
    if not (0.0 < tol <= 1e-6):
        raise ValidationError(f"tol must lie in (0, 1e-6], got {tol}")
    arr = as_matrix(a, square=True)
    _tally(exponentials=1)
    return _kernels.expm(arr)


def mat_pow(a, n: int) -> np.ndarray:
    """``a**n`` with O(log n) products. ``mat_pow(a, 0)`` is the identity."""
    if int(n) != n or n < 0:
        raise ValidationError(f"power must be a nonnegative integer, got {n}")
    n = int(n)
    arr = as_matrix(a, square=True)
    if n > 0:
        _tally(multiplications=n.bit_length() - 1 + bin(n).count("1") - 1)
    return _kernels.matpow(arr, n)


def spectral_norm(a) -> float:
    """Largest singular value."""
    arr = as_matrix(a)
    return float(np.linalg.norm(arr, 2))


# -- quadrature --------------------------------------------------------------

class QuadratureRule(NamedTuple):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self):
        return len(self.nodes)


@lru_cache(maxsize=64)
def _leggauss01(order):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre(order: int) -> QuadratureRule:
    """``order``-point Gauss-Legendre rule rescaled to [0, 1].

    Exact for polynomials of degree up to ``2 * order - 1``.
    """
    if int(order) != order or order < 1:
        raise ValidationError(f"quadrature order must be a positive integer, got {order}")
    return QuadratureRule(*_leggauss01(int(order)))


def integrate_matrix(f: Callable[..., np.ndarray], rule: QuadratureRule, dim: int = 1) -> np.ndarray:
    """Tensor-product quadrature of a matrix-valued integrand over [0, 1]^dim.

    ``f`` is called with ``dim`` scalar arguments and must return matrices of
    one fixed shape.
    """
    if dim not in (1, 2, 3):
        raise ValidationError(f"integration dimension must be 1, 2 or 3, got {dim}")
    acc = None
    shape = None
    idx = range(rule.order)
    for combo in itertools.product(idx, repeat=dim):
        w = 1.0
        for i in combo:
            w *= rule.weights[i]
        value = np.asarray(f(*(rule.nodes[i] for i in combo)), dtype=np.complex128)
        if shape is None:
            shape = value.shape
            acc = np.zeros(shape, dtype=np.complex128)
        elif value.shape != shape:
            raise DimensionError(
                f"integrand changed shape from {shape} to {value.shape}")
        acc += w * value
    return acc
