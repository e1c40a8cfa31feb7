"""Zeno product sequences and their expansion in 1/n.

The central object is ``(M exp(t L / n))^n`` and its distance to the effective
dynamics ``sum_j lambda_j^n exp(t P_j L P_j) P_j``. Besides the product itself
this module provides the explicit first-order term ``E_1`` for a projective
kick, the accompanying second-order bound, a Richardson fit that extracts
``E_1 .. E_K`` numerically, and quadrature checks of the two integral
identities the expansion is built on.

Sign of ``E_1``: with ``G = P L P`` and ``Q = 1 - P``,

    E_1(t) = t^2/2 int_0^1 e^{s t G} P L Q L P e^{(1-s) t G} ds + t e^{t G} P L Q

(both terms added). The variant with a relative minus sign leaves an O(1/n)
remainder; :func:`resolve_first_order_sign` measures both.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .errors import (FitDegenerateError, NumericalInstabilityError,
                     ValidationError)
from .linalg import (as_matrix, gauss_legendre, integrate_matrix, mat_exp,
                     mat_pow, spectral_norm)
from .quantum import superop_dim
from .spectral import SpectralSplit, one_to_one_lower, superop_norm

FIRST_ORDER_SIGN = +1
CONTRACTION_SLACK = 1e-8


@dataclass(frozen=True)
class ZenoStep:
    """Kick ``m``, generator ``generator`` and total time ``t``."""
    m: np.ndarray
    generator: np.ndarray
    t: float
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = as_matrix(self.m, square=True, name="M")
        gen = as_matrix(self.generator, square=True, name="L")
        if m.shape != gen.shape:
            raise ValidationError(f"M is {m.shape} but L is {gen.shape}")
        superop_dim(m)
        if not self.t >= 0:
            raise ValidationError("t must be nonnegative")
        if self.check:
            est = one_to_one_lower(m)
            if est > 1.0 + CONTRACTION_SLACK:
                raise ValidationError(
                    f"M is not a contraction in the trace norm (estimate {est:.12g})")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "t", float(self.t))

    @property
    def dim(self):
        return superop_dim(self.m)


@dataclass(frozen=True)
class EffectiveDynamics:
    """Terms ``(lambda_j, P_j, G_j = P_j L P_j)`` of the Zeno limit."""
    terms: Tuple[Tuple[complex, np.ndarray, np.ndarray], ...]

    @classmethod
    def from_split(cls, split: SpectralSplit, generator) -> "EffectiveDynamics":
        gen = as_matrix(generator, square=True, name="L")
        return cls(tuple((complex(lam), p, p @ gen @ p)
                         for lam, p in zip(split.eigenvalues, split.projectors)))

    @property
    def phases(self):
        return np.array([lam for lam, _, _ in self.terms])


def _dynamics(split_or_dyn, generator):
    if isinstance(split_or_dyn, EffectiveDynamics):
        return split_or_dyn
    return EffectiveDynamics.from_split(split_or_dyn, generator)


def zeno_product(step: ZenoStep, n: int) -> np.ndarray:
    """``(M exp(t L / n))^n`` with one exponential and binary powering."""
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    n = int(n)
    kick = step.m @ mat_exp((step.t / n) * step.generator)
    out = mat_pow(kick, n)
    bound = 10.0 * np.sqrt(step.dim)
    if not np.isfinite(out).all() or (np.linalg.norm(out) > bound and spectral_norm(out) > bound):
        raise NumericalInstabilityError(
            f"Zeno product at n = {n} has norm above {bound:g}; M or L is not contractive")
    return out


def effective_limit(split_or_dyn, generator, t: float, n: int) -> np.ndarray:
    """``sum_j lambda_j^n exp(t P_j L P_j) P_j``."""
    dyn = _dynamics(split_or_dyn, generator)
    return sum(lam ** n * (mat_exp(t * g) @ p) for lam, p, g in dyn.terms)


def zeno_error(step: ZenoStep, split: SpectralSplit, n: int, norm_kind: str = "spectral",
               product: Optional[np.ndarray] = None) -> float:
    """Norm of ``zeno_product(step, n) - effective_limit(split, L, t, n)``."""
    if product is None:
        product = zeno_product(step, n)
    limit = effective_limit(split, step.generator, step.t, n)
    return superop_norm(product - limit, norm_kind)


# -- explicit first order ----------------------------------------------------

def _require_projection(p, name="P"):
    p = as_matrix(p, square=True, name=name)
    if spectral_norm(p @ p - p) > 1e-10 * max(1.0, spectral_norm(p)):
        raise ValidationError(f"{name} is not idempotent")
    return p


def first_order_term(p, generator, t: float, order: int = 32,
                     sign: int = FIRST_ORDER_SIGN) -> np.ndarray:
    """First-order coefficient ``E_1(t)`` of the projective Zeno error.

    ``(P e^{tL/n})^n - e^{tPLP} P = E_1(t)/n + O(1/n^2)``. The integral is
    evaluated with an ``order``-point Gauss-Legendre rule.
    """
    p = _require_projection(p)
    gen = as_matrix(generator, square=True, name="L")
    ident = np.eye(p.shape[0])
    q = ident - p
    g = p @ gen @ p
    core = p @ gen @ (gen @ p - p @ gen) @ p  # P L [L, P] P = P L Q L P
    rule = gauss_legendre(order)
    left = _kernels.expm_scaled(np.ascontiguousarray(g), t * rule.nodes)
    right = _kernels.expm_scaled(np.ascontiguousarray(g), t * (1.0 - rule.nodes))
    integral = np.einsum("k,kij,jl,klm->im", rule.weights, left, core, right)
    boundary = mat_exp(t * g) @ p @ gen @ q
    return 0.5 * t ** 2 * integral + sign * t * boundary


def second_order_bound(p, generator, t: float) -> float:
    """Constant ``(1 + 2t^2 ||PL^2|| + t||LP|| (4 + t||LP||))^2 / 2`` of the 1/n^2 bound.

    Each norm is the larger of the spectral norm and the 1->1 lower estimate.
    """
    p = as_matrix(p, square=True, name="P")
    gen = as_matrix(generator, square=True, name="L")

    def nrm(a):
        return max(spectral_norm(a), one_to_one_lower(a))

    pl2 = nrm(p @ gen @ gen)
    lp = nrm(gen @ p)
    return 0.5 * (1.0 + 2.0 * t ** 2 * pl2 + t * lp * (4.0 + t * lp)) ** 2


def symmetric_boundary_term(step: ZenoStep, p, n: int) -> np.ndarray:
    """``(P e^{tL/n} P)^{n-1} P e^{tL/n} (1 - P)``.

    For a projective kick ``M = P`` this is exactly the difference between the
    plain and the symmetrized Zeno products.
    """
    p = _require_projection(p)
    e = mat_exp((step.t / n) * step.generator)
    return mat_pow(p @ e @ p, n - 1) @ p @ e @ (np.eye(p.shape[0]) - p)


# -- Richardson extraction ---------------------------------------------------

@dataclass
class RichardsonFit:
    """Outcome of fitting ``D(n) ~ sum_k sum_j lambda_j^n E_{k,j} / n^k``.

    ``terms[k-1, j]`` is ``E_{k,j}``; ``coefficients[k-1]`` is ``sum_j E_{k,j}``.
    ``residuals[i]`` is the norm of what remains of ``D(n_i)`` after removing
    the first ``K`` orders, and ``slope`` its log-log slope.
    """
    n_list: np.ndarray
    phases: np.ndarray
    terms: np.ndarray
    coefficients: List[np.ndarray]
    residuals: np.ndarray
    slope: float
    condition: float


def fit_inverse_powers(n_list: Sequence[int], matrices: Sequence[np.ndarray], num_terms: int,
                       phases: Sequence[complex] = (1.0,), cond_max: float = 1e10):
    """Least-squares fit of ``matrices[i] ~ sum_{k,j} phases_j^{n_i} X_{k,j} / n_i^k``.

    Columns are normalized before solving. Returns ``(X, condition)`` with
    ``X`` of shape ``(num_terms, len(phases)) + matrix shape``.
    """
    ns = np.asarray(n_list, dtype=float)
    phases = np.asarray(phases, dtype=np.complex128)
    if len(np.unique(ns)) != len(ns):
        raise ValidationError("n values must be distinct")
    stack = np.asarray(matrices, dtype=np.complex128)
    shape = stack.shape[1:]
    cols = []
    for k in range(1, num_terms + 1):
        for lam in phases:
            cols.append(lam ** ns / ns ** k)
    design = np.stack(cols, axis=1)
    if design.shape[0] < design.shape[1]:
        raise FitDegenerateError(
            f"{design.shape[1]} unknown coefficients but only {design.shape[0]} samples")
    scale = np.linalg.norm(design, axis=0)
    scaled = design / scale
    cond = float(np.linalg.cond(scaled))
    if not cond <= cond_max:
        raise FitDegenerateError(f"Richardson design matrix has condition number {cond:.3e}")
    sol, *_ = np.linalg.lstsq(scaled, stack.reshape(len(ns), -1), rcond=None)
    sol = (sol / scale[:, None]).reshape((num_terms, len(phases)) + shape)
    return sol, cond


def _distinct_phases(split: SpectralSplit, tol=1e-8):
    out = []
    for lam in split.eigenvalues:
        if all(abs(lam - o) > tol for o in out):
            out.append(complex(lam))
    return np.array(out) if out else np.array([1.0 + 0j])


def richardson_extract(step: ZenoStep, split: SpectralSplit, n_list: Sequence[int], k_order: int,
                       extra_terms: int = 2,
                       products: Optional[Dict[int, np.ndarray]] = None) -> RichardsonFit:
    """Extract ``E_1 .. E_K`` from Zeno errors sampled at ``n_list``.

    The fit carries ``extra_terms`` orders beyond ``K`` (as many as the data
    allow) to keep the kept coefficients free of truncation bias.
    """
    ns = np.array(sorted(set(int(n) for n in n_list)))
    if k_order < 1:
        raise ValidationError("K must be at least 1")
    if len(ns) < k_order + 2:
        raise ValidationError(f"need at least K+2 = {k_order + 2} distinct n values")
    products = {} if products is None else products
    diffs = []
    for n in ns:
        if n not in products:
            products[n] = zeno_product(step, n)
        diffs.append(products[n] - effective_limit(split, step.generator, step.t, n))
    phases = _distinct_phases(split)
    num_terms = max(k_order, min(k_order + extra_terms, len(ns) - 1))
    sol, cond = fit_inverse_powers(ns, diffs, num_terms, phases)
    kept = sol[:k_order]
    residuals = []
    for n, diff in zip(ns, diffs):
        model = sum(lam ** n * kept[k - 1, j] / n ** k
                    for k in range(1, k_order + 1) for j, lam in enumerate(phases))
        residuals.append(spectral_norm(diff - model))
    residuals = np.array(residuals)
    ok = residuals > 0
    slope = float(np.polyfit(np.log(ns[ok]), np.log(residuals[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    coeffs = [kept[k].sum(axis=0) for k in range(k_order)]
    return RichardsonFit(ns, phases, kept, coeffs, residuals, slope, cond)


def resolve_first_order_sign(step: ZenoStep, p, n_list: Sequence[int] = (32, 64, 128, 256),
                             order: int = 32) -> Dict[str, float]:
    """Log-log slopes of ``||Zeno - limit - E_1/n||`` for both sign conventions.

    The consistent convention decays like ``1/n^2`` (slope near -2); the other
    one stalls at ``1/n``.
    """
    p = _require_projection(p)
    g = p @ step.generator @ p
    limit = mat_exp(step.t * g) @ p
    ns = np.asarray(n_list, dtype=float)
    out = {}
    for label, sgn in (("plus", +1), ("minus", -1)):
        e1 = first_order_term(p, step.generator, step.t, order, sign=sgn)
        res = [spectral_norm(zeno_product(step, int(n)) - limit - e1 / n) for n in ns]
        out[label] = float(np.polyfit(np.log(ns), np.log(res), 1)[0])
    return out


# -- integral identities -----------------------------------------------------

def chernoff_residual(c, n: int, order: int = 32) -> float:
    """Quadrature residual of ``C^n - e^{n(C-1)} = -n(C-1)^2 int_0^1 s C_s^{n-1} e^{(1-s)n(C-1)} ds``.

    ``C_s = (1-s) 1 + s C``. Requires ``||C|| <= 1`` (spectral norm). The
    default ``order`` of 32 nodes suits n up to a few dozen; lower orders are
    accepted for convergence studies.
    """
    c = as_matrix(c, square=True, name="C")
    if spectral_norm(c) > 1.0 + 1e-12:
        raise ValidationError("C is not a contraction")
    if int(n) != n or n < 1:
        raise ValidationError("n must be a positive integer")
    n = int(n)
    ident = np.eye(c.shape[0], dtype=np.complex128)
    gen = c - ident
    lhs = mat_pow(c, n) - mat_exp(n * gen)
    rule = gauss_legendre(order)
    tails = _kernels.expm_scaled(np.ascontiguousarray(n * gen), 1.0 - rule.nodes)
    acc = np.zeros_like(ident)
    for s, w, tail in zip(rule.nodes, rule.weights, tails):
        acc += (w * s) * (_kernels.matpow(np.ascontiguousarray(ident + s * gen), n - 1) @ tail)
    rhs = -n * (gen @ gen) @ acc
    return spectral_norm(lhs - rhs)


def dunford_segal_residual(p, generator, t: float, s1: float, s2: float,
                           order: int = 16) -> float:
    """Quadrature residual of the Dunford-Segal identity for ``C(s) = P e^{sL} P``.

    Checks, on the range of ``P``,

        e^{(t/s1)(C(s2) - P)} - e^{t C'(0)}
          = t s2^2/s1 iiint e^{(1-u1)(t/s1)(C(s2)-P)}
                (u2 C''(u3 u2 s2) + (s2-s1)/s2^2 C'(0)) e^{u1 t C'(0)}

    with ``C'(0) = P L P`` and ``C''(s) = P L e^{sL} L P``, using an
    ``order``-point rule on every axis.
    """
    for name, val in (("t", t), ("s1", s1), ("s2", s2)):
        if not 0.0 < val <= 1.0:
            raise ValidationError(f"{name} must lie in (0, 1], got {val}")
    p = _require_projection(p)
    gen = as_matrix(generator, square=True, name="L")
    rule = gauss_legendre(order)
    c1 = p @ gen @ p
    c_s2 = p @ mat_exp(s2 * gen) @ p
    a = (t / s1) * (c_s2 - p)
    b = t * c1
    lhs = mat_exp(a) - mat_exp(b)

    lp, pl = gen @ p, p @ gen

    def inner(u2, u3):
        return u2 * (pl @ mat_exp((u3 * u2 * s2) * gen) @ lp)

    middle = integrate_matrix(inner, rule, dim=2) + ((s2 - s1) / s2 ** 2) * c1
    left = _kernels.expm_scaled(np.ascontiguousarray(a), 1.0 - rule.nodes)
    right = _kernels.expm_scaled(np.ascontiguousarray(b), rule.nodes)
    outer = np.einsum("k,kij,jl,klm->im", rule.weights, left, middle, right)
    rhs = t * (s2 ** 2 / s1) * outer
    return spectral_norm(p @ (lhs - rhs) @ p)
