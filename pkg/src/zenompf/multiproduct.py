"""Multi-product Zeno formulas.

A weighted sum ``sum_l c_l (M e^{t L / n_l})^{n_l}`` with ``n_l = l p n``
cancels the error terms ``1/n .. 1/n^K`` of the plain Zeno product. The
weights solve a small Vandermonde system in ``1/l``.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConditioningError, InsufficientDataError, ValidationError
from .spectral import period_of_phases, superop_norm
from .zeno import EffectiveDynamics, ZenoStep, effective_limit, zeno_product

K_MAX = 8
_EPS = np.finfo(float).eps


# -- coefficients ------------------------------------------------------------

def vandermonde_coeffs_exact(k_order: int) -> List[Fraction]:
    """Exact rational solution of ``sum_l c_l / l^k = [k == 0]``, ``k = 0..K``."""
    if int(k_order) != k_order or k_order < 0:
        raise ValidationError(f"K must be a nonnegative integer, got {k_order}")
    size = int(k_order) + 1
    rows = [[Fraction(1, l ** k) for l in range(1, size + 1)] + [Fraction(int(k == 0))]
            for k in range(size)]
    for col in range(size):
        pivot = next(r for r in range(col, size) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        head = rows[col][col]
        rows[col] = [v / head for v in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return [rows[i][-1] for i in range(size)]


def closed_form_coeffs(k_order: int) -> List[Fraction]:
    """``c_l = (-1)^(K+1-l) l^(K+1) / (l! (K+1-l)!)``."""
    if int(k_order) != k_order or k_order < 0:
        raise ValidationError(f"K must be a nonnegative integer, got {k_order}")
    big = int(k_order) + 1
    return [Fraction((-1) ** (big - l) * l ** big, math.factorial(l) * math.factorial(big - l))
            for l in range(1, big + 1)]


def vandermonde_coeffs(k_order: int) -> List[float]:
    """Multi-product weights ``c_1 .. c_{K+1}`` as floats.

    Solved in exact rational arithmetic and checked against the closed form.
    Orders above 8 are refused; the float weights grow like ``e^K`` there and
    the cancellation they rely on eats the available precision.
    """
    if int(k_order) != k_order or k_order < 0:
        raise ValidationError(f"K must be a nonnegative integer, got {k_order}")
    if k_order > K_MAX:
        raise ConditioningError(
            f"K = {k_order} exceeds {K_MAX}; use vandermonde_coeffs_exact for rational weights")
    exact = vandermonde_coeffs_exact(k_order)
    closed = closed_form_coeffs(k_order)
    if exact != closed:  # pragma: no cover - both are exact
        raise ConditioningError("Vandermonde solve disagrees with the closed form")
    return [float(c) for c in exact]


def check_coefficients(coeffs: Sequence[float], k_order: int) -> Tuple[float, float]:
    """Defects ``|sum c - 1|`` and ``max_k |sum c_l / l^k|`` for ``k = 1..K``."""
    c = np.asarray(coeffs, dtype=float)
    ells = np.arange(1, len(c) + 1, dtype=float)
    d0 = abs(c.sum() - 1.0)
    dk = max((abs(np.sum(c / ells ** k)) for k in range(1, k_order + 1)), default=0.0)
    return float(d0), float(dk)


@dataclass(frozen=True)
class MPFScheme:
    """Weights, period and base substep count of a multi-product formula."""
    k_order: int
    coeffs: Tuple[float, ...]
    period: int = 1
    base_n: int = 1

    def __post_init__(self):
        if int(self.k_order) != self.k_order or self.k_order < 0:
            raise ValidationError("K must be a nonnegative integer")
        coeffs = tuple(float(c) for c in self.coeffs)
        if len(coeffs) != self.k_order + 1:
            raise ValidationError(f"need K+1 = {self.k_order + 1} coefficients, got {len(coeffs)}")
        if int(self.period) != self.period or self.period < 1:
            raise ValidationError("period must be a positive integer")
        if int(self.base_n) != self.base_n or self.base_n < 1:
            raise ValidationError("base_n must be a positive integer")
        d0, dk = check_coefficients(coeffs, self.k_order)
        if d0 > 1e-12:
            raise ValidationError(f"coefficients sum to {sum(coeffs)!r}, not 1")
        if dk > 1e-10:
            raise ValidationError(f"coefficients leave an order-k moment of {dk:.3e}")
        object.__setattr__(self, "coeffs", coeffs)

    def substeps(self, n: int) -> List[int]:
        """``n_l = l p n`` for ``l = 1..K+1``."""
        return [l * self.period * n for l in range(1, self.k_order + 2)]


def build_scheme(k_order: int, phases: Sequence[complex] = (1.0,), q_max: int = 64,
                 base_n: int = 1) -> MPFScheme:
    """Scheme of order ``K`` whose period is the common order of ``phases``."""
    p = period_of_phases(phases, q_max=q_max)
    return MPFScheme(k_order, tuple(vandermonde_coeffs(k_order)), p, base_n)


# -- evaluation --------------------------------------------------------------

def mpf_combine(product_fn: Callable[[int], np.ndarray], scheme: MPFScheme, n: int,
                cache: Optional[Dict[int, np.ndarray]] = None) -> np.ndarray:
    """``sum_l c_l product_fn(l p n)``, summed in increasing ``l``.

    ``cache`` maps substep counts to already computed products.
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    out = None
    for c, m in zip(scheme.coeffs, scheme.substeps(int(n))):
        if cache is not None and m in cache:
            prod = cache[m]
        else:
            prod = product_fn(m)
            if cache is not None:
                cache[m] = prod
        out = c * prod if out is None else out + c * prod
    return out


def mpf_evaluate(step: ZenoStep, scheme: MPFScheme, n: int,
                 cache: Optional[Dict[int, np.ndarray]] = None) -> np.ndarray:
    """Multi-product Zeno superoperator; ``K+1`` exponentials when uncached."""
    return mpf_combine(lambda m: zeno_product(step, m), scheme, n, cache)


def limit_for_scheme(split_or_dyn, generator, t: float, phase: str = "order") -> np.ndarray:
    """Target of a multi-product formula.

    ``"order"`` assumes ``lambda_j^p = 1`` and gives ``sum_j e^{t G_j} P_j``;
    ``"phased"`` keeps one factor of ``lambda_j``.
    """
    if phase == "order":
        return effective_limit(split_or_dyn, generator, t, 0)
    if phase == "phased":
        return effective_limit(split_or_dyn, generator, t, 1)
    raise ValidationError(f"unknown phase convention {phase!r}")


def mpf_error(step: ZenoStep, scheme: MPFScheme, split, n: int, norm_kind: str = "spectral",
              phase: str = "order", cache: Optional[Dict[int, np.ndarray]] = None) -> float:
    """Norm of ``mpf_evaluate - limit`` under the chosen phase convention."""
    value = mpf_evaluate(step, scheme, n, cache)
    return superop_norm(value - limit_for_scheme(split, step.generator, step.t, phase), norm_kind)


@dataclass
class PhaseResolution:
    """Errors of both limit conventions at the largest probed ``n``."""
    errors: Dict[str, List[float]]
    n_list: List[int]
    consistent: str

    def as_dict(self):
        return {"n": list(self.n_list), "errors": self.errors, "consistent": self.consistent}


def resolve_limit_phase(step: ZenoStep, scheme: MPFScheme, split, n_list: Sequence[int],
                        norm_kind: str = "spectral",
                        cache: Optional[Dict[int, np.ndarray]] = None) -> PhaseResolution:
    """Measure which phase convention the multi-product sum converges to.

    The consistent convention is the one with the smaller error at the
    largest ``n``; when every phase is 1 the two coincide.
    """
    dyn = split if isinstance(split, EffectiveDynamics) else EffectiveDynamics.from_split(split, step.generator)
    targets = {ph: limit_for_scheme(dyn, step.generator, step.t, ph) for ph in ("order", "phased")}
    errors = {ph: [] for ph in targets}
    for n in n_list:
        value = mpf_evaluate(step, scheme, n, cache)
        for ph, target in targets.items():
            errors[ph].append(superop_norm(value - target, norm_kind))
    consistent = min(errors, key=lambda ph: errors[ph][-1])
    return PhaseResolution(errors, list(n_list), consistent)


# -- order fitting -----------------------------------------------------------

@dataclass
class ConvergenceReport:
    """Log-log least-squares fit of error against ``n``."""
    points: List[Tuple[int, float]]
    slope: float
    intercept: float
    r_squared: float
    excluded: List[Tuple[int, float]] = field(default_factory=list)
    floor: float = 0.0


def fit_order(points: Sequence[Tuple[int, float]], floor: Optional[float] = None,
              scale: float = 1.0) -> ConvergenceReport:
    """Fit ``log error = slope * log n + intercept``.

    Points with error at or below ``floor`` (default ``10 eps * scale``, with
    ``scale`` the norm of the limit) are excluded and reported.
    """
    if floor is None:
        floor = 10.0 * _EPS * max(float(scale), 1e-300)
    pts = sorted((int(n), float(e)) for n, e in points)
    kept = [(n, e) for n, e in pts if np.isfinite(e) and e > floor]
    excluded = [(n, e) for n, e in pts if not (np.isfinite(e) and e > floor)]
    if len(kept) < 4:
        raise InsufficientDataError(
            f"only {len(kept)} points above the floor {floor:.3e}; at least 4 are needed")
    x = np.log([n for n, _ in kept])
    y = np.log([e for _, e in kept])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ConvergenceReport(kept, float(slope), float(intercept), r2, excluded, float(floor))
