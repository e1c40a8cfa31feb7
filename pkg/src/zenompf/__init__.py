"""Zeno products, their 1/n expansion and multi-product extrapolation."""
from .errors import (ZenoError, ValidationError, SpectralError, NumericalError,
                     AcceptanceFailure)
from .linalg import mat_exp, mat_pow, spectral_norm, gauss_legendre, integrate_matrix, count_ops
from .spectral import (SpectralSplit, ContourSpec, peripheral_split, contour_projection,
                       perturbed_projection, period_of_phases, one_to_one_lower, superop_norm)
from .zeno import (ZenoStep, EffectiveDynamics, zeno_product, effective_limit, zeno_error,
                   first_order_term, second_order_bound, richardson_extract,
                   chernoff_residual, dunford_segal_residual)
from .multiproduct import (MPFScheme, ConvergenceReport, vandermonde_coeffs, build_scheme,
                           mpf_evaluate, mpf_error, fit_order)

__version__ = "0.1.0"

__all__ = [
    "ZenoError",
    "ValidationError",
    "SpectralError",
    "NumericalError",
    "AcceptanceFailure",
    "mat_exp",
    "mat_pow",
    "spectral_norm",
    "gauss_legendre",
    "integrate_matrix",
    "count_ops",
    "SpectralSplit",
    "ContourSpec",
    "peripheral_split",
    "contour_projection",
    "perturbed_projection",
    "period_of_phases",
    "one_to_one_lower",
    "superop_norm",
    "ZenoStep",
    "EffectiveDynamics",
    "zeno_product",
    "effective_limit",
    "zeno_error",
    "first_order_term",
    "second_order_bound",
    "richardson_extract",
    "chernoff_residual",
    "dunford_segal_residual",
    "MPFScheme",
    "ConvergenceReport",
    "vandermonde_coeffs",
    "build_scheme",
    "mpf_evaluate",
    "mpf_error",
    "fit_order",
]
