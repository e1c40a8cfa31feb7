"""Peripheral spectrum, eigenprojections and related diagnostics.

Eigenprojections are built two independent ways: from left/right eigenvector
pairs (:func:`peripheral_split`) and by trapezoidal integration of the
resolvent around a circle (:func:`contour_projection`). Agreement between the
two is part of the test suite.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import _kernels
from .errors import (ContourHitsSpectrumError, EpsilonExceededError,
                     GapViolationError, IrrationalPhaseError,
                     NonDiagonalizablePeripheryError, ValidationError)
from .linalg import as_matrix, mat_exp, spectral_norm
from .quantum import superop_dim

PERIPHERAL_TOL = 1e-8
PROJECTOR_TOL = 1e-8
FIT_FLOOR = 1e-14
# from this dimension on, contour nodes reuse one complex Schur form
SCHUR_MIN_DIM = 64


@dataclass(frozen=True)
class SpectralSplit:
    """Peripheral eigenvalues with their eigenprojections.

    ``delta`` bounds the modulus of the remaining spectrum; ``c_est`` is the
    constant in ``||M^n - sum_j lambda_j^n P_j|| <= c_est * delta_emp^n``.
    """
    eigenvalues: np.ndarray
    projectors: Tuple[np.ndarray, ...]
    delta: float
    c_est: float = 0.0
    delta_emp: float = 0.0
    spectrum: np.ndarray = field(default=None, repr=False)

    @property
    def size(self):
        return len(self.eigenvalues)

    def power_limit(self, n: int) -> np.ndarray:
        """``sum_j lambda_j^n P_j``."""
        return sum(lam ** n * p for lam, p in zip(self.eigenvalues, self.projectors))


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    num_nodes: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError("contour radius must be positive")
        if self.num_nodes < 16:
            raise ValidationError("contours need at least 16 nodes")

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes z_k and weights so that sum w_k f(z_k) ~ (1/2 pi i) oint f dz."""
        theta = 2 * np.pi * np.arange(self.num_nodes) / self.num_nodes
        ring = self.radius * np.exp(1j * theta)
        return complex(self.center) + ring, ring / self.num_nodes


# -- eigendecomposition route ------------------------------------------------

def _cluster(values, width):
    """Group values (sorted by angle) whose chain distance stays below ``width``."""
    order = np.argsort(np.angle(values))
    groups: List[List[int]] = []
    for idx in order:
        for g in groups:
            if np.min(np.abs(values[g] - values[idx])) < width:
                g.append(int(idx))
                break
        else:
            groups.append([int(idx)])
    return groups


def peripheral_split(m, gap_tol: float = 0.1, n_max: int = 32) -> SpectralSplit:
    """Split the spectrum of ``m`` into its unit-circle part and the rest.

    Eigenvalues with modulus above ``1 - gap_tol`` count as peripheral and must
    sit within ``1e-8`` of the unit circle. Peripheral eigenvalues closer than
    ``2 * gap_tol`` share one projector. Each projector is ``R (L^+ R)^-1 L^+``
    for the cluster's right and left eigenvectors.
    """
    if not 0.0 < gap_tol < 0.5:
        raise ValidationError("gap_tol must lie in (0, 0.5)")
    m = as_matrix(m, square=True, name="M")
    w, vl, vr = scipy.linalg.eig(m, left=True, right=True)
    mod = np.abs(w)
    peripheral = np.flatnonzero(mod > 1.0 - gap_tol)
    for i in peripheral:
        if mod[i] < 1.0 - PERIPHERAL_TOL or mod[i] > 1.0 + PERIPHERAL_TOL:
            raise GapViolationError(
                f"eigenvalue {w[i]:.10g} (|.| = {mod[i]:.10g}) lies within gap_tol of the "
                "unit circle but not on it")
    rest = np.setdiff1d(np.arange(len(w)), peripheral)
    delta = float(mod[rest].max()) if rest.size else 0.0

    lambdas, projectors = [], []
    for group in _cluster(w[peripheral], 2 * gap_tol):
        idx = peripheral[group]
        lam = w[idx].mean()
        lam /= abs(lam)
        right, left = vr[:, idx], vl[:, idx]
        gram = left.conj().T @ right
        if np.linalg.cond(gram) > 1e10:
            raise NonDiagonalizablePeripheryError(
                f"eigenvectors at lambda = {lam:.6g} are (numerically) parallel")
        proj = right @ np.linalg.solve(gram, left.conj().T)
        spread = float(np.max(np.abs(w[idx] - lam)))
        nil = spectral_norm(lam * proj - m @ proj)
        if nil >= PERIPHERAL_TOL + spread * spectral_norm(proj):
            raise NonDiagonalizablePeripheryError(
                f"nilpotent residual {nil:.3e} at lambda = {lam:.6g}")
        lambdas.append(complex(lam))
        projectors.append(proj)

    split = SpectralSplit(np.array(lambdas, dtype=np.complex128), tuple(projectors),
                          delta, spectrum=w)
    if n_max:
        c_est, delta_emp = power_convergence_fit(m, split, n_max)
        split = SpectralSplit(split.eigenvalues, split.projectors, delta,
                              c_est, delta_emp, spectrum=w)
    return split


def power_convergence_fit(m, split: SpectralSplit, n_max: int = 32) -> Tuple[float, float]:
    """Fit ``r_n = ||M^n - sum_j lambda_j^n P_j|| ~ c delta^n`` for n = 1..n_max.

    Returns ``(c_est, delta_emp)``. The decay rate comes from a least-squares
    line through ``log r_n``; ``c_est`` is then raised until the envelope covers
    every computed ``r_n``. If every residual is below roundoff the split is
    exact and ``(0.0, 0.0)`` is returned.
    """
    m = as_matrix(m, square=True, name="M")
    if n_max < 1:
        raise ValidationError("n_max must be positive")
    ns = np.arange(1, n_max + 1)
    residuals = np.empty(n_max)
    power = m.copy()
    for k, n in enumerate(ns):
        if k:
            power = power @ m
        diff = power - split.power_limit(int(n))
        frob = float(np.linalg.norm(diff))
        residuals[k] = frob if frob <= FIT_FLOOR else spectral_norm(diff)
    usable = residuals > FIT_FLOOR
    if not usable.any():
        return 0.0, 0.0
    if usable.sum() == 1:
        n0 = ns[usable][0]
        delta_emp = residuals[usable][0] ** (1.0 / n0)
    else:
        slope, _ = np.polyfit(ns[usable], np.log(residuals[usable]), 1)
        delta_emp = float(np.exp(slope))
    delta_emp = min(delta_emp, 1.0)
    envelope = residuals[usable] / delta_emp ** ns[usable]
    c_est = float(envelope.max())
    return c_est, float(delta_emp)


# -- contour route -----------------------------------------------------------

def _schur_resolvent_trapezoid(m, nodes, weights):
    """Same sum as the kernel, with ``m = Z T Z^*`` so each node costs a triangular inverse.

    Condition numbers are taken on the triangular factor (1-norm), which
    differs from those of ``z - m`` by at most a factor ``dim``.
    """
    t, z = scipy.linalg.schur(m, output="complex")
    acc = np.zeros_like(t)
    worst = 0.0
    diag = np.diag_indices_from(t)
    for node, weight in zip(nodes, weights):
        shifted = -t
        shifted[diag] += node
        inv, info = lapack.ztrtri(shifted, lower=0)
        if info != 0:
            return acc, np.inf
        inv = np.triu(inv)
        cond = np.abs(shifted).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
        worst = max(worst, cond if np.isfinite(cond) else np.inf)
        acc += weight * inv
    return z @ acc @ z.conj().T, worst


def contour_projection(m, contour: ContourSpec, cond_max: float = 1e12) -> np.ndarray:
    """``(1/2 pi i) oint R(z, m) dz`` over a circle, by the trapezoid rule."""
    m = as_matrix(m, square=True, name="M")
    z, w = contour.nodes()
    try:
        if m.shape[0] >= SCHUR_MIN_DIM:
            acc, worst = _schur_resolvent_trapezoid(m, z, w)
        else:
            acc, worst = _kernels.resolvent_trapezoid(m, z, w)
    except np.linalg.LinAlgError:
        worst = np.inf
    if not worst <= cond_max:
        raise ContourHitsSpectrumError(
            f"resolvent condition number {worst:.3e} on the contour exceeds {cond_max:g}")
    return acc


def default_contour(split: SpectralSplit, j: int, num_nodes: int = 64) -> ContourSpec:
    """Circle around the j-th peripheral eigenvalue.

    Radius ``min((1 - delta)/3, |lambda_i - lambda_j|/3)`` keeps the rest of the
    spectrum outside.
    """
    lam = split.eigenvalues[j]
    radius = (1.0 - split.delta) / 3.0
    for i, other in enumerate(split.eigenvalues):
        if i != j:
            radius = min(radius, abs(other - lam) / 3.0)
    return ContourSpec(complex(lam), radius, num_nodes)


def bulk_contour(split: SpectralSplit, num_nodes: int = 64) -> ContourSpec:
    """Circle around the disc holding the non-peripheral spectrum."""
    return ContourSpec(0.0, (1.0 + 2.0 * split.delta) / 3.0, num_nodes)


def perturbed_projection(m, generator, t: float, contour: ContourSpec) -> np.ndarray:
    """Spectral projection of ``m exp(t L)`` enclosed by ``contour``.

    Raises :class:`EpsilonExceededError` once eigenvalues cross the contour,
    detected as a change of the projection's rank or a singular node.
    """
    m = as_matrix(m, square=True, name="M")
    gen = as_matrix(generator, square=True, name="L")
    base = contour_projection(m, contour)
    if t == 0:
        return base
    perturbed = m @ mat_exp(t * gen)
    try:
        proj = contour_projection(perturbed, contour)
    except ContourHitsSpectrumError as exc:
        raise EpsilonExceededError(f"t = {t:g} is beyond the separation radius: {exc}") from exc
    if abs(np.trace(proj) - np.trace(base)) > 0.5:
        raise EpsilonExceededError(
            f"t = {t:g}: enclosed rank changed from {np.trace(base).real:.3f} "
            f"to {np.trace(proj).real:.3f}")
    return proj


# -- phases ------------------------------------------------------------------

def period_of_phases(lambdas: Sequence[complex], tol: float = 1e-9, q_max: int = 64) -> int:
    """Smallest ``p`` with ``lambda^p = 1`` for every (rational-phase) eigenvalue.

    Each phase ``arg(lambda)/2pi`` is matched to its best continued-fraction
    approximant with denominator at most ``q_max``.
    """
    period = 1
    for lam in lambdas:
        lam = complex(lam)
        if abs(abs(lam) - 1.0) > tol:
            raise ValidationError(f"{lam} is not on the unit circle")
        phase = (np.angle(lam) / (2 * np.pi)) % 1.0
        frac = Fraction(phase).limit_denominator(q_max)
        if abs(lam - np.exp(2j * np.pi * float(frac))) >= tol:
            raise IrrationalPhaseError(
                f"phase {phase!r} of {lam} has no rational approximant a/b with b <= {q_max}")
        b = frac.denominator
        period = period * b // gcd(period, b)
    return period


# -- 1 -> 1 norm -------------------------------------------------------------

def _trace_norm_and_sign(x):
    u, s, vh = np.linalg.svd(x)
    return s.sum(), u @ vh


def one_to_one_lower(superop, samples: int = 200, power_steps: int = 5, seed: int = 0) -> float:
    """Lower estimate of the induced trace norm ``sup ||T(X)||_1 / ||X||_1``.

    Candidates are ``samples`` random rank-one ``u v^+`` plus every matrix
    unit; the best one is refined by alternating steps between ``T`` and its
    Hilbert-Schmidt adjoint. Deterministic for fixed ``seed``.
    """
    s = as_matrix(superop, square=True, name="superoperator")
    d = superop_dim(s)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(samples, d)) + 1j * rng.normal(size=(samples, d))
    v = rng.normal(size=(samples, d)) + 1j * rng.normal(size=(samples, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    # column-stacked vec(u v^+) has entry u_i conj(v_j) at i + d*j
    rank_one = np.einsum("ki,kj->kji", u, v.conj()).reshape(samples, d * d)
    units = np.eye(d * d, dtype=np.complex128)
    cands = np.vstack([rank_one, units])  # each has trace norm 1
    images = (s @ cands.T).T.reshape(-1, d, d).transpose(0, 2, 1)
    norms = _kernels.nuclear_norms(np.ascontiguousarray(images))
    best = int(np.argmax(norms))
    value = float(norms[best])
    x = cands[best].reshape(d, d).T
    adjoint = s.conj().T
    for _ in range(power_steps):
        _, sign = _trace_norm_and_sign((s @ x.reshape(-1, order="F")).reshape(d, d, order="F"))
        z = (adjoint @ sign.reshape(-1, order="F")).reshape(d, d, order="F")
        uz, _, vzh = np.linalg.svd(z)
        x = np.outer(uz[:, 0], vzh[0, :])
        img = (s @ x.reshape(-1, order="F")).reshape(d, d, order="F")
        value = max(value, float(np.linalg.svd(img, compute_uv=False).sum()))
    return value


def superop_norm(superop, kind: str = "spectral") -> float:
    """Norm of a superoperator: ``"spectral"`` or ``"one11"`` (1->1 lower estimate)."""
    if kind == "spectral":
        return spectral_norm(superop)
    if kind in ("one11", "one_to_one_lower"):
        return one_to_one_lower(superop)
    raise ValidationError(f"unknown norm kind {kind!r}")
