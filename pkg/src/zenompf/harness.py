"""Scenario sweeps, system-specific checks and the lemma residual suite."""
import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import InsufficientDataError
from .linalg import mat_exp, spectral_norm
from .multiproduct import (ConvergenceReport, MPFScheme, fit_order, limit_for_scheme,
                           mpf_combine, resolve_limit_phase, vandermonde_coeffs)
from .quantum import (hamiltonian_generator, identity_superop, lindblad_generator,
                      LindbladSpec, partial_trace_second, projector_channel, sandwich_superop,
                      tensor_superop, vectorize, devectorize, SIGMA_X)
from .scenario import Scenario, SystemModel, build_system, cat_rotation
from .spectral import (contour_projection, default_contour, peripheral_split, period_of_phases,
                       superop_norm)
from .zeno import (EffectiveDynamics, ZenoStep, chernoff_residual, dunford_segal_residual,
                   zeno_product)

CSV_HEADER = ("scheme", "K", "p", "n", "error", "norm_kind", "seconds")
LEMMA_TOL = 1e-6


def _fmt(x):
    return f"{x:.17g}"


@dataclass
class Row:
    scheme: str
    k: int
    p: int
    n: int
    error: float
    norm_kind: str
    seconds: float

    def as_csv(self):
        return [self.scheme, str(self.k), str(self.p), str(self.n), _fmt(self.error),
                self.norm_kind, _fmt(self.seconds)]


@dataclass
class RunReport:
    scenario: str
    norm_kind: str
    rows: List[Row] = field(default_factory=list)
    fits: Dict[int, Optional[ConvergenceReport]] = field(default_factory=dict)
    thresholds: Dict[int, float] = field(default_factory=dict)
    split: Dict[str, Any] = field(default_factory=dict)
    checks: Dict[str, Any] = field(default_factory=dict)
    lemmas: Dict[str, float] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    error: Optional[Dict[str, str]] = None

    @property
    def slopes(self) -> Dict[int, Optional[float]]:
        return {k: (f.slope if f is not None else None) for k, f in self.fits.items()}

    def slope_ok(self, k) -> bool:
        fit = self.fits.get(k)
        # every point at the rounding floor: the scheme is exact here
        return fit is None or fit.slope <= self.thresholds[k]

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        checks_ok = all(c.get("ok", True) for c in self.checks.values() if isinstance(c, dict))
        return all(self.slope_ok(k) for k in self.fits) and checks_ok

    def summary(self) -> Dict[str, Any]:
        fits = {}
        for k, f in self.fits.items():
            if f is None:
                fits[str(k)] = {"slope": None, "note": "all errors below the rounding floor",
                                "threshold": self.thresholds[k], "ok": True}
            else:
                fits[str(k)] = {"slope": f.slope, "intercept": f.intercept,
                                "r_squared": f.r_squared, "threshold": self.thresholds[k],
                                "ok": self.slope_ok(k), "floor": f.floor,
                                "excluded": [{"n": n, "error": e} for n, e in f.excluded]}
        return {"scenario": self.scenario, "norm_kind": self.norm_kind, "passed": self.passed,
                "slopes": fits, "split": self.split, "checks": self.checks,
                "lemmas": self.lemmas, "timings": self.timings, "error": self.error}


def _split_summary(split, period):
    return {
        "eigenvalues": [[float(z.real), float(z.imag)] for z in split.eigenvalues],
        "delta": float(split.delta),
        "c_est": float(split.c_est),
        "delta_emp": float(split.delta_emp),
        "period": int(period),
    }


def run(sc: Scenario) -> RunReport:
    """Sweep every ``K`` in ``sc.k_orders`` over ``sc.n_grid`` and run the system checks."""
    report = RunReport(sc.name, sc.norm_kind)
    tic = time.perf_counter()
    model = build_system(sc)
    report.timings["build"] = time.perf_counter() - tic

    tic = time.perf_counter()
    split = peripheral_split(model.m, gap_tol=sc.tolerances["gap_tol"])
    period = period_of_phases(split.eigenvalues, q_max=int(sc.tolerances["q_max"]))
    report.split = _split_summary(split, period)
    report.timings["split"] = time.perf_counter() - tic

    step = ZenoStep(model.m, model.generator, model.t)
    dyn = EffectiveDynamics.from_split(split, model.generator)
    limit = limit_for_scheme(dyn, model.generator, model.t, "order")
    floor = 10 * np.finfo(float).eps * max(spectral_norm(limit), 1.0)
    cache: Dict[int, np.ndarray] = {}

    def product(m):
        return zeno_product(step, m)

    schemes = {}
    for k in sc.k_orders:
        tic = time.perf_counter()
        scheme = MPFScheme(k, tuple(vandermonde_coeffs(k)), period)
        schemes[k] = scheme
        points = []
        for n in sc.n_grid:
            cell = time.perf_counter()
            value = mpf_combine(product, scheme, n, cache)
            err = superop_norm(value - limit, sc.norm_kind)
            report.rows.append(Row("zeno" if k == 0 else "mpf", k, period, n, err, sc.norm_kind,
                                   time.perf_counter() - cell))
            points.append((n, err))
        report.thresholds[k] = -(k + sc.tolerances["slope_margin"])
        try:
            report.fits[k] = fit_order(points, floor=floor)
        except InsufficientDataError:
            report.fits[k] = None
        report.timings[f"sweep_K{k}"] = time.perf_counter() - tic

    tic = time.perf_counter()
    if np.any(np.abs(split.eigenvalues - 1) > 1e-8):
        k_hi = max(sc.k_orders)
        res = resolve_limit_phase(step, schemes[k_hi], dyn, sc.n_grid[-2:], "spectral", cache)
        report.checks["limit_phase"] = {"K": k_hi, **res.as_dict()}
    if sc.system == "cat_code":
        report.checks["cat_rotation"] = _cat_check(model, limit)
    if sc.system == "decoupling":
        k_hi = max(sc.k_orders)
        value = mpf_combine(product, schemes[k_hi], sc.n_grid[-1], cache)
        report.checks["decoupling"] = _decoupling_check(model, split, limit, value, k_hi,
                                                        sc.n_grid[-1])
    report.timings["checks"] = time.perf_counter() - tic

    if sc.lemmas:
        tic = time.perf_counter()
        report.lemmas = _scenario_lemmas(model, split)
        report.timings["lemmas"] = time.perf_counter() - tic
    return report


def _cat_check(model: SystemModel, limit) -> Dict[str, Any]:
    ex = model.extras
    out = {"omega": ex["omega"], "omega_over_alpha": ex["omega"] / ex["alpha"], "t": model.t}
    # the limit acts on the code space as conjugation by exp(-i t P H P)
    p, x = ex["P"], ex["X"]
    phase = model.t * ex["omega"]
    u = math.cos(phase) * p - 1j * math.sin(phase) * x
    out["rotation_deviation"] = spectral_norm(limit - sandwich_superop(u, u.conj().T))
    if ex["theta_from_t"]:
        r = cat_rotation(p, x, ex["theta"])
        out["theta"] = ex["theta"]
        out["x_theta_deviation"] = spectral_norm(limit - sandwich_superop(r, r.conj().T))
        out["ok"] = out["rotation_deviation"] < 1e-8 and out["x_theta_deviation"] < 1e-8
    else:
        out["ok"] = out["rotation_deviation"] < 1e-8
    return out


def _decoupling_check(model: SystemModel, split, limit, value, k, n) -> Dict[str, Any]:
    ex = model.extras
    spec = ex["spec"]
    d1, d2 = spec.dims
    hd = ex["h_dec"]
    u = mat_exp(-1j * model.t * hd)
    sys_evo = sandwich_superop(u, u.conj().T)
    peripheral = sum(split.projectors)
    target = tensor_superop(sys_evo, identity_superop(d2)) @ peripheral
    structural = spectral_norm(limit - target)
    err = spectral_norm(value - limit)
    states = [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / np.sqrt(2),
              np.array([1, 1j]) / np.sqrt(2)]
    worst, band = 0.0, 0.0
    for psi in states:
        rho_s = np.outer(psi, psi.conj()).astype(np.complex128)
        rho_in = np.kron(rho_s, ex["rho_star"])
        out = devectorize(value @ vectorize(rho_in))
        reduced = partial_trace_second(out, d1, d2)
        dev = np.linalg.norm(reduced - u @ rho_s @ u.conj().T)
        # ||tr_B X||_2 <= sqrt(d2) ||X||_2 and ||(V - W) x||_2 <= ||V - W||_2 ||x||_2
        bnd = math.sqrt(d2) * err * np.linalg.norm(rho_in)
        worst = max(worst, dev)
        band = max(band, bnd)
    return {
        "h_dec": [[[float(z.real), float(z.imag)] for z in row] for row in hd],
        "structural_deviation": structural,
        "K": k, "n": n, "error": err,
        "reduced_deviation": worst, "error_band": band,
        "ok": structural < 1e-10 and worst <= band + 1e-12,
    }


def _scenario_lemmas(model: SystemModel, split) -> Dict[str, float]:
    out = {}
    if len(split.projectors) == 1 and model.m.shape[0] <= 64:
        out["dunford_segal"] = dunford_segal_residual(
            split.projectors[0], model.generator, min(model.t, 1.0), 0.5, 1.0)
    else:
        out["dunford_segal_skipped"] = 1.0
    return out


# -- lemma residual suite ----------------------------------------------------

def random_contraction(rng, d=3):
    """Random complex ``d x d`` matrix scaled to spectral norm in [0.5, 1]."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return rng.uniform(0.5, 1.0) * g / np.linalg.norm(g, 2)


def random_projected_lindbladian(rng, d=3):
    """Projector channel onto a random ray and a random Lindbladian on ``C^d``."""
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    p = projector_channel(np.outer(v, v.conj()))
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = 0.5 * (h + h.conj().T)
    jump = 0.5 * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    gen = lindblad_generator(LindbladSpec(h, ((jump, 1.0),)))
    return p, gen / max(1.0, np.linalg.norm(gen, 2))


@dataclass
class LemmaRow:
    label: str
    chernoff: float
    dunford_segal: float

    @property
    def worst(self):
        return max(self.chernoff, self.dunford_segal)


def lemma_suite(seed: int, trials: int, chernoff_order: int = 32,
                ds_order: int = 16) -> List[LemmaRow]:
    """Residuals on seeded random cases plus the identity and qubit rows."""
    rng = np.random.default_rng(seed)
    rows = []
    ident = np.eye(3, dtype=np.complex128)
    rows.append(LemmaRow("identity",
                         chernoff_residual(ident, 8, chernoff_order),
                         dunford_segal_residual(identity_superop(2), np.zeros((4, 4)),
                                                1.0, 0.5, 1.0, ds_order)))
    qp = projector_channel(np.diag([1.0, 0.0]).astype(np.complex128))
    ql = hamiltonian_generator(SIGMA_X)
    rows.append(LemmaRow("qubit",
                         chernoff_residual(np.diag([1.0, 0.5]), 8, chernoff_order),
                         dunford_segal_residual(qp, ql, 0.25, 0.25, 0.25, ds_order)))
    for i in range(trials):
        c = random_contraction(rng)
        n = int(rng.integers(1, 17))
        p, gen = random_projected_lindbladian(rng)
        t, s1, s2 = rng.uniform(0.05, 1.0, size=3)
        rows.append(LemmaRow(f"random-{i}",
                             chernoff_residual(c, n, chernoff_order),
                             dunford_segal_residual(p, gen, t, s1, s2, ds_order)))
    return rows


# -- projector cross-check ---------------------------------------------------

def projector_crosscheck(m, gap_tol: float = 0.1) -> Dict[str, Any]:
    """Compare contour-integral projectors with the eigendecomposition ones."""
    split = peripheral_split(m, gap_tol=gap_tol, n_max=0)
    diffs = []
    for j, proj in enumerate(split.projectors):
        contour = default_contour(split, j)
        diffs.append(spectral_norm(contour_projection(m, contour) - proj))
    return {"split": split, "max_difference": max(diffs), "differences": diffs}


# -- output ------------------------------------------------------------------

def summary_path(csv_path: str) -> str:
    base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return base + ".summary.json"


def write_csv(report: RunReport, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in report.rows:
            writer.writerow(row.as_csv())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_summary(summary: Dict[str, Any], path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
