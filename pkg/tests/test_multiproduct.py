from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zenompf.errors import (ConditioningError, InsufficientDataError, IrrationalPhaseError,
                            ValidationError)
from zenompf.linalg import count_ops
from zenompf.multiproduct import (MPFScheme, build_scheme, check_coefficients,
                                  closed_form_coeffs, fit_order, limit_for_scheme, mpf_combine,
                                  mpf_error, mpf_evaluate, resolve_limit_phase,
                                  vandermonde_coeffs, vandermonde_coeffs_exact)
from zenompf.quantum import projector_channel
from zenompf.zeno import ZenoStep, zeno_error, zeno_product

from conftest import rand_complex


def test_coefficient_examples():
    assert vandermonde_coeffs(0) == [1.0]
    assert vandermonde_coeffs(1) == [-1.0, 2.0]
    assert vandermonde_coeffs_exact(2) == [Fraction(1, 2), Fraction(-4), Fraction(9, 2)]


def bjorck_pereyra(x, f):
    """Solve sum_j x_j^k a_j = f_k in floats (Bjorck-Pereyra, accurate for Vandermonde)."""
    n = len(x) - 1
    a = np.array(f, dtype=float)
    for k in range(n):
        for i in range(n, k, -1):
            a[i] -= x[k] * a[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            a[i] /= x[i] - x[i - k - 1]
        for i in range(k, n):
            a[i] -= a[i + 1]
    return a


def independent_solve(k):
    rhs = np.zeros(k + 1)
    rhs[0] = 1
    return bjorck_pereyra(1 / np.arange(1, k + 2), rhs)


def test_plain_lu_loses_accuracy_at_high_order():
    # why the weights come from exact arithmetic
    ells = np.arange(1, 10, dtype=float)
    a = np.array([ells ** -j for j in range(9)])
    rhs = np.eye(9)[0]
    exact = np.array([float(c) for c in closed_form_coeffs(8)])
    assert np.abs(np.linalg.solve(a, rhs) - exact).max() > 1e-10


@pytest.mark.parametrize("k", range(9))
def test_coefficients_agree(k):
    exact = vandermonde_coeffs_exact(k)
    assert exact == closed_form_coeffs(k)
    c = np.array(vandermonde_coeffs(k))
    assert np.max(np.abs(c - np.array([float(x) for x in closed_form_coeffs(k)]))) <= 1e-10
    assert np.max(np.abs(c - independent_solve(k))) <= 1e-10
    d0, dk = check_coefficients(c, k)
    assert d0 < 1e-12 and dk < 1e-10


def test_coefficient_guards():
    with pytest.raises(ConditioningError):
        vandermonde_coeffs(9)
    assert len(vandermonde_coeffs_exact(12)) == 13
    with pytest.raises(ValidationError):
        vandermonde_coeffs(-1)


def test_scheme_invariants():
    with pytest.raises(ValidationError):
        MPFScheme(1, (0.5, 0.5))
    with pytest.raises(ValidationError):
        MPFScheme(1, (1.0,))
    with pytest.raises(ValidationError):
        MPFScheme(0, (1.0,), period=0)
    assert MPFScheme(2, tuple(vandermonde_coeffs(2)), 3).substeps(5) == [15, 30, 45]


def test_build_scheme_examples():
    s = build_scheme(1, [1.0])
    assert s.period == 1 and s.coeffs == (-1.0, 2.0)
    s = build_scheme(1, [1.0, -1.0])
    assert s.period == 2 and s.coeffs == (-1.0, 2.0)
    with pytest.raises(IrrationalPhaseError):
        build_scheme(1, [np.exp(2j * np.pi * 0.123456)], q_max=50)


def test_evaluate_k0_is_zeno(qubit):
    step, split = qubit
    s0 = build_scheme(0)
    for n in (3, 17):
        assert np.array_equal(mpf_evaluate(step, s0, n), zeno_product(step, n))
        assert mpf_error(step, s0, split, n) == pytest.approx(zeno_error(step, split, n), rel=1e-12)


def test_evaluate_without_dynamics():
    m = projector_channel(np.diag([1.0, 0.0]))
    step = ZenoStep(m, np.zeros((4, 4)), 1.0)
    for k in (1, 2, 3):
        assert np.allclose(mpf_evaluate(step, build_scheme(k), 4), m, atol=1e-12)


def test_evaluate_beats_plain_zeno(qubit):
    step, split = qubit
    plain = zeno_error(step, split, 32)
    improved = mpf_error(step, build_scheme(1), split, 32)
    assert improved * 5 <= plain


def test_k1_order(qubit):
    step, split = qubit
    ns = [4, 8, 16, 32, 64]
    rep = fit_order([(n, mpf_error(step, build_scheme(1), split, n)) for n in ns])
    assert rep.slope == pytest.approx(-2.0, abs=0.3)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_cost_accounting(qubit, k):
    step, _ = qubit
    scheme = build_scheme(k)
    n = 10
    with count_ops() as ops:
        mpf_evaluate(step, scheme, n)
    assert ops.exponentials == k + 1
    expected = sum(m.bit_length() - 1 + bin(m).count("1") - 1 for m in scheme.substeps(n))
    assert ops.multiplications == expected


def test_cache_reuses_products(qubit):
    step, _ = qubit
    cache = {}
    mpf_evaluate(step, build_scheme(2), 8, cache)
    with count_ops() as ops:
        mpf_evaluate(step, build_scheme(1), 8, cache)
    assert ops.exponentials == 0
    assert set(cache) == {8, 16, 24}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 6), st.integers(1, 40), st.integers(0, 2 ** 31))
def test_polynomial_models_are_extrapolated_exactly(k, n, seed):
    rng = np.random.default_rng(seed)
    limit = rand_complex(rng, 4, 4)
    terms = [rand_complex(rng, 4, 4) for _ in range(k)]

    def model(m):
        return limit + sum(b / m ** (j + 1) for j, b in enumerate(terms))

    out = mpf_combine(model, build_scheme(k), n)
    scale = 1 + sum(np.linalg.norm(b) for b in terms)
    assert np.linalg.norm(out - limit) < 1e-9 * scale


def test_limit_phase_conventions(qubit):
    step, split = qubit
    order = limit_for_scheme(split, step.generator, step.t, "order")
    phased = limit_for_scheme(split, step.generator, step.t, "phased")
    assert np.allclose(order, phased)
    with pytest.raises(ValidationError):
        limit_for_scheme(split, step.generator, step.t, "other")
    res = resolve_limit_phase(step, build_scheme(1), split, [16, 32])
    assert res.consistent in ("order", "phased")


def test_fit_order_examples():
    ns = [8, 16, 32, 64, 128]
    rep = fit_order([(n, 7 / n ** 2) for n in ns])
    assert rep.slope == pytest.approx(-2.0, abs=1e-6)
    assert rep.r_squared > 0.999999
    rep = fit_order([(n, 3 / n + 40 / n ** 2) for n in (64, 128, 256, 512, 1024)])
    assert -1.3 < rep.slope < -1.0
    with pytest.raises(InsufficientDataError):
        fit_order([(n, 1e-17) for n in ns])


def test_fit_order_reports_excluded():
    pts = [(128, 1e-17), (8, 1e-3), (16, 2.5e-4), (32, 6.25e-5), (64, 1.5625e-5)]
    rep = fit_order(pts)
    assert [n for n, _ in rep.points] == [8, 16, 32, 64]
    assert rep.excluded == [(128, 1e-17)]
    assert rep.slope == pytest.approx(-2.0)
