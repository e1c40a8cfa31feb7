import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from zenompf.errors import DimensionError, ValidationError
from zenompf.linalg import (as_matrix, count_ops, gauss_legendre, integrate_matrix,
                            mat_exp, mat_pow, spectral_norm)

from conftest import rand_complex

finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


def small_matrices(n):
    return arrays(np.float64, (2, n, n), elements=finite).map(lambda a: a[0] + 1j * a[1])


def test_exp_zero_is_identity():
    assert np.array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))


def test_exp_diagonal():
    out = mat_exp(np.diag([1j * np.pi, 0]))
    assert np.allclose(out, np.diag([-1, 1]), atol=1e-14)


def test_exp_inverse_identity(rng):
    a = rand_complex(rng, 5, 5)
    a *= 2 / np.linalg.norm(a, 2)
    assert np.linalg.norm(mat_exp(a) @ mat_exp(-a) - np.eye(5)) < 1e-10


@pytest.mark.parametrize("scale", [1e-3, 0.1, 0.5, 1.5, 4.0, 30.0, 300.0])
def test_exp_matches_scipy(rng, scale):
    # every Pade branch plus squaring
    a = rand_complex(rng, 6, 6)
    a *= scale / np.linalg.norm(a, 1)
    ref = scipy.linalg.expm(a)
    assert np.linalg.norm(mat_exp(a) - ref) <= 1e-13 * max(1.0, np.linalg.norm(ref))


def test_exp_rejects_bad_input():
    with pytest.raises(DimensionError):
        mat_exp(np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        mat_exp(np.eye(2), tol=1e-3)
    with pytest.raises(ValidationError):
        mat_exp(np.array([[np.nan, 0], [0, 0]]))


def test_exp_commuting_sum():
    a = np.diag([0.3, -1.2j, 2.0])
    b = np.diag([1.1, 0.4, -0.5j])
    assert np.linalg.norm(mat_exp(a + b) - mat_exp(a) @ mat_exp(b)) < 1e-10


def test_exp_deterministic(rng):
    a = rand_complex(rng, 7, 7)
    assert np.array_equal(mat_exp(a), mat_exp(a.copy()))


def test_contraction_semigroup(rng):
    for _ in range(10):
        c = rand_complex(rng, 4, 4)
        c /= np.linalg.norm(c, 2)
        for t in (0.1, 1.0, 10.0):
            assert spectral_norm(mat_exp(t * (c - np.eye(4)))) <= 1 + 1e-10


def test_pow_basics():
    assert np.array_equal(mat_pow(np.diag([2.0, 3.0]), 0), np.eye(2))
    assert np.allclose(mat_pow(np.diag([2.0, 3.0]), 10), np.diag([1024, 59049]))
    with pytest.raises(DimensionError):
        mat_pow(np.ones((2, 3)), 2)
    with pytest.raises(ValidationError):
        mat_pow(np.eye(2), -1)


def test_pow_naive_loop(rng):
    a = rand_complex(rng, 4, 4) / 3
    naive = np.eye(4)
    for _ in range(7):
        naive = naive @ a
    assert np.max(np.abs(mat_pow(a, 7) - naive)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(small_matrices(3), st.integers(0, 64), st.integers(0, 64))
def test_pow_additive(a, m, n):
    a = a / max(1.0, spectral_norm(a))
    assert np.linalg.norm(mat_pow(a, m + n) - mat_pow(a, m) @ mat_pow(a, n)) < 1e-11


def test_pow_counts_log_multiplications():
    for n, expected in [(1, 0), (2, 1), (5, 3), (8, 3), (1000, 9 + 5)]:
        with count_ops() as ops:
            mat_pow(np.eye(2), n)
        assert ops.multiplications == expected
    with count_ops() as ops:
        mat_exp(np.eye(2))
    assert ops.exponentials == 1


def test_spectral_norm_examples(rng):
    assert spectral_norm(np.eye(4)) == pytest.approx(1.0)
    assert spectral_norm(np.diag([3, -4j])) == pytest.approx(4.0, rel=1e-12)
    a = rand_complex(rng, 5, 5)
    s = spectral_norm(a)
    for _ in range(100):
        x = rand_complex(rng, 5)
        assert s >= np.linalg.norm(a @ x) / np.linalg.norm(x) - 1e-12


def test_spectral_norm_submultiplicative(rng):
    for _ in range(50):
        a, b = rand_complex(rng, 4, 4), rand_complex(rng, 4, 4)
        assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) + 1e-12


def test_as_matrix_rejects_vectors():
    with pytest.raises(DimensionError):
        as_matrix(np.ones(3))


def test_gauss_legendre_small_orders():
    r1 = gauss_legendre(1)
    assert np.allclose(r1.nodes, [0.5]) and np.allclose(r1.weights, [1.0])
    r2 = gauss_legendre(2)
    assert np.allclose(r2.nodes, [(1 - 1 / np.sqrt(3)) / 2, (1 + 1 / np.sqrt(3)) / 2], atol=1e-15)
    assert np.allclose(r2.weights, [0.5, 0.5])
    r3 = gauss_legendre(3)
    assert abs(np.dot(r3.weights, r3.nodes ** 5) - 1 / 6) < 1e-14
    with pytest.raises(ValidationError):
        gauss_legendre(0)


@pytest.mark.parametrize("order", [1, 2, 5, 16, 32])
def test_gauss_legendre_exactness(order):
    rule = gauss_legendre(order)
    assert np.all(np.diff(rule.nodes) > 0)
    assert 0 < rule.nodes[0] and rule.nodes[-1] < 1
    assert abs(rule.weights.sum() - 1) < 1e-14
    for deg in range(2 * order):
        assert abs(np.dot(rule.weights, rule.nodes ** deg) - 1 / (deg + 1)) < 1e-13


def test_integrate_matrix_examples(rng):
    b = rand_complex(rng, 3, 3)
    rule = gauss_legendre(4)
    assert np.allclose(integrate_matrix(lambda s: b, rule), b, atol=1e-14)
    assert np.allclose(integrate_matrix(lambda s: s * b, rule), b / 2, atol=1e-14)
    out = integrate_matrix(lambda s1, s2: s1 * s2 ** 2 * b, rule, dim=2)
    assert np.linalg.norm(out - b / 6) < 1e-12
    out3 = integrate_matrix(lambda s1, s2, s3: s1 * s2 * s3 * b, rule, dim=3)
    assert np.linalg.norm(out3 - b / 8) < 1e-12


def test_integrate_matrix_errors():
    rule = gauss_legendre(3)
    with pytest.raises(DimensionError):
        integrate_matrix(lambda s: np.eye(2) if s < 0.5 else np.eye(3), rule)
    with pytest.raises(ValidationError):
        integrate_matrix(lambda *s: np.eye(2), rule, dim=4)


def test_integrate_matrix_linear(rng):
    b, c = rand_complex(rng, 2, 2), rand_complex(rng, 2, 2)
    rule = gauss_legendre(5)

    def f(s):
        return np.cos(s) * b

    def g(s):
        return s ** 3 * c

    lhs = integrate_matrix(lambda s: 2 * f(s) - 3j * g(s), rule)
    rhs = 2 * integrate_matrix(f, rule) - 3j * integrate_matrix(g, rule)
    assert np.allclose(lhs, rhs, atol=1e-14)
