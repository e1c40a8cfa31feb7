import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zenompf.errors import (ContourHitsSpectrumError, EpsilonExceededError, GapViolationError,
                            IrrationalPhaseError, NonDiagonalizablePeripheryError,
                            ValidationError)
from zenompf.linalg import mat_exp, spectral_norm
from zenompf.quantum import (SIGMA_X, annihilation, cat_projectors, depolarizing_channel,
                             embed_bath_channel, cyclic_bath_channel, hamiltonian_generator,
                             identity_superop, kraus_channel, projector_channel,
                             sandwich_superop)
from zenompf.spectral import (ContourSpec, bulk_contour, contour_projection, default_contour,
                              one_to_one_lower, period_of_phases, peripheral_split,
                              perturbed_projection, power_convergence_fit, superop_norm)

from conftest import rand_complex


def dephasing_with_phase(r, theta):
    # diag superoperator: populations kept, coherences scaled by r e^{+-i theta}
    return np.diag([1.0, r * np.exp(1j * theta), r * np.exp(-1j * theta), 1.0])


P0 = projector_channel(np.diag([1.0, 0.0]).astype(np.complex128))


def test_identity_split():
    split = peripheral_split(identity_superop(2))
    assert np.allclose(split.eigenvalues, [1.0])
    assert np.allclose(split.projectors[0], np.eye(4))
    assert split.delta == 0.0
    assert (split.c_est, split.delta_emp) == (0.0, 0.0)


def test_projector_channel_split():
    split = peripheral_split(P0)
    assert split.size == 1 and np.isclose(split.eigenvalues[0], 1.0)
    proj = split.projectors[0]
    assert np.isclose(np.trace(proj), 1.0)
    assert np.allclose(proj, P0, atol=1e-12)
    assert split.delta < 1e-12


def test_dephasing_split():
    split = peripheral_split(dephasing_with_phase(0.5, 0.7))
    assert split.size == 1
    assert split.delta == pytest.approx(0.5)
    assert split.delta_emp == pytest.approx(0.5, abs=0.01)


def test_depolarizing_rate():
    split = peripheral_split(depolarizing_channel(2, 0.3))
    assert split.delta_emp == pytest.approx(0.7, abs=0.01)
    assert split.delta_emp <= split.delta + 0.02


def test_unitary_channel_is_exact():
    u = mat_exp(-1j * 0.3 * SIGMA_X)
    m = sandwich_superop(u, u.conj().T)
    split = peripheral_split(m, n_max=0)
    assert power_convergence_fit(m, split, 16) == (0.0, 0.0)


def test_gap_violation():
    with pytest.raises(GapViolationError):
        peripheral_split(np.diag([1.0, 0.95, 0.2, 0.1]), gap_tol=0.1)


def test_defective_periphery():
    jordan = np.array([[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 0.2, 0], [0, 0, 0, 0.1]], dtype=complex)
    with pytest.raises(NonDiagonalizablePeripheryError):
        peripheral_split(jordan)


def test_gap_tol_range():
    with pytest.raises(ValidationError):
        peripheral_split(np.eye(4), gap_tol=0.6)


def test_cyclic_bath_projectors():
    m = embed_bath_channel(cyclic_bath_channel(3), 2)
    split = peripheral_split(m)
    assert split.size == 3
    ps = split.projectors
    for i, pi in enumerate(ps):
        assert spectral_norm(pi @ pi - pi) < 1e-8
        for j, pj in enumerate(ps):
            if i != j:
                assert spectral_norm(pi @ pj) < 1e-8
    # the bulk disc holds everything that is not peripheral
    rest = contour_projection(m, bulk_contour(split))
    assert spectral_norm(sum(ps) + rest - np.eye(36)) < 1e-8


def test_contour_full_and_empty():
    m = dephasing_with_phase(0.5, 0.4)
    assert np.allclose(contour_projection(m, ContourSpec(0.0, 2.0)), np.eye(4), atol=1e-10)
    assert np.allclose(contour_projection(m, ContourSpec(5.0, 1.0)), 0.0, atol=1e-10)


def test_contour_matches_eigen_projector():
    split = peripheral_split(P0)
    proj = contour_projection(P0, default_contour(split, 0))
    assert spectral_norm(proj - split.projectors[0]) < 1e-8


def test_contour_hits_spectrum():
    with pytest.raises(ContourHitsSpectrumError):
        contour_projection(np.diag([1.0, 0.0]), ContourSpec(0.5, 0.5, 16))


def test_contour_trapezoid_converges_geometrically():
    m = dephasing_with_phase(0.5, 0.4)
    exact = np.diag([1.0, 0, 0, 1.0])
    errs = [spectral_norm(contour_projection(m, ContourSpec(1.0, 0.3, n)) - exact)
            for n in (16, 32)]
    assert errs[1] <= max(errs[0] ** 2 * 10, 1e-12)


def test_contour_spec_validation():
    with pytest.raises(ValidationError):
        ContourSpec(0.0, 1.0, 8)
    with pytest.raises(ValidationError):
        ContourSpec(0.0, 0.0)


def test_perturbed_projection_qubit():
    gen = hamiltonian_generator(SIGMA_X)
    contour = default_contour(peripheral_split(P0), 0)
    p0 = perturbed_projection(P0, gen, 0.0, contour)
    assert np.allclose(p0, contour_projection(P0, contour))
    ts = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    diffs = []
    for t in ts:
        pt = perturbed_projection(P0, gen, t, contour)
        assert spectral_norm(pt @ pt - pt) < 1e-8
        diffs.append(spectral_norm(pt - p0))
    slope = np.polyfit(np.log(ts), np.log(diffs), 1)[0]
    assert slope >= 0.9


def test_perturbed_projection_epsilon_exceeded():
    gen = hamiltonian_generator(SIGMA_X)
    contour = ContourSpec(1.0, 0.05, 64)
    with pytest.raises(EpsilonExceededError):
        perturbed_projection(P0, gen, 1.0, contour)


def test_perturbed_projection_cat_code():
    p, _ = cat_projectors(2.0, 25)
    m = projector_channel(p)
    a = annihilation(25)
    gen = hamiltonian_generator(a + a.conj().T)
    split = peripheral_split(m, n_max=0)
    pt = perturbed_projection(m, gen, 0.01, default_contour(split, 0))
    assert spectral_norm(pt @ pt - pt) < 1e-8


def test_period_examples():
    assert period_of_phases([1.0]) == 1
    assert period_of_phases([1.0, -1.0]) == 2
    roots = [np.exp(2j * np.pi * k / 3) for k in (1, 2, 0)]
    assert period_of_phases(roots) == 3
    with pytest.raises(IrrationalPhaseError):
        period_of_phases([np.exp(2j * np.pi * 0.123456)], tol=1e-9, q_max=50)
    with pytest.raises(ValidationError):
        period_of_phases([0.5])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 11), st.integers(1, 12)), min_size=1, max_size=4))
def test_period_annihilates_phases(fracs):
    lams = [np.exp(2j * np.pi * a / b) for a, b in fracs]
    p = period_of_phases(lams, tol=1e-9)
    assert max(abs(lam ** p - 1) for lam in lams) < 1e-8
    for a, b in fracs:
        assert p % (b // np.gcd(a, b)) == 0


def test_one_to_one_lower_on_channels(rng):
    assert one_to_one_lower(identity_superop(3)) == pytest.approx(1.0)
    assert one_to_one_lower(depolarizing_channel(2, 0.4)) == pytest.approx(1.0, abs=1e-8)
    # scaling the identity scales the induced norm
    assert one_to_one_lower(2.5 * identity_superop(2)) == pytest.approx(2.5)


def test_one_to_one_lower_is_lower_bound(rng):
    for _ in range(5):
        s = rand_complex(rng, 9, 9)
        est = one_to_one_lower(s, samples=50)
        # a crude upper bound: ||T||_{1->1} <= sqrt(d) * ||T||_{2->2} * sqrt(d)
        assert est <= 3 * spectral_norm(s) + 1e-12
        assert est > 0


def test_superop_norm_kinds():
    m = depolarizing_channel(2, 0.3)
    assert superop_norm(m, "spectral") == pytest.approx(spectral_norm(m))
    assert superop_norm(m, "one11") == superop_norm(m, "one_to_one_lower")
    with pytest.raises(ValidationError):
        superop_norm(m, "frobenius")


def test_clustered_eigenvalues_merge():
    m = kraus_channel([np.eye(2)])
    split = peripheral_split(m)
    assert split.size == 1 and np.isclose(np.trace(split.projectors[0]), 4)


def test_schur_route_matches_kernel(rng):
    from zenompf import _kernels
    from zenompf.spectral import SCHUR_MIN_DIM, _schur_resolvent_trapezoid
    d = SCHUR_MIN_DIM
    m = rand_complex(rng, d, d) / (4 * np.sqrt(d))
    m[0, :] = 0
    m[:, 0] = 0
    m[0, 0] = 1.0
    z, w = ContourSpec(1.0, 0.3, 64).nodes()
    acc_k, cond_k = _kernels.resolvent_trapezoid(m, z, w)
    acc_s, cond_s = _schur_resolvent_trapezoid(m, z, w)
    assert np.abs(acc_k - acc_s).max() < 1e-12
    assert cond_s <= d * cond_k and cond_k <= d * cond_s
    proj = contour_projection(m, ContourSpec(1.0, 0.3, 64))
    assert abs(np.trace(proj) - 1) < 1e-10
    with pytest.raises(ContourHitsSpectrumError):
        contour_projection(m, ContourSpec(0.7, 0.3, 64))
