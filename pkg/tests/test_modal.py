import numpy as np
import pytest

import ssmselect as ss
from ssmselect.modal import (
    MasterSplit,
    NonProportionalDampingError,
    SpectralQuotientError,
    modal_quadratic_slice,
)

from conftest import random_sparse_system


def test_three_mass_modes(three_mass_modal):
    assert three_mass_modal.omega == pytest.approx([2.0, 3.0, 5.0])
    assert three_mass_modal.U == pytest.approx(np.eye(3))
    assert three_mass_modal.zeta == pytest.approx([0.01, 0.02, 0.08])


def test_degenerate_spectrum_accepts_any_orthonormal_basis():
    system = ss.SecondOrderSystem(3, np.eye(3), np.zeros((3, 3)), np.eye(3))
    modal = ss.compute_modes(system)
    assert modal.omega == pytest.approx([1.0, 1.0, 1.0])
    ok, err_m, err_k = modal.check_orthonormality()
    assert ok, (err_m, err_k)


def test_beam_frequency_against_analytic_value():
    params = ss.BeamParams(bc="clamped")
    system = ss.build_straight_beam(params)
    modal = ss.compute_modes(system)
    EI = params.E * params.b * params.h**3 / 12.0
    rhoA = params.rho * params.b * params.h
    analytic = 4.7300407**2 * np.sqrt(EI / (rhoA * params.l**4))
    assert modal.omega[0] == pytest.approx(analytic, rel=0.01)


def test_orthonormality_invariants_on_builtins():
    for name in ("three-mass", "straight-beam", "curved-beam"):
        system, _ = ss.builtin_model(name)
        modal = ss.compute_modes(system)
        ok, err_m, err_k = modal.check_orthonormality(tol_m=1e-10, tol_k=1e-8)
        assert ok, (name, err_m, err_k)


def test_sign_convention_largest_component_positive(three_mass):
    modal = ss.compute_modes(three_mass)
    for j in range(modal.n):
        col = modal.U[:, j]
        assert col[np.abs(col).argmax()] > 0


def test_modal_damping_zero_damping():
    system = ss.SecondOrderSystem(2, np.eye(2), np.zeros((2, 2)), np.diag([1.0, 4.0]))
    modal = ss.compute_modes(system)
    assert modal.zeta == pytest.approx([0.0, 0.0])


def test_modal_damping_stiffness_proportional(straight_beam):
    system, _, modal = straight_beam
    kappa, E = 0.1e9, 70e9
    assert modal.zeta == pytest.approx(kappa * modal.omega / (2 * E), rel=1e-10)


def test_non_proportional_damping_is_hard_error():
    C = np.array([[0.1, 0.09], [0.09, 0.1]])
    system = ss.SecondOrderSystem(2, np.eye(2), C, np.diag([1.0, 4.0]))
    with pytest.raises(NonProportionalDampingError):
        ss.compute_modes(system)


def test_rigid_body_mode_rejected_by_modal_damping():
    K = np.diag([0.0, 4.0])
    system = ss.SecondOrderSystem(2, np.eye(2), 0.01 * np.eye(2), K)
    modal = ss.compute_modes(system)
    with pytest.raises(ValueError):
        ss.modal_damping(system, modal)


def test_quadratic_slice_three_mass(three_mass_modal):
    split = MasterSplit(3, (1,))
    g2 = modal_quadratic_slice(three_mass_modal, split, 2)
    g3 = modal_quadratic_slice(three_mass_modal, split, 3)
    assert g2 == pytest.approx(np.array([[4.5]]))
    assert g3 == pytest.approx(np.array([[12.5]]))


def test_quadratic_slice_zero_tensor():
    system = ss.SecondOrderSystem(3, np.eye(3), np.zeros((3, 3)), np.diag([1.0, 4.0, 9.0]))
    modal = ss.compute_modes(system)
    assert np.all(modal_quadratic_slice(modal, MasterSplit(3, (1, 2)), 3) == 0.0)


def test_quadratic_slice_against_dense_contraction():
    rng = np.random.default_rng(21)
    system = random_sparse_system(rng, n=6)
    modal = ss.compute_modes(system)
    split = MasterSplit(6, (1, 2, 3))
    # dense symmetric quadratic tensor, then a triple-loop contraction
    A = np.zeros((6, 6, 6))
    for k, i, j, v in system.quad.entries:
        if i == j:
            A[k - 1, i - 1, j - 1] += v
        else:
            A[k - 1, i - 1, j - 1] += v / 2.0
            A[k - 1, j - 1, i - 1] += v / 2.0
    for k in split.J:
        uk = modal.U[:, k - 1]
        expected = np.zeros((3, 3))
        for a, i in enumerate(split.I):
            for b, j in enumerate(split.I):
                expected[a, b] = np.einsum(
                    "k,kpq,p,q->", uk, A, modal.U[:, i - 1], modal.U[:, j - 1]
                )
        got = modal_quadratic_slice(modal, split, k)
        assert got == pytest.approx(0.5 * (expected + expected.T), abs=1e-10)
        assert np.array_equal(got, got.T)


def test_quadratic_slice_rejects_master_index(three_mass_modal):
    with pytest.raises(ValueError):
        modal_quadratic_slice(three_mass_modal, MasterSplit(3, (1,)), 1)


def test_first_order_eigenvalue_pair_identities():
    rng = np.random.default_rng(2)
    system = random_sparse_system(rng, n=5, damping=0.05)
    modal = ss.compute_modes(system)
    lam = modal.first_order_eigenvalues()
    for i in range(modal.n):
        s = lam[2 * i] + lam[2 * i + 1]
        p = lam[2 * i] * lam[2 * i + 1]
        assert s == pytest.approx(-2 * modal.zeta[i] * modal.omega[i], rel=1e-10)
        assert p == pytest.approx(modal.omega[i] ** 2, rel=1e-10)


def test_spectral_quotient_three_mass(three_mass_modal):
    assert ss.spectral_quotient(three_mass_modal, MasterSplit(3, (1,))) == 20


def test_spectral_quotient_uniform_decay_is_one():
    om = np.array([1.0, 2.0, 4.0])
    ze = 0.01 / om  # zeta_i * omega_i identical for all modes
    system = ss.SecondOrderSystem(
        3, np.eye(3), np.diag(2 * ze * om), np.diag(om**2)
    )
    modal = ss.compute_modes(system)
    assert ss.spectral_quotient(modal, MasterSplit(3, (2,))) == 1


def test_spectral_quotient_needs_slaves(three_mass_modal):
    with pytest.raises(SpectralQuotientError):
        ss.spectral_quotient(three_mass_modal, MasterSplit(3, (1, 2, 3)))


def test_spectral_quotient_rejects_undamped_master():
    system = ss.SecondOrderSystem(2, np.eye(2), np.zeros((2, 2)), np.diag([1.0, 4.0]))
    modal = ss.compute_modes(system)
    with pytest.raises(SpectralQuotientError):
        ss.spectral_quotient(modal, MasterSplit(2, (1,)))


def test_nonresonance_three_mass_clean(three_mass_modal):
    report = ss.check_nonresonance(three_mass_modal, MasterSplit(3, (1,)), rtol=1e-3)
    assert report.passed
    assert report.margin > 1e-3
    assert report.sigma == 20
    assert report.truncated  # capped at order 6 by default


def test_nonresonance_flags_two_to_one():
    om = np.array([1.0, 2.0])
    ze = np.array([1e-8, 1e-8])
    system = ss.SecondOrderSystem(2, np.eye(2), np.diag(2 * ze * om), np.diag(om**2))
    modal = ss.compute_modes(system)
    report = ss.check_nonresonance(modal, MasterSplit(2, (1,)), rtol=1e-3)
    assert not report.passed
    assert any(k == 2 for _, k, _ in report.flagged)


def test_nonresonance_vacuous_below_order_two():
    om = np.array([1.0, 1.2])
    ze = np.array([0.4, 0.3])  # slave decays slower: sigma < 2
    system = ss.SecondOrderSystem(2, np.eye(2), np.diag(2 * ze * om), np.diag(om**2))
    modal = ss.compute_modes(system)
    report = ss.check_nonresonance(modal, MasterSplit(2, (1,)), rtol=1e-3)
    assert report.sigma < 2
    assert report.checked == 0
    assert report.passed
