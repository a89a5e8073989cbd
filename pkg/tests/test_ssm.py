import numpy as np
import pytest

import ssmselect as ss
from ssmselect.modal import MasterSplit
from ssmselect.ssm import (
    ResonanceError,
    build_bk,
    build_master_operator,
    build_rk,
    solve_wk,
)

from conftest import W2_REF, W3_REF


def matrix_route_solve(A, omega_k, zeta_k, R):
    """Independent solver: assemble the matrix equation term by term.

    2 A^T W A + W A^2 + (A^2)^T W + 2 z w (W A + A^T W) + w^2 W = -R,
    built column by column as a linear operator on vec(W).
    """
    d = A.shape[0]
    A2 = A @ A

    def op(W):
        return (2 * A.T @ W @ A + W @ A2 + A2.T @ W
                + 2 * zeta_k * omega_k * (W @ A + A.T @ W) + omega_k**2 * W)

    L = np.zeros((d * d, d * d))
    for idx in range(d * d):
        E = np.zeros(d * d)
        E[idx] = 1.0
        L[:, idx] = op(E.reshape(d, d)).ravel()
    W = np.linalg.solve(L, -R.ravel()).reshape(d, d)
    return 0.5 * (W + W.T)


@pytest.fixture(scope="module")
def three_mass_split(three_mass_modal):
    return MasterSplit(3, (1,))


@pytest.fixture(scope="module")
def three_mass_coeffs(three_mass_modal, three_mass_split):
    return ss.compute_ssm_coefficients(three_mass_modal, three_mass_split)


def test_master_operator_blocks(three_mass_modal, three_mass_split):
    op = build_master_operator(three_mass_modal, three_mass_split)
    assert op.matrix == pytest.approx(np.array([[0.0, 1.0], [-4.0, -0.04]]))
    assert op.K_I == pytest.approx(np.array([[4.0]]))
    assert op.C_I == pytest.approx(np.array([[0.04]]))


def test_master_operator_undamped_oscillator():
    system = ss.SecondOrderSystem(2, np.eye(2), np.zeros((2, 2)), np.diag([1.0, 4.0]))
    modal = ss.compute_modes(system)
    op = build_master_operator(modal, MasterSplit(2, (1,)))
    assert op.matrix == pytest.approx(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_master_operator_eigenvalues_match_mode_pairs(three_mass_modal):
    split = MasterSplit(3, (1, 2))
    op = build_master_operator(three_mass_modal, split)
    lam = np.sort_complex(op.eigenvalues())
    pairs = three_mass_modal.first_order_eigenvalues()
    expected = np.sort_complex(np.concatenate([pairs[0:2], pairs[2:4]]))
    assert lam == pytest.approx(expected, rel=1e-8)


def test_rk_three_mass(three_mass_modal, three_mass_split):
    R2 = build_rk(three_mass_modal, three_mass_split, 2)
    R3 = build_rk(three_mass_modal, three_mass_split, 3)
    assert R2 == pytest.approx(np.array([[4.5, 0.0], [0.0, 0.0]]))
    assert R3 == pytest.approx(np.array([[12.5, 0.0], [0.0, 0.0]]))


def test_rk_zero_for_linear_system():
    system = ss.SecondOrderSystem(2, np.eye(2), 0.01 * np.eye(2), np.diag([1.0, 4.0]))
    modal = ss.compute_modes(system)
    assert np.all(build_rk(modal, MasterSplit(2, (1,)), 2) == 0.0)


def test_bk_zero_operator_limit():
    # with A = 0 the tensor is omega^2 times the identity pairing, so
    # the solve degenerates to W = -R / omega^2
    rng = np.random.default_rng(0)
    R = rng.normal(size=(4, 4))
    R = 0.5 * (R + R.T)
    B = build_bk(np.zeros((4, 4)), 3.0, 0.5)
    W = solve_wk(B, R)
    assert W == pytest.approx(-R / 9.0, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_tensor_route_equals_matrix_route(m):
    rng = np.random.default_rng(100 + m)
    A = rng.normal(size=(2 * m, 2 * m))
    R = rng.normal(size=(2 * m, 2 * m))
    R = 0.5 * (R + R.T)
    wk, zk = 2.7, 0.05
    W_tensor = solve_wk(build_bk(A, wk, zk), R)
    W_matrix = matrix_route_solve(A, wk, zk, R)
    assert W_tensor == pytest.approx(W_matrix, rel=1e-10, abs=1e-12)


def test_reference_coefficients(three_mass_coeffs):
    assert np.abs(three_mass_coeffs.W[2] - W2_REF).max() < 5e-5
    assert np.abs(three_mass_coeffs.W[3] - W3_REF).max() < 5e-5


def test_zero_forcing_matrix_gives_zero_solution(three_mass_modal, three_mass_split):
    op = build_master_operator(three_mass_modal, three_mass_split)
    B = build_bk(op.matrix, 3.0, 0.02)
    assert np.all(solve_wk(B, np.zeros((2, 2))) == 0.0)


def test_symmetry_and_residual_invariants(three_mass_coeffs):
    for k, W in three_mass_coeffs.W.items():
        assert np.abs(W - W.T).max() <= 1e-12
        assert three_mass_coeffs.residuals[k] <= 1e-8


def test_solution_invariant_under_resymmetrized_input(three_mass_modal, three_mass_split):
    # the antisymmetric part of the forcing matrix never reaches the
    # symmetrized solution
    op = build_master_operator(three_mass_modal, three_mass_split)
    B = build_bk(op.matrix, 3.0, 0.02)
    rng = np.random.default_rng(4)
    R = rng.normal(size=(2, 2))
    W_raw = solve_wk(B, R)
    W_sym = solve_wk(B, 0.5 * (R + R.T))
    assert W_raw == pytest.approx(W_sym, rel=1e-10, abs=1e-14)


def test_inner_resonance_raises():
    # slave at exactly twice the master frequency with vanishing damping
    system = ss.build_three_mass((1.0, 2.0, 5.0), (1e-9, 1e-9, 1e-9))
    modal = ss.compute_modes(system)
    with pytest.raises(ResonanceError):
        ss.compute_ssm_coefficients(modal, MasterSplit(3, (1,)), slaves=(2,))


def test_evaluate_ssm_origin_and_symmetry(three_mass_coeffs):
    eta0, deta0 = ss.evaluate_ssm(three_mass_coeffs, np.zeros(2))
    assert all(v == 0.0 for v in eta0.values())
    assert all(v == 0.0 for v in deta0.values())
    x = np.array([0.03, -0.01])
    ep, dp = ss.evaluate_ssm(three_mass_coeffs, x)
    em, dm = ss.evaluate_ssm(three_mass_coeffs, -x)
    assert ep == pytest.approx(em)
    assert dp == pytest.approx(dm)


def test_evaluate_ssm_reference_value(three_mass_coeffs):
    eta, _ = ss.evaluate_ssm(three_mass_coeffs, np.array([0.1, 0.0]))
    assert eta[2] == pytest.approx(0.01 * W2_REF[0, 0], rel=2e-3)


def test_invariance_residual_zero_at_origin(three_mass_modal, three_mass_coeffs):
    res = ss.invariance_residual(three_mass_modal, three_mass_coeffs, np.zeros(2))
    assert all(v == 0.0 for v in res.values())


def test_invariance_residual_cubic_scaling(three_mass_modal, three_mass_coeffs):
    x = np.array([1.0, 0.7])
    levels = [1e-2, 5e-3, 2.5e-3]
    values = [
        ss.invariance_residual(three_mass_modal, three_mass_coeffs, s * x)
        for s in levels
    ]
    for k in three_mass_coeffs.W:
        r1 = values[0][k] / values[1][k]
        r2 = values[1][k] / values[2][k]
        assert r1 == pytest.approx(8.0, rel=0.15)
        assert r2 == pytest.approx(8.0, rel=0.15)


def test_invariance_residual_zero_for_linear_system():
    system = ss.SecondOrderSystem(3, np.eye(3), 0.02 * np.eye(3), np.diag([1.0, 4.0, 9.0]))
    modal = ss.compute_modes(system)
    coeffs = ss.compute_ssm_coefficients(modal, MasterSplit(3, (1,)))
    res = ss.invariance_residual(modal, coeffs, np.array([0.3, 0.2]))
    assert all(abs(v) < 1e-14 for v in res.values())
