"""Second-order invariant-manifold coefficients of the slave modes.

Near the origin each slave coordinate is slaved to the master state
x = (xi, xi') through a quadratic graph eta_k(x) = <x, W_k x>.  The
symmetric coefficient matrices W_k solve the linear invariance
equations

    2 A^T W A + W A^2 + (A^2)^T W
      + 2 zeta_k omega_k (W A + A^T W) + omega_k^2 W = -R_k,

where A is the master state matrix and R_k carries the quadratic
coefficients of the slave equation restricted to the master subspace.
The equation is solved in vectorized form through an equivalent
fourth-order tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modal import MasterSplit, ModalModel, modal_quadratic_slice
from .system import evaluate_jacobian

__all__ = [
    "MasterOperator",
    "SSMCoefficients",
    "ResonanceError",
    "build_master_operator",
    "build_rk",
    "build_bk",
    "solve_wk",
    "compute_ssm_coefficients",
    "evaluate_ssm",
    "invariance_residual",
]

# vectorization order: row-major, a 2m x 2m matrix entry (r, q) maps to
# flat position r*2m + q.  Any consistent order works; this one is
# fixed so that outputs are reproducible.

COND_LIMIT = 1e12


class ResonanceError(RuntimeError):
    """Invariance equation is (near) singular for a slave mode."""


@dataclass(frozen=True)
class MasterOperator:
    """First-order state matrix of the master modes.

    The matrix has the exact block form [[0, I], [-K_I, -C_I]] with
    K_I = diag(omega_i^2) and C_I = diag(2 zeta_i omega_i) over the
    master set.
    """

    matrix: np.ndarray
    K_I: np.ndarray
    C_I: np.ndarray
    I: tuple

    @property
    def m(self):
        return len(self.I)

    def eigenvalues(self):
        return np.linalg.eigvals(self.matrix)


def build_master_operator(modal: ModalModel, split: MasterSplit) -> MasterOperator:
    idx = [i - 1 for i in split.I]
    om = modal.omega[idx]
    ze = modal.zeta[idx]
    if np.any(~np.isfinite(ze)):
        raise ValueError("master operator needs finite damping ratios")
    m = split.m
    K_I = np.diag(om**2)
    C_I = np.diag(2.0 * ze * om)
    A = np.zeros((2 * m, 2 * m))
    A[:m, m:] = np.eye(m)
    A[m:, :m] = -K_I
    A[m:, m:] = -C_I
    return MasterOperator(matrix=A, K_I=K_I, C_I=C_I, I=split.I)


def build_rk(modal: ModalModel, split: MasterSplit, k: int) -> np.ndarray:
    """Quadratic forcing matrix of slave k over the master state.

    Only the displacement-displacement block is populated because the
    nonlinearity is position-only; the result is symmetric 2m x 2m.
    """
    g = modal_quadratic_slice(modal, split, k)
    m = split.m
    R = np.zeros((2 * m, 2 * m))
    R[:m, :m] = g
    return R


def build_bk(A, omega_k: float, zeta_k: float) -> np.ndarray:
    """Fourth-order tensor of the invariance equation for one slave.

    Entry [s, t, r, q] multiplies W[r, q] and contributes to the
    residual entry (s, t):

        2 A[r,s] A[q,t] + (A^2)[q,t] d[r,s] + (A^2)[r,s] d[q,t]
        + 2 zeta_k omega_k (A[q,t] d[r,s] + A[r,s] d[q,t])
        + omega_k^2 d[r,s] d[q,t].

    The final term pairs (r,s) and (q,t) like the damping terms; the
    alternative pairing fails to reproduce the motivating-example
    coefficients.
    """
    A = getattr(A, "matrix", A)
    d = A.shape[0]
    A2 = A @ A
    I = np.eye(d)
    c = 2.0 * zeta_k * omega_k
    B = (
        2.0 * np.einsum("rs,qt->strq", A, A)
        + np.einsum("qt,rs->strq", A2 + c * A + 0.5 * omega_k**2 * I, I)
        + np.einsum("rs,qt->strq", A2 + c * A + 0.5 * omega_k**2 * I, I)
    )
    return B


def _equilibrate(B, iters=3):
    """Row/column scaling that strips unit disparity from B.

    Displacement and velocity coordinates differ by frequency factors,
    which inflates the raw condition number of the flattened system
    without making it any harder to solve.  A few max-norm scaling
    passes remove that artifact while a genuinely resonant (singular)
    system stays ill conditioned.
    """
    dr = np.ones(B.shape[0])
    dc = np.ones(B.shape[1])
    Bs = B.copy()
    for _ in range(iters):
        r = np.sqrt(np.abs(Bs).max(axis=1))
        r[r == 0] = 1.0
        Bs /= r[:, None]
        dr *= r
        c = np.sqrt(np.abs(Bs).max(axis=0))
        c[c == 0] = 1.0
        Bs /= c[None, :]
        dc *= c
    return Bs, dr, dc


def solve_wk(B_k: np.ndarray, R_k: np.ndarray) -> np.ndarray:
    """Solve the vectorized invariance equation and symmetrize.

    B_k is the (d, d, d, d) tensor from :func:`build_bk` and R_k the
    symmetric forcing matrix.  The flattened system is equilibrated
    before solving; a condition estimate above the threshold then
    signals an inner resonance between master and slave eigenvalues
    and raises ResonanceError.
    """
    d = R_k.shape[0]
    if B_k.shape != (d, d, d, d):
        raise ValueError(f"tensor shape {B_k.shape} inconsistent with matrix {R_k.shape}")
    B = B_k.reshape(d * d, d * d)
    Bs, dr, dc = _equilibrate(B)
    cond = np.linalg.cond(Bs)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ResonanceError(
            f"invariance equation condition number {cond:.2e} exceeds {COND_LIMIT:.0e}; "
            "a master/slave inner resonance is likely (see check_nonresonance)"
        )
    y = np.linalg.solve(Bs, -(R_k.ravel() / dr))
    W = (y / dc).reshape(d, d)
    return 0.5 * (W + W.T)


@dataclass(frozen=True)
class SSMCoefficients:
    """Quadratic slave-graph coefficients for one master split.

    `W` maps each slave index k to its symmetric 2m x 2m coefficient
    matrix; `residuals` holds the relative Frobenius residual of each
    solve.
    """

    operator: MasterOperator
    split: MasterSplit
    W: dict
    residuals: dict

    @property
    def m(self):
        return self.split.m


def compute_ssm_coefficients(
    modal: ModalModel,
    split: MasterSplit,
    slaves=None,
) -> SSMCoefficients:
    """Solve the invariance equations for every requested slave mode.

    Solves are independent per slave; output ordering follows the
    slave indices.  Each solution is verified against the tensor
    equation to 1e-8 relative.
    """
    op = build_master_operator(modal, split)
    slaves = split.J if slaves is None else tuple(slaves)
    W = {}
    residuals = {}
    for k in slaves:
        R = build_rk(modal, split, k)
        B = build_bk(op.matrix, modal.omega[k - 1], modal.zeta[k - 1])
        Wk = solve_wk(B, R)
        res = np.linalg.norm(np.einsum("strq,rq->st", B, Wk) + R)
        rel = res / max(1.0, np.linalg.norm(R))
        if rel > 1e-8:
            raise ResonanceError(
                f"slave {k}: invariance residual {rel:.2e} above 1e-8"
            )
        W[k] = Wk
        residuals[k] = rel
    return SSMCoefficients(operator=op, split=split, W=W, residuals=residuals)


def evaluate_ssm(coeffs: SSMCoefficients, x: np.ndarray):
    """Slave displacements and velocities on the quadratic graph.

    For master state x = (xi, xi') returns two dicts keyed by slave
    index with eta_k = <x, W_k x> and eta_k' = 2 <x, W_k A x>.
    """
    x = np.asarray(x, dtype=float)
    A = coeffs.operator.matrix
    Ax = A @ x
    eta = {}
    deta = {}
    for k, Wk in coeffs.W.items():
        eta[k] = float(x @ Wk @ x)
        deta[k] = float(2.0 * x @ Wk @ Ax)
    return eta, deta


def _master_state_derivative(modal, coeffs, x):
    """Master vector field on the graph, including nonlinear terms.

    Returns (xdot, mu) where mu is the full modal displacement with
    slave coordinates evaluated on the graph.
    """
    split = coeffs.split
    m = split.m
    n = modal.n
    mu = np.zeros(n)
    for a, i in enumerate(split.I):
        mu[i - 1] = x[a]
    for k, Wk in coeffs.W.items():
        mu[k - 1] = x @ Wk @ x
    s = modal.modal_nonlinearity(mu)
    xdot = coeffs.operator.matrix @ x
    xdot[m:] -= s[[i - 1 for i in split.I]]
    return xdot, mu


def invariance_residual(modal: ModalModel, coeffs: SSMCoefficients, x: np.ndarray) -> dict:
    """Residual of each slave equation evaluated on the quadratic graph.

    The slave acceleration is obtained by differentiating the graph
    along the master flow (nonlinear master terms included), so a
    correct second-order graph leaves a residual of cubic order in |x|.
    """
    x = np.asarray(x, dtype=float)
    split = coeffs.split
    m = split.m
    A = coeffs.operator.matrix
    xdot, mu = _master_state_derivative(modal, coeffs, x)

    # d(xdot)/dx for the chain rule: linear part A plus the derivative
    # of the projected nonlinearity through the graph lift.
    n = modal.n
    dmu_dx = np.zeros((n, 2 * m))
    for a, i in enumerate(split.I):
        dmu_dx[i - 1, a] = 1.0
    for k, Wk in coeffs.W.items():
        dmu_dx[k - 1, :] = 2.0 * (Wk @ x)
    Jphys = evaluate_jacobian(modal.system, modal.U @ mu)
    Jmodal = modal.U.T @ Jphys @ modal.U
    Jmaster = Jmodal[[i - 1 for i in split.I], :] @ dmu_dx
    Jfield = A.copy()
    Jfield[m:, :] -= Jmaster
    xddot = Jfield @ xdot

    s = modal.modal_nonlinearity(mu)
    out = {}
    for k, Wk in coeffs.W.items():
        eta = x @ Wk @ x
        deta = 2.0 * x @ Wk @ xdot
        ddeta = 2.0 * (xdot @ Wk @ xdot + x @ Wk @ xddot)
        wk = modal.omega[k - 1]
        zk = modal.zeta[k - 1]
        out[k] = float(abs(ddeta + 2.0 * zk * wk * deta + wk**2 * eta + s[k - 1]))
    return out
