"""Undamped modal basis, modal damping and spectral diagnostics.

Eigenpairs of K u = omega^2 M u are mass-normalized (U^T M U = I) and
sorted ascending.  Proportional damping is required; the modal damping
ratios come from the diagonal of U^T C U and a significant off-diagonal
part is a hard error because every downstream operation assumes the
damped linear system diagonalizes in the undamped modes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .system import SecondOrderSystem, evaluate_nonlinearity

__all__ = [
    "ModalModel",
    "MasterSplit",
    "NonProportionalDampingError",
    "SpectralQuotientError",
    "NonresonanceReport",
    "compute_modes",
    "modal_damping",
    "modal_quadratic_slice",
    "spectral_quotient",
    "check_nonresonance",
]


class NonProportionalDampingError(ValueError):
    """Damping matrix does not diagonalize in the undamped modes."""


class SpectralQuotientError(ValueError):
    """Relative spectral quotient is undefined for the requested split."""


@dataclass(frozen=True)
class ModalModel:
    """Mass-normalized modal basis of a second-order system.

    Attributes
    ----------
    system : SecondOrderSystem
        Source model (kept for nonlinearity access).
    omega : (n,) ndarray
        Natural frequencies in rad/s, nondecreasing.
    zeta : (n,) ndarray
        Modal damping ratios; NaN where a rigid-body mode makes the
        ratio undefined.
    U : (n, n) ndarray
        Mode shapes by column, U^T M U = I.  The largest-magnitude
        component of each column is positive so results are
        reproducible across eigensolvers.
    """

    system: SecondOrderSystem
    omega: np.ndarray
    zeta: np.ndarray
    U: np.ndarray

    @property
    def n(self):
        return self.system.n

    def first_order_eigenvalues(self) -> np.ndarray:
        """Eigenvalue pairs of the equivalent first-order system.

        Returns a (2n,) complex array with the pair of mode i at
        positions 2i-2 and 2i-1 (0-based), i.e.
        (-zeta +/- sqrt(zeta^2 - 1)) omega.
        """
        lam = np.empty(2 * self.n, dtype=complex)
        root = np.sqrt(np.asarray(self.zeta, dtype=complex) ** 2 - 1.0)
        lam[0::2] = (-self.zeta + root) * self.omega
        lam[1::2] = (-self.zeta - root) * self.omega
        return lam

    def modal_nonlinearity(self, mu: np.ndarray) -> np.ndarray:
        """Nonlinear force in modal coordinates, s(mu) = U^T S(U mu)."""
        mu = np.asarray(mu, dtype=float)
        q = mu @ self.U.T if mu.ndim > 1 else self.U @ mu
        return evaluate_nonlinearity(self.system, q) @ self.U

    def check_orthonormality(self, tol_m=1e-10, tol_k=1e-8):
        """Verify U^T M U = I and U^T K U = diag(omega^2)."""
        G = self.U.T @ self.system.M @ self.U
        err_m = np.abs(G - np.eye(self.n)).max()
        KU = self.U.T @ self.system.K @ self.U
        scale = max(np.abs(np.diag(KU)).max(), 1e-300)
        err_k = np.abs(KU - np.diag(self.omega**2)).max() / scale
        return err_m <= tol_m and err_k <= tol_k, err_m, err_k


@dataclass(frozen=True)
class MasterSplit:
    """Partition of mode indices into masters I and slaves J (1-based)."""

    n: int
    I: tuple

    def __post_init__(self):
        I = tuple(sorted(set(int(i) for i in self.I)))
        if not I:
            raise ValueError("master set must not be empty")
        if I[0] < 1 or I[-1] > self.n:
            raise ValueError(f"master indices must lie in [1, {self.n}]")
        object.__setattr__(self, "I", I)

    @property
    def J(self):
        members = set(self.I)
        return tuple(k for k in range(1, self.n + 1) if k not in members)

    @property
    def m(self):
        return len(self.I)

    def extended(self, modes):
        return MasterSplit(self.n, self.I + tuple(modes))


def _fix_signs(U):
    idx = np.abs(U).argmax(axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def compute_modes(sys: SecondOrderSystem, damping_tol: float = 1e-8) -> ModalModel:
    """Solve the generalized eigenproblem and build the modal model.

    Raises NonProportionalDampingError if U^T C U has significant
    off-diagonal content (see :func:`modal_damping`).
    """
    try:
        lam, U = scipy.linalg.eigh(sys.K, sys.M)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise RuntimeError(f"generalized eigensolve failed: {exc}") from exc
    lam = np.clip(lam, 0.0, None)
    omega = np.sqrt(lam)
    U = _fix_signs(U)
    model = ModalModel(system=sys, omega=omega, zeta=np.full(sys.n, np.nan), U=U)
    if omega.min() > 1e-12 * max(omega.max(), 1.0):
        zeta = modal_damping(sys, model, tol=damping_tol)
    else:
        # rigid-body modes leave zeta undefined; flag with NaN
        zeta = np.full(sys.n, np.nan)
        if np.abs(sys.C).max() == 0.0:
            zeta = np.zeros(sys.n)
    object.__setattr__(model, "zeta", zeta)
    return model


def modal_damping(sys: SecondOrderSystem, modal: ModalModel, tol: float = 1e-8) -> np.ndarray:
    """Modal damping ratios zeta_i = <u_i, C u_i> / (2 omega_i).

    The off-diagonal part of U^T C U is compared against
    ``tol * ||U^T C U||_F``; exceeding it raises
    NonProportionalDampingError.  A zero natural frequency makes the
    ratio undefined and is an error.
    """
    G = modal.U.T @ sys.C @ modal.U
    scale = np.linalg.norm(G)
    if scale > 0:
        off = G - np.diag(np.diag(G))
        defect = np.abs(off).max()
        if defect > tol * scale:
            raise NonProportionalDampingError(
                f"off-diagonal modal damping {defect:.3e} exceeds "
                f"{tol:.1e} * ||U^T C U|| = {tol * scale:.3e}"
            )
    if np.any(modal.omega <= 0.0):
        raise ValueError("zero natural frequency (rigid-body mode); modal damping undefined")
    return np.diag(G) / (2.0 * modal.omega)


def modal_quadratic_slice(modal: ModalModel, split: MasterSplit, k: int) -> np.ndarray:
    """Master-restricted quadratic coefficients of slave equation k.

    Returns the symmetric m x m matrix G with
    ``s_k((xi, 0)) = xi^T G xi + (cubic terms)``, obtained by
    contracting the sparse quadratic tensor with the slave mode shape
    and the master columns of U.  Computed lazily per (split, k); the
    full fourth-order modal tensor is never formed.
    """
    if k not in split.J:
        raise ValueError(f"mode {k} is not a slave of I={split.I}")
    t2 = modal.system.quad
    m = split.m
    if not t2.nnz:
        return np.zeros((m, m))
    UI = modal.U[:, [i - 1 for i in split.I]]
    uk = modal.U[:, k - 1]
    w = t2._v * uk[t2._k]
    A = UI[t2._i, :]
    B = UI[t2._j, :]
    G = A.T @ (w[:, None] * B)
    return 0.5 * (G + G.T)


def spectral_quotient(modal: ModalModel, split: MasterSplit) -> int:
    """Integer ratio of slave to master decay rates.

    Computed as Int(min_{k in J} Re lambda_k / max_{i in I} Re
    lambda_i) over the first-order eigenvalues.  Raises
    SpectralQuotientError when J is empty or a master mode does not
    decay.
    """
    if not split.J:
        raise SpectralQuotientError("slave set is empty; quotient undefined")
    if np.any(~np.isfinite(modal.zeta)):
        raise SpectralQuotientError("modal damping undefined (rigid-body mode present)")
    lam = modal.first_order_eigenvalues()
    master_re = [lam[2 * i - 2].real for i in split.I] + [lam[2 * i - 1].real for i in split.I]
    slave_re = [lam[2 * k - 2].real for k in split.J] + [lam[2 * k - 1].real for k in split.J]
    fastest_master = max(master_re)
    if fastest_master >= 0.0:
        raise SpectralQuotientError(
            "a master mode has nonnegative real part; quotient diverges"
        )
    ratio = min(slave_re) / fastest_master
    return int(np.floor(ratio + 1e-9))


@dataclass(frozen=True)
class NonresonanceReport:
    """Outcome of the low-order nonresonance checks.

    `flagged` lists (coefficients, slave_index, mismatch) triples for
    combinations within `rtol` of a slave eigenvalue; `margin` is the
    smallest relative mismatch seen over all checked combinations.
    """

    sigma: int
    order_cap: int
    truncated: bool
    checked: int
    flagged: tuple
    margin: float
    rtol: float

    @property
    def passed(self):
        return not self.flagged


def check_nonresonance(
    modal: ModalModel,
    split: MasterSplit,
    rtol: float = 1e-3,
    max_order: int = 6,
) -> NonresonanceReport:
    """Flag low-order inner resonances between master and slave modes.

    All integer combinations of master first-order eigenvalues with
    total order between 2 and min(sigma, max_order) are compared
    against every slave eigenvalue.  Orders above `max_order` are
    skipped with the truncation recorded in the report.
    """
    sigma = spectral_quotient(modal, split)
    cap = min(sigma, max_order)
    truncated = sigma > max_order
    lam = modal.first_order_eigenvalues()
    master_lams = [lam[2 * i - 2] for i in split.I] + [lam[2 * i - 1] for i in split.I]
    slave_lams = [(k, lam[2 * k - 2]) for k in split.J] + [(k, lam[2 * k - 1]) for k in split.J]
    flagged = []
    margin = np.inf
    checked = 0
    nm = len(master_lams)
    for total in range(2, cap + 1):
        for combo in itertools.combinations_with_replacement(range(nm), total):
            value = sum(master_lams[c] for c in combo)
            coeffs = tuple(combo.count(c) for c in range(nm))
            for k, lk in slave_lams:
                checked += 1
                mismatch = abs(value - lk) / max(abs(lk), 1e-300)
                margin = min(margin, mismatch)
                if mismatch < rtol:
                    flagged.append((coeffs, k, float(mismatch)))
    return NonresonanceReport(
        sigma=sigma,
        order_cap=cap,
        truncated=truncated,
        checked=checked,
        flagged=tuple(flagged),
        margin=float(margin) if checked else np.inf,
        rtol=rtol,
    )
