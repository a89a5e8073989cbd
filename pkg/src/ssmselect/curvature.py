"""Scalar curvature of the quadratic slave graph at the origin.

Two independent routes are provided.  The closed forms evaluate the
ready-to-use trace expressions term by term.  The numerical oracle
follows the general differential-geometry route instead: it builds the
induced metric of the graph embedding analytically, takes second
derivatives of the metric by central differences and combines them
into the scalar curvature.  The oracle exists to cross-check the
closed forms and shares no algebra with them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CurvatureReport",
    "directional_curvature",
    "total_curvature",
    "curvature_report",
    "curvature_oracle",
]


def _as_matrix(A):
    return getattr(A, "matrix", A)


def _check_symmetric(W, tol=1e-9):
    scale = max(np.abs(W).max(), 1e-300)
    defect = np.abs(W - W.T).max() / scale
    if defect > tol:
        raise ValueError(f"coefficient matrix asymmetric (relative defect {defect:.2e})")


def _curvature_terms(W, A):
    """The four summands of the directional-curvature double sum.

    With d = 2m, the sum over a, b of
        W_aa W_bb + 4 (WA)_aa (WA)_bb - W_ab^2 - ((WA)_ab + (WA)_ba)^2
    collapses to traces and Frobenius norms; each term below is the
    exact value of the corresponding double sum.
    """
    WA = W @ A
    diag_sq = np.trace(W) ** 2
    mixed_diag_sq = 4.0 * np.trace(WA) ** 2
    frob_sq = float(np.sum(W * W))
    sym_frob_sq = float(np.sum((WA + WA.T) ** 2))
    return diag_sq, mixed_diag_sq, frob_sq, sym_frob_sq


def directional_curvature(W_k: np.ndarray, A) -> float:
    """Scalar curvature of the graph projected onto one slave direction.

    `A` may be a MasterOperator or a plain 2m x 2m state matrix; `W_k`
    must be symmetric.  Every term is bilinear in W_k, so scaling
    W_k -> alpha W_k scales the result by alpha^2 exactly.
    """
    A = _as_matrix(A)
    W_k = np.asarray(W_k, dtype=float)
    _check_symmetric(W_k)
    t1, t2, t3, t4 = _curvature_terms(W_k, A)
    return 4.0 * (t1 + t2 - t3 - t4)


def total_curvature(coeffs) -> float:
    """Scalar curvature of the full graph: the slave-wise sum."""
    A = coeffs.operator.matrix
    total = 0.0
    for k in sorted(coeffs.W):
        t1, t2, t3, t4 = _curvature_terms(coeffs.W[k], A)
        total += 4.0 * (t1 + t2 - t3 - t4)
    return total


@dataclass(frozen=True)
class CurvatureReport:
    """Directional curvatures keyed by slave index plus their sum."""

    I: tuple
    directional: dict
    total: float

    def ranking(self):
        """Slave indices by descending |curvature|, ties by index."""
        return sorted(self.directional, key=lambda k: (-abs(self.directional[k]), k))


def curvature_report(coeffs) -> CurvatureReport:
    directional = {
        k: directional_curvature(coeffs.W[k], coeffs.operator)
        for k in sorted(coeffs.W)
    }
    total = total_curvature(coeffs)
    check = sum(directional.values())
    if abs(total - check) > 1e-10 * max(1.0, abs(total)):
        raise AssertionError("total curvature does not match slave-wise sum")
    return CurvatureReport(I=coeffs.split.I, directional=directional, total=total)


# --- numerical oracle --------------------------------------------------


def _graph_metric(x, Ws, Vs):
    """Induced metric of the graph embedding at master state x.

    The embedding appends, per coefficient matrix W, the graph values
    <x, W x> and 2 <x, W A x>; its tangent vectors give
    g = I + sum_k 4 [ (W x)(W x)^T + (V x)(V x)^T ] with
    V = W A + A^T W.
    """
    g = np.eye(len(x))
    for W, V in zip(Ws, Vs):
        a = W @ x
        b = V @ x
        g += 4.0 * (np.outer(a, a) + np.outer(b, b))
    return g


def _scal_from_metric(Ws, Vs, d, h):
    """Scalar curvature from central differences of the metric.

    Combines the metric's second derivatives at the origin into
    (1/2) sum_ab (-d_a d_a g_bb + 2 d_a d_b g_ab - d_b d_b g_aa);
    returns (value, resolution), where resolution is the largest metric
    perturbation seen by the stencil (zero means h is below roundoff).
    """
    basis = np.eye(d)
    g0 = _graph_metric(np.zeros(d), Ws, Vs)
    if np.abs(g0 - np.eye(d)).max() > 1e-12:
        raise AssertionError("metric at the origin is not the identity")
    resolution = 0.0
    total = 0.0
    for a in range(d):
        ea = h * basis[a]
        g_pa = _graph_metric(ea, Ws, Vs)
        g_ma = _graph_metric(-ea, Ws, Vs)
        resolution = max(resolution, np.abs(g_pa - g0).max())
        for b in range(d):
            eb = h * basis[b]
            # d_a d_a g_bb and d_b d_b g_aa
            daa_gbb = (g_pa[b, b] - 2.0 * g0[b, b] + g_ma[b, b]) / h**2
            g_pb = _graph_metric(eb, Ws, Vs)
            g_mb = _graph_metric(-eb, Ws, Vs)
            dbb_gaa = (g_pb[a, a] - 2.0 * g0[a, a] + g_mb[a, a]) / h**2
            # d_a d_b g_ab by the four-point cross stencil
            dab_gab = (
                _graph_metric(ea + eb, Ws, Vs)[a, b]
                - _graph_metric(ea - eb, Ws, Vs)[a, b]
                - _graph_metric(-ea + eb, Ws, Vs)[a, b]
                + _graph_metric(-ea - eb, Ws, Vs)[a, b]
            ) / (4.0 * h**2)
            total += -daa_gbb + 2.0 * dab_gab - dbb_gaa
    return 0.5 * total, resolution


def curvature_oracle(Ws, A, h: float = 1e-4, richardson_tol: float = 1e-6) -> float:
    """Scalar curvature of a quadratic graph by finite differences.

    Parameters
    ----------
    Ws : ndarray or sequence of ndarray
        Coefficient matrices of the graph.  A single matrix (or a
        one-element sequence) describes the projection onto one slave
        direction; the full list describes the whole graph.
    A : MasterOperator or ndarray
        Master state matrix.
    h : float
        Central-difference step for the metric second derivatives.
    richardson_tol : float
        The computation is repeated with step h/2; a relative
        disagreement above this tolerance raises, which catches a step
        that is too large or small enough to be dominated by roundoff.
    """
    A = _as_matrix(A)
    if h <= 0:
        raise ValueError("step h must be positive")
    if isinstance(Ws, np.ndarray) and Ws.ndim == 2:
        Ws = [Ws]
    Ws = [np.asarray(W, dtype=float) for W in Ws]
    d = A.shape[0]
    for W in Ws:
        if W.shape != (d, d):
            raise ValueError("coefficient matrix dimensions do not match A")
    Vs = [W @ A + A.T @ W for W in Ws]
    coarse, res_coarse = _scal_from_metric(Ws, Vs, d, h)
    fine, res_fine = _scal_from_metric(Ws, Vs, d, h / 2.0)
    any_nonzero = any(np.abs(W).max() > 0 for W in Ws)
    if any_nonzero and res_fine <= 64.0 * np.finfo(float).eps:
        raise ValueError(
            f"finite-difference step h={h:g} perturbs the metric below "
            "floating-point resolution"
        )
    scale = max(abs(coarse), abs(fine), 1.0)
    if abs(coarse - fine) > richardson_tol * scale:
        raise ValueError(
            f"finite-difference step h={h:g} fails the consistency check "
            f"({coarse:.6e} vs {fine:.6e} at h/2)"
        )
    return fine
