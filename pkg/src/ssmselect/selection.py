"""Automated master-mode selection.

The initial set comes from linear superposition: modes are added in
order of their linear modal response amplitude until they carry the
configured share of the total or a cap of ceil(2N/3) modes is reached.
The nonlinear rounds then rank every slave mode by the magnitude of
its directional curvature and append the smallest prefix whose
curvature share reaches 1 - p, truncated to the mode budget N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureReport, curvature_report
from .modal import MasterSplit, ModalModel
from .response import linear_response
from .ssm import compute_ssm_coefficients
from .system import ForcingSpec

__all__ = [
    "SelectionConfig",
    "SelectionRound",
    "SelectionReport",
    "initial_master_set",
    "recommend_modes",
    "recommend_with_curvatures",
    "run_selection",
]


@dataclass(frozen=True)
class SelectionConfig:
    """Knobs of the selection run.

    `p` is the curvature tolerance in (0, 1); `N` the mode budget;
    `repeat` keeps adding nonlinear rounds until the budget is filled.
    The linear-superposition stage stops at `linear_energy_threshold`
    of the total modal amplitude or at `linear_cap` modes, which
    defaults to ceil(2N/3).
    """

    p: float = 0.05
    N: int = 10
    repeat: bool = False
    linear_energy_threshold: float = 0.9
    linear_cap: int = None

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("tolerance p must lie in (0, 1)")
        if self.N < 1:
            raise ValueError("mode budget N must be at least 1")
        if not 0.0 < self.linear_energy_threshold <= 1.0:
            raise ValueError("linear energy threshold must lie in (0, 1]")
        if self.linear_cap is None:
            object.__setattr__(self, "linear_cap", math.ceil(2 * self.N / 3))
        if self.linear_cap < 1:
            raise ValueError("linear cap must be at least 1")


@dataclass(frozen=True)
class SelectionRound:
    """One nonlinear round: masters used, curvatures, recommendation."""

    I: tuple
    curvatures: CurvatureReport
    recommended: tuple   # greedy order, before budget truncation
    accepted: tuple      # after truncation to the budget


@dataclass(frozen=True)
class SelectionReport:
    I0: tuple
    rounds: tuple
    final: tuple
    termination: str


def initial_master_set(
    modal: ModalModel,
    forcing: ForcingSpec,
    N: int,
    threshold: float = 0.9,
    cap: int = None,
) -> tuple:
    """Master modes reproducing the linear periodic response.

    The complex modal amplitudes of the single-harmonic linear
    response are ranked by modulus; modes are added greedily until
    their share exceeds `threshold` of the total or `cap` (default
    ceil(2N/3)) modes are reached.
    """
    if forcing.omega <= 0:
        raise ValueError("forcing frequency must be positive")
    if cap is None:
        cap = math.ceil(2 * N / 3)
    sol = linear_response(modal.system, forcing, forcing.omega)
    qhat = sol.cos[0] - 1j * sol.sin[0]
    z = modal.U.T @ (modal.system.M @ qhat)
    amp = np.abs(z)
    total = amp.sum()
    if total <= 0.0:
        raise ValueError("zero forcing: no linear response to rank modes by")
    chosen = []
    remaining = list(range(1, modal.n + 1))
    while len(chosen) < cap:
        if sum(amp[i - 1] for i in chosen) > threshold * total:
            break
        best = max(remaining, key=lambda i: (amp[i - 1], -i))
        chosen.append(best)
        remaining.remove(best)
    return tuple(sorted(chosen))


def recommend_with_curvatures(modal: ModalModel, split: MasterSplit, p: float):
    """Greedy slave recommendation plus the curvature table behind it.

    Returns (P, report) where P lists slave modes in greedy order (by
    descending |curvature|, ties to the lower index), cut as soon as
    the accumulated magnitude reaches (1 - p) of the slave total.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("tolerance p must lie in (0, 1)")
    coeffs = compute_ssm_coefficients(modal, split)
    report = curvature_report(coeffs)
    magnitudes = {k: abs(v) for k, v in report.directional.items()}
    total = sum(magnitudes.values())
    crit = (1.0 - p) * total
    P = []
    accumulated = 0.0
    for k in report.ranking():
        if accumulated >= crit:
            break
        accumulated += magnitudes[k]
        P.append(k)
    if total == 0.0:
        P = []
    return tuple(P), report


def recommend_modes(modal: ModalModel, split: MasterSplit, p: float) -> tuple:
    """Slave modes needed to capture the directional curvature.

    See :func:`recommend_with_curvatures`; this returns only the
    recommended set, in greedy order.
    """
    return recommend_with_curvatures(modal, split, p)[0]


def run_selection(
    modal: ModalModel,
    forcing: ForcingSpec,
    cfg: SelectionConfig,
    initial=None,
) -> SelectionReport:
    """Full selection: linear superposition stage plus nonlinear rounds.

    `initial` overrides the superposition stage with an explicit
    starting set (useful when reproducing published mode sets whose
    loading is not known exactly).  Each round recomputes curvatures
    for the grown master set; the loop stops after one round unless
    `repeat` is set, and always stops at the budget N or on an empty
    recommendation.
    """
    if initial is None:
        I = list(initial_master_set(
            modal, forcing, cfg.N, cfg.linear_energy_threshold, cfg.linear_cap
        ))
    else:
        I = sorted(set(int(i) for i in initial))
    I0 = tuple(I)
    rounds = []
    termination = "mode budget reached by the initial set"
    while len(I) < cfg.N:
        split = MasterSplit(modal.n, tuple(I))
        P, report = recommend_with_curvatures(modal, split, cfg.p)
        room = cfg.N - len(I)
        accepted = P[:room] if len(P) > room else P
        rounds.append(SelectionRound(
            I=tuple(I), curvatures=report, recommended=P, accepted=accepted,
        ))
        I = sorted(set(I) | set(accepted))
        if not P:
            termination = "no slave mode recommended (zero curvature)"
            break
        if not cfg.repeat:
            termination = "single round (repeat disabled)"
            break
        if len(I) >= cfg.N:
            termination = "mode budget reached"
            break
    return SelectionReport(
        I0=I0, rounds=tuple(rounds), final=tuple(I), termination=termination
    )
