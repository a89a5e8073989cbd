"""Steady-state periodic response by harmonic balance and continuation.

Periodic solutions are truncated Fourier series

    q(t) = z0 + sum_h  c_h cos(h Omega t) + s_h sin(h Omega t),

solved by Galerkin harmonic balance: the nonlinearity is collocated on
an oversampled phase grid (alternating frequency/time), projected back
onto the retained harmonics, and the coefficient residual is driven to
zero by Newton iteration with the exact chain-rule Jacobian.

Response curves are traced by sequential continuation, re-using each
converged solution as the predictor for the next step, halving the
step on Newton failure and switching to pseudo-arclength
parameterization when natural stepping stalls near a turning point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modal import MasterSplit, ModalModel
from .system import (
    ForcingSpec,
    SecondOrderSystem,
    evaluate_jacobian,
    evaluate_nonlinearity,
)

__all__ = [
    "PeriodicSolution",
    "ResponseCurve",
    "CurveSample",
    "ReducedModel",
    "linear_response",
    "reduce_model",
    "solve_periodic_hb",
    "frequency_sweep",
    "amplitude_sweep",
    "lift",
    "relative_error",
]

HB_TOL = 1e-9
HB_MAX_ITER = 30
JUMP_THRESHOLD = 0.5  # relative amplitude change flagged as a branch jump


@dataclass(frozen=True)
class PeriodicSolution:
    """Truncated Fourier representation of one steady state.

    `mean` has shape (d,), `cos` and `sin` shape (NH, d).  `residual`
    and `iterations` are the Newton exit state; `converged` is False
    when the iteration hit its cap, in which case the best iterate is
    returned for diagnosis.
    """

    omega: float
    mean: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    residual: float = 0.0
    iterations: int = 0
    converged: bool = True

    @property
    def n_dofs(self):
        return self.mean.shape[0]

    @property
    def n_harmonics(self):
        return self.cos.shape[0]

    def reconstruct(self, n_samples: int = 256) -> tuple:
        """Sample one period; returns (phase grid in [0, 2pi), values)."""
        tau = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
        return tau, self.at_phase(tau)

    def at_phase(self, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        vals = np.tile(self.mean, (len(tau), 1))
        for h in range(1, self.n_harmonics + 1):
            vals += np.outer(np.cos(h * tau), self.cos[h - 1])
            vals += np.outer(np.sin(h * tau), self.sin[h - 1])
        return vals

    def amplitude_max(self, n_samples: int = 256) -> float:
        """Largest Euclidean norm over one period."""
        _, vals = self.reconstruct(n_samples)
        return float(np.linalg.norm(vals, axis=1).max())

    def derivative_at_phase(self, tau, order: int = 1) -> np.ndarray:
        """Time derivative of the reconstruction (needs omega > 0)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        vals = np.zeros((len(tau), self.n_dofs))
        for h in range(1, self.n_harmonics + 1):
            w = (h * self.omega) ** order
            if order % 2 == 0:
                sign = -1.0 if order % 4 == 2 else 1.0
                vals += sign * (np.outer(np.cos(h * tau), self.cos[h - 1])
                                + np.outer(np.sin(h * tau), self.sin[h - 1])) * w
            else:
                sign = -1.0 if order % 4 == 1 else 1.0
                vals += w * (sign * np.outer(np.sin(h * tau), self.cos[h - 1])
                             - sign * np.outer(np.cos(h * tau), self.sin[h - 1]))
        return vals

    def dof_amplitude(self, dof: int, n_samples: int = 256) -> float:
        """Peak-to-mean amplitude of one DOF (1-based index)."""
        _, vals = self.reconstruct(n_samples)
        return float(np.abs(vals[:, dof - 1]).max())

    def coefficient_norm(self) -> float:
        return float(
            np.sqrt(
                np.sum(self.mean**2) + np.sum(self.cos**2) + np.sum(self.sin**2)
            )
        )


@dataclass(frozen=True)
class ReducedModel:
    """Galerkin reduction onto the master modes (slaves set to zero).

    The linear part is diagonal by mass normalization; the nonlinear
    force is the physical polynomial contracted with the master mode
    shapes, evaluated through lift and projection.
    """

    modal: ModalModel
    split: MasterSplit
    phi: np.ndarray        # modal cosine forcing amplitudes
    U_I: np.ndarray        # (n, m) lift matrix

    @property
    def m(self):
        return self.split.m

    @property
    def omega_I(self):
        return self.modal.omega[[i - 1 for i in self.split.I]]

    @property
    def zeta_I(self):
        return self.modal.zeta[[i - 1 for i in self.split.I]]

    def nonlinear_force(self, xi):
        q = np.asarray(xi, dtype=float) @ self.U_I.T
        return evaluate_nonlinearity(self.modal.system, q) @ self.U_I

    def nonlinear_jacobian(self, xi):
        q = np.asarray(xi, dtype=float) @ self.U_I.T
        J = evaluate_jacobian(self.modal.system, q)
        return np.einsum("ia,tij,jb->tab", self.U_I, J, self.U_I)


def reduce_model(modal: ModalModel, split: MasterSplit, forcing: ForcingSpec) -> ReducedModel:
    """Build the projection-based reduced model for a master split."""
    U_I = modal.U[:, [i - 1 for i in split.I]]
    G = U_I.T @ modal.system.M @ U_I
    if np.abs(G - np.eye(split.m)).max() > 1e-8:
        raise ValueError("master mode shapes are not mass-orthonormal")
    phi = U_I.T @ forcing.effective()
    return ReducedModel(modal=modal, split=split, phi=phi, U_I=U_I)


# --- harmonic balance ---------------------------------------------------


def _aft_grid(NH):
    """Phase grid and transform matrices for NH harmonics.

    The grid is the power of two at or above 4 NH + 1 samples, twice
    oversampled relative to the retained band so that cubic terms do
    not alias back onto it.
    """
    nt = 1
    while nt < 4 * NH + 1:
        nt *= 2
    tau = 2.0 * np.pi * np.arange(nt) / nt
    basis = np.ones((nt, 2 * NH + 1))
    weights = np.empty((2 * NH + 1, nt))
    weights[0] = 1.0 / nt
    for h in range(1, NH + 1):
        basis[:, 2 * h - 1] = np.cos(h * tau)
        basis[:, 2 * h] = np.sin(h * tau)
        weights[2 * h - 1] = (2.0 / nt) * np.cos(h * tau)
        weights[2 * h] = (2.0 / nt) * np.sin(h * tau)
    return tau, basis, weights


class _HBProblem:
    """Adapter presenting full or reduced models to the HB solver."""

    def __init__(self, model, forcing: ForcingSpec):
        self.forcing = forcing
        if isinstance(model, SecondOrderSystem):
            self.d = model.n
            self.M = model.M
            self.C = model.C
            self.K = model.K
            self._sys = model
            self._rom = None
        elif isinstance(model, ReducedModel):
            m = model.m
            self.d = m
            self.M = np.eye(m)
            self.C = np.diag(2.0 * model.zeta_I * model.omega_I)
            self.K = np.diag(model.omega_I**2)
            self._sys = None
            self._rom = model
        else:
            raise TypeError(f"cannot solve periodic response of {type(model).__name__}")

    def force_amplitude(self, scale=None):
        eff = self.forcing.effective() if scale is None else scale * self.forcing.amplitude
        if self._rom is not None:
            return self._rom.U_I.T @ eff
        return eff

    def nonlinear(self, qb):
        if self._rom is not None:
            return self._rom.nonlinear_force(qb)
        return evaluate_nonlinearity(self._sys, qb)

    def nonlinear_jac(self, qb):
        if self._rom is not None:
            return self._rom.nonlinear_jacobian(qb)
        return evaluate_jacobian(self._sys, qb)


def _linear_blocks(problem, omega, NH):
    """Dynamic stiffness blocks per harmonic, diagonal in harmonic index."""
    blocks = [problem.K]
    for h in range(1, NH + 1):
        D = problem.K - (h * omega) ** 2 * problem.M
        blocks.append((D, h * omega * problem.C))
    return blocks


def _hb_residual(problem, Z, omega, famp, NH, basis, weights):
    qb = basis @ Z
    Sf = weights @ problem.nonlinear(qb)
    R = np.empty_like(Z)
    R[0] = Z[0] @ problem.K.T + Sf[0]
    for h in range(1, NH + 1):
        D = problem.K - (h * omega) ** 2 * problem.M
        G = h * omega * problem.C
        c, s = Z[2 * h - 1], Z[2 * h]
        R[2 * h - 1] = c @ D.T + s @ G.T + Sf[2 * h - 1]
        R[2 * h] = -c @ G.T + s @ D.T + Sf[2 * h]
    R[1] -= famp
    return R

def _hb_jacobian(problem, Z, omega, NH, basis, weights):
    d = problem.d
    nz = (2 * NH + 1) * d
    qb = basis @ Z
    Jt = problem.nonlinear_jac(qb)
    L = np.zeros((2 * NH + 1, 2 * NH + 1, d, d))
    L[0, 0] = problem.K
    for h in range(1, NH + 1):
        D = problem.K - (h * omega) ** 2 * problem.M
        G = h * omega * problem.C
        L[2 * h - 1, 2 * h - 1] = D
        L[2 * h, 2 * h] = D
        L[2 * h - 1, 2 * h] = G
        L[2 * h, 2 * h - 1] = -G
    J = L.transpose(0, 2, 1, 3).reshape(nz, nz).copy()
    J += np.einsum("at,tij,tb->aibj", weights, Jt, basis, optimize=True).reshape(nz, nz)
    return J


def _hb_domega(problem, Z, omega, NH):
    """Analytic derivative of the residual with respect to omega."""
    dR = np.zeros_like(Z)
    for h in range(1, NH + 1):
        c, s = Z[2 * h - 1], Z[2 * h]
        dD = -2.0 * h**2 * omega * problem.M
        dG = h * problem.C
        dR[2 * h - 1] = c @ dD.T + s @ dG.T
        dR[2 * h] = -c @ dG.T + s @ dD.T
    return dR


def _resize_coefficients(sol: PeriodicSolution, NH):
    Z = np.zeros((2 * NH + 1, sol.n_dofs))
    Z[0] = sol.mean
    hh = min(NH, sol.n_harmonics)
    Z[1 : 2 * hh : 2] = sol.cos[:hh]
    Z[2 : 2 * hh + 1 : 2] = sol.sin[:hh]
    return Z


def _pack(Z, omega, residual, iterations, converged):
    NH = (Z.shape[0] - 1) // 2
    return PeriodicSolution(
        omega=float(omega),
        mean=Z[0].copy(),
        cos=Z[1::2].copy(),
        sin=Z[2::2].copy(),
        residual=float(residual),
        iterations=int(iterations),
        converged=bool(converged),
    )


def linear_response(sys, forcing: ForcingSpec, omega: float = None) -> PeriodicSolution:
    """Closed-form single-harmonic response of the linearized model.

    Solves (K - omega^2 M + i omega C) qhat = f for the complex
    amplitude; a singular dynamic stiffness (undamped resonance)
    raises.  Also accepts a ReducedModel.
    """
    omega = forcing.omega if omega is None else float(omega)
    problem = _HBProblem(sys, forcing)
    f = problem.force_amplitude()
    D = problem.K - omega**2 * problem.M + 1j * omega * problem.C
    try:
        qhat = np.linalg.solve(D, f.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"singular dynamic stiffness at omega={omega:g} (undamped resonance)"
        ) from exc
    d = problem.d
    return PeriodicSolution(
        omega=omega,
        mean=np.zeros(d),
        cos=qhat.real[None, :],
        sin=-qhat.imag[None, :],
    )


def solve_periodic_hb(
    model,
    forcing: ForcingSpec,
    omega: float = None,
    NH: int = 7,
    init: PeriodicSolution = None,
    tol: float = HB_TOL,
    max_iter: int = HB_MAX_ITER,
) -> PeriodicSolution:
    """Newton-iterated harmonic balance solution at one frequency.

    The initial iterate is `init` resampled to NH harmonics, or the
    linear response when no initial solution is given.  On
    non-convergence the best iterate is returned with
    ``converged=False`` together with its residual, so sweeps can react
    by shortening their step.
    """
    if NH < 1:
        raise ValueError("need at least one harmonic")
    omega = forcing.omega if omega is None else float(omega)
    problem = _HBProblem(model, forcing)
    famp = problem.force_amplitude()
    _, basis, weights = _aft_grid(NH)
    if init is None:
        init = linear_response(model, forcing, omega)
    Z = _resize_coefficients(init, NH)
    fnorm = 1.0 + np.linalg.norm(famp)
    best = None
    for it in range(max_iter + 1):
        R = _hb_residual(problem, Z, omega, famp, NH, basis, weights)
        rnorm = float(np.linalg.norm(R))
        if best is None or rnorm < best[1]:
            best = (Z.copy(), rnorm, it)
        if not np.isfinite(rnorm):
            break
        if rnorm < tol * fnorm:
            return _pack(Z, omega, rnorm, it, True)
        if it == max_iter:
            break
        J = _hb_jacobian(problem, Z, omega, NH, basis, weights)
        try:
            step = np.linalg.solve(J, -R.reshape(-1))
        except np.linalg.LinAlgError:
            break
        Z = Z + step.reshape(Z.shape)
    Zb, rb, ib = best
    return _pack(Zb, omega, rb, ib, False)


def lift(solution: PeriodicSolution, rom: ReducedModel) -> PeriodicSolution:
    """Map a reduced-coordinate solution to physical coordinates."""
    if solution.n_dofs != rom.m:
        raise ValueError("solution does not belong to this reduced model")
    return PeriodicSolution(
        omega=solution.omega,
        mean=rom.U_I @ solution.mean,
        cos=solution.cos @ rom.U_I.T,
        sin=solution.sin @ rom.U_I.T,
        residual=solution.residual,
        iterations=solution.iterations,
        converged=solution.converged,
    )


def _physical(solution, model):
    return lift(solution, model) if isinstance(model, ReducedModel) else solution


def _mass_matrix_of(model):
    return model.modal.system.M if isinstance(model, ReducedModel) else model.M


def mass_norm(solution: PeriodicSolution, M: np.ndarray, n_samples: int = None) -> float:
    """Time-integrated M-weighted norm over one period.

    Degenerates gracefully at omega = 0 by treating the period as 1.
    """
    if n_samples is None:
        n_samples = 128 * max(solution.n_harmonics, 1)
    tau = np.linspace(0.0, 2.0 * np.pi, n_samples + 1)
    vals = solution.at_phase(tau)
    integrand = np.einsum("ti,ij,tj->t", vals, M, vals)
    T = 2.0 * np.pi / solution.omega if solution.omega > 0 else 1.0
    return float(np.sqrt(np.trapezoid(integrand, dx=T / n_samples)))


def ode_residual(solution: PeriodicSolution, model, forcing: ForcingSpec,
                 n_samples: int = 1024) -> float:
    """RMS residual of the governing equations on the reconstruction.

    Evaluates M q'' + C q' + K q + S(q) - f(t) on a fine time grid from
    the analytic derivatives of the Fourier series.  Truncating the
    series makes this nonzero even for converged solutions; it shrinks
    as harmonics are added.
    """
    problem = _HBProblem(model, forcing)
    tau = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    q = solution.at_phase(tau)
    dq = solution.derivative_at_phase(tau, 1)
    ddq = solution.derivative_at_phase(tau, 2)
    f = np.outer(np.cos(tau), problem.force_amplitude())
    r = ddq @ problem.M.T + dq @ problem.C.T + q @ problem.K.T + problem.nonlinear(q) - f
    return float(np.sqrt(np.mean(np.sum(r**2, axis=1))))


def relative_error(full: PeriodicSolution, reduced_lifted: PeriodicSolution, M: np.ndarray) -> float:
    """Mass-weighted relative error between two periodic solutions.

    Both solutions must share the forcing period.  The time integrals
    run over one period on a common grid of at least 128 samples per
    harmonic with the trapezoid rule.
    """
    if abs(full.omega - reduced_lifted.omega) > 1e-9 * max(abs(full.omega), 1.0):
        raise ValueError("solutions have different fundamental frequencies")
    if full.n_dofs != reduced_lifted.n_dofs:
        raise ValueError("solutions live on different coordinate spaces")
    n_samples = 128 * max(full.n_harmonics, reduced_lifted.n_harmonics, 1)
    tau = np.linspace(0.0, 2.0 * np.pi, n_samples + 1)
    qf = full.at_phase(tau)
    qr = reduced_lifted.at_phase(tau)
    T = 2.0 * np.pi / full.omega if full.omega > 0 else 1.0
    dt = T / n_samples

    def mnorm(vals):
        integrand = np.einsum("ti,ij,tj->t", vals, M, vals)
        return np.sqrt(np.trapezoid(integrand, dx=dt))

    denom = mnorm(qf)
    if denom == 0.0:
        raise ZeroDivisionError("reference solution has zero mass norm")
    return float(mnorm(qr - qf) / denom)


# --- continuation -------------------------------------------------------


def _ramp_to_scale(model, forcing, omega, target_scale, NH, start_div=1024.0):
    """Walk the force amplitude up from the near-linear regime.

    Multiplicative stepping with backoff; returns the converged
    solution at `target_scale` or None.
    """
    if target_scale == 0.0:
        return None
    scale = target_scale / start_div
    sol = solve_periodic_hb(model, forcing.with_scale(scale), omega, NH=NH)
    if not sol.converged:
        return None
    factor = 2.0
    while abs(scale) < abs(target_scale):
        trial = scale * factor
        if abs(trial) >= abs(target_scale):
            trial = target_scale
        nxt = solve_periodic_hb(model, forcing.with_scale(trial), omega, NH=NH, init=sol)
        if nxt.converged:
            scale = trial
            sol = nxt
            factor = min(factor * 1.5, 4.0)
            continue
        factor = 1.0 + (factor - 1.0) / 2.0
        if factor < 1.0078125:
            return None
    return sol


@dataclass(frozen=True)
class CurveSample:
    param: float
    amp_max: float
    mass_norm: float
    solution: PeriodicSolution


@dataclass(frozen=True)
class ResponseCurve:
    """Swept branch of periodic solutions, ordered along the trace.

    `samples` follow the branch arclength (the parameter itself may
    fold back near turning points).  `jumps` lists sample indices where
    the response norm changed by more than half its scale in one
    accepted step, which signals a jump between coexisting branches.
    """

    kind: str
    samples: tuple
    truncated: bool = False
    messages: tuple = ()

    @property
    def params(self):
        return np.array([s.param for s in self.samples])

    @property
    def amplitudes(self):
        return np.array([s.amp_max for s in self.samples])

    @property
    def jumps(self):
        out = []
        for i in range(1, len(self.samples)):
            a, b = self.samples[i - 1].amp_max, self.samples[i].amp_max
            if abs(b - a) > JUMP_THRESHOLD * max(a, b, 1e-300):
                out.append(i)
        return tuple(out)

    def peak(self):
        """(parameter, amplitude) at the largest response norm."""
        i = int(np.argmax(self.amplitudes))
        return self.samples[i].param, self.samples[i].amp_max


def _make_sample(param, sol, model):
    phys = _physical(sol, model)
    M = _mass_matrix_of(model)
    return CurveSample(
        param=float(param),
        amp_max=phys.amplitude_max(),
        mass_norm=mass_norm(phys, M),
        solution=sol,
    )


def _continue_branch(model, forcing, kind, p_start, p_end, NH, n_steps, init=None):
    """Shared natural-parameter continuation with arclength fallback.

    kind = "frequency" sweeps omega at fixed force scale; kind =
    "amplitude" sweeps the force scale at fixed omega.
    """

    def solve_at(p, guess):
        if kind == "frequency":
            fc = forcing.with_omega(p)
            return solve_periodic_hb(model, fc, p, NH=NH, init=guess)
        fc = forcing.with_scale(p)
        return solve_periodic_hb(model, fc, forcing.omega, NH=NH, init=guess)

    p_scale = max(abs(p_end - p_start), 1e-12)
    dp0 = (p_end - p_start) / max(n_steps - 1, 1)
    samples = []
    messages = []
    truncated = False

    sol = solve_at(p_start, init)
    if not sol.converged:
        sol0 = solve_at(p_start, None)
        sol = sol0 if sol0.converged else sol
    if not sol.converged:
        # strongly nonlinear already at the start point: ramp the force
        # amplitude up from the near-linear regime at fixed parameters
        omega0 = p_start if kind == "frequency" else forcing.omega
        scale0 = forcing.scale if kind == "frequency" else p_start
        ramped = _ramp_to_scale(model, forcing, omega0, scale0, NH)
        if ramped is not None:
            sol = ramped
            messages.append(
                f"start at {kind} {p_start:g} reached by force-amplitude ramp"
            )
    if not sol.converged:
        return ResponseCurve(
            kind=kind,
            samples=(),
            truncated=True,
            messages=(f"no converged solution at {kind} start {p_start:g} "
                      f"(residual {sol.residual:.2e})",),
        )
    samples.append(_make_sample(p_start, sol, model))

    p = p_start
    dp = dp0
    direction = np.sign(dp0) if dp0 != 0 else 1.0
    min_dp = abs(dp0) / 64.0
    prev = None  # previous accepted (p, Z) for the arclength tangent

    def done(pv):
        return (pv - p_end) * direction >= -1e-12 * p_scale

    while not done(p):
        target = p + dp
        if (target - p_end) * direction > 0:
            target = p_end
        nxt = solve_at(target, sol)
        if nxt.converged:
            prev = (p, _resize_coefficients(sol, NH))
            p = target
            sol = nxt
            samples.append(_make_sample(p, sol, model))
            if abs(dp) < abs(dp0):
                dp = direction * min(abs(dp) * 2.0, abs(dp0))
            continue
        if abs(dp) / 2.0 >= min_dp:
            dp = dp / 2.0
            continue
        # natural stepping stalled, typically at a fold; trace around it
        p_stall = p
        arc_samples, arc_msgs, sol, p, status = _arclength_trace(
            model, forcing, kind, solve_at, prev, sol, p,
            p_start, p_end, direction, p_scale, NH, abs(dp0),
        )
        samples.extend(arc_samples)
        messages.extend(arc_msgs)
        if status == "resume":
            dp = direction * abs(dp0)
            continue
        if status == "reached_end":
            break
        if status == "wandered":
            # the traced branch folds away from the sweep window; land
            # on the coexisting branch just past the stall instead
            jumped = False
            for skip in (1, 2, 3):
                target = p_stall + skip * abs(dp0) * direction
                if (target - p_end) * direction > 0:
                    target = p_end
                fresh = solve_at(target, None)
                if fresh.converged:
                    messages.append(
                        f"branch jump at {kind} {target:g} after fold near {p_stall:g}"
                    )
                    prev = None
                    p = target
                    sol = fresh
                    samples.append(_make_sample(p, sol, model))
                    dp = direction * abs(dp0)
                    jumped = True
                    break
                if target == p_end:
                    break
            if jumped:
                continue
        truncated = True
        messages.append(
            f"branch truncated at {kind} {p:g}: continuation failed ({status})"
        )
        break

    return ResponseCurve(
        kind=kind,
        samples=tuple(samples),
        truncated=truncated,
        messages=tuple(messages),
    )


def _arclength_trace(model, forcing, kind, solve_at, prev, sol, p,
                     p_start, p_end, direction, p_scale, NH, dp0,
                     max_steps=200):
    """Pseudo-arclength steps until the parameter clears the stall.

    Unknowns are the Fourier coefficients and the (scaled) parameter;
    the predictor is the secant of the last two accepted points and the
    corrector enforces orthogonality to it.  Returns (samples,
    messages, solution, parameter, status) with status one of
    "reached_end", "resume" (natural stepping can continue), "wandered"
    (the branch left the sweep window) or "failed".
    """
    problem = _HBProblem(model, forcing)
    _, basis, weights = _aft_grid(NH)
    d = problem.d
    nz = (2 * NH + 1) * d

    def residual_and_jac(Z, pv):
        if kind == "frequency":
            om = pv
            famp = problem.force_amplitude()
            dRdp = _hb_domega(problem, Z, om, NH).reshape(-1)
        else:
            om = forcing.omega
            famp = problem.force_amplitude(scale=pv)
            dRdp = np.zeros(nz)
            dRdp[d : 2 * d] = -problem.force_amplitude(scale=1.0)
        R = _hb_residual(problem, Z, om, famp, NH, basis, weights)
        J = _hb_jacobian(problem, Z, om, NH, basis, weights)
        return R.reshape(-1), J, dRdp, famp

    Z = _resize_coefficients(sol, NH)
    if prev is None:
        tz = np.zeros(nz)
        tp = 1.0
    else:
        p_prev, Z_prev = prev
        tz = (Z - Z_prev).reshape(-1)
        tp = (p - p_prev) / p_scale
    tnorm = np.sqrt(tz @ tz + tp * tp)
    if tnorm == 0:
        tz, tp, tnorm = np.zeros(nz), direction, 1.0
    tz, tp = tz / tnorm, tp / tnorm
    ds = max(dp0 / (8.0 * p_scale), 1e-6)
    window_lo = min(p_start, p_end) - 0.02 * p_scale
    window_hi = max(p_start, p_end) + 0.02 * p_scale

    new_samples = []
    messages = [f"switching to arclength parameterization at {kind} {p:g}"]
    zflat = Z.reshape(-1)
    status = "failed"
    for _ in range(max_steps):
        z_pred = zflat + ds * tz
        p_pred = p + ds * tp * p_scale
        zk, pk = z_pred.copy(), p_pred
        ok = False
        rn = np.inf
        for _ in range(HB_MAX_ITER):
            R, J, dRdp, famp = residual_and_jac(zk.reshape(Z.shape), pk)
            g = tz @ (zk - z_pred) + tp * (pk - p_pred) / p_scale
            rn = np.linalg.norm(R)
            if rn < HB_TOL * (1.0 + np.linalg.norm(famp)) and abs(g) < 1e-10:
                ok = True
                break
            A = np.zeros((nz + 1, nz + 1))
            A[:nz, :nz] = J
            A[:nz, nz] = dRdp * p_scale
            A[nz, :nz] = tz
            A[nz, nz] = tp
            try:
                step = np.linalg.solve(A, -np.concatenate([R, [g]]))
            except np.linalg.LinAlgError:
                break
            zk += step[:nz]
            pk += step[nz] * p_scale
        if not ok:
            if ds > 1e-9:
                ds /= 2.0
                continue
            break
        tz_new = zk - zflat
        tp_new = (pk - p) / p_scale
        tnorm = np.sqrt(tz_new @ tz_new + tp_new**2)
        tz, tp = tz_new / tnorm, tp_new / tnorm
        zflat, p = zk, pk
        sol = _pack(zflat.reshape(Z.shape),
                    forcing.omega if kind == "amplitude" else p,
                    rn, 0, True)
        if not (window_lo <= p <= window_hi):
            status = "wandered"
            break
        new_samples.append(_make_sample(p, sol, model))
        ds = min(ds * 1.3, 0.2)
        if (p - p_end) * direction >= 0:
            status = "reached_end"
            break
        if tp * direction > 0.5 and len(new_samples) >= 3:
            status = "resume"
            break
    else:
        status = "wandered"  # step budget spent circling inside the window
    messages.append(
        f"arclength section ended at {kind} {p:g} after {len(new_samples)} steps"
    )
    return new_samples, messages, sol, p, status


def frequency_sweep(model, forcing: ForcingSpec, omega_range, NH: int = 7,
                    n_steps: int = 101, init: PeriodicSolution = None) -> ResponseCurve:
    """Trace the response branch over a frequency interval.

    Response norms are evaluated in physical coordinates (reduced
    solutions are lifted first).
    """
    lo, hi = float(omega_range[0]), float(omega_range[1])
    if lo <= 0 or hi <= 0 or lo == hi:
        raise ValueError("frequency range must be positive and nondegenerate")
    return _continue_branch(model, forcing, "frequency", lo, hi, NH, n_steps, init)


def amplitude_sweep(model, forcing: ForcingSpec, omega: float, scale_range,
                    NH: int = 7, n_steps: int = 51, init: PeriodicSolution = None) -> ResponseCurve:
    """Trace the response branch over a force-amplitude interval at fixed omega."""
    lo, hi = float(scale_range[0]), float(scale_range[1])
    if lo == hi:
        raise ValueError("amplitude range must be nondegenerate")
    fc = forcing.with_omega(omega)
    return _continue_branch(model, fc, "amplitude", lo, hi, NH, n_steps, init)
