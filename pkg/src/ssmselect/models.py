"""Built-in example models: spring-mass triple and von Karman beams.

The beams use a total-Lagrangian von Karman formulation on a straight
or shallow-arch reference line: linear axial shape functions, cubic
Hermite transverse ones, 3 DOFs per node (u, w, w').  The membrane
strain is u' + w0' w' + (w')^2 / 2 with w0 the initial shape, so an
arch rise couples axial and transverse DOFs already in the linear
stiffness.  Membrane terms use 3-point Gauss quadrature, bending
2-point, the consistent mass matrix 4-point.

Boundary tags: "pinned" fixes u and w at both ends (rotation free),
"clamped" additionally fixes w'.  The built-in paper-geometry models
default to pinned because only that choice reproduces the published
eigenfrequencies and mode indices; see the README for the measured
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .system import ForcingSpec, PolyTensor2, PolyTensor3, SecondOrderSystem

__all__ = [
    "BeamParams",
    "build_three_mass",
    "build_straight_beam",
    "build_curved_beam",
    "build_beam_model",
    "builtin_model",
    "BUILTIN_MODELS",
]

_GAUSS = {
    2: ((-0.5773502691896257, 0.5773502691896257), (1.0, 1.0)),
    3: ((-0.7745966692414834, 0.0, 0.7745966692414834),
        (5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0)),
    4: ((-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526),
        (0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538)),
}


def _gauss01(npts):
    xs, ws = _GAUSS[npts]
    return [(0.5 * (x + 1.0), 0.5 * w) for x, w in zip(xs, ws)]


@dataclass(frozen=True)
class BeamParams:
    """Geometry, material and discretization of a rectangular beam."""

    E: float = 70e9          # Young's modulus, Pa
    kappa: float = 0.1e9     # material damping, Pa*s (C = kappa/E * K)
    rho: float = 2700.0      # density, kg/m^3
    l: float = 1.0           # length, m
    h: float = 1e-3          # height, m
    b: float = 0.1           # width, m
    n_elem: int = 10
    arch_rise: float = 0.0   # midpoint rise of the circular arch, m
    bc: str = "pinned"       # "pinned" or "clamped"

    def __post_init__(self):
        for name in ("E", "kappa", "rho", "l", "h", "b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.arch_rise < 0:
            raise ValueError("arch_rise must be nonnegative")
        if self.n_elem < 2:
            raise ValueError("need at least 2 elements")
        if self.bc not in ("pinned", "clamped"):
            raise ValueError(f"unknown boundary tag {self.bc!r}")


def build_three_mass(omega, zeta) -> SecondOrderSystem:
    """Three-oscillator model with full quadratic/cubic mode coupling.

    M is the identity, K = diag(omega^2), C = diag(2 zeta omega).  The
    polynomial force of equation k carries 3 omega_k^2 / 2 on its own
    square, omega_k^2 / 2 on the other squares, omega_j^2 on the cross
    terms and a common cubic factor (omega_1^2+omega_2^2+omega_3^2)/2.
    """
    om = np.asarray(omega, dtype=float)
    ze = np.asarray(zeta, dtype=float)
    if om.shape != (3,) or ze.shape != (3,):
        raise ValueError("expected three frequencies and three damping ratios")
    if np.any(om <= 0) or np.any(ze < 0):
        raise ValueError("frequencies must be positive, damping nonnegative")
    s = om**2
    csum = float(s.sum()) / 2.0
    quad = []
    cubic = []
    for k in (1, 2, 3):
        others = [i for i in (1, 2, 3) if i != k]
        quad.append((k, k, k, 1.5 * s[k - 1]))
        for i in others:
            quad.append((k, i, i, 0.5 * s[k - 1]))
            quad.append((k, min(i, k), max(i, k), s[i - 1]))
            cubic.append((k, *sorted((k, i, i)), csum))
        cubic.append((k, k, k, k, csum))
    return SecondOrderSystem(
        n=3,
        M=np.eye(3),
        C=np.diag(2.0 * ze * om),
        K=np.diag(s),
        quad=PolyTensor2(3, tuple(quad)),
        cubic=PolyTensor3(3, tuple(cubic)),
    )


def _shape_functions(xi, Le):
    """Axial gradient g, slope h, curvature c, axial/transverse N at xi."""
    g = np.array([-1.0 / Le, 0, 0, 1.0 / Le, 0, 0])
    hv = np.array([
        0.0,
        (-6 * xi + 6 * xi**2) / Le,
        1 - 4 * xi + 3 * xi**2,
        0.0,
        (6 * xi - 6 * xi**2) / Le,
        -2 * xi + 3 * xi**2,
    ])
    cv = np.array([
        0.0,
        (-6 + 12 * xi) / Le**2,
        (-4 + 6 * xi) / Le,
        0.0,
        (6 - 12 * xi) / Le**2,
        (-2 + 6 * xi) / Le,
    ])
    Nu = np.array([1 - xi, 0, 0, xi, 0, 0])
    Nw = np.array([
        0.0,
        1 - 3 * xi**2 + 2 * xi**3,
        Le * (xi - 2 * xi**2 + xi**3),
        0.0,
        3 * xi**2 - 2 * xi**3,
        Le * (-xi**2 + xi**3),
    ])
    return g, hv, cv, Nu, Nw


def _arch_slope(params):
    """Initial slope w0'(x) of the circular arc through the end points."""
    a, l = params.arch_rise, params.l
    if a == 0.0:
        return lambda x: 0.0
    R = a / 2.0 + l**2 / (8.0 * a)
    return lambda x: (l / 2.0 - x) / np.sqrt(R**2 - (x - l / 2.0) ** 2)


def _quad_monomials(T):
    """Monomial entries (b, c, coeff) of a (b,c)-symmetric 6x6 slab."""
    out = []
    for bidx in range(6):
        for cidx in range(bidx, 6):
            v = T[bidx, cidx] if bidx == cidx else T[bidx, cidx] + T[cidx, bidx]
            if v != 0.0:
                out.append((bidx, cidx, v))
    return out


def _cubic_monomials(T):
    """Monomial entries (b, c, d, coeff) of a fully symmetric 6^3 slab."""
    out = []
    for bidx in range(6):
        for cidx in range(bidx, 6):
            for didx in range(cidx, 6):
                if bidx == cidx == didx:
                    mult = 1.0
                elif bidx == cidx or cidx == didx:
                    mult = 3.0
                else:
                    mult = 6.0
                v = mult * T[bidx, cidx, didx]
                if v != 0.0:
                    out.append((bidx, cidx, didx, v))
    return out


def build_beam_model(params: BeamParams):
    """Assemble a beam as (SecondOrderSystem, unit uniform load vector).

    The load vector is the consistent nodal load of a unit transverse
    intensity (N/m) on the constrained DOFs.
    """
    E, rho, l = params.E, params.rho, params.l
    A = params.b * params.h
    Iz = params.b * params.h**3 / 12.0
    ne = params.n_elem
    nn = ne + 1
    ndof = 3 * nn
    Le = l / ne
    w0p = _arch_slope(params)

    K = np.zeros((ndof, ndof))
    M = np.zeros((ndof, ndof))
    load = np.zeros(ndof)
    quad_entries = []
    cubic_entries = []

    for e in range(ne):
        x0 = e * Le
        dofs = np.arange(3 * e, 3 * e + 6)
        Ke = np.zeros((6, 6))
        Me = np.zeros((6, 6))
        Q2 = np.zeros((6, 6, 6))
        Q3 = np.zeros((6, 6, 6, 6))
        fe = np.zeros(6)
        for xi, w in _gauss01(2):
            _, _, cv, _, _ = _shape_functions(xi, Le)
            Ke += E * Iz * np.outer(cv, cv) * (w * Le)
        for xi, w in _gauss01(3):
            g, hv, _, _, Nw = _shape_functions(xi, Le)
            p = g + w0p(x0 + xi * Le) * hv
            Ke += E * A * np.outer(p, p) * (w * Le)
            hh = np.outer(hv, hv)
            ph = np.outer(p, hv)
            # force = gradient of the membrane energy; the cubic energy
            # term EA/2 (p.d)(h.d)^2 yields these quadratic coefficients
            Q2 += (0.5 * E * A * w * Le) * (
                np.einsum("a,bc->abc", p, hh)
                + np.einsum("a,bc->abc", hv, ph + ph.T)
            )
            # and the quartic term EA/8 (h.d)^4 the cubic ones
            Q3 += (0.5 * E * A * w * Le) * np.einsum("a,b,c,d->abcd", hv, hv, hv, hv)
            fe += Nw * (w * Le)
        for xi, w in _gauss01(4):
            _, _, _, Nu, Nw = _shape_functions(xi, Le)
            Me += rho * A * (np.outer(Nu, Nu) + np.outer(Nw, Nw)) * (w * Le)
        K[np.ix_(dofs, dofs)] += Ke
        M[np.ix_(dofs, dofs)] += Me
        load[dofs] += fe
        for a_loc in range(6):
            ga = dofs[a_loc] + 1
            for bidx, cidx, v in _quad_monomials(Q2[a_loc]):
                quad_entries.append((ga, dofs[bidx] + 1, dofs[cidx] + 1, v))
            for bidx, cidx, didx, v in _cubic_monomials(Q3[a_loc]):
                cubic_entries.append(
                    (ga, dofs[bidx] + 1, dofs[cidx] + 1, dofs[didx] + 1, v)
                )

    if params.bc == "clamped":
        fixed = {0, 1, 2, ndof - 3, ndof - 2, ndof - 1}
    else:
        fixed = {0, 1, ndof - 3, ndof - 2}
    free = [i for i in range(ndof) if i not in fixed]
    remap = {old + 1: new + 1 for new, old in enumerate(free)}

    def keep_quad(entry):
        return all(idx in remap for idx in entry[:3])

    def keep_cubic(entry):
        return all(idx in remap for idx in entry[:4])

    quad_free = tuple(
        (remap[k], remap[i], remap[j], v)
        for k, i, j, v in quad_entries
        if keep_quad((k, i, j))
    )
    cubic_free = tuple(
        (remap[k], remap[i], remap[j], remap[q], v)
        for k, i, j, q, v in cubic_entries
        if keep_cubic((k, i, j, q))
    )
    nf = len(free)
    Kf = K[np.ix_(free, free)]
    system = SecondOrderSystem(
        n=nf,
        M=M[np.ix_(free, free)],
        C=(params.kappa / E) * Kf,
        K=Kf,
        quad=PolyTensor2(nf, quad_free),
        cubic=PolyTensor3(nf, cubic_free),
    )
    return system, load[free]


def build_straight_beam(params: BeamParams) -> SecondOrderSystem:
    if params.arch_rise != 0.0:
        raise ValueError("straight beam requires arch_rise = 0")
    return build_beam_model(params)[0]


def build_curved_beam(params: BeamParams) -> SecondOrderSystem:
    if params.arch_rise <= 0.0:
        raise ValueError("curved beam requires arch_rise > 0")
    return build_beam_model(params)[0]


# built-in model registry for the command line: name -> builder giving
# (system, default forcing, metadata)

THREE_MASS_OMEGA = (2.0, 3.0, 5.0)
THREE_MASS_ZETA = (0.01, 0.02, 0.08)

STRAIGHT_BEAM = BeamParams()
CURVED_BEAM = BeamParams(h=7e-3, arch_rise=5e-3)


def _three_mass_builtin():
    sys = build_three_mass(THREE_MASS_OMEGA, THREE_MASS_ZETA)
    forcing = ForcingSpec(np.array([1.0, 0.0, 0.0]), omega=2.0, scale=0.02)
    return sys, forcing


def _straight_beam_builtin():
    sys, load = build_beam_model(STRAIGHT_BEAM)
    return sys, ForcingSpec(load, omega=26.0, scale=2.3)


def _curved_beam_builtin():
    sys, load = build_beam_model(CURVED_BEAM)
    return sys, ForcingSpec(load, omega=208.0, scale=80.0)


BUILTIN_MODELS = {
    "three-mass": _three_mass_builtin,
    "straight-beam": _straight_beam_builtin,
    "curved-beam": _curved_beam_builtin,
}


def builtin_model(name: str):
    """Instantiate a built-in model as (system, default forcing)."""
    try:
        builder = BUILTIN_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_MODELS))
        raise KeyError(f"unknown model {name!r}; built-ins: {known}") from None
    return builder()
