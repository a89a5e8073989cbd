"""Second-order mechanical systems with sparse polynomial stiffness.

The governing equations are

    M q'' + C q' + K q + S(q) = F cos(Omega t),

where the nonlinear force S is a polynomial with quadratic and cubic
terms stored as sparse coordinate tensors.  All values are SI
(kg, N, m, s); mode and DOF indices in the public API and in the model
file format are 1-based.

Only position-dependent nonlinearities are supported.  Velocity
dependence is accepted at the type level through this restriction and
is not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PolyTensor2",
    "PolyTensor3",
    "SecondOrderSystem",
    "ForcingSpec",
    "SystemDiagnostics",
    "evaluate_nonlinearity",
    "evaluate_jacobian",
    "validate_system",
    "read_model_file",
    "write_model_file",
]


def _canonicalize(entries, order, n):
    """Sort index tuples, merge duplicates, and validate ranges.

    `entries` is an iterable of (k, i, j[, l], value).  Monomial index
    tuples are sorted ascending so that permuted duplicates collapse to
    one entry whose value is the full monomial coefficient.
    """
    merged = {}
    for entry in entries:
        if len(entry) != order + 2:
            raise ValueError(
                f"tensor entry {entry} must have {order + 2} fields"
            )
        k = int(entry[0])
        idx = tuple(sorted(int(v) for v in entry[1:-1]))
        val = float(entry[-1])
        for v in (k,) + idx:
            if not 1 <= v <= n:
                raise ValueError(f"tensor index {v} outside [1, {n}]")
        key = (k,) + idx
        merged[key] = merged.get(key, 0.0) + val
    keys = sorted(merged)
    return tuple((*key, merged[key]) for key in keys)


@dataclass(frozen=True)
class PolyTensor2:
    """Sparse quadratic force coefficients.

    Each entry (k, i, j, value) contributes ``value * q_i * q_j`` to
    force component k.  Entries are canonicalized to i <= j with the
    value holding the full monomial coefficient, so evaluation needs no
    symmetry bookkeeping.
    """

    n: int
    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "entries", _canonicalize(self.entries, 2, self.n)
        )
        if self.entries:
            arr = np.asarray(self.entries, dtype=float)
            idx = arr[:, :3].astype(int) - 1
        else:
            arr = np.zeros((0, 4))
            idx = np.zeros((0, 3), dtype=int)
        object.__setattr__(self, "_k", idx[:, 0])
        object.__setattr__(self, "_i", idx[:, 1])
        object.__setattr__(self, "_j", idx[:, 2])
        object.__setattr__(self, "_v", arr[:, 3] if len(arr) else arr[:, :0].ravel())

    @property
    def nnz(self):
        return len(self.entries)


@dataclass(frozen=True)
class PolyTensor3:
    """Sparse cubic force coefficients, canonicalized to i <= j <= l."""

    n: int
    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "entries", _canonicalize(self.entries, 3, self.n)
        )
        if self.entries:
            arr = np.asarray(self.entries, dtype=float)
            idx = arr[:, :4].astype(int) - 1
        else:
            arr = np.zeros((0, 5))
            idx = np.zeros((0, 4), dtype=int)
        object.__setattr__(self, "_k", idx[:, 0])
        object.__setattr__(self, "_i", idx[:, 1])
        object.__setattr__(self, "_j", idx[:, 2])
        object.__setattr__(self, "_l", idx[:, 3])
        object.__setattr__(self, "_v", arr[:, 4] if len(arr) else arr[:, :0].ravel())

    @property
    def nnz(self):
        return len(self.entries)


@dataclass(frozen=True)
class SecondOrderSystem:
    """Physical model: dense M, C, K plus sparse quadratic/cubic tensors.

    Parameters
    ----------
    n : int
        Number of degrees of freedom.
    M, C, K : (n, n) ndarray
        Mass, damping and stiffness matrices.  M must be symmetric
        positive definite, K symmetric positive semi-definite and C
        symmetric; use :func:`validate_system` to check.
    quad : PolyTensor2
        Quadratic force coefficients.
    cubic : PolyTensor3
        Cubic force coefficients.
    """

    n: int
    M: np.ndarray
    C: np.ndarray
    K: np.ndarray
    quad: PolyTensor2 = None
    cubic: PolyTensor3 = None

    def __post_init__(self):
        M = np.ascontiguousarray(np.asarray(self.M, dtype=float))
        C = np.ascontiguousarray(np.asarray(self.C, dtype=float))
        K = np.ascontiguousarray(np.asarray(self.K, dtype=float))
        for name, mat in (("M", M), ("C", C), ("K", K)):
            if mat.shape != (self.n, self.n):
                raise ValueError(f"{name} must be {self.n}x{self.n}, got {mat.shape}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "K", K)
        if self.quad is None:
            object.__setattr__(self, "quad", PolyTensor2(self.n))
        if self.cubic is None:
            object.__setattr__(self, "cubic", PolyTensor3(self.n))
        if self.quad.n != self.n or self.cubic.n != self.n:
            raise ValueError("tensor dimension does not match system dimension")


@dataclass(frozen=True)
class ForcingSpec:
    """Single-harmonic forcing ``scale * amplitude * cos(omega t)``.

    `amplitude` is a length-n load shape in newtons, `omega` the
    excitation frequency in rad/s and `scale` the overall multiplier
    (the product of the smallness parameter and the force amplitude).
    """

    amplitude: np.ndarray
    omega: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "amplitude", np.ascontiguousarray(np.asarray(self.amplitude, dtype=float))
        )

    def effective(self):
        """Physical cosine amplitude vector, scale applied."""
        return self.scale * self.amplitude

    def with_scale(self, scale):
        return ForcingSpec(self.amplitude, self.omega, scale)

    def with_omega(self, omega):
        return ForcingSpec(self.amplitude, float(omega), self.scale)


def _scatter_rows(flat_idx, weights, nrows, rowlen):
    """Accumulate weights into a (nrows, rowlen) array by flat index.

    bincount handles the duplicate indices produced by repeated force
    components and is much faster than ufunc.at for the batched
    evaluations inside time-stepping and harmonic-balance loops.
    """
    out = np.bincount(flat_idx.ravel(), weights=weights.ravel(), minlength=nrows * rowlen)
    return out.reshape(nrows, rowlen)


def evaluate_nonlinearity(sys: SecondOrderSystem, q: np.ndarray) -> np.ndarray:
    """Polynomial force S(q) from the sparse tensors.

    Accepts a single displacement vector of length n or a batch of
    shape (m, n); the result has the same leading shape.
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    qb = q[None, :] if single else q
    if qb.shape[-1] != sys.n:
        raise ValueError(f"q has length {qb.shape[-1]}, expected {sys.n}")
    nb, n = qb.shape
    out = np.zeros((nb, n))
    base = n * np.arange(nb)[:, None]
    t2, t3 = sys.quad, sys.cubic
    if t2.nnz:
        contrib = t2._v * qb[:, t2._i] * qb[:, t2._j]
        out += _scatter_rows(base + t2._k[None, :], contrib, nb, n)
    if t3.nnz:
        contrib = t3._v * qb[:, t3._i] * qb[:, t3._j] * qb[:, t3._l]
        out += _scatter_rows(base + t3._k[None, :], contrib, nb, n)
    return out[0] if single else out


def evaluate_jacobian(sys: SecondOrderSystem, q: np.ndarray) -> np.ndarray:
    """Exact derivative dS/dq of the polynomial force at q.

    Batched input of shape (m, n) yields an (m, n, n) stack.
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    qb = q[None, :] if single else q
    if qb.shape[-1] != sys.n:
        raise ValueError(f"q has length {qb.shape[-1]}, expected {sys.n}")
    nb, n = qb.shape
    J = np.zeros((nb, n * n))
    base = n * n * np.arange(nb)[:, None]
    t2, t3 = sys.quad, sys.cubic
    if t2.nnz:
        k, i, j, v = t2._k, t2._i, t2._j, t2._v
        J += _scatter_rows(base + (k * n + j)[None, :], v * qb[:, i], nb, n * n)
        J += _scatter_rows(base + (k * n + i)[None, :], v * qb[:, j], nb, n * n)
    if t3.nnz:
        k, i, j, l, v = t3._k, t3._i, t3._j, t3._l, t3._v
        J += _scatter_rows(base + (k * n + l)[None, :], v * qb[:, i] * qb[:, j], nb, n * n)
        J += _scatter_rows(base + (k * n + j)[None, :], v * qb[:, i] * qb[:, l], nb, n * n)
        J += _scatter_rows(base + (k * n + i)[None, :], v * qb[:, j] * qb[:, l], nb, n * n)
    J = J.reshape(nb, n, n)
    return J[0] if single else J


@dataclass(frozen=True)
class SystemDiagnostics:
    """Report-only health checks of the system matrices."""

    m_symmetry_defect: float
    c_symmetry_defect: float
    k_symmetry_defect: float
    m_positive_definite: bool
    k_min_eigenvalue: float
    symmetric_tol: float

    @property
    def all_ok(self):
        return (
            self.m_positive_definite
            and self.m_symmetry_defect <= self.symmetric_tol
            and self.c_symmetry_defect <= self.symmetric_tol
            and self.k_symmetry_defect <= self.symmetric_tol
            and self.k_min_eigenvalue >= -self.symmetric_tol
        )


def validate_system(sys: SecondOrderSystem, symmetric_tol: float = 1e-8) -> SystemDiagnostics:
    """Check matrix symmetry and definiteness without mutating anything.

    Symmetry defects are reported relative to the matrix scale; M is
    tested for positive definiteness by Cholesky, K by its smallest
    eigenvalue (relative to ||K||).
    """
    def defect(mat):
        scale = max(np.abs(mat).max(), 1e-300)
        return float(np.abs(mat - mat.T).max() / scale)

    try:
        np.linalg.cholesky(sys.M)
        m_pd = True
    except np.linalg.LinAlgError:
        m_pd = False
    ks = 0.5 * (sys.K + sys.K.T)
    kscale = max(np.abs(ks).max(), 1e-300)
    kmin = float(np.linalg.eigvalsh(ks).min() / kscale)
    return SystemDiagnostics(
        m_symmetry_defect=defect(sys.M),
        c_symmetry_defect=defect(sys.C),
        k_symmetry_defect=defect(sys.K),
        m_positive_definite=m_pd,
        k_min_eigenvalue=kmin,
        symmetric_tol=symmetric_tol,
    )


# --- model file format ------------------------------------------------
#
# Plain text, one header line `n <dim>`, then sections introduced by a
# keyword on its own line:
#   M, C, K   row-major whitespace-separated floats, n rows each
#   QUAD      one `k i j value` per line, 1-based indices
#   CUBIC     one `k i j l value` per line
#   FORCE     `amplitude_vector v1 ... vn`, `omega x`, `epsilon x`
# Blank lines and lines starting with '#' are ignored.

_SECTIONS = ("M", "C", "K", "QUAD", "CUBIC", "FORCE")


def write_model_file(path, sys: SecondOrderSystem, forcing: ForcingSpec = None):
    num = lambda v: repr(float(v))
    lines = [f"n {sys.n}"]
    for name in ("M", "C", "K"):
        lines.append(name)
        mat = getattr(sys, name)
        for row in mat:
            lines.append(" ".join(num(v) for v in row))
    if sys.quad.nnz:
        lines.append("QUAD")
        for k, i, j, v in sys.quad.entries:
            lines.append(f"{k} {i} {j} {num(v)}")
    if sys.cubic.nnz:
        lines.append("CUBIC")
        for k, i, j, l, v in sys.cubic.entries:
            lines.append(f"{k} {i} {j} {l} {num(v)}")
    if forcing is not None:
        lines.append("FORCE")
        lines.append("amplitude_vector " + " ".join(num(v) for v in forcing.amplitude))
        lines.append(f"omega {num(forcing.omega)}")
        lines.append(f"epsilon {num(forcing.scale)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_model_file(path):
    """Parse a model file, returning (SecondOrderSystem, ForcingSpec or None)."""
    with open(path) as fh:
        raw = [ln.strip() for ln in fh]
    lines = [ln for ln in raw if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n "):
        raise ValueError(f"{path}: expected header line 'n <dim>'")
    n = int(lines[0].split()[1])
    sections = {}
    current = None
    for ln in lines[1:]:
        if ln in _SECTIONS:
            current = ln
            sections[current] = []
            continue
        if current is None:
            raise ValueError(f"{path}: data line before any section: {ln!r}")
        sections[current].append(ln)

    def matrix(name):
        body = sections.get(name)
        if body is None:
            raise ValueError(f"{path}: missing section {name}")
        vals = [float(v) for ln in body for v in ln.split()]
        if len(vals) != n * n:
            raise ValueError(f"{path}: section {name} has {len(vals)} values, expected {n * n}")
        return np.array(vals).reshape(n, n)

    quad_entries = []
    for ln in sections.get("QUAD", []):
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError(f"{path}: bad QUAD line {ln!r}")
        quad_entries.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
    cubic_entries = []
    for ln in sections.get("CUBIC", []):
        parts = ln.split()
        if len(parts) != 5:
            raise ValueError(f"{path}: bad CUBIC line {ln!r}")
        cubic_entries.append(
            (int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]))
        )
    system = SecondOrderSystem(
        n=n,
        M=matrix("M"),
        C=matrix("C"),
        K=matrix("K"),
        quad=PolyTensor2(n, tuple(quad_entries)),
        cubic=PolyTensor3(n, tuple(cubic_entries)),
    )
    forcing = None
    if "FORCE" in sections:
        amp, omega, eps = None, None, 1.0
        for ln in sections["FORCE"]:
            key, *rest = ln.split()
            if key == "amplitude_vector":
                amp = np.array([float(v) for v in rest])
            elif key == "omega":
                omega = float(rest[0])
            elif key == "epsilon":
                eps = float(rest[0])
            else:
                raise ValueError(f"{path}: unknown FORCE key {key!r}")
        if amp is None or omega is None:
            raise ValueError(f"{path}: FORCE section needs amplitude_vector and omega")
        if len(amp) != n:
            raise ValueError(f"{path}: amplitude_vector length {len(amp)} != n")
        forcing = ForcingSpec(amp, omega, eps)
    return system, forcing
