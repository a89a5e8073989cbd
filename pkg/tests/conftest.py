import numpy as np
import pytest

import ssmselect as ss

# reference coefficient matrices of the three-oscillator model with
# omega = (2, 3, 5), zeta = (0.01, 0.02, 0.08), masters = {1}
W2_REF = np.array([[0.0712, 0.0008], [0.0008, -0.1428]])
W3_REF = np.array([[-0.8778, 0.1033], [0.1033, 0.0953]])

THREE_MASS_OMEGA = (2.0, 3.0, 5.0)
THREE_MASS_ZETA = (0.01, 0.02, 0.08)


@pytest.fixture(scope="session")
def three_mass():
    return ss.build_three_mass(THREE_MASS_OMEGA, THREE_MASS_ZETA)


@pytest.fixture(scope="session")
def three_mass_modal(three_mass):
    return ss.compute_modes(three_mass)


@pytest.fixture(scope="session")
def three_mass_forcing():
    return ss.ForcingSpec(np.array([1.0, 0.0, 0.0]), omega=2.0, scale=0.02)


@pytest.fixture(scope="session")
def straight_beam():
    system, forcing = ss.builtin_model("straight-beam")
    return system, forcing, ss.compute_modes(system)


@pytest.fixture(scope="session")
def curved_beam():
    system, forcing = ss.builtin_model("curved-beam")
    return system, forcing, ss.compute_modes(system)


def random_sparse_system(rng, n=6, nnz2=12, nnz3=10, damping=0.02):
    """Well-posed random system with sparse polynomial force tensors."""
    Q = rng.normal(size=(n, n))
    M = Q @ Q.T + n * np.eye(n)
    om = np.sort(rng.uniform(1.0, 5.0, size=n))
    V = rng.normal(size=(n, n))
    V, _ = np.linalg.qr(V)
    K = V @ np.diag(om**2) @ V.T
    K = 0.5 * (K + K.T)
    C = damping * K
    quad = tuple(
        (rng.integers(1, n + 1), rng.integers(1, n + 1), rng.integers(1, n + 1),
         float(rng.normal()))
        for _ in range(nnz2)
    )
    cubic = tuple(
        (rng.integers(1, n + 1), rng.integers(1, n + 1), rng.integers(1, n + 1),
         rng.integers(1, n + 1), float(rng.normal()))
        for _ in range(nnz3)
    )
    return ss.SecondOrderSystem(
        n=n, M=M, C=C, K=K,
        quad=ss.PolyTensor2(n, quad), cubic=ss.PolyTensor3(n, cubic),
    )


def dense_poly_eval(system, q):
    """Brute-force polynomial force from the canonical sparse entries."""
    out = np.zeros(system.n)
    for k, i, j, v in system.quad.entries:
        out[k - 1] += v * q[i - 1] * q[j - 1]
    for k, i, j, l, v in system.cubic.entries:
        out[k - 1] += v * q[i - 1] * q[j - 1] * q[l - 1]
    return out
