"""Shared fixtures and independent oracles for the test suite."""

import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def bogoliubov_gap(delta_c: float, omega: float) -> float:
    """Analytic excitation energy of delta_c a+a + omega (a^2 + a+^2).

    Independent oracle: diagonalizing the quadratic form with a Bogoliubov
    rotation gives sqrt(delta_c^2 - 4 omega^2) below the instability.
    """
    return math.sqrt(delta_c**2 - 4.0 * omega**2)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank random state from a Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_product(m_trunc: int, rng: np.random.Generator) -> np.ndarray:
    """Random pure product state of the 2 x M system."""
    q = rng.normal(size=2) + 1j * rng.normal(size=2)
    q /= np.linalg.norm(q)
    c = rng.normal(size=m_trunc) + 1j * rng.normal(size=m_trunc)
    c /= np.linalg.norm(c)
    psi = np.kron(q, c)
    return np.outer(psi, psi.conj())


def random_separable_mixture(m_trunc: int, n_terms: int, rng: np.random.Generator) -> np.ndarray:
    """Convex mixture of random product states (separable by construction)."""
    weights = rng.random(n_terms)
    weights /= weights.sum()
    rho = np.zeros((2 * m_trunc, 2 * m_trunc), dtype=complex)
    for w in weights:
        rho += w * random_pure_product(m_trunc, rng)
    return rho


def wigner_point_displaced_parity(rho_cavity: np.ndarray, alpha: complex) -> float:
    """Direct displaced-parity evaluation (2/pi) Tr[rho D(a) P D(a)+] via a
    matrix exponential: the independent oracle for the Wigner grid."""
    from scipy.linalg import expm

    n = rho_cavity.shape[0]
    a = np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)
    d = expm(alpha * a.conj().T - np.conj(alpha) * a)
    parity = np.diag((-1.0) ** np.arange(n)).astype(complex)
    return float((2.0 / np.pi) * np.real(np.trace(rho_cavity @ d @ parity @ d.conj().T)))


def bell_state_density(m_trunc: int = 2) -> np.ndarray:
    """(|0, down> + |1, up>) / sqrt(2) embedded in the 2 x M joint space."""
    psi = np.zeros(2 * m_trunc, dtype=complex)
    psi[1 * m_trunc + 0] = 1.0 / math.sqrt(2.0)  # |down, n=0>
    psi[0 * m_trunc + 1] = 1.0 / math.sqrt(2.0)  # |up, n=1>
    return np.outer(psi, psi.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
