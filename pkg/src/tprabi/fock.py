"""Operators and states of the truncated qubit-cavity Hilbert space.

Conventions used everywhere in this package:

* Units: energies in units of the cavity detuning (delta_c = 1), time in
  its inverse.
* Tensor ordering: qubit (x) cavity, so a joint operator is
  ``np.kron(qubit_op, cavity_op)`` and the joint basis index is
  ``q * m_trunc + n`` with qubit index q and Fock index n.
* Qubit basis: excited state first, sigma_z = diag(+1, -1), so the qubit
  ground state is index 1 and ``[sigma_plus, sigma_minus] = sigma_z``.

Everything is dense: the default joint dimension is 2 * 60 = 120, far too
small for sparse structures to pay off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimension, TruncationOverflow

QUBIT_UP = 0
QUBIT_DOWN = 1


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian parameters of the two-photon-driven Rabi model.

    delta_c / delta_q are cavity / qubit detunings from the pump, g the
    qubit-cavity coupling, omega the two-photon drive amplitude, kerr the
    Kerr coefficient.  m_trunc is the cavity truncation dimension.
    """

    delta_c: float = 1.0
    delta_q: float = 1.0
    g: float = 0.0
    omega: float = 0.0
    kerr: float = 0.0
    m_trunc: int = 60

    def __post_init__(self):
        if self.m_trunc < 2:
            raise InvalidDimension(f"m_trunc must be >= 2, got {self.m_trunc}")
        for name in ("delta_c", "delta_q", "g", "omega", "kerr"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def dim(self) -> int:
        """Joint Hilbert-space dimension 2 * m_trunc."""
        return 2 * self.m_trunc


def cavity_ops(m_trunc: int):
    """Annihilation, creation and number operators on the truncated Fock space.

    Returns (a, a_dag, n_op); a has sqrt(n+1) on the first superdiagonal.
    """
    if m_trunc < 2:
        raise InvalidDimension(f"m_trunc must be >= 2, got {m_trunc}")
    a = np.diag(np.sqrt(np.arange(1, m_trunc)), 1).astype(complex)
    a_dag = a.conj().T
    return a, a_dag, a_dag @ a


def qubit_ops():
    """Pauli-z and ladder operators with the excited state first.

    sigma_plus raises |down> to |up>; [sigma_plus, sigma_minus] = sigma_z.
    """
    sigma_z = np.diag([1.0, -1.0]).astype(complex)
    sigma_plus = np.zeros((2, 2), dtype=complex)
    sigma_plus[QUBIT_UP, QUBIT_DOWN] = 1.0
    return sigma_z, sigma_plus, sigma_plus.conj().T


def embed_cavity(op: np.ndarray) -> np.ndarray:
    """Lift a cavity operator to the joint space."""
    return np.kron(np.eye(2, dtype=complex), op)


def embed_qubit(op: np.ndarray, m_trunc: int) -> np.ndarray:
    """Lift a qubit operator to the joint space."""
    return np.kron(op, np.eye(m_trunc, dtype=complex))


def build_hamiltonian(params: ModelParams) -> np.ndarray:
    """Assemble the model Hamiltonian on the joint space.

    H = delta_c a+a + (delta_q/2) sigma_z + g (a + a+)(sigma- + sigma+)
        + omega (a^2 + a+^2) + kerr a+^2 a^2
    """
    m = params.m_trunc
    a, a_dag, n_op = cavity_ops(m)
    sigma_z, sigma_plus, sigma_minus = qubit_ops()
    sigma_x = sigma_plus + sigma_minus
    h = (
        params.delta_c * embed_cavity(n_op)
        + 0.5 * params.delta_q * embed_qubit(sigma_z, m)
        + params.g * np.kron(sigma_x, a + a_dag)
        + params.omega * embed_cavity(a @ a + a_dag @ a_dag)
        + params.kerr * embed_cavity(a_dag @ a_dag @ a @ a)
    )
    return h


def coherent_state_vector(alpha: complex, m_trunc: int) -> np.ndarray:
    """Truncated, renormalized coherent state |alpha> in the Fock basis."""
    if abs(alpha) ** 2 > m_trunc / 10:
        raise TruncationOverflow(
            f"|alpha|^2 = {abs(alpha)**2:.3g} too large for m_trunc = {m_trunc}"
        )
    n = np.arange(m_trunc)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, m_trunc)))))
    if alpha == 0:
        vec = np.zeros(m_trunc, dtype=complex)
        vec[0] = 1.0
        return vec
    # amplitudes alpha^n / sqrt(n!) evaluated in log space for stability
    vec = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact)
    vec /= np.linalg.norm(vec)
    return vec


def coherent_product_state(alpha: complex, qubit_level: str, m_trunc: int) -> np.ndarray:
    """Density matrix of |qubit_level> (x) |alpha> as a pure product state.

    qubit_level is "up" or "down".
    """
    levels = {"up": QUBIT_UP, "down": QUBIT_DOWN}
    if qubit_level not in levels:
        raise ValueError(f"qubit_level must be 'up' or 'down', got {qubit_level!r}")
    qvec = np.zeros(2, dtype=complex)
    qvec[levels[qubit_level]] = 1.0
    psi = np.kron(qvec, coherent_state_vector(alpha, m_trunc))
    return np.outer(psi, psi.conj())


def pure_state_density(vec: np.ndarray) -> np.ndarray:
    """|v><v| for a normalized joint state vector."""
    return np.outer(vec, vec.conj())


def validate_density_matrix(rho: np.ndarray, trace_tol=1e-8, herm_tol=1e-10,
                            eig_floor=-1e-8) -> None:
    """Raise ValueError unless rho is trace-1, Hermitian and positive."""
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} deviates from 1 by more than {trace_tol}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    w = np.linalg.eigvalsh(rho)
    if w[0] < eig_floor:
        raise ValueError(f"minimum eigenvalue {w[0]} below {eig_floor}")
