"""Eigendecomposition, truncation diagnostics and dressed operators.

The dressed positive-frequency operator of a bare observable X is

    X_plus = sum_{j, k > j} <j|X|k> |j><k|

over the ascending eigenbasis |j> of the joint Hamiltonian; it lowers the
energy and reduces to the annihilation operator in the weak-coupling limit.
X_minus is its conjugate transpose.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidIndex, NotHermitian
from .fock import ModelParams, build_hamiltonian

# Convergence flag threshold used by sweeps ("shadow" region).
KL_CONVERGED_MAX = 1e-2


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and phase-fixed eigenvectors (columns)."""

    energies: np.ndarray
    states: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]


@dataclass(frozen=True)
class DressedOperator:
    """Positive/negative-frequency parts of a bare operator, in the bare basis."""

    x_plus: np.ndarray
    x_minus: np.ndarray


def _fix_phases(states: np.ndarray) -> np.ndarray:
    """Rotate each eigenvector so its largest-magnitude entry is real positive."""
    out = states.copy()
    idx = np.argmax(np.abs(out), axis=0)
    for j in range(out.shape[1]):
        pivot = out[idx[j], j]
        mag = abs(pivot)
        if mag > 0:
            out[:, j] *= pivot.conjugate() / mag
    return out


def eigendecompose(h: np.ndarray, check_tol: float = 1e-9) -> Spectrum:
    """Full dense eigendecomposition of a Hermitian matrix.

    Energies come out ascending; the eigenvector phase convention makes the
    decomposition deterministic.  Residual and orthonormality are verified.
    """
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > 1e-10 * scale:
        raise NotHermitian("input matrix is not Hermitian")
    energies, states = np.linalg.eigh(h)
    states = _fix_phases(states)
    residual = np.max(np.linalg.norm(h @ states - states * energies, axis=0))
    if residual > check_tol * scale:
        raise ArithmeticError(f"eigen-residual {residual:.3e} exceeds bound")
    gram = states.conj().T @ states
    if np.max(np.abs(gram - np.eye(len(energies)))) > 1e-10:
        raise ArithmeticError("eigenvectors are not orthonormal")
    return Spectrum(energies=energies, states=states)


def energy_gap(spectrum: Spectrum, q: int) -> float:
    """E_q - E_0 of the decomposed Hamiltonian."""
    if q < 0 or q >= spectrum.dim:
        raise InvalidIndex(f"level {q} outside spectrum of dimension {spectrum.dim}")
    return float(spectrum.energies[q] - spectrum.energies[0])


def ground_state_density(params: ModelParams) -> np.ndarray:
    """Density matrix of the Hamiltonian ground state (lowest-index eigenvector)."""
    spectrum = eigendecompose(build_hamiltonian(params))
    v0 = spectrum.states[:, 0]
    return np.outer(v0, v0.conj())


def _pad_to_truncation(rho: np.ndarray, m_small: int, m_large: int) -> np.ndarray:
    """Zero-pad a joint density matrix at the higher cavity truncation margin."""
    out = np.zeros((2 * m_large, 2 * m_large), dtype=complex)
    for qi in range(2):
        for qj in range(2):
            out[qi * m_large:qi * m_large + m_small, qj * m_large:qj * m_large + m_small] = \
                rho[qi * m_small:(qi + 1) * m_small, qj * m_small:(qj + 1) * m_small]
    return out


def kl_convergence(params: ModelParams, q: int = 1) -> float:
    """Truncation-convergence metric between ground states at M and M + q.

    Elementwise on magnitudes: sum over entries of
    |rho_{M+q}| * | log|rho_{M+q}| - log|rho_M^pad| |, with the smaller
    density matrix zero-padded at the higher truncation margin and exact
    zeros replaced by 1 inside the logarithms.  Large values flag a ground
    state that has not converged in the truncated basis.
    """
    if q < 0:
        raise ValueError("q must be nonnegative")
    rho_lo = ground_state_density(params)
    if q == 0:
        rho_hi = rho_lo
    else:
        rho_hi = ground_state_density(dataclasses.replace(params, m_trunc=params.m_trunc + q))
        rho_lo = _pad_to_truncation(rho_lo, params.m_trunc, params.m_trunc + q)
    w = np.abs(rho_hi)
    lo = np.abs(rho_lo)
    w_safe = np.where(w == 0, 1.0, w)
    lo_safe = np.where(lo == 0, 1.0, lo)
    return float(np.sum(w * np.abs(np.log(w_safe) - np.log(lo_safe))))


def dressed_operator(spectrum: Spectrum, bare: np.ndarray) -> DressedOperator:
    """Split a bare operator into dressed positive/negative-frequency parts."""
    if bare.shape != (spectrum.dim, spectrum.dim):
        raise DimensionMismatch(
            f"operator shape {bare.shape} does not match spectrum dimension {spectrum.dim}"
        )
    v = spectrum.states
    in_eigen = v.conj().T @ bare @ v
    upper = np.triu(in_eigen, k=1)
    x_plus = v @ upper @ v.conj().T
    return DressedOperator(x_plus=x_plus, x_minus=x_plus.conj().T)
