"""Operators, Hamiltonian assembly and product states."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from conftest import bogoliubov_gap
from tprabi.errors import InvalidDimension, TruncationOverflow
from tprabi.fock import (ModelParams, build_hamiltonian, cavity_ops, coherent_product_state,
                         embed_cavity, qubit_ops)


def test_annihilation_lowers_fock_one():
    a, _, _ = cavity_ops(3)
    one = np.zeros(3, dtype=complex)
    one[1] = 1.0
    out = a @ one
    assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-15)


def test_number_operator_diagonal():
    _, _, n_op = cavity_ops(3)
    assert_allclose(np.diag(n_op).real, [0.0, 1.0, 2.0], atol=1e-15)
    assert_allclose(n_op, np.diag(np.diag(n_op)), atol=1e-15)


def test_truncated_commutator_edge_term():
    # [a, a+] equals the identity except the top corner, which closes the
    # ladder with -(M-1)
    a, a_dag, _ = cavity_ops(5)
    comm = a @ a_dag - a_dag @ a
    assert_allclose(np.diag(comm).real, [1.0, 1.0, 1.0, 1.0, -4.0], atol=1e-13)
    assert_allclose(comm - np.diag(np.diag(comm)), 0.0, atol=1e-15)


def test_qubit_ladder_products():
    sigma_z, sp, sm = qubit_ops()
    assert_allclose(sp @ sm, np.diag([1.0, 0.0]), atol=1e-15)
    assert_allclose(sp @ sm - sm @ sp, sigma_z, atol=1e-15)
    ground = np.array([0.0, 1.0], dtype=complex)
    assert_allclose(sm @ ground, 0.0, atol=1e-15)


def test_decoupled_hamiltonian_ground_level():
    params = ModelParams(g=0.0, omega=0.0, kerr=0.0, m_trunc=8)
    h = build_hamiltonian(params)
    w, v = np.linalg.eigh(h)
    assert abs(w[0] - (-0.5)) < 1e-12
    # ground eigenvector is |down> (x) |0>, joint index m_trunc
    gs = np.abs(v[:, 0])
    assert gs[8] > 1 - 1e-12


def test_kerr_expectation_on_fock_two():
    params = ModelParams(g=0.0, omega=0.0, kerr=0.2, m_trunc=8)
    h = build_hamiltonian(params)
    h_no_kerr = build_hamiltonian(ModelParams(g=0.0, omega=0.0, kerr=0.0, m_trunc=8))
    psi = np.zeros(16, dtype=complex)
    psi[8 + 2] = 1.0  # |down, n=2>
    kerr_part = np.real(psi.conj() @ (h - h_no_kerr) @ psi)
    assert abs(kerr_part - 0.4) < 1e-13


@pytest.mark.parametrize("omega", [0.1, 0.3])
def test_two_photon_gap_matches_bogoliubov(omega):
    params = ModelParams(g=0.0, omega=omega, m_trunc=60)
    w = np.linalg.eigvalsh(build_hamiltonian(params))
    assert abs((w[1] - w[0]) - bogoliubov_gap(1.0, omega)) < 1e-8


def test_invalid_truncation_rejected():
    with pytest.raises(InvalidDimension):
        cavity_ops(1)
    with pytest.raises(InvalidDimension):
        ModelParams(m_trunc=1)


def test_coherent_vacuum_limit():
    rho = coherent_product_state(0.0, "down", 12)
    n_op = embed_cavity(cavity_ops(12)[2])
    assert abs(np.trace(n_op @ rho).real) < 1e-14
    assert abs(np.trace(rho) - 1.0) < 1e-12


def test_coherent_photon_number():
    rho = coherent_product_state(1.0, "down", 60)
    n_op = embed_cavity(cavity_ops(60)[2])
    assert abs(np.trace(n_op @ rho).real - 1.0) < 1e-10
    assert abs(np.trace(rho) - 1.0) < 1e-12


def test_coherent_overflow_guard():
    with pytest.raises(TruncationOverflow):
        coherent_product_state(2.0, "down", 12)  # |alpha|^2 = 4 > 12/10


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 0.6), st.floats(-0.2, 0.5),
       st.integers(2, 12))
def test_hamiltonian_always_hermitian(delta_q, g, omega, kerr, m_trunc):
    h = build_hamiltonian(ModelParams(delta_q=delta_q, g=g, omega=omega,
                                      kerr=kerr, m_trunc=m_trunc))
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_density_matrix_validation():
    from tprabi.fock import validate_density_matrix

    rho = coherent_product_state(1.0, "down", 12)
    validate_density_matrix(rho)
    with pytest.raises(ValueError):
        validate_density_matrix(rho * 1.1)           # trace off
    with pytest.raises(ValueError):
        bad = rho.copy()
        bad[0, 1] += 1e-3
        validate_density_matrix(bad)                 # not Hermitian
    with pytest.raises(ValueError):
        bad = 1.001 * rho - 0.001 * np.eye(24) / 24  # trace 1, min eig < 0
        validate_density_matrix(bad)


@given(st.integers(2, 10))
def test_tensor_ordering_round_trip(m_trunc):
    # embedding a cavity operator and tracing out the qubit recovers its
    # expectation value on any product state
    from tprabi.measures import reduced_state

    rng = np.random.default_rng(m_trunc)
    q = rng.normal(size=2) + 1j * rng.normal(size=2)
    q /= np.linalg.norm(q)
    c = rng.normal(size=m_trunc) + 1j * rng.normal(size=m_trunc)
    c /= np.linalg.norm(c)
    psi = np.kron(q, c)
    rho = np.outer(psi, psi.conj())
    _, _, n_op = cavity_ops(m_trunc)
    joint_value = np.trace(embed_cavity(n_op) @ rho).real
    reduced_value = np.trace(n_op @ reduced_state(rho, "cavity")).real
    assert abs(joint_value - reduced_value) < 1e-10
