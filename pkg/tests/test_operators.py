import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dimerqed.operators import (DimensionError, HilbertSpace, InvalidStateError,
                                cavity_annihilation, check_state, commutator,
                                dag, dissipator_apply, fock_embedded,
                                hermitian_check, ket, partial_trace, projector,
                                qubit_lowering, random_density, sigma_z, tensor)


def test_factor_order_qubit1_qubit2_cavity():
    sp = HilbertSpace.qubits(2)
    assert sp.factors == (2, 2, 3) and sp.total_dim == 12
    s1 = qubit_lowering(sp, 1)
    # |e g 0> -> |g g 0>
    e_g_0 = np.zeros(12)
    e_g_0[1 * 6 + 0 * 3 + 0] = 1
    out = s1 @ e_g_0
    assert out[0] == 1 and np.count_nonzero(out) == 1


def test_ket_labels_and_basis_order():
    assert np.argmax(ket("gg")) == 0 and np.argmax(ket("ge")) == 1
    assert np.argmax(ket("eg")) == 2 and np.argmax(ket("ee")) == 3
    with pytest.raises(ValueError):
        ket("gx")


def test_ladder_commutators():
    sp = HilbertSpace.qubits(4)
    a = cavity_annihilation(sp)
    comm = commutator(a, dag(a))
    # truncation spoils the identity only on the top Fock level
    top = np.kron(np.eye(4), np.diag([0, 0, 0, 0, 1.0]))
    assert np.allclose(comm, sp.identity() - 5 * top)
    s1, s2 = qubit_lowering(sp, 1), qubit_lowering(sp, 2)
    assert np.allclose(commutator(s1, s2), 0)
    assert np.allclose(commutator(s1, a), 0)
    assert np.allclose(s1 @ s1, 0)


def test_sigma_z_eigenvalues():
    sp = HilbertSpace.qubits()
    assert np.allclose(np.diag(sigma_z(sp, 1)), [-1, -1, 1, 1])
    assert np.allclose(np.diag(sigma_z(sp, 2)), [-1, 1, -1, 1])


def test_bad_qubit_index_and_missing_cavity():
    sp = HilbertSpace.qubits()
    with pytest.raises(ValueError):
        qubit_lowering(sp, 3)
    with pytest.raises(DimensionError):
        cavity_annihilation(sp)
    with pytest.raises(DimensionError):
        HilbertSpace.qubits(0)


def test_tensor_rejects_non_square():
    with pytest.raises(DimensionError):
        tensor(np.eye(2), np.ones((2, 3)))
    with pytest.raises(DimensionError):
        tensor()


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(3)
    q, c = random_density(4, rng), random_density(3, rng)
    sp = HilbertSpace.qubits(2)
    rho = np.kron(q, c)
    assert np.allclose(partial_trace(rho, sp, [0, 1]), q)
    assert np.allclose(partial_trace(rho, sp, [2]), c)
    with pytest.raises(DimensionError):
        partial_trace(rho, sp, [3])


def test_fock_embedding_population():
    sp = HilbertSpace.qubits(3)
    rho = fock_embedded(sp, projector(ket("ee")), n=2)
    a = cavity_annihilation(sp)
    assert np.trace(dag(a) @ a @ rho).real == pytest.approx(2.0)


def test_dissipator_trace_preserving_lindblad_form():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = random_density(4, rng)
    d = dissipator_apply(a, a, rho)
    assert abs(np.trace(d)) < 1e-12
    assert hermitian_check(d)
    with pytest.raises(DimensionError):
        dissipator_apply(a, a, np.eye(3))


def test_check_state_rejects_bad_states():
    good = projector(ket("gg"))
    check_state(good)
    with pytest.raises(InvalidStateError):
        check_state(2 * good)
    with pytest.raises(InvalidStateError):
        check_state(np.diag([1.5, -0.5, 0, 0]))
    bad = good.copy().astype(complex)
    bad[0, 1] = 0.1
    with pytest.raises(InvalidStateError):
        check_state(bad)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 4))
def test_random_density_is_a_state(seed, rank):
    rho = random_density(4, np.random.default_rng(seed), rank=rank)
    check_state(rho)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == rank
