import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from dimerqed.liouville import build_liouvillian
from dimerqed.model import SystemParams, build_channels
from dimerqed.observables import (UndefinedObservableError, basis_populations,
                                  concurrence, freq_resolved_g2,
                                  freq_resolved_g2_switchoff, g2_zero, optical_readout,
                                  reduced_qubits)
from dimerqed.operators import (HilbertSpace, InvalidStateError, fock_embedded, ket,
                                projector, random_density)

BELLS = [(ket("gg") + ket("ee")) / math.sqrt(2), (ket("gg") - ket("ee")) / math.sqrt(2),
         (ket("eg") + ket("ge")) / math.sqrt(2), (ket("eg") - ket("ge")) / math.sqrt(2)]


def _wootters_pure(psi):
    """C = 2|ad - bc| for a pure two-qubit state."""
    a, b, c, d = psi
    return 2 * abs(a * d - b * c)


@pytest.mark.parametrize("psi", BELLS)
def test_bell_states_are_maximally_entangled(psi):
    assert concurrence(projector(psi)) == pytest.approx(1.0, abs=1e-12)


def test_product_and_werner_states():
    assert concurrence(projector(ket("eg"))) == pytest.approx(0.0, abs=1e-12)
    assert concurrence(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-12)
    for p in (0.2, 0.5, 0.8):
        w = p * projector(BELLS[3]) + (1 - p) * np.eye(4) / 4
        assert concurrence(w) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_pure_state_concurrence_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    assert concurrence(projector(psi)) == pytest.approx(_wootters_pure(psi), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.3, 0.95))
def test_concurrence_invariant_under_local_unitaries(seed, w):
    rng = np.random.default_rng(seed)
    rho = w * projector(BELLS[int(rng.integers(4))]) + (1 - w) * random_density(4, rng)
    u = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
    assert concurrence(u @ rho @ u.conj().T) == pytest.approx(concurrence(rho), abs=1e-10)


def test_concurrence_rejects_invalid_input():
    with pytest.raises(InvalidStateError):
        concurrence(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(Exception):
        concurrence(np.eye(3) / 3)


def test_basis_populations_partition_unity():
    rho = random_density(4, np.random.default_rng(4))
    p = SystemParams(J=3.0, delta=1.0, Omega=0.5)
    for basis in ("bare", "SA", "pm"):
        pops = basis_populations(rho, basis, p)
        assert sum(pops.values()) == pytest.approx(1.0, abs=1e-12)
    dressed = basis_populations(rho, "dressed", p)
    assert sum(dressed[f"U{i}"] for i in range(1, 5)) == pytest.approx(1.0, abs=1e-12)
    assert basis_populations(projector(BELLS[3]))["A"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        basis_populations(rho, "pm")
    with pytest.raises(ValueError):
        basis_populations(rho, "nope")


def test_cavity_g2_of_fock_states():
    sp = HilbertSpace.qubits(3)
    q = projector(ket("gg"))
    assert g2_zero(fock_embedded(sp, q, n=1), sp) == pytest.approx(0.0)
    assert g2_zero(fock_embedded(sp, q, n=2), sp) == pytest.approx(0.5)
    with pytest.raises(UndefinedObservableError):
        g2_zero(fock_embedded(sp, q, n=0), sp)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_frequency_resolved_g2_of_product_states_is_one(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(2, rng), random_density(2, rng)
    assert freq_resolved_g2(np.kron(a, b)) == pytest.approx(1.0, rel=1e-9)


def test_frequency_resolved_g2_bunching_and_switch_off():
    s2 = projector(BELLS[0])
    # |gg>+|ee> only emits photon pairs
    assert freq_resolved_g2(0.5 * s2 + 0.5 * np.eye(4) / 4) > 1
    with pytest.raises(UndefinedObservableError):
        freq_resolved_g2(projector(ket("gg")))
    L = build_liouvillian(np.zeros((4, 4)), build_channels(SystemParams(),
                                                          HilbertSpace.qubits()))
    rho = np.kron(random_density(2, np.random.default_rng(1)),
                  random_density(2, np.random.default_rng(2)))
    assert freq_resolved_g2_switchoff(L, rho, 0.0) == pytest.approx(freq_resolved_g2(rho))
    # independent decay keeps product states uncorrelated
    assert freq_resolved_g2_switchoff(L, rho, 0.7) == pytest.approx(1.0, rel=1e-9)


def test_optical_readout_marks_undefined_ratios():
    sp = HilbertSpace.qubits(2)
    rho = fock_embedded(sp, projector(ket("gg")))
    r = optical_readout(rho, sp)
    assert math.isnan(r.g2_zero) and math.isnan(r.g2_freq_resolved)
    assert r.intensity == 0.0
    assert np.allclose(reduced_qubits(rho, sp), projector(ket("gg")))
