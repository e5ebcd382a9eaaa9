import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from dimerqed.liouville import (DegenerateKernelError, SolverError, Superoperator,
                                build_liouvillian, dissipator_super, emission_spectrum,
                                evolve, liouvillian_gap, relaxation_modes,
                                spost, spre, sprepost, steady_state,
                                two_time_correlator, unvec, vec)
from dimerqed.model import Channel, SystemParams, build_channels, build_hamiltonian
from dimerqed.operators import (check_state, dag, dissipator_apply, fock_embedded,
                                hermitian_check, ket, projector, random_density)

SIG = np.array([[0, 1], [0, 0]], dtype=complex)


def oracle_liouvillian(h, channels):
    """Column-stacking construction written independently of the package."""
    d = h.shape[0]
    eye = np.eye(d)
    m = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in channels:
        a, bd = c.A, c.B.conj().T
        bda = bd @ a
        m = m + 0.5 * c.rate * (2 * np.kron(bd.T, a) - np.kron(eye, bda)
                                - np.kron(bda.T, eye))
    return m


def oracle_steady(m):
    d = int(round(np.sqrt(m.shape[0])))
    _, s, vh = np.linalg.svd(m)
    x = vh[-1].conj()
    rho = x.reshape(d, d, order="F")
    return rho / np.trace(rho)


def tls(omega, gamma=1.0):
    h = omega * (SIG + dag(SIG))
    return build_liouvillian(h, [Channel(gamma, SIG, SIG, "gamma")]), h


def random_params(draw_seed):
    rng = np.random.default_rng(draw_seed)
    g1, g2 = rng.uniform(0.2, 2.0, 2)
    return SystemParams(
        delta=rng.uniform(-5, 5), Delta=rng.uniform(-5, 5), Delta_a=rng.uniform(-5, 5),
        Omega=rng.uniform(0, 3), J=rng.uniform(-5, 5), gamma1=g1, gamma2=g2,
        gamma12=rng.uniform(-1, 1) * np.sqrt(g1 * g2), kappa=rng.uniform(0.1, 10),
        g=rng.uniform(0, 3), Gamma_extra=rng.uniform(0, 1), gamma_phi=rng.uniform(0, 1),
        Gamma_phi=rng.uniform(0, 1), n_max=int(rng.integers(1, 4)))


def test_vectorization_identity():
    rng = np.random.default_rng(1)
    a, b, x = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    assert np.allclose(sprepost(a, b) @ vec(x), vec(a @ x @ b))
    assert np.allclose(spre(a) @ vec(x), vec(a @ x))
    assert np.allclose(spost(b) @ vec(x), vec(x @ b))
    assert np.allclose(unvec(vec(x)), x)


def test_dissipator_super_matches_direct_application():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = random_density(4, rng)
    assert np.allclose(unvec(dissipator_super(a, b) @ vec(rho)),
                       dissipator_apply(a, b, rho))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_randomized_builds_keep_state_invariants(seed):
    p = random_params(seed)
    sp = p.space()
    h = build_hamiltonian(p, sp)
    assert hermitian_check(h)
    ch = build_channels(p, sp)
    L = build_liouvillian(h, ch)
    # trace preservation: the trace row annihilates L
    d = sp.total_dim
    tr = np.zeros(d * d)
    tr[:: d + 1] = 1
    assert np.abs(tr @ L.matrix).max() < 1e-10 * max(1.0, np.abs(L.matrix).max())
    rho = steady_state(L)
    check_state(rho, psd_tol=1e-9)
    # independent construction and null-space solve agree
    ref = oracle_steady(oracle_liouvillian(h, ch.all()))
    assert np.abs(rho - ref).max() < 1e-8


def test_driven_two_level_system_closed_form():
    for om in (0.1, 0.5, 1.0, 2.0):
        L, _ = tls(om)
        rho = steady_state(L)
        assert abs(np.trace(SIG @ rho)) == pytest.approx(2 * om / (1 + 8 * om ** 2), abs=1e-10)
    rho = steady_state(tls(1.0)[0])
    assert rho[1, 1].real == pytest.approx(4 / 9, abs=1e-12)


def test_undriven_gap_is_half_the_decay_rate():
    L, _ = tls(0.0, gamma=3.0)
    assert liouvillian_gap(L) == pytest.approx(1.5, abs=1e-12)


def test_degenerate_kernel_is_reported():
    L = build_liouvillian(np.diag([0.0, 1.0]).astype(complex), [])
    with pytest.raises(DegenerateKernelError):
        steady_state(L)
    assert liouvillian_gap(L) == 0.0


def test_superoperator_validates_shape():
    with pytest.raises(Exception):
        Superoperator(np.zeros((5, 5)))


@pytest.mark.parametrize("method", ["spectral", "expm"])
def test_evolution_matches_matrix_exponential(method):
    p = SystemParams(J=2.0, delta=0.5, Omega=1.0, kappa=3.0, g=0.8, Delta_a=0.3, n_max=2)
    sp = p.space()
    L = build_liouvillian(build_hamiltonian(p, sp), build_channels(p, sp))
    rho0 = fock_embedded(sp, projector(ket("gg")))
    t = np.array([0.0, 0.3, 1.0, 4.0, 40.0])
    traj = evolve(L, rho0, t, method=method)
    ref = oracle_liouvillian(build_hamiltonian(p, sp), build_channels(p, sp).all())
    for tk, rk in zip(t, traj.states):
        x = sla.expm(ref * tk) @ rho0.reshape(-1, order="F")
        assert np.abs(rk - x.reshape(rho0.shape, order="F")).max() < 1e-9
    assert np.abs(traj.states[-1] - steady_state(L)).max() < 1e-6


def test_evolution_rejects_bad_times():
    L, _ = tls(1.0)
    with pytest.raises(ValueError):
        evolve(L, projector(np.array([1, 0])), [1.0, 0.5])


def test_relaxation_modes_reconstruct_expectation():
    L, _ = tls(0.7)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    obs = np.diag([0.0, 1.0])
    w, amp = relaxation_modes(L, rho0, obs)
    t = 1.3
    direct = evolve(L, rho0, [t]).expect(obs)[0].real
    assert (amp * np.exp(w * t)).sum().real == pytest.approx(direct, abs=1e-10)


def test_correlator_regression_against_expm():
    L, _ = tls(0.8)
    rho = steady_state(L)
    taus = np.array([0.0, 0.5, 2.0])
    got = two_time_correlator(L, dag(SIG), SIG, rho, taus)
    for tau, gv in zip(taus, got):
        x = sla.expm(L.matrix * tau) @ vec(rho @ dag(SIG))
        assert gv == pytest.approx(np.trace(SIG @ unvec(x)), abs=1e-10)
    with pytest.raises(SolverError):
        two_time_correlator(L, dag(SIG), SIG, np.diag([1.0, 0.0]), taus)


def test_spectrum_equals_numerical_fourier_transform():
    L, _ = tls(2.0)
    rho = steady_state(L)
    om = np.linspace(-8, 8, 9)
    s = emission_spectrum(L, rho, om, SIG, normalize=False)
    tau = np.linspace(0, 60, 120001)
    corr = two_time_correlator(L, dag(SIG), SIG, rho, tau)
    corr = corr - abs(np.trace(SIG @ rho)) ** 2
    for w, sv in zip(om, s):
        val = np.trapezoid(np.exp(1j * w * tau) * corr, tau).real / np.pi
        assert sv == pytest.approx(val, abs=1e-6)
    # Mollow triplet: side peaks near +-2 * (2 Omega)
    fine = np.linspace(-12, 12, 2401)
    sf = emission_spectrum(L, rho, fine, SIG)
    side = fine[fine > 2][np.argmax(sf[fine > 2])]
    assert side == pytest.approx(4.0, abs=0.2)
    assert sf.max() == pytest.approx(1.0)
