"""Vectorized Liouvillians: steady states, propagation, gaps and correlators.

Vectorization is row-major (numpy C order): ``vec(rho) = rho.ravel()``,
so that ``vec(A rho B) = kron(A, B.T) @ vec(rho)``. Every superoperator
formula in this package is written against that convention.
"""
from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .model import ChannelSet
from .operators import DimensionError

RESIDUAL_TOL = 1e-10
TRACE_TOL = 1e-8
# an eigen-basis whose condition number exceeds this is not trusted for
# propagation; the stepwise matrix-exponential path is used instead
EIGVEC_COND_MAX = 1e8
PIVOT_RATIO_MIN = 1e-15


class SolverError(RuntimeError):
    pass


class DegenerateKernelError(SolverError):
    def __init__(self, kernel_dim: int):
        super().__init__(f"Liouvillian has a degenerate kernel (dimension {kernel_dim})")
        self.kernel_dim = kernel_dim


def vec(rho: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(rho).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return v.reshape(d, d)


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho``."""
    return np.kron(a, np.eye(a.shape[0]))


def spost(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> rho @ a``."""
    return np.kron(np.eye(a.shape[0]), a.T)


def sprepost(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return np.kron(a, b.T)


def hamiltonian_super(h: np.ndarray) -> np.ndarray:
    return -1j * (spre(h) - spost(h))


def dissipator_super(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``D[A, B]`` as a matrix: ``2 A.B^dag - B^dag A. - .B^dag A``."""
    bd = b.conj().T
    bda = bd @ a
    return 2 * sprepost(a, bd) - spre(bda) - spost(bda)


@dataclass(eq=False)
class Superoperator:
    """Dense generator acting on row-major vectorized density matrices."""

    matrix: np.ndarray
    source: str = ""
    _eig: tuple | None = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock,
                                  init=False, repr=False)

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError("superoperator must be square")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0]:
            raise DimensionError("superoperator size is not a square number")
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def hilbert_dim(self) -> int:
        return int(round(np.sqrt(self.dim)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def eig(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cached ``(eigenvalues, right vectors, inverse of right vectors)``."""
        with self._lock:
            if self._eig is None:
                w, v = sla.eig(self.matrix)
                self._eig = (w, v, np.linalg.inv(v))
            return self._eig

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if other.dim != self.dim:
            raise DimensionError("superoperator sizes differ")
        return Superoperator(self.matrix + other.matrix,
                             f"{self.source} + {other.source}".strip(" +"))


def build_liouvillian(h: np.ndarray, channels: ChannelSet | Iterable = (),
                      source: str = "") -> Superoperator:
    """``-i[H, .] + sum rate/2 D[A, B]`` for every channel."""
    chans = channels.all() if isinstance(channels, ChannelSet) else tuple(channels)
    m = hamiltonian_super(h)
    for ch in chans:
        if ch.A.shape != h.shape or ch.B.shape != h.shape:
            raise DimensionError(f"channel {ch.label} does not match H")
        m = m + 0.5 * ch.rate * dissipator_super(ch.A, ch.B)
    return Superoperator(m, source or f"H + {len(chans)} channels")


def _trace_row(d: int) -> np.ndarray:
    row = np.zeros(d * d, dtype=complex)
    row[:: d + 1] = 1
    return row


def _kernel_dimension(L: Superoperator, rel_tol: float = 1e-13) -> int:
    s = np.linalg.svd(L.matrix, compute_uv=False)
    return int(np.sum(s <= rel_tol * s[0])) if s[0] > 0 else L.dim


def steady_state(L: Superoperator) -> np.ndarray:
    """Stationary state from ``L rho = 0`` with one row swapped for ``tr rho = 1``.

    Raises :class:`DegenerateKernelError` when the generator has more than
    one stationary state.
    """
    d = L.hilbert_dim
    m = np.array(L.matrix)
    scale = np.max(np.abs(m))
    if scale == 0:
        raise DegenerateKernelError(L.dim)
    # the trace row is scaled to the matrix so pivoting treats it evenly
    m[0, :] = scale * _trace_row(d)
    b = np.zeros(L.dim, dtype=complex)
    b[0] = scale
    with warnings.catch_warnings():
        # exact singularity is diagnosed below from the pivots
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_RATIO_MIN * pivots.max():
        k = _kernel_dimension(L)
        if k > 1:
            raise DegenerateKernelError(k)
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    if not np.all(np.isfinite(x)):
        raise DegenerateKernelError(_kernel_dimension(L))
    rho = unvec(x)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    res = np.linalg.norm(L.matrix @ vec(rho))
    if res > RESIDUAL_TOL * max(L.norm, 1.0):
        k = _kernel_dimension(L)
        if k > 1:
            raise DegenerateKernelError(k)
        raise SolverError(f"steady-state residual {res:.2e} too large")
    return rho


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    method: str

    def expect(self, op: np.ndarray) -> np.ndarray:
        return np.einsum("ij,tji->t", op, self.states)

    def population(self, vec_: np.ndarray) -> np.ndarray:
        v = np.asarray(vec_, dtype=complex)
        return np.einsum("i,tij,j->t", v.conj(), self.states, v).real


def _eig_reliable(L: Superoperator) -> bool:
    w, v, vinv = L.eig()
    return np.linalg.norm(v, 2) * np.linalg.norm(vinv, 2) < EIGVEC_COND_MAX


def _spectral_propagate(L: Superoperator, x0: np.ndarray, t: np.ndarray) -> np.ndarray:
    w, v, vinv = L.eig()
    k0 = zero_mode_index(w)
    c = vinv @ x0
    # clip roundoff-positive rates so nothing grows at long times
    w = np.where(w.real > 0, 1j * w.imag, w)
    w[k0] = 0.0
    try:
        ss = vec(steady_state(L))
    except (DegenerateKernelError, SolverError):
        return (np.exp(np.outer(t, w)) * c) @ v.T
    # The numerical zero-mode eigenvector can mix with a nearly degenerate
    # slow mode. Swap it for the solved steady state, make the remaining
    # modes traceless, and expand x0 in that basis.
    d = L.hilbert_dim
    tr_v = v[:: d + 1, :].sum(axis=0)
    v = v - np.outer(ss, tr_v)
    v[:, k0] = ss
    c = np.linalg.solve(v, x0)
    return (np.exp(np.outer(t, w)) * c) @ v.T


def evolve(L: Superoperator, rho0: np.ndarray, times: Sequence[float],
           method: str = "auto") -> Trajectory:
    """Propagate ``rho0`` to each of ``times`` (ascending, starting at t >= 0).

    ``method`` is ``"spectral"`` (eigen-decomposition of L), ``"expm"``
    (stepwise matrix exponentials between consecutive output times), or
    ``"auto"``, which uses the spectral path when the eigenbasis is well
    conditioned.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or np.any(np.diff(t) < 0) or (t.size and t[0] < 0):
        raise ValueError("times must be ascending and non-negative")
    x0 = vec(np.asarray(rho0, dtype=complex))
    if x0.size != L.dim:
        raise DimensionError("initial state does not match the Liouvillian")
    if method == "auto":
        method = "spectral" if _eig_reliable(L) else "expm"
    if method == "spectral":
        xs = _spectral_propagate(L, x0, t)
    elif method == "expm":
        xs = np.empty((t.size, L.dim), dtype=complex)
        x, prev = x0, 0.0
        for k, tk in enumerate(t):
            dt = tk - prev
            if dt > 0:
                x = sla.expm(L.matrix * dt) @ x
            xs[k] = x
            prev = tk
    else:
        raise ValueError(f"unknown method {method!r}")
    d = L.hilbert_dim
    states = xs.reshape(t.size, d, d)
    tr = np.einsum("tii->t", states)
    if np.any(np.abs(tr - 1) > TRACE_TOL):
        if method == "spectral":
            return evolve(L, rho0, t, method="expm")
        raise SolverError("trace drifted during propagation")
    return Trajectory(t, states, method)


def zero_mode_index(w: np.ndarray) -> int:
    return int(np.argmin(np.abs(w)))


def liouvillian_gap(L: Superoperator) -> float:
    """Smallest non-zero relaxation rate ``-max Re(lambda)``, zero mode excluded."""
    if _kernel_dimension(L) > 1:
        return 0.0
    w = L.eig()[0]
    rest = np.delete(w, zero_mode_index(w))
    return float(-np.max(rest.real))


def relaxation_modes(L: Superoperator, rho0: np.ndarray, observable: np.ndarray,
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and amplitudes of each mode in ``<O>(t)`` starting from ``rho0``."""
    w, v, vinv = L.eig()
    c = vinv @ vec(np.asarray(rho0, dtype=complex))
    # <O> = tr(O rho) = sum_ij O_ji rho_ij
    o = vec(np.asarray(observable).T)
    amp = (o @ v) * c
    return w, amp


def _check_stationary(L: Superoperator, rho: np.ndarray) -> None:
    res = np.linalg.norm(L.matrix @ vec(rho))
    if res > 1e-8 * max(L.norm, 1.0):
        raise SolverError(f"state is not stationary (residual {res:.2e})")


def two_time_correlator(L: Superoperator, A: np.ndarray, B: np.ndarray,
                        rho: np.ndarray, taus: Sequence[float],
                        require_stationary: bool = True) -> np.ndarray:
    """``<A(0) B(tau)> = tr[B exp(L tau)(rho A)]`` by the regression theorem."""
    if require_stationary:
        _check_stationary(L, rho)
    w, v, vinv = L.eig()
    c = vinv @ vec(rho @ A)
    b = vec(np.asarray(B).T)
    weights = (b @ v) * c
    taus = np.asarray(taus, dtype=float)
    return np.exp(np.outer(taus, w)) @ weights


def emission_spectrum(L: Superoperator, rho: np.ndarray, omegas: Sequence[float],
                      E: np.ndarray, require_stationary: bool = True,
                      normalize: bool = True,
                      incoherent: bool = True) -> np.ndarray:
    """Power spectrum of the field ``E`` (lowering part) as a sum of Lorentzians.

    ``S(w) = (1/pi) Re int_0^inf dtau e^{i w tau} <E^dag(0) E(tau)>`` is
    evaluated in closed form from the eigen-decomposition of ``L``. With
    ``incoherent`` the stationary (elastic) part is removed.
    """
    if require_stationary:
        _check_stationary(L, rho)
    A = E.conj().T
    w, v, vinv = L.eig()
    x = vec(rho @ A)
    if incoherent and require_stationary:
        x = x - np.trace(rho @ A) * vec(rho)
    c = vinv @ x
    b = vec(np.asarray(E).T)
    weights = (b @ v) * c
    omegas = np.asarray(omegas, dtype=float)
    keep = np.abs(w) > 1e-12 * max(1.0, np.max(np.abs(w)))
    if incoherent and require_stationary:
        # the zero mode carries only the elastic part
        keep[zero_mode_index(w)] = False
    wk, ck = w[keep], weights[keep]
    # int_0^inf e^{(lambda + i w) tau} dtau = -1 / (lambda + i w)
    s = (-ck[None, :] / (wk[None, :] + 1j * omegas[:, None])).sum(axis=1).real / np.pi
    if np.any(~np.isfinite(s)):
        raise SolverError("spectrum evaluation failed")
    if normalize and np.max(s) > 0:
        s = s / np.max(s)
    return s
