"""Tensor-product bookkeeping and dense operator algebra.

Factor ordering is fixed as ``qubit1 (x) qubit2 (x) cavity``. Each qubit
uses the local basis ``(|g>, |e>)`` so the two-qubit block is ordered
``|gg>, |ge>, |eg>, |ee>`` with the first label belonging to qubit 1.

Operators and density matrices are plain ``numpy`` arrays; a
:class:`HilbertSpace` carries the factor dimensions needed to embed
local operators and to take partial traces.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable

import numpy as np

STRUCT_TOL = 1e-12
STATE_TRACE_TOL = 1e-10
STATE_HERM_TOL = 1e-10
STATE_PSD_TOL = 1e-8

QUBIT1, QUBIT2, CAVITY = 0, 1, 2


class DimensionError(ValueError):
    """Operands live on incompatible spaces."""


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered list of subsystem dimensions.

    ``HilbertSpace.qubits()`` gives the bare two-qubit space and
    ``HilbertSpace.qubits(n_max)`` appends a cavity truncated at ``n_max``
    photons.
    """

    factors: tuple[int, ...]
    has_cavity: bool = False

    def __post_init__(self):
        if not self.factors or any(int(d) < 1 for d in self.factors):
            raise DimensionError(f"invalid factor dimensions {self.factors}")
        if self.has_cavity and self.factors[-1] < 2:
            raise DimensionError("cavity needs n_max >= 1")

    @classmethod
    def qubits(cls, n_max: int | None = None) -> "HilbertSpace":
        if n_max is None:
            return cls((2, 2))
        if n_max < 1:
            raise DimensionError("n_max must be >= 1")
        return cls((2, 2, n_max + 1), has_cavity=True)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    @property
    def n_max(self) -> int | None:
        return self.factors[-1] - 1 if self.has_cavity else None

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)

    def embed(self, local: np.ndarray, which: int) -> np.ndarray:
        """Place ``local`` on factor ``which`` with identities elsewhere."""
        if not 0 <= which < len(self.factors):
            raise DimensionError(f"no factor {which} in {self.factors}")
        if local.shape != (self.factors[which],) * 2:
            raise DimensionError(
                f"local operator {local.shape} does not fit factor {which}")
        mats = [local if k == which else np.eye(d)
                for k, d in enumerate(self.factors)]
        return reduce(np.kron, mats).astype(complex)


# single two-level lowering operator |g><e| in the (g, e) basis
SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)


def qubit_lowering(space: HilbertSpace, which: int) -> np.ndarray:
    """Lowering operator of qubit ``which`` (1 or 2) embedded in ``space``."""
    if which not in (1, 2):
        raise ValueError(f"unknown qubit index {which!r}; expected 1 or 2")
    return space.embed(SIGMA, which - 1)


def cavity_annihilation(space: HilbertSpace) -> np.ndarray:
    """Truncated ladder operator with ``a|n> = sqrt(n)|n-1>``."""
    if not space.has_cavity:
        raise DimensionError("space has no cavity factor")
    dim = space.factors[CAVITY]
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)
    return space.embed(a, CAVITY)


def sigma_z(space: HilbertSpace, which: int) -> np.ndarray:
    """Pauli z as ``2 sigma^dag sigma - 1``."""
    s = qubit_lowering(space, which)
    return 2 * s.conj().T @ s - space.identity()


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product in the declared factor order."""
    if not ops:
        raise DimensionError("nothing to tensor")
    for op in ops:
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise DimensionError(f"operand of shape {op.shape} is not square")
    return reduce(np.kron, ops)


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def hermitian_check(op: np.ndarray, tol: float = STRUCT_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(op), initial=0.0)))
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol * scale)


def partial_trace(rho: np.ndarray, space: HilbertSpace,
                  keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix on the factors listed in ``keep``."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set is empty")
    n = len(space.factors)
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep={keep} outside factors {space.factors}")
    if rho.shape != (space.total_dim,) * 2:
        raise DimensionError("state does not match space")
    dims = space.factors
    t = rho.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # trace out from the highest index so axis numbers stay valid
    for k in sorted(traced, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + cur)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


def dissipator_apply(a: np.ndarray, b: np.ndarray,
                     rho: np.ndarray) -> np.ndarray:
    """``D[A, B] rho = 2 A rho B^dag - B^dag A rho - rho B^dag A``."""
    if not (a.shape == b.shape == rho.shape):
        raise DimensionError(
            f"shapes {a.shape}, {b.shape}, {rho.shape} do not match")
    bd = b.conj().T
    bda = bd @ a
    return 2 * a @ rho @ bd - bda @ rho - rho @ bda


class InvalidStateError(ValueError):
    """Density matrix violates trace, Hermiticity or positivity."""


def check_state(rho: np.ndarray, *, trace_tol: float = STATE_TRACE_TOL,
                herm_tol: float = STATE_HERM_TOL,
                psd_tol: float = STATE_PSD_TOL) -> np.ndarray:
    """Validate a density matrix and return it unchanged."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"state of shape {rho.shape} is not square")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise InvalidStateError(f"trace {tr} differs from 1")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise InvalidStateError("state is not Hermitian")
    wmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if wmin < -psd_tol:
        raise InvalidStateError(f"negative eigenvalue {wmin:.3e}")
    return rho


def ket(labels: str) -> np.ndarray:
    """Two-qubit basis ket from a label such as ``"ge"``."""
    idx = {"g": 0, "e": 1}
    if len(labels) != 2 or any(c not in idx for c in labels):
        raise ValueError(f"bad two-qubit label {labels!r}")
    v = np.zeros(4, dtype=complex)
    v[2 * idx[labels[0]] + idx[labels[1]]] = 1
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


def fock_embedded(space: HilbertSpace, qubit_state: np.ndarray,
                  n: int = 0) -> np.ndarray:
    """``qubit_state (x) |n><n|`` on a space with a cavity."""
    if not space.has_cavity:
        return np.asarray(qubit_state, dtype=complex)
    cav = np.zeros((space.factors[CAVITY],) * 2, dtype=complex)
    cav[n, n] = 1
    return np.kron(qubit_state, cav)


def random_density(dim: int, rng: np.random.Generator,
                   rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho)

