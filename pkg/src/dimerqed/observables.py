"""Entanglement measures and optical readouts of the two-emitter system."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .liouville import Superoperator, evolve
from .model import SystemParams
from .operators import (HilbertSpace, InvalidStateError, cavity_annihilation,
                        dag, ket, partial_trace, qubit_lowering)

# negative eigenvalues above -RADICAND_FAIL are treated as roundoff
RADICAND_FAIL = 1e-8
MOMENT_FLOOR = 1e-12

_SY = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SY, _SY)


class UndefinedObservableError(ValueError):
    """A normalised moment has a vanishing denominator."""


def _as_two_qubit(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 two-qubit state, got {rho.shape}")
    return rho


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    Parameters
    ----------
    rho : ndarray
        4x4 state in the ``gg, ge, eg, ee`` basis.

    Returns
    -------
    float
        ``max(0, s1 - s2 - s3 - s4)`` where ``s_i`` are the square roots of
        the eigenvalues of ``rho (Y x Y) rho* (Y x Y)`` in descending order.
    """
    rho = _as_two_qubit(rho)
    rho = 0.5 * (rho + dag(rho))
    w, v = np.linalg.eigh(rho)
    if w.min() < -RADICAND_FAIL:
        raise InvalidStateError(f"state has eigenvalue {w.min():.3e}")
    # with rho = W W^dag the s_i are the singular values of W^T (Y x Y) W,
    # which avoids square roots of roundoff-sized eigenvalues
    wm = v * np.sqrt(np.clip(w, 0.0, None))
    s = np.linalg.svd(wm.T @ _YY @ wm, compute_uv=False)
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def reduced_qubits(rho: np.ndarray, space: HilbertSpace) -> np.ndarray:
    """Trace out the cavity if ``space`` has one."""
    if not space.has_cavity:
        return np.asarray(rho)
    return partial_trace(rho, space, [0, 1])


_SQ2 = math.sqrt(2)
BASES = {
    "bare": {"gg": ket("gg"), "ge": ket("ge"), "eg": ket("eg"), "ee": ket("ee")},
    "SA": {"gg": ket("gg"), "S": (ket("eg") + ket("ge")) / _SQ2,
           "A": (ket("eg") - ket("ge")) / _SQ2, "ee": ket("ee")},
}


def basis_populations(rho: np.ndarray, basis: str = "SA",
                      p: SystemParams | None = None) -> dict[str, float]:
    """Diagonal of ``rho`` in a named basis.

    ``basis`` is ``"bare"``, ``"SA"``, ``"pm"`` (dimer eigenstates, needs
    ``p``) or ``"dressed"`` (driven eigenstates ``U1..U4`` plus the
    two-photon states ``S2``, ``A2``; needs ``p``). The dressed entry is not
    a partition: ``S2`` and ``A2`` overlap with the ``U`` states.
    """
    rho = _as_two_qubit(rho)
    if basis in BASES:
        vecs = BASES[basis]
    elif basis == "pm":
        if p is None:
            raise ValueError("basis 'pm' needs the system parameters")
        s = math.sin(p.beta)
        eg, ge = ket("eg"), ket("ge")
        vecs = {"gg": ket("gg"),
                "+": (math.sqrt(1 - s) * eg + math.sqrt(1 + s) * ge) / _SQ2,
                "-": (math.sqrt(1 + s) * eg - math.sqrt(1 - s) * ge) / _SQ2,
                "ee": ket("ee")}
    elif basis == "dressed":
        if p is None:
            raise ValueError("basis 'dressed' needs the system parameters")
        from .effective import dressed_basis
        db = dressed_basis(p)
        vecs = {f"U{i}": db.state(i) for i in range(1, 5)}
        vecs["S2"] = (ket("gg") + ket("ee")) / _SQ2
        vecs["A2"] = (ket("gg") - ket("ee")) / _SQ2
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return {k: float(np.vdot(v, rho @ v).real) for k, v in vecs.items()}


def cavity_intensity(rho: np.ndarray, space: HilbertSpace) -> float:
    a = cavity_annihilation(space)
    return float(np.trace(dag(a) @ a @ rho).real)


def g2_zero(rho: np.ndarray, space: HilbertSpace) -> float:
    """Zero-delay cavity autocorrelation ``<a+a+aa>/<a+a>^2``."""
    a = cavity_annihilation(space)
    n = float(np.trace(dag(a) @ a @ rho).real)
    if n <= MOMENT_FLOOR:
        raise UndefinedObservableError(f"cavity occupation {n:.2e} below floor")
    ad = dag(a)
    return float(np.trace(ad @ ad @ a @ a @ rho).real) / n ** 2


def emitter_populations(rho: np.ndarray) -> tuple[float, float]:
    rho = _as_two_qubit(rho)
    q = HilbertSpace.qubits()
    out = []
    for k in (1, 2):
        s = qubit_lowering(q, k)
        out.append(float(np.trace(dag(s) @ s @ rho).real))
    return out[0], out[1]


def freq_resolved_g2(rho: np.ndarray) -> float:
    """Cross-correlation of the two emission lines from the stationary moments.

    Returns ``<ee|rho|ee> / (<s1+ s1> <s2+ s2>)``; product states give 1.
    """
    rho = _as_two_qubit(rho)
    n1, n2 = emitter_populations(rho)
    if min(n1, n2) <= MOMENT_FLOOR:
        raise UndefinedObservableError("an emitter is unexcited")
    return float(rho[3, 3].real) / (n1 * n2)


def freq_resolved_g2_switchoff(L_free: Superoperator, rho: np.ndarray,
                               t_off: float = 0.0) -> float:
    """Variant evaluated after the drive is switched off.

    ``rho`` is propagated for ``t_off`` under the undriven generator
    ``L_free`` (two-qubit space) before the moment ratio is taken.
    """
    if t_off > 0:
        rho = evolve(L_free, rho, [t_off]).states[-1]
    return freq_resolved_g2(rho)


@dataclass(frozen=True)
class OpticalReadout:
    intensity: float
    g2_zero: float
    g2_freq_resolved: float
    populations: tuple[float, float]


def optical_readout(rho: np.ndarray, space: HilbertSpace) -> OpticalReadout:
    """Collect cavity and emitter readouts; undefined ratios become ``nan``."""
    q = reduced_qubits(rho, space)
    try:
        g2 = g2_zero(rho, space) if space.has_cavity else math.nan
    except UndefinedObservableError:
        g2 = math.nan
    try:
        g2f = freq_resolved_g2(q)
    except UndefinedObservableError:
        g2f = math.nan
    inten = cavity_intensity(rho, space) if space.has_cavity else 0.0
    return OpticalReadout(inten, g2, g2f, emitter_populations(q))
