"""Reduced descriptions of the driven dimer.

Includes the dressed two-qubit eigenstructure, the cavity-eliminated
generators (frequency-resolved Bloch-Redfield and the collective Purcell
limit), the single-jump models for the frequency-resolved Purcell
mechanism and closed-form steady states and rates for the mechanisms that
admit them. :func:`classify_mechanisms` labels a parameter point with the
mechanisms whose operating conditions it satisfies.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .liouville import Superoperator, build_liouvillian, spost, spre, sprepost
from .model import (ParameterError, SystemParams, build_channels,
                    qubit_hamiltonian)
from .operators import HilbertSpace, dag, ket, projector, qubit_lowering

QUBITS = HilbertSpace.qubits()

SYM = (ket("eg") + ket("ge")) / math.sqrt(2)
ANTI = (ket("eg") - ket("ge")) / math.sqrt(2)
SYM2 = (ket("gg") + ket("ee")) / math.sqrt(2)
ANTI2 = (ket("gg") - ket("ee")) / math.sqrt(2)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        mag = np.abs(col)
        # first entry within roundoff of the maximum, so exact ties are stable
        i = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0])
        out[:, k] = col * (abs(col[i]) / col[i])
    return out


@dataclass(frozen=True)
class DressedBasis:
    """Eigenstructure of the driven dimer on the bare two-qubit space.

    Attributes
    ----------
    beta, R, Omega_2p : float
        Mixing angle, dipole Rabi frequency and two-photon Rabi frequency.
    eigenvalues : ndarray
        ``lambda_1 >= ... >= lambda_4``.
    vectors : ndarray
        Column ``i`` holds ``|U_{i+1}>`` in the bare basis.
    gij : ndarray
        ``g <U_j| sigma_1 + sigma_2 |U_i>``; the coupling ``g`` is included.
    omega_ij : ndarray
        ``lambda_i - lambda_j``.
    """

    beta: float
    R: float
    Omega_2p: float
    eigenvalues: np.ndarray
    vectors: np.ndarray
    gij: np.ndarray
    omega_ij: np.ndarray

    def state(self, i: int) -> np.ndarray:
        """``|U_i>`` with 1-based index."""
        return self.vectors[:, i - 1]

    def transition(self, i: int, j: int) -> np.ndarray:
        """``|U_j><U_i|`` with 1-based indices."""
        return np.outer(self.state(j), self.state(i).conj())


def dressed_basis(p: SystemParams) -> DressedBasis:
    if p.R == 0:
        raise ParameterError("dressed basis needs R > 0 (J = delta = 0)")
    h = qubit_hamiltonian(p, QUBITS)
    w, v = np.linalg.eigh(h)
    # descending energy; ties broken by weight on |ee>
    ee = np.abs(v[3, :])
    order = np.lexsort((-ee, -np.round(w, 12)))
    w, v = w[order], _fix_phase(v[:, order])
    s = qubit_lowering(QUBITS, 1) + qubit_lowering(QUBITS, 2)
    # gij[i, j] = g <U_j| S |U_i>
    gij = p.g * (v.conj().T @ s @ v).T
    return DressedBasis(beta=p.beta, R=p.R, Omega_2p=p.Omega_2p,
                        eigenvalues=w, vectors=v, gij=gij,
                        omega_ij=w[:, None] - w[None, :])


def _cavity_free_part(p: SystemParams) -> Superoperator:
    h = qubit_hamiltonian(p, QUBITS)
    return build_liouvillian(h, build_channels(p.with_(g=0.0, kappa=0.0), QUBITS),
                             source="cavity-free")


def _pair_super(x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Superoperator of ``X rho S^dag - S^dag X rho + S rho X^dag - rho X^dag S``."""
    return (sprepost(x, dag(s)) - spre(dag(s) @ x)
            + sprepost(s, dag(x)) - spost(dag(x) @ s))


def redfield_operator(p: SystemParams, denominators: np.ndarray | None = None) -> np.ndarray:
    """Frequency-filtered coupling ``X = sum_ij g_ij / d_ij |U_j><U_i|``.

    ``d_ij`` defaults to ``kappa/2 + i(Delta_a - omega_ij)``.
    """
    db = dressed_basis(p)
    if denominators is None:
        denominators = p.kappa / 2 + 1j * (p.Delta_a - db.omega_ij)
    v = db.vectors
    coef = db.gij / denominators
    # sum_ij coef[i, j] |U_j><U_i|  =  V coef^T V^dag
    return v @ coef.T @ v.conj().T


def bloch_redfield_liouvillian(p: SystemParams, *,
                               denominators: np.ndarray | None = None) -> Superoperator:
    """Qubit-only generator with the cavity adiabatically eliminated.

    Each dressed transition is filtered by the cavity line shape, so the
    cavity resolves the transitions it is tuned to.
    """
    base = _cavity_free_part(p)
    if p.g == 0:
        return Superoperator(base.matrix.copy(), source="bloch_redfield")
    if p.kappa == 0:
        raise ParameterError("adiabatic elimination needs kappa > 0")
    x = redfield_operator(p, denominators)
    s = p.g * (qubit_lowering(QUBITS, 1) + qubit_lowering(QUBITS, 2))
    return Superoperator(base.matrix + _pair_super(x, s), source="bloch_redfield")


def collective_purcell_liouvillian(p: SystemParams) -> Superoperator:
    """Cavity-free generator plus ``Gamma_P/2 D[sigma_1 + sigma_2]``."""
    base = _cavity_free_part(p)
    gp = p.purcell_rate
    if gp == 0:
        return Superoperator(base.matrix.copy(), source="collective_purcell")
    if math.isinf(gp):
        raise ParameterError("collective model needs kappa > 0")
    s = qubit_lowering(QUBITS, 1) + qubit_lowering(QUBITS, 2)
    d = 2 * sprepost(s, dag(s)) - spre(dag(s) @ s) - spost(dag(s) @ s)
    return Superoperator(base.matrix + gp / 2 * d, source="collective_purcell")


# ---------------------------------------------------------------- Mechanism I

# dominant (i, j) transitions, 1-based, for each target state
TRANSITIONS = {"A": ((1, 2), (1, 3), (2, 4), (3, 4)),
               "S": ((2, 1), (3, 1), (4, 2), (4, 3))}

# largest mixing angle for which the first-order jump operators are trusted
BETA_MAX = 0.3


@dataclass(frozen=True)
class JumpModel:
    """Single-jump description of the frequency-resolved Purcell channel.

    ``xi`` is the closed form; ``xi_numeric`` is the dominant eigenvector of
    the restricted coefficient matrix, scaled so that
    ``rate/2 * D[xi_numeric]`` reproduces that eigen-channel.
    """

    which: str
    xi: np.ndarray
    rate: float
    dominant_eigenvalue: float
    eigenvalues: np.ndarray
    xi_numeric: np.ndarray


def _plus_minus(beta: float) -> tuple[np.ndarray, np.ndarray]:
    s = math.sin(beta)
    eg, ge = ket("eg"), ket("ge")
    plus = (math.sqrt(1 - s) * eg + math.sqrt(1 + s) * ge) / math.sqrt(2)
    minus = (math.sqrt(1 + s) * eg - math.sqrt(1 - s) * ge) / math.sqrt(2)
    return plus, minus


def mechanism1_jump_operator(p: SystemParams, which: str = "A") -> JumpModel:
    which = which.upper()
    if which not in TRANSITIONS:
        raise ValueError(f"which must be 'A' or 'S', got {which!r}")
    beta = p.beta
    if abs(beta) > BETA_MAX:
        raise ParameterError(
            f"|beta|={abs(beta):.3g} exceeds {BETA_MAX}; first-order jump "
            "operators do not apply")
    if abs(beta) > 0.1:
        warnings.warn("jump operators are first order in beta", stacklevel=2)
    plus, minus = _plus_minus(beta)
    gg, ee = ket("gg"), ket("ee")
    # the sign of the beta/2 term follows from <-|sigma_1 + sigma_2|ee> > 0
    if which == "A":
        xi = np.outer(gg, plus.conj()) + beta / 2 * np.outer(minus, ee.conj())
    else:
        xi = -np.outer(plus, ee.conj()) - beta / 2 * np.outer(gg, minus.conj())

    # couplings with g factored out so the matrix scales with Gamma_P alone
    db = dressed_basis(p.with_(g=1.0))
    pairs = TRANSITIONS[which]
    gvec = np.array([db.gij[i - 1, j - 1] for i, j in pairs])
    gp = p.purcell_rate
    amat = gp * np.outer(gvec, gvec.conj())
    evals, evecs = np.linalg.eigh(amat)
    lead = evecs[:, -1]
    xi_num = sum(c * db.transition(i, j) for c, (i, j) in zip(lead, pairs))
    ov = np.vdot(xi_num, xi)
    if abs(ov) > 0:
        xi_num = xi_num * (ov / abs(ov))
    if gp > 0:
        xi_num = xi_num * math.sqrt(evals[-1] / (2 * gp))
    return JumpModel(which=which, xi=xi, rate=p.purcell_rate,
                     dominant_eigenvalue=float(evals[-1]),
                     eigenvalues=evals[::-1].copy(), xi_numeric=xi_num)


def jump_model_liouvillian(p: SystemParams, which: str = "A") -> Superoperator:
    """Cavity-free dimer plus ``Gamma_P/2 D[xi]`` for the chosen target."""
    jm = mechanism1_jump_operator(p, which)
    base = _cavity_free_part(p)
    xi = jm.xi
    d = 2 * sprepost(xi, dag(xi)) - spre(dag(xi) @ xi) - spost(dag(xi) @ xi)
    return Superoperator(base.matrix + jm.rate / 2 * d, source=f"jump_{which}")


def _extra_local(p: SystemParams) -> float:
    return p.Gamma_extra


@dataclass(frozen=True)
class MechanismIAnalytics:
    Gamma_IA: float
    gamma_minus: float
    gamma_plus: float
    rho_A_ss: float
    P_S: float
    rho_S_ss: float
    tau_IA: float
    tau_IS: float
    r_tau: float
    active_A: bool
    active_S: bool


def mechanism1_analytics(p: SystemParams) -> MechanismIAnalytics:
    gp = p.purcell_rate
    beta = p.beta
    cb = math.cos(beta)
    gm = p.gamma - p.gamma12 * cb + _extra_local(p)
    gpl = p.gamma + p.gamma12 * cb + _extra_local(p)
    o2p = p.Omega_2p
    gia = beta ** 2 * gp / 2
    rho_a = gia / (gia + gm) if gia + gm > 0 else 0.0
    tau_ia = 2 / (gia + gm) if gia + gm > 0 else math.inf
    if gp > 0 and o2p > 0:
        ps = 2 * o2p ** 2 / gp
        rho_s = 1 / (1 + gpl * (1 / ps + 1 / gp))
        root = np.sqrt(complex(gp ** 2 - 4 * o2p ** 2)).real
        tau_is = 2 / (gp - root) if gp > root else math.inf
        root_n = np.sqrt(complex(1 - (2 * o2p / gp) ** 2)).real
        r_tau = (beta ** 2 / 2) / (1 - root_n) if root_n < 1 else math.inf
    else:
        ps, rho_s, tau_is, r_tau = 0.0, 0.0, math.inf, math.nan
    C = p.cooperativity
    active_a = C > 0 and beta ** 2 > (2 / C) * (1 - p.gamma12 / p.gamma)
    active_s = (o2p / p.gamma) ** 2 > C
    return MechanismIAnalytics(gia, gm, gpl, rho_a, ps, rho_s, tau_ia,
                               tau_is, r_tau, bool(active_a), bool(active_s))


# --------------------------------------------------------------- Mechanism II

@dataclass(frozen=True)
class MechanismIIAnalytics:
    Gamma_S: float
    Gamma_A: float
    Gamma_eff_full: float
    Gamma_eff_simple: float
    rho_A_ss: float
    efficient: bool


def gamma_eff_full(Gamma: float, delta: float, Omega: float) -> float:
    """Relaxation rate towards ``|A>`` from hierarchical elimination."""
    d2, o2 = delta ** 2, Omega ** 2
    chi = (Gamma ** 4 * (d2 + 2 * o2)
           + Gamma ** 2 * (6 * d2 ** 2 - 4 * d2 * o2 + 64 * o2 ** 2)
           + 8 * (d2 ** 3 - 4 * d2 ** 2 * o2 + 4 * d2 * o2 ** 2 + 48 * o2 ** 3))
    if chi == 0:
        return 0.0
    return 4 * Gamma * d2 * (d2 + 2 * o2) * (Gamma ** 2 + 2 * d2 + 8 * o2) / chi


def mechanism2_analytics(p: SystemParams, factor: float = 10.0) -> MechanismIIAnalytics:
    gs = p.gamma + p.gamma12 + 2 * p.purcell_rate
    ga = p.gamma - p.gamma12
    full = gamma_eff_full(gs, p.delta, p.Omega)
    simple = 4 * gs * p.delta ** 2 / (gs ** 2 + 24 * p.Omega ** 2)
    denom = p.delta ** 2 + 2 * p.Omega ** 2
    rho_a = 2 * p.Omega ** 2 / denom if denom > 0 else 0.0
    return MechanismIIAnalytics(gs, ga, full, simple, rho_a,
                                bool(full > factor * ga))


# -------------------------------------------------------------- Mechanism III

@dataclass(frozen=True)
class MechanismIIIAnalytics:
    rho_gg: float
    rho_ee: float
    rho_gg_ee: complex
    rho_SS: float
    concurrence: float
    delta_max: float
    valid: bool


def mechanism3_analytics(p: SystemParams, factor: float = 10.0) -> MechanismIIIAnalytics:
    """Closed forms of the cavity-free two-photon fluorescence steady state.

    ``valid`` records ``delta >= J`` and ``Omega * factor <= R``.
    """
    R, g, J, O, dl = p.R, p.gamma, p.J, p.Omega, p.delta
    cb2 = (J / R) ** 2 if R > 0 else 0.0
    o4 = O ** 4
    base = R ** 2 * (g ** 2 + 4 * p.Delta ** 2)
    D = base + 16 * o4 * cb2
    rho_gg = (base + 4 * o4 * cb2) / D
    rho_ee = 4 * o4 * cb2 / D
    coh = 2 * R * (-1j * g + 2 * p.Delta) * O ** 2 * math.sqrt(cb2) / D
    num = 4 * J * O ** 2 * (g * dl ** 2 - 2 * J * O ** 2)
    den = g ** 2 * dl ** 4 + 16 * J ** 2 * o4
    conc = max(0.0, num / den) if den > 0 else 0.0
    dmax = O * math.sqrt(2 * (1 + math.sqrt(5)) * J / g) if J >= 0 else math.nan
    valid = abs(dl) >= abs(J) and O * factor <= R
    return MechanismIIIAnalytics(rho_gg, rho_ee, complex(coh), rho_ee, conc,
                                 dmax, bool(valid))


# ---------------------------------------------------------------- classifier

@dataclass(frozen=True)
class Thresholds:
    """Numeric reading of the qualitative comparisons.

    ``a >> b`` means ``a >= much * b`` and ``a ~ b`` means the ratio lies
    within ``[1/approx, approx]``. ``a <~ b`` holds when ``a <= approx * b``.
    """

    much: float = 5.0
    approx: float = 2.0

    def gg(self, a, b):
        return a >= self.much * b

    def ll(self, a, b):
        return self.much * a <= b

    def near(self, a, b):
        if a == b:
            return True
        if a == 0 or b == 0 or (a > 0) != (b > 0):
            return False
        r = a / b
        return 1 / self.approx <= r <= self.approx

    def lesssim(self, a, b):
        return a <= self.approx * b

    def gtrsim(self, a, b):
        return self.approx * a >= b


@dataclass(frozen=True)
class Classification:
    mechanisms: frozenset
    conditions: dict = field(default_factory=dict)


def classify_mechanisms(p: SystemParams, th: Thresholds = Thresholds()) -> Classification:
    """Label ``p`` with every mechanism whose conditions all hold.

    The two-photon resonance ``Delta = 0`` is a precondition of every row;
    without drive no label applies.
    """
    c: dict[str, bool] = {}
    if p.Omega == 0 or p.R == 0:
        return Classification(frozenset(), {"driven": p.Omega != 0,
                                            "R>0": p.R != 0})
    R, k, J, O, dl = p.R, p.kappa, abs(p.J), abs(p.Omega), abs(p.delta)
    o2p, gp, g = abs(p.Omega_2p), p.purcell_rate, p.gamma
    coop = p.cooperativity > 1 and k > 0
    c["two_photon_resonance"] = th.ll(abs(p.Delta), R)
    m1 = mechanism1_analytics(p) if gp > 0 and not math.isinf(gp) else None
    m2 = mechanism2_analytics(p, th.much) if not math.isinf(gp) else None

    c["I.i cooperativity>1"] = coop
    c["I.ii R>>kappa,delta,Omega"] = th.gg(R, k) and th.gg(R, dl) and th.gg(R, O)
    c["I.iii Omega_2p<~kappa<~J"] = th.lesssim(o2p, k) and th.lesssim(k, J)
    c["I_A.iv Delta_a~R"] = th.near(p.Delta_a, R)
    c["I_A.iv delta!=0"] = dl != 0
    c["I_A.iv Gamma_IA>gamma_-"] = bool(m1 and m1.Gamma_IA > m1.gamma_minus)
    c["I_S.iv Delta_a~-R"] = th.near(p.Delta_a, -R)
    c["I_S.iv kappa>>Omega_2p"] = th.gg(k, o2p)
    c["I_S.iv P_S>gamma_S"] = bool(m1 and m1.P_S > m1.gamma_plus)

    c["II.ii kappa>>R,Omega"] = th.gg(k, R) and th.gg(k, O)
    c["II.iii Omega>>delta"] = th.gg(O, dl)
    c["II.iv Gamma_eff>>Gamma_A"] = bool(m2 and m2.efficient)

    c["III_sp.i delta>~J"] = th.gtrsim(dl, J)
    c["III_sp.ii kappa<J"] = k < J
    c["III_sp.iii Omega_2p~gamma"] = th.near(o2p, g)
    c["III_cav.ii kappa>~J,delta,Omega"] = (th.gtrsim(k, J) and th.gtrsim(k, dl)
                                           and th.gtrsim(k, O))
    c["III_cav.iii Gamma_P>Omega if Omega>~J"] = (gp > O) if th.gtrsim(O, J) else True

    c["IV.ii kappa<~J,Omega_2p"] = th.lesssim(k, J) and th.lesssim(k, o2p)
    c["IV.iii R>>Omega"] = th.gg(R, O)
    c["IV Delta_a~+-2Omega_2p"] = (th.near(p.Delta_a, 2 * o2p)
                                   or th.near(p.Delta_a, -2 * o2p))

    res = set()
    if c["two_photon_resonance"]:
        common_i = coop and c["I.ii R>>kappa,delta,Omega"] and c["I.iii Omega_2p<~kappa<~J"]
        if common_i and c["I_A.iv Delta_a~R"] and c["I_A.iv delta!=0"] \
                and c["I_A.iv Gamma_IA>gamma_-"]:
            res.add("I_A")
        if common_i and c["I_S.iv Delta_a~-R"] and c["I_S.iv kappa>>Omega_2p"] \
                and c["I_S.iv P_S>gamma_S"]:
            res.add("I_S")
        if coop and c["II.ii kappa>>R,Omega"] and c["II.iii Omega>>delta"] \
                and c["II.iv Gamma_eff>>Gamma_A"]:
            res.add("II")
        # spontaneous-emission variant: cavity effect negligible
        if c["III_sp.i delta>~J"] and c["III_sp.ii kappa<J"] \
                and c["III_sp.iii Omega_2p~gamma"]:
            res.add("III_sp")
        if coop and c["III_cav.ii kappa>~J,delta,Omega"] \
                and c["III_cav.iii Gamma_P>Omega if Omega>~J"]:
            res.add("III_cav")
        if coop and c["IV.ii kappa<~J,Omega_2p"] and c["IV.iii R>>Omega"] \
                and c["IV Delta_a~+-2Omega_2p"]:
            res.add("IV")
    return Classification(frozenset(res), c)
