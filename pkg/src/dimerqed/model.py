"""Physical parameters, geometry-derived couplings, Hamiltonian and channels.

All rates and detunings are expressed in units of the local decay rate
``gamma``, which defaults to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple

import numpy as np

from .operators import (HilbertSpace, cavity_annihilation, dag,
                        qubit_lowering, sigma_z)


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Rates and detunings of the driven two-emitter + cavity system.

    ``Delta`` is the laser-qubit detuning (mean emitter frequency minus
    laser) and ``Delta_a`` the laser-cavity detuning. ``gamma1``/``gamma2``
    override the local decay of each emitter when set.
    """

    delta: float = 0.0
    Delta: float = 0.0
    Delta_a: float = 0.0
    Omega: float = 0.0
    J: float = 0.0
    gamma: float = 1.0
    gamma12: float = 0.0
    kappa: float = 0.0
    g: float = 0.0
    Gamma_extra: float = 0.0
    gamma_phi: float = 0.0
    Gamma_phi: float = 0.0
    n_max: int = 3
    gamma1: float | None = None
    gamma2: float | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ParameterError("gamma must be positive")
        if self.kappa < 0:
            raise ParameterError("kappa must be non-negative")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError("n_max must be an integer >= 1")
        for name in ("Gamma_extra", "gamma_phi", "Gamma_phi"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        g1, g2 = self.local_rates
        if g1 <= 0 or g2 <= 0:
            raise ParameterError("local decay rates must be positive")
        if abs(self.gamma12) > math.sqrt(g1 * g2) * (1 + 1e-12):
            raise ParameterError(
                f"|gamma12|={abs(self.gamma12)} exceeds sqrt(gamma1*gamma2)")

    @property
    def local_rates(self) -> tuple[float, float]:
        g1 = self.gamma if self.gamma1 is None else self.gamma1
        g2 = self.gamma if self.gamma2 is None else self.gamma2
        return g1, g2

    @property
    def purcell_rate(self) -> float:
        """``4 g^2 / kappa``; zero without a cavity coupling."""
        if self.g == 0:
            return 0.0
        if self.kappa == 0:
            return math.inf
        return 4 * self.g ** 2 / self.kappa

    @property
    def cooperativity(self) -> float:
        return self.purcell_rate / self.gamma

    @property
    def R(self) -> float:
        return math.hypot(self.J, self.delta)

    @property
    def beta(self) -> float:
        """Dimer mixing angle ``arctan(delta / J)``."""
        if self.J == 0 and self.delta == 0:
            raise ParameterError("mixing angle undefined for J = delta = 0")
        return math.atan2(self.delta, self.J)

    @property
    def Omega_2p(self) -> float:
        """Two-photon Rabi frequency ``2 Omega^2 cos(beta) / R``."""
        R = self.R
        if R == 0:
            raise ParameterError("two-photon Rabi frequency needs R > 0")
        return 2 * self.Omega ** 2 * math.cos(self.beta) / R

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def with_cooperativity(self, C: float, g_over_kappa: float) -> "SystemParams":
        """Set ``kappa`` and ``g = g_over_kappa * kappa`` to reach cooperativity ``C``."""
        kappa = C * self.gamma / (4 * g_over_kappa ** 2)
        return replace(self, kappa=kappa, g=g_over_kappa * kappa)

    def space(self, cavity: bool = True) -> HilbertSpace:
        return HilbertSpace.qubits(self.n_max if cavity else None)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


PARAM_NAMES = tuple(f.name for f in fields(SystemParams))


@dataclass(frozen=True)
class DipoleGeometry:
    kr12: float
    mu_dot_r: float = 0.0
    gamma1: float = 1.0
    gamma2: float = 1.0

    def __post_init__(self):
        if not self.kr12 > 0:
            raise ParameterError("kr12 must be positive (near-field terms diverge at 0)")
        if abs(self.mu_dot_r) > 1:
            raise ParameterError("mu_dot_r is a cosine and must lie in [-1, 1]")
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ParameterError("local rates must be positive")

    @classmethod
    def from_distance(cls, r12_nm: float, wavelength_nm: float = 780.0,
                      **kw) -> "DipoleGeometry":
        return cls(kr12=2 * math.pi * r12_nm / wavelength_nm, **kw)


def dipole_coupling(geom: DipoleGeometry) -> tuple[float, float]:
    """Free-space coherent coupling ``J`` and collective decay ``gamma12``."""
    x = geom.kr12
    c2 = geom.mu_dot_r ** 2
    pref = math.sqrt(geom.gamma1 * geom.gamma2)
    s, c = math.sin(x), math.cos(x)
    J = 0.75 * pref * (-(1 - c2) * c / x
                       + (1 - 3 * c2) * (s / x ** 2 + c / x ** 3))
    gamma12 = 1.5 * pref * ((1 - c2) * s / x
                            + (1 - 3 * c2) * (c / x ** 2 - s / x ** 3))
    return J, gamma12


def waveguide_gamma12(beta_factor: float, d_over_L: float,
                      gamma: float = 1.0) -> float:
    """Collective decay mediated by a lossy waveguide mode."""
    if not 0 <= beta_factor <= 1:
        raise ParameterError("beta_factor must lie in [0, 1]")
    if d_over_L < 0:
        raise ParameterError("d_over_L must be non-negative")
    return gamma * beta_factor * math.exp(-d_over_L / 2)


def qubit_hamiltonian(p: SystemParams, space: HilbertSpace) -> np.ndarray:
    """Bare dimer plus coherent drive (no cavity terms)."""
    s1, s2 = qubit_lowering(space, 1), qubit_lowering(space, 2)
    h = ((p.Delta - p.delta) * dag(s1) @ s1
         + (p.Delta + p.delta) * dag(s2) @ s2
         + p.J * (dag(s1) @ s2 + dag(s2) @ s1))
    drive = p.Omega * (s1 + s2)
    return h + drive + dag(drive)


def build_hamiltonian(p: SystemParams, space: HilbertSpace | None = None) -> np.ndarray:
    """Full Hamiltonian in the laser frame; cavity terms only if ``space`` has one."""
    space = p.space() if space is None else space
    if space.has_cavity and space.n_max != p.n_max:
        raise ParameterError(
            f"space cutoff {space.n_max} differs from params n_max={p.n_max}")
    h = qubit_hamiltonian(p, space)
    if space.has_cavity:
        a = cavity_annihilation(space)
        s = qubit_lowering(space, 1) + qubit_lowering(space, 2)
        h = h + p.Delta_a * dag(a) @ a + p.g * (dag(a) @ s + dag(s) @ a)
    return h


class Channel(NamedTuple):
    """One term ``rate/2 * D[A, B]`` of the master equation."""

    rate: float
    A: np.ndarray
    B: np.ndarray
    label: str


@dataclass(frozen=True)
class ChannelSet:
    gamma_matrix: np.ndarray
    kappa: float
    emitter: tuple[Channel, ...]
    cavity: tuple[Channel, ...]
    extra: tuple[Channel, ...] = field(default=())

    @property
    def groups(self) -> dict[str, tuple[Channel, ...]]:
        return {"gamma": self.emitter, "kappa": self.cavity,
                "extra": self.extra}

    def all(self) -> tuple[Channel, ...]:
        return self.emitter + self.cavity + self.extra


def build_channels(p: SystemParams, space: HilbertSpace | None = None) -> ChannelSet:
    space = p.space() if space is None else space
    g1, g2 = p.local_rates
    gmat = np.array([[g1, p.gamma12], [p.gamma12, g2]], dtype=float)
    sig = (qubit_lowering(space, 1), qubit_lowering(space, 2))
    emitter = tuple(Channel(gmat[i, j], sig[i], sig[j], f"gamma{i + 1}{j + 1}")
                    for i in range(2) for j in range(2) if gmat[i, j] != 0)
    cavity: tuple[Channel, ...] = ()
    if space.has_cavity and p.kappa > 0:
        a = cavity_annihilation(space)
        cavity = (Channel(p.kappa, a, a, "kappa"),)
    extra = []
    if p.Gamma_extra > 0:
        extra += [Channel(p.Gamma_extra, s, s, f"Gamma_extra{k + 1}")
                  for k, s in enumerate(sig)]
    if p.gamma_phi > 0:
        for k in (1, 2):
            z = sigma_z(space, k)
            extra.append(Channel(p.gamma_phi, z, z, f"gamma_phi{k}"))
    if p.Gamma_phi > 0:
        z = sigma_z(space, 1) + sigma_z(space, 2)
        extra.append(Channel(p.Gamma_phi, z, z, "Gamma_phi"))
    return ChannelSet(gmat, p.kappa, emitter, cavity, tuple(extra))
