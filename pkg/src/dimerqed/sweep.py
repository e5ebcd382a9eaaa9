"""Point evaluation, parameter sweeps, time traces and spectra."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, SweepSpec, resolve_system
from .effective import (QUBITS, bloch_redfield_liouvillian, classify_mechanisms,
                        collective_purcell_liouvillian, redfield_operator)
from .liouville import (SolverError, Superoperator, build_liouvillian,
                        emission_spectrum, evolve, liouvillian_gap, steady_state)
from .model import ParameterError, SystemParams, build_channels, build_hamiltonian
from .observables import (UndefinedObservableError, basis_populations,
                          concurrence, freq_resolved_g2, reduced_qubits)
from .operators import (HilbertSpace, InvalidStateError, cavity_annihilation,
                        dag, fock_embedded, ket, qubit_lowering)

POP_LABELS = ("gg", "S", "A", "ee")


@dataclass(frozen=True)
class ModelSystem:
    """A generator together with the operators needed to read it out."""

    name: str
    L: Superoperator
    space: HilbertSpace
    field_op: np.ndarray  # cavity lowering operator, exact or adiabatic estimate

    def qubit_state(self, rho):
        return reduced_qubits(rho, self.space)


def build_model(p: SystemParams, name: str) -> ModelSystem:
    """Assemble ``full``, ``bloch_redfield`` or ``collective_purcell``.

    For the effective models the cavity field is replaced by its
    adiabatically eliminated value, a linear combination of emitter
    transition operators.
    """
    if name == "full":
        space = p.space()
        L = build_liouvillian(build_hamiltonian(p, space), build_channels(p, space),
                              source="full")
        return ModelSystem(name, L, space, cavity_annihilation(space))
    s = qubit_lowering(QUBITS, 1) + qubit_lowering(QUBITS, 2)
    if name == "bloch_redfield":
        L = bloch_redfield_liouvillian(p)
        a = -1j * redfield_operator(p) if p.g else np.zeros((4, 4), complex)
        # redfield_operator carries one power of g per matrix element
        return ModelSystem(name, L, QUBITS, a)
    if name == "collective_purcell":
        L = collective_purcell_liouvillian(p)
        a = (-2j * p.g / p.kappa) * s if p.g else np.zeros((4, 4), complex)
        return ModelSystem(name, L, QUBITS, a)
    raise ValueError(f"unknown model {name!r}")


def _field_moments(a: np.ndarray, rho: np.ndarray) -> tuple[float, float]:
    ad = dag(a)
    n = float(np.trace(ad @ a @ rho).real)
    n2 = float(np.trace(ad @ ad @ a @ a @ rho).real)
    return n, n2


def observable_columns(models, observables, spectrum_count: int = 0) -> list[str]:
    cols = []
    for m in models:
        for o in observables:
            if o == "populations":
                cols += [f"{m}.pop_{k}" for k in POP_LABELS]
            elif o == "coherence":
                cols.append(f"{m}.rho_gg_ee")
            elif o == "spectrum":
                cols += [f"{m}.spectrum_{k}" for k in range(spectrum_count)]
            else:
                cols.append(f"{m}.{o}")
        cols.append(f"{m}.error")
    return cols


def spectrum_grid(cfg: dict, p: SystemParams) -> np.ndarray:
    if not cfg:
        return np.empty(0)
    from .config import _base_lookup
    look = _base_lookup({k: v for k, v in p.as_dict().items() if v is not None})
    lo, hi = (evaluate_bound(cfg.get(k, d), look) for k, d in
              (("min", -2 * max(p.R, 1.0)), ("max", 2 * max(p.R, 1.0))))
    return np.linspace(lo, hi, int(cfg.get("count", 401)))


def evaluate_bound(v, lookup):
    from .config import evaluate
    return evaluate(v, lookup) if isinstance(v, str) else float(v)


def evaluate_model(p: SystemParams, model: str, observables, omegas=None,
                   spectrum_cfg: dict | None = None) -> dict:
    """Steady-state observables of one model at one parameter point."""
    out: dict = {f"{model}.error": ""}
    ms = build_model(p, model)
    rho = steady_state(ms.L)
    q = ms.qubit_state(rho)
    for o in observables:
        key = f"{model}.{o}"
        if o == "concurrence":
            out[key] = concurrence(q)
        elif o == "populations":
            pops = basis_populations(q, "SA")
            for k in POP_LABELS:
                out[f"{model}.pop_{k}"] = pops[k]
        elif o == "coherence":
            out[f"{model}.rho_gg_ee"] = complex(q[0, 3])
        elif o == "intensity":
            out[key] = _field_moments(ms.field_op, rho)[0]
        elif o == "g2":
            n, n2 = _field_moments(ms.field_op, rho)
            out[key] = n2 / n ** 2 if n > 1e-12 else math.nan
        elif o == "g2_freq":
            try:
                out[key] = freq_resolved_g2(q)
            except UndefinedObservableError:
                out[key] = math.nan
        elif o == "gap":
            out[key] = liouvillian_gap(ms.L)
        elif o == "spectrum":
            cfg = spectrum_cfg or {}
            E = _spectrum_field(ms, cfg.get("field", "cavity"))
            spec = emission_spectrum(ms.L, rho, omegas, E,
                                     incoherent=bool(cfg.get("incoherent", True)))
            for k, val in enumerate(spec):
                out[f"{model}.spectrum_{k}"] = float(val)
    return out


def _spectrum_field(ms: ModelSystem, which: str) -> np.ndarray:
    if which == "cavity":
        return ms.field_op
    if which == "emitters":
        return qubit_lowering(ms.space, 1) + qubit_lowering(ms.space, 2)
    raise ConfigError(f"unknown spectrum field {which!r}")


_FAILURES = (SolverError, ParameterError, InvalidStateError, np.linalg.LinAlgError,
             ValueError)


def evaluate_point(spec: SweepSpec, index: tuple[int, ...]) -> dict:
    """One grid row: axis values, observables per model, mechanism labels."""
    point = spec.point(index)
    row: dict = {"index": list(index), **point}
    p = resolve_system(spec.system, point)
    omegas = spectrum_grid(spec.spectrum, spec.base) if "spectrum" in spec.observables \
        else None
    for m in spec.models:
        try:
            row.update(evaluate_model(p, m, spec.observables, omegas, spec.spectrum))
        except _FAILURES as exc:
            row[f"{m}.error"] = f"{type(exc).__name__}: {exc}"
    if spec.labels:
        row["mechanisms"] = ";".join(sorted(classify_mechanisms(p).mechanisms))
    return row


@dataclass
class SweepResult:
    axes: list[str]
    columns: list[str]
    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        vals = [r.get(name, math.nan) for r in self.rows]
        return np.array(vals)

    def grid(self, name: str) -> np.ndarray:
        """Column reshaped to the axis grid."""
        shape = tuple(self.metadata["shape"])
        return self.column(name).reshape(shape) if shape else self.column(name)

    @property
    def failures(self) -> list[dict]:
        errs = [c for c in self.columns if c.endswith(".error")]
        return [r for r in self.rows if any(r.get(c) for c in errs)]


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate every grid point; rows come back in grid (C) order.

    Failures at individual points are recorded in the row's ``error``
    column instead of aborting the sweep.
    """
    t0 = time.perf_counter()
    indices = spec.grid_indices() if spec.axes else [()]
    n_spec = 0
    if "spectrum" in spec.observables:
        n_spec = len(spectrum_grid(spec.spectrum, spec.base))
    cols = [a.name for a in spec.axes] + observable_columns(
        spec.models, spec.observables, n_spec)
    if spec.labels:
        cols.append("mechanisms")
    if threads > 1 and len(indices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda i: evaluate_point(spec, i), indices))
    else:
        rows = [evaluate_point(spec, i) for i in indices]
    for r in rows:
        for c in cols:
            r.setdefault(c, "" if c.endswith(".error") or c == "mechanisms" else math.nan)
    meta = {"spec_hash": spec.spec_hash(), "version": __version__,
            "source": spec.source, "shape": [len(a.values) for a in spec.axes],
            "axes": {a.name: {"scale": a.scale, "count": len(a.values)}
                     for a in spec.axes},
            "threads": threads, "wall_time_s": time.perf_counter() - t0}
    if n_spec:
        meta["spectrum_omegas"] = spectrum_grid(spec.spectrum, spec.base).tolist()
    return SweepResult([a.name for a in spec.axes], cols, rows, meta)


# ------------------------------------------------------------------ time traces

def initial_state(label: str, ms: ModelSystem) -> np.ndarray:
    """Pure emitter state (``gg``, ``S``, ``A``, ``ee``, ``eg``...) with an empty cavity."""
    table = {"S": (ket("eg") + ket("ge")) / math.sqrt(2),
             "A": (ket("eg") - ket("ge")) / math.sqrt(2)}
    try:
        psi = table[label] if label in table else ket(label)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"unknown initial state {label!r}") from exc
    return fock_embedded(ms.space, np.outer(psi, psi.conj()))


def time_grid(cfg: dict) -> np.ndarray:
    n = int(cfg.get("count", 201))
    lo, hi = float(cfg.get("t_min", 0.0)), float(cfg.get("t_max", 10.0))
    scale = cfg.get("scale", "linear")
    if scale == "log":
        if lo <= 0:
            raise ConfigError("log time grid needs t_min > 0")
        return np.geomspace(lo, hi, n)
    if scale != "linear":
        raise ConfigError(f"unknown time scale {scale!r}")
    return np.linspace(lo, hi, n)


@dataclass
class Table:
    """Plain column table shared by evolve and spectrum output."""

    axes: list[str]
    columns: list[str]
    rows: list[dict]
    metadata: dict = field(default_factory=dict)


def run_evolution(spec: SweepSpec) -> Table:
    """Populations and concurrence versus time for each requested model."""
    cfg = spec.evolve
    p = spec.base
    t = time_grid(cfg)
    basis = cfg.get("populations", "SA")
    cols = ["t"]
    data: dict[str, np.ndarray] = {"t": t}
    for m in spec.models:
        ms = build_model(p, m)
        traj = evolve(ms.L, initial_state(cfg.get("initial", "gg"), ms), t)
        qs = [ms.qubit_state(r) for r in traj.states]
        pops = [basis_populations(q, basis, p) for q in qs]
        for k in pops[0]:
            cols.append(f"{m}.pop_{k}")
            data[cols[-1]] = np.array([d[k] for d in pops])
        cols.append(f"{m}.concurrence")
        data[cols[-1]] = np.array([concurrence(q) for q in qs])
    rows = [{c: float(data[c][i]) for c in cols} for i in range(t.size)]
    return Table(["t"], cols, rows, {"spec_hash": spec.spec_hash(),
                                     "version": __version__, "shape": [t.size]})


def run_spectrum(spec: SweepSpec) -> Table:
    """Incoherent emission spectrum of the base point for each model."""
    p = spec.base
    cfg = spec.spectrum or {"count": 401}
    om = spectrum_grid(cfg, p)
    cols = ["omega"]
    data = {"omega": om}
    for m in spec.models:
        ms = build_model(p, m)
        rho = steady_state(ms.L)
        E = _spectrum_field(ms, cfg.get("field", "cavity"))
        data[f"{m}.S"] = emission_spectrum(ms.L, rho, om, E,
                                           incoherent=bool(cfg.get("incoherent", True)))
        cols.append(f"{m}.S")
    rows = [{c: float(data[c][i]) for c in cols} for i in range(om.size)]
    return Table(["omega"], cols, rows, {"spec_hash": spec.spec_hash(),
                                         "version": __version__, "shape": [om.size]})
