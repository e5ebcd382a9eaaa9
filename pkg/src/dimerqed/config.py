"""TOML run descriptions and parameter resolution.

A run file has a mandatory ``[system]`` table and optional ``[sweep]``,
``[observables]``, ``[models]``, ``[evolve]`` and ``[spectrum]`` tables.
System values may be numbers or arithmetic strings such as ``"-R"``,
``"0.1*kappa"`` or ``"omega34"``; strings are resolved per grid point, so
derived detunings follow swept parameters.
"""
from __future__ import annotations

import ast
import copy
import hashlib
import json
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .model import (PARAM_NAMES, DipoleGeometry, ParameterError, SystemParams,
                    dipole_coupling, waveguide_gamma12)


class ConfigError(ValueError):
    """Malformed or inconsistent run description."""


GEOMETRY_KEYS = ("r12_nm", "wavelength_nm", "kr12", "mu_dot_r")
WAVEGUIDE_KEYS = ("waveguide_beta", "d_over_L")
COOP_KEYS = ("C", "g_over_kappa")
SYSTEM_KEYS = frozenset(PARAM_NAMES + GEOMETRY_KEYS + WAVEGUIDE_KEYS + COOP_KEYS)
AXIS_NAMES = frozenset(PARAM_NAMES + ("C", "r12_nm", "kr12", "d_over_L")) - {"n_max"}

OBSERVABLES = ("concurrence", "populations", "coherence", "intensity", "g2",
               "g2_freq", "gap", "spectrum")
MODELS = ("full", "bloch_redfield", "collective_purcell")

SECTION_KEYS = {
    "observables": {"list"},
    "models": {"list"},
    "evolve": {"initial", "t_min", "t_max", "count", "scale", "switch_off",
               "populations"},
    "spectrum": {"min", "max", "count", "field", "incoherent"},
    "sweep": {"axis", "labels"},
}
AXIS_KEYS = {"name", "min", "max", "count", "scale", "values"}

# ------------------------------------------------------------------ expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log,
          "log10": math.log10, "sin": math.sin, "cos": math.cos,
          "atan": math.atan, "abs": abs}
_CONSTS = {"pi": math.pi}


class _Pending(Exception):
    def __init__(self, name):
        self.name = name


def evaluate(expr: str, lookup) -> float:
    """Evaluate an arithmetic string; ``lookup(name)`` supplies variables."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and not node.keywords:
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        if isinstance(node, ast.Name):
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            return float(lookup(node.id))
        raise ConfigError(f"unsupported syntax in {expr!r}")

    return ev(tree)


_OMEGA = re.compile(r"^omega([1-4])([1-4])$")
DERIVED = ("R", "beta", "Omega_2p", "Gamma_P")
_COUPLING = ("J", "gamma12") + GEOMETRY_KEYS
_CAVITY = ("kappa", "g", "gamma", "C", "g_over_kappa")
# inputs that must be settled before each derived name can be evaluated
_DERIVED_INPUTS = {"R": _COUPLING + ("delta",), "beta": _COUPLING + ("delta",),
                   "Omega_2p": _COUPLING + ("delta", "Omega"), "Gamma_P": _CAVITY}
_DRESSED_INPUTS = _COUPLING + ("delta", "Omega", "Delta", "g")


def resolve_system(raw: dict, overrides: dict | None = None) -> SystemParams:
    """Turn a ``[system]`` table (plus overrides) into :class:`SystemParams`.

    Geometry keys set ``J`` and ``gamma12`` through the dipole formulas,
    ``waveguide_beta``/``d_over_L`` set ``gamma12`` for a waveguide, and
    ``C`` with ``g_over_kappa`` set ``kappa`` and ``g``. Explicit values of
    the derived fields conflict with these and are rejected.
    """
    table = dict(raw)
    table.update(overrides or {})
    unknown = set(table) - SYSTEM_KEYS
    if unknown:
        raise ConfigError(f"unknown [system] key(s): {sorted(unknown)}")

    values: dict[str, float] = {}
    pending: dict[str, str] = {}
    for k, v in table.items():
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise ConfigError(f"[system] {k} must be a number or expression")
        if isinstance(v, str):
            pending[k] = v
        else:
            values[k] = float(v)

    def _ready(inputs):
        return not any(n in pending for n in inputs)

    def _params_now() -> SystemParams:
        kw = {k: values[k] for k in PARAM_NAMES if k in values}
        if "n_max" in kw:
            kw["n_max"] = int(kw["n_max"])
        return SystemParams(**kw)

    def lookup(name):
        if name in values:
            return values[name]
        if name in pending:
            raise _Pending(name)
        if name in PARAM_NAMES:
            return getattr(SystemParams, name, 0.0) if name != "gamma1" else 0.0
        m = _OMEGA.match(name)
        if name in DERIVED or m:
            if not _ready(_DERIVED_INPUTS.get(name, _DRESSED_INPUTS)):
                raise _Pending(name)
            p = _params_now()
            if name in DERIVED:
                return float({"R": lambda: p.R, "beta": lambda: p.beta,
                              "Omega_2p": lambda: p.Omega_2p,
                              "Gamma_P": lambda: p.purcell_rate}[name]())
            from .effective import dressed_basis
            i, j = int(m.group(1)), int(m.group(2))
            return float(dressed_basis(p).omega_ij[i - 1, j - 1])
        raise ConfigError(f"unknown name {name!r} in expression")

    def settle():
        progress = True
        while pending and progress:
            progress = False
            for k, expr in list(pending.items()):
                try:
                    values[k] = evaluate(expr, lookup)
                except _Pending:
                    continue
                except (ParameterError, ZeroDivisionError, ValueError) as exc:
                    if isinstance(exc, ConfigError):
                        raise
                    raise ConfigError(f"cannot evaluate {k} = {expr!r}: {exc}") from exc
                del pending[k]
                progress = True
                apply_derived_rules()

    def apply_derived_rules():
        geo = [k for k in ("r12_nm", "kr12") if k in values]
        if geo and "J" not in values and "gamma12" not in values \
                and not {"J", "gamma12"} & set(pending):
            if len(geo) > 1:
                raise ConfigError("give either r12_nm or kr12, not both")
            if any(k in pending for k in ("wavelength_nm", "mu_dot_r")):
                return
            kw = {"mu_dot_r": values.get("mu_dot_r", 0.0)}
            if "r12_nm" in values:
                geom = DipoleGeometry.from_distance(
                    values["r12_nm"], values.get("wavelength_nm", 780.0), **kw)
            else:
                geom = DipoleGeometry(values["kr12"], **kw)
            values["J"], values["gamma12"] = dipole_coupling(geom)
        if "waveguide_beta" in values and "gamma12" not in values \
                and "gamma12" not in pending and "d_over_L" not in pending \
                and "gamma" not in pending:
            values["gamma12"] = waveguide_gamma12(
                values["waveguide_beta"], values.get("d_over_L", 0.0),
                values.get("gamma", 1.0))
        if "C" in values and "kappa" not in values and "g" not in values \
                and not {"kappa", "g", "g_over_kappa", "gamma"} & set(pending):
            r = values.get("g_over_kappa", 0.1)
            kappa = values["C"] * values.get("gamma", 1.0) / (4 * r * r)
            values["kappa"], values["g"] = kappa, r * kappa

    geo_given = {"r12_nm", "kr12"} & set(table)
    if geo_given and {"J", "gamma12"} & set(table):
        raise ConfigError("J/gamma12 are set by the geometry; do not give both")
    if "C" in table and {"kappa", "g"} & set(table):
        raise ConfigError("kappa/g are set by the cooperativity; do not give both")
    if "waveguide_beta" in table and "gamma12" in table:
        raise ConfigError("gamma12 is set by the waveguide parameters")
    apply_derived_rules()
    settle()
    if pending:
        raise ConfigError(f"unresolvable expressions: {sorted(pending)}")
    try:
        return _params_now()
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------- run specs

@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]
    scale: str = "linear"


@dataclass
class SweepSpec:
    """Everything needed to reproduce a run."""

    system: dict
    axes: list[Axis] = field(default_factory=list)
    observables: tuple[str, ...] = ("concurrence",)
    models: tuple[str, ...] = ("full",)
    evolve: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    labels: bool = True
    source: str = ""

    @property
    def base(self) -> SystemParams:
        return resolve_system(self.system)

    def point(self, index: tuple[int, ...]) -> dict:
        return {ax.name: ax.values[i] for ax, i in zip(self.axes, index)}

    def grid_indices(self) -> list[tuple[int, ...]]:
        return [tuple(int(i) for i in idx)
                for idx in np.ndindex(*[len(a.values) for a in self.axes])]

    def canonical(self) -> dict:
        return {"system": self.system,
                "axes": [{"name": a.name, "values": list(a.values),
                          "scale": a.scale} for a in self.axes],
                "observables": list(self.observables),
                "models": list(self.models),
                "evolve": self.evolve, "spectrum": self.spectrum,
                "labels": self.labels}

    def spec_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()


def _grid(spec: dict, base_lookup) -> tuple[tuple[float, ...], str]:
    if "values" in spec:
        vals = spec["values"]
        if len(vals) < 2:
            raise ConfigError("an axis needs at least 2 values")
        return tuple(float(evaluate(v, base_lookup) if isinstance(v, str) else v)
                     for v in vals), spec.get("scale", "linear")
    for k in ("min", "max", "count"):
        if k not in spec:
            raise ConfigError(f"axis {spec.get('name')!r} misses {k!r}")
    lo, hi = (evaluate(spec[k], base_lookup) if isinstance(spec[k], str)
              else float(spec[k]) for k in ("min", "max"))
    n = spec["count"]
    if not isinstance(n, int) or n < 2:
        raise ConfigError("grid count must be an integer >= 2")
    scale = spec.get("scale", "log" if spec["name"] in ("C", "delta") else "linear")
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError(f"log axis {spec['name']!r} needs positive bounds")
        return tuple(np.geomspace(lo, hi, n).tolist()), scale
    if scale != "linear":
        raise ConfigError(f"unknown axis scale {scale!r}")
    return tuple(np.linspace(lo, hi, n).tolist()), scale


def _base_lookup(system: dict):
    p = resolve_system(system)
    names = {k: getattr(p, k) for k in PARAM_NAMES}
    names.update(R=p.R, Gamma_P=p.purcell_rate)
    if p.R > 0:
        names.update(beta=p.beta, Omega_2p=p.Omega_2p)

    def lookup(name):
        if name in names:
            return names[name]
        m = _OMEGA.match(name)
        if m:
            from .effective import dressed_basis
            return float(dressed_basis(p).omega_ij[int(m.group(1)) - 1,
                                                   int(m.group(2)) - 1])
        if name in system and not isinstance(system[name], str):
            return float(system[name])
        raise ConfigError(f"unknown name {name!r} in axis bound")
    return lookup


def _str_list(section: dict, name: str, allowed: tuple[str, ...]) -> tuple[str, ...]:
    vals = section.get("list", [])
    if isinstance(vals, str):
        vals = [vals]
    bad = [v for v in vals if v not in allowed]
    if bad:
        raise ConfigError(f"unknown {name}: {bad}; choose from {list(allowed)}")
    return tuple(vals)


def parse_override(item: str) -> tuple[str, object]:
    """``key=value`` with ``value`` parsed as a TOML scalar when possible."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, val = item.split("=", 1)
    key, val = key.strip(), val.strip()
    try:
        parsed = tomllib.loads(f"v = {val}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = val
    return key, parsed


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply dotted ``section.key=value`` overrides; bare keys go to [system]."""
    data = copy.deepcopy(data)
    for item in overrides:
        key, val = parse_override(item)
        parts = key.split(".")
        if len(parts) == 1:
            parts = ["system"] + parts
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override into {key!r}")
        node[parts[-1]] = val
    return data


def spec_from_dict(data: dict, source: str = "") -> SweepSpec:
    if "system" not in data:
        raise ConfigError("missing [system]")
    unknown = set(data) - {"system"} - set(SECTION_KEYS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    for sec, keys in SECTION_KEYS.items():
        extra = set(data.get(sec, {})) - keys
        if extra:
            raise ConfigError(f"unknown key(s) in [{sec}]: {sorted(extra)}")
    system = dict(data["system"])
    resolve_system(system)  # validate early

    sweep = data.get("sweep", {})
    raw_axes = sweep.get("axis", [])
    if isinstance(raw_axes, dict):
        raw_axes = [raw_axes]
    if len(raw_axes) > 2:
        raise ConfigError("at most 2 axes")
    lookup = _base_lookup(system)
    axes = []
    for a in raw_axes:
        extra = set(a) - AXIS_KEYS
        if extra:
            raise ConfigError(f"unknown axis key(s): {sorted(extra)}")
        name = a.get("name")
        if name not in AXIS_NAMES:
            raise ConfigError(f"axis {name!r} is not a sweepable parameter")
        if name in system and not isinstance(system[name], (int, float)):
            raise ConfigError(f"axis {name!r} is defined by an expression in [system]")
        axes.append(Axis(name, *_grid(a, lookup)))
    if len({a.name for a in axes}) != len(axes):
        raise ConfigError("axis names must differ")

    obs = _str_list(data.get("observables", {}), "observables", OBSERVABLES) \
        or ("concurrence",)
    models = _str_list(data.get("models", {}), "models", MODELS) or ("full",)
    spec = SweepSpec(system=system, axes=axes, observables=obs, models=models,
                     evolve=dict(data.get("evolve", {})),
                     spectrum=dict(data.get("spectrum", {})),
                     labels=bool(sweep.get("labels", True)), source=source)
    # every grid point must at least resolve
    if axes:
        for corner in ((0,) * len(axes), tuple(len(a.values) - 1 for a in axes)):
            try:
                resolve_system(system, spec.point(corner))
            except ConfigError as exc:
                raise ConfigError(f"grid point {corner}: {exc}") from exc
    return spec


def load_config(path: str | Path, overrides: list[str] | None = None) -> SweepSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the message already carries "(at line N, column M)"
        raise ConfigError(f"{path}: {exc}") from exc
    if overrides:
        data = apply_overrides(data, overrides)
    return spec_from_dict(data, source=str(path))


def fixture_path(name: str) -> Path:
    """Path of a shipped recipe, e.g. ``fixture_path("fig3")``."""
    here = Path(__file__).parent / "fixtures"
    p = here / (name if name.endswith(".toml") else f"{name}.toml")
    if not p.exists():
        known = sorted(x.stem for x in here.glob("*.toml"))
        raise ConfigError(f"no fixture {name!r}; available: {known}")
    return p


def list_fixtures() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "fixtures").glob("*.toml"))
