"""Scenario configuration: JSON schema, defaults, semantic checks and the
translation into runtime objects."""

from __future__ import annotations

import copy
import hashlib
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from ..operators import HilbertDims, embed_left, embed_right
from ..propagators import ConstitutiveOmega, ConstrainedPolicy, NoPropagator, ReservoirPolicy, SeparationPolicy
from ..sampling import random_density, random_hermitian, random_pure
from ..state import DensityOperator, canonical, microcanonical
from ..thermo import (
    INEQUALITY_NAMES,
    HamiltonianModel,
    PiecewiseLinear,
    Temperatures,
    WorkTerm,
    undecomposed_contact_temperature,
)

SCHEMA_VERSION = "quantherm-scenario/1"

__all__ = [
    "SCHEMA_VERSION",
    "SCENARIO_SCHEMA",
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "validate",
    "validate_data",
    "resolve",
    "Scenario",
    "build",
    "ROW_INVARIANTS",
]


class ConfigError(ValueError):
    """Invalid scenario configuration; ``errors`` lists every problem."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_PROTOCOL = {
    "type": "object",
    "required": ["times", "values"],
    "additionalProperties": False,
    "properties": {
        "times": {"type": "array", "items": _NUM, "minItems": 1},
        "values": {"type": "array", "items": _NUM, "minItems": 1},
    },
}
_TEMP = {"oneOf": [_POS, _PROTOCOL]}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "dims", "hamiltonian", "initial_state", "integration"],
    "additionalProperties": False,
    "$defs": {
        "op": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["matrix", "diagonal", "two_level", "random", "zero", "product"]}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": "matrix"}}},
                 "then": {"required": ["data"], "properties": {
                     "data": {"type": "array", "minItems": 1,
                              "items": {"type": "array", "minItems": 1, "items": _PAIR}}}}},
                {"if": {"properties": {"kind": {"const": "diagonal"}}},
                 "then": {"required": ["values"], "properties": {
                     "values": {"type": "array", "items": _NUM, "minItems": 1}}}},
                {"if": {"properties": {"kind": {"const": "two_level"}}},
                 "then": {"required": ["epsilon"], "properties": {"epsilon": _NUM, "delta": _NUM}}},
                {"if": {"properties": {"kind": {"const": "random"}}},
                 "then": {"properties": {"scale": _POS}}},
                {"if": {"properties": {"kind": {"const": "product"}}},
                 "then": {"required": ["left", "right"], "properties": {
                     "left": {"$ref": "#/$defs/op"}, "right": {"$ref": "#/$defs/op"}, "scale": _NUM}}},
            ],
        },
        "state": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["canonical", "product_canonical", "microcanonical", "random",
                                  "matrix", "pure", "product"]},
                "theta": _POS,
                "theta1": _POS,
                "theta2": _POS,
                "floor": {"type": "number", "minimum": 0},
                "rank": {"type": "integer", "minimum": 1},
                "data": {"type": "array"},
                "vector": {"type": "array", "items": _PAIR},
                "rho1": {"$ref": "#/$defs/state"},
                "rho2": {"$ref": "#/$defs/state"},
            },
            "additionalProperties": False,
        },
    },
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "description": {"type": "string"},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1, "maxItems": 2},
        "seed": {"type": "integer", "minimum": 0},
        "constants": {
            "type": "object", "additionalProperties": False,
            "properties": {"k_B": _POS, "hbar": _POS, "Z": _POS},
        },
        "hamiltonian": {
            "type": "object", "required": ["h1"], "additionalProperties": False,
            "properties": {
                "h1": {"$ref": "#/$defs/op"},
                "h2": {"$ref": "#/$defs/op"},
                "h12": {"$ref": "#/$defs/op"},
                "work": {"type": "array", "items": {
                    "type": "object", "required": ["target", "variable", "generator", "protocol"],
                    "additionalProperties": False,
                    "properties": {
                        "target": {"enum": ["h1", "h2", "h12"]},
                        "variable": {"enum": ["a1", "a2", "a12"]},
                        "generator": {"$ref": "#/$defs/op"},
                        "protocol": _PROTOCOL,
                    }}},
            },
        },
        "initial_state": {"$ref": "#/$defs/state"},
        "propagator": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "policy": {"enum": ["none", "separation", "reservoir", "constrained"]},
                "T0": _POS,
                "Tdot": _NUM,
                "diagonal": {"type": "boolean"},
                "contact_consistent": {"type": "boolean"},
                "iso_separation": {"type": "boolean"},
            },
        },
        "temperatures": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["prescribed", "extracted"]},
                "theta": {"oneOf": [_POS, _PROTOCOL, {"const": "auto"}]},
                "theta1": _TEMP, "theta2": _TEMP, "t_box": _TEMP,
                "t1": _TEMP, "t2": _TEMP, "t12": _TEMP, "theta12": _TEMP,
            },
        },
        "omega": {
            "type": "object", "additionalProperties": False,
            "properties": {"kappa_ex": _POS, "kappa_int": _POS},
        },
        "integration": {
            "type": "object", "required": ["t_end", "dt"], "additionalProperties": False,
            "properties": {"t_start": _NUM, "t_end": _NUM, "dt": _POS},
        },
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {k: _POS for k in (
                "trace", "hermiticity", "first_law_rel", "heat", "inequality", "partition",
                "entropy", "reservoir", "equilibrium_op", "equilibrium_rate")},
        },
        "invariants": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"prefix": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"}},
        },
    },
}

# per-row invariants: name -> human description (the check itself is in the runner)
ROW_INVARIANTS = {
    "trace": "|Tr rho - 1| <= tol.trace",
    "hermiticity": "pre-symmetrization drift <= tol.hermiticity",
    "positivity": "min eigenvalue >= -tol.trace",
    "first_law": "|E1_dot + E2_dot + E12_dot - W_ex - Q_ex| <= tol.first_law_rel * scale",
    "energy_balance": "per-channel energy rates equal their exchange terms",
    "heat_sum": "|Q1 + Q2 + Q12 - Tr(H ro)| <= tol.heat",
    "ex_additivity": "|Q1_ex + Q2_ex - Tr(H ro_ex)| <= tol.heat",
    "internal_sum": "|Q1_int + Q2_int + Q12_int| <= tol.heat",
    "internal_power": "|W_int| <= tol.heat (setting diagnostic)",
    "entropy_rate_cd": "two evaluations of S1_dot + S2_dot - S_dot agree within tol.entropy",
    "subadditivity": "S - S1 - S2 <= tol.entropy",
    "second_law": "Sigma >= -tol.inequality (reported, not enforced)",
    "sigma_forms": "both undecomposed entropy-production forms agree within tol.inequality",
    "reservoir_heat": "|Q2_HR - C_HR Tdot_HR| <= tol.reservoir",
}

DEFAULT_TOLERANCES = {
    "trace": 1e-10,
    "hermiticity": 1e-10,
    "first_law_rel": 1e-9,
    "heat": 1e-10,
    "inequality": 1e-9,
    "partition": 1e-9,
    "entropy": 1e-10,
    "reservoir": 1e-8,
    "equilibrium_op": 1e-9,
    "equilibrium_rate": 1e-10,
}


def _default_invariants(policy: str) -> list[str]:
    names = [n for n in ROW_INVARIANTS if n not in ("reservoir_heat", "sigma_forms")]
    if policy == "reservoir":
        names.append("reservoir_heat")
    return names + ["ineq:" + n for n in INEQUALITY_NAMES]


def _validator():
    cls = jsonschema.validators.validator_for(SCENARIO_SCHEMA)
    cls.check_schema(SCENARIO_SCHEMA)
    return cls(SCENARIO_SCHEMA)


_VALIDATOR = _validator()


def _path(err) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


# ---------------------------------------------------------------------------
# operator and state specs


def _op_dim(spec):
    """Dimension implied by an operator spec, or None if it adapts."""
    kind = spec["kind"]
    if kind == "matrix":
        return len(spec["data"])
    if kind == "diagonal":
        return len(spec["values"])
    if kind == "two_level":
        return 2
    if kind == "product":
        a, b = _op_dim(spec["left"]), _op_dim(spec["right"])
        return None if a is None or b is None else a * b
    return None


def _uses_random(obj) -> bool:
    if isinstance(obj, dict):
        if obj.get("kind") == "random":
            return True
        return any(_uses_random(v) for v in obj.values())
    if isinstance(obj, list):
        return any(_uses_random(v) for v in obj)
    return False


def _semantic_errors(data) -> list[str]:
    errs = []
    dims = data["dims"]
    d1 = dims[0]
    d2 = dims[1] if len(dims) == 2 else 1
    d = d1 * d2
    ham = data["hamiltonian"]

    def check_op(path, spec, want):
        if spec["kind"] == "matrix":
            rows = spec["data"]
            if any(len(r) != len(rows) for r in rows):
                errs.append(f"{path}: matrix literal is not square")
                return
        if spec["kind"] == "product":
            check_op(path + "/left", spec["left"], None)
            check_op(path + "/right", spec["right"], None)
        got = _op_dim(spec)
        if want is not None and got is not None and got != want:
            errs.append(f"{path}: operator has dimension {got} but dims {dims} require {want}")
        if spec["kind"] == "product" and want is not None:
            if _op_dim(spec["left"]) not in (None, d1) or _op_dim(spec["right"]) not in (None, d2):
                errs.append(f"{path}: product factors must have dimensions {d1} and {d2}")

    check_op("/hamiltonian/h1", ham["h1"], d1)
    if "h2" in ham:
        if d2 == 1:
            errs.append("/hamiltonian/h2: given but dims describe an undecomposed system")
        check_op("/hamiltonian/h2", ham["h2"], d2)
    if "h12" in ham:
        if d2 == 1:
            errs.append("/hamiltonian/h12: given but dims describe an undecomposed system")
        check_op("/hamiltonian/h12", ham["h12"], d)
    allowed = {"a1": ("h1",), "a2": ("h2",), "a12": ("h1", "h2", "h12")}
    for i, w in enumerate(ham.get("work", [])):
        p = f"/hamiltonian/work/{i}"
        if w["target"] not in allowed[w["variable"]]:
            errs.append(f"{p}: work variable {w['variable']} cannot act on {w['target']}")
        if w["target"] != "h1" and d2 == 1:
            errs.append(f"{p}: target {w['target']} needs a bipartite system")
        want = {"h1": d1, "h2": d2, "h12": d}[w["target"]]
        check_op(p + "/generator", w["generator"], want)
        pr = w["protocol"]
        if len(pr["times"]) != len(pr["values"]):
            errs.append(f"{p}/protocol: times and values differ in length")
        elif any(b <= a for a, b in zip(pr["times"], pr["times"][1:])):
            errs.append(f"{p}/protocol: times must be strictly increasing")

    st = data["initial_state"]

    def check_state(path, s, want, bip):
        k = s["kind"]
        if k in ("canonical",) and "theta" not in s:
            errs.append(f"{path}: canonical state needs theta")
        if k == "product_canonical" and not bip:
            errs.append(f"{path}: product_canonical needs a bipartite system")
        if k == "product":
            if not bip:
                errs.append(f"{path}: product state needs a bipartite system")
            elif "rho1" not in s or "rho2" not in s:
                errs.append(f"{path}: product state needs rho1 and rho2")
            else:
                check_state(path + "/rho1", s["rho1"], d1, False)
                check_state(path + "/rho2", s["rho2"], d2, False)
        if k == "matrix":
            rows = s.get("data")
            if rows is None:
                errs.append(f"{path}: matrix state needs data")
            elif len(rows) != want or any(len(r) != want for r in rows):
                errs.append(f"{path}: matrix literal has dimension {len(rows)} but {want} is required")
        if k == "pure":
            v = s.get("vector")
            if v is None:
                errs.append(f"{path}: pure state needs vector")
            elif len(v) != want:
                errs.append(f"{path}: vector has length {len(v)} but {want} is required")
        if k == "random" and s.get("rank", 1) > want:
            errs.append(f"{path}: rank exceeds dimension {want}")

    check_state("/initial_state", st, d, d2 > 1)

    prop = data.get("propagator", {})
    policy = prop.get("policy", "none")
    if policy == "reservoir":
        if d2 == 1:
            errs.append("/propagator: reservoir policy needs a bipartite system")
        if "T0" not in prop:
            errs.append("/propagator: reservoir policy needs T0")
    integ = data["integration"]
    span = integ["t_end"] - integ.get("t_start", 0.0)
    if span < 0:
        errs.append(f"/integration: t_end {integ['t_end']} precedes t_start {integ.get('t_start', 0.0)}")
    else:
        n = span / integ["dt"]
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            errs.append(f"/integration: t_end - t_start = {span} is not a whole number of steps dt = {integ['dt']}")
    temps = data.get("temperatures", {})
    for key, v in temps.items():
        if isinstance(v, dict):
            if len(v["times"]) != len(v["values"]):
                errs.append(f"/temperatures/{key}: times and values differ in length")
            elif any(x <= 0 for x in v["values"]):
                errs.append(f"/temperatures/{key}: temperatures must be positive")
    if _uses_random(data) and "seed" not in data:
        errs.append("/seed: a seed is required because the scenario uses random generators")
    known = set(ROW_INVARIANTS) | {"ineq:" + n for n in INEQUALITY_NAMES}
    for name in data.get("invariants", []):
        if name not in known:
            errs.append(f"/invariants: unknown invariant {name!r}")
    return errs


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved configuration (defaults applied).  ``data`` is plain
    JSON; ``to_json`` is the canonical serialization."""

    data: dict
    source: str | None = None

    @property
    def name(self) -> str:
        return self.data["name"]

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.data, sort_keys=True).encode()).hexdigest()


def validate_data(data) -> list[str]:
    """All schema and semantic errors of a raw config, as ``path: message``."""
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    out = [f"{_path(e)}: {e.message}" for e in errors]
    if out:
        return out
    return _semantic_errors(data)


def resolve(data, name: str | None = None, source: str | None = None) -> ScenarioConfig:
    """Validate and apply defaults.  Idempotent: resolving a resolved
    config returns an equal one."""
    errs = validate_data(data)
    if errs:
        raise ConfigError(errs)
    r = copy.deepcopy(data)
    r.setdefault("name", name or "scenario")
    r.setdefault("description", "")
    bip = len(r["dims"]) == 2 and r["dims"][1] > 1
    c = r.setdefault("constants", {})
    for k in ("k_B", "hbar", "Z"):
        c.setdefault(k, 1.0)
    h = r["hamiltonian"]
    h.setdefault("work", [])
    p = r.setdefault("propagator", {})
    p.setdefault("policy", "none")
    if p["policy"] == "reservoir":
        p.setdefault("Tdot", 0.0)
    if p["policy"] == "constrained":
        p.setdefault("diagonal", False)
        p.setdefault("contact_consistent", False)
        p.setdefault("iso_separation", False)
    t = r.setdefault("temperatures", {})
    t.setdefault("mode", "prescribed")
    for k in ("theta1", "theta2", "t_box", "t1", "t2"):
        t.setdefault(k, 1.0)
    t.setdefault("theta", "auto" if bip else t["theta1"])
    o = r.setdefault("omega", {})
    o.setdefault("kappa_ex", 1.0)
    o.setdefault("kappa_int", 1.0)
    r["integration"].setdefault("t_start", 0.0)
    tol = r.setdefault("tolerances", {})
    for k, v in DEFAULT_TOLERANCES.items():
        tol.setdefault(k, v)
    r.setdefault("invariants", _default_invariants(p["policy"]))
    r.setdefault("output", {})
    r["output"].setdefault("prefix", r["name"])
    return ScenarioConfig(r, source)


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"{path}: cannot read ({e.strerror})"]) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"]) from e


def validate(path) -> ScenarioConfig:
    """Load, validate and resolve a config file; raises ``ConfigError``."""
    raw = load_config(path)
    return resolve(raw, name=Path(path).stem, source=str(path))


# ---------------------------------------------------------------------------
# building runtime objects


def _rng(seed, path: str):
    return np.random.default_rng([int(seed), zlib.crc32(path.encode())])


def build_operator(spec, dim: int, seed=None, path: str = "") -> np.ndarray:
    kind = spec["kind"]
    if kind == "matrix":
        a = np.array([[complex(re, im) for re, im in row] for row in spec["data"]])
    elif kind == "diagonal":
        a = np.diag(np.asarray(spec["values"], dtype=float)).astype(complex)
    elif kind == "two_level":
        eps, delta = spec["epsilon"], spec.get("delta", 0.0)
        a = np.array([[0.0, delta], [delta, eps]], dtype=complex)
    elif kind == "random":
        a = random_hermitian(dim, _rng(seed, path), spec.get("scale", 1.0))
    elif kind == "zero":
        a = np.zeros((dim, dim), dtype=complex)
    elif kind == "product":
        left = build_operator(spec["left"], _op_dim(spec["left"]) or dim, seed, path + "/left")
        right = build_operator(spec["right"], _op_dim(spec["right"]) or dim, seed, path + "/right")
        a = spec.get("scale", 1.0) * np.kron(left, right)
    else:  # pragma: no cover - schema rejects it
        raise ConfigError([f"{path}: unknown operator kind {kind!r}"])
    if a.shape != (dim, dim):
        raise ConfigError([f"{path}: operator has dimension {a.shape[0]}, expected {dim}"])
    return a


def _build_state(spec, dim, h_local, seed, path, k_B, dims=None, h_parts=None) -> np.ndarray:
    kind = spec["kind"]
    if kind == "canonical":
        return canonical(h_local, spec["theta"], k_B).matrix
    if kind == "microcanonical":
        return microcanonical(dim).matrix
    if kind == "random":
        return random_density(dim, _rng(seed, path), spec.get("rank"), spec.get("floor", 0.0))
    if kind == "pure":
        v = np.array([complex(a, b) for a, b in spec["vector"]])
        n = np.linalg.norm(v)
        if n == 0:
            raise ConfigError([f"{path}: zero vector"])
        v = v / n
        return np.outer(v, v.conj())
    if kind == "matrix":
        return np.array([[complex(a, b) for a, b in row] for row in spec["data"]])
    if kind == "product_canonical":
        h1, h2 = h_parts
        t1 = spec.get("theta1", spec.get("theta"))
        t2 = spec.get("theta2", spec.get("theta"))
        if t1 is None or t2 is None:
            raise ConfigError([f"{path}: product_canonical needs theta or theta1/theta2"])
        return np.kron(canonical(h1, t1, k_B).matrix, canonical(h2, t2, k_B).matrix)
    if kind == "product":
        h1, h2 = h_parts
        r1 = _build_state(spec["rho1"], dims.d1, h1, seed, path + "/rho1", k_B)
        r2 = _build_state(spec["rho2"], dims.d2, h2, seed, path + "/rho2", k_B)
        return np.kron(r1, r2)
    raise ConfigError([f"{path}: unknown state kind {kind!r}"])  # pragma: no cover


def _temp_fn(v):
    if isinstance(v, dict):
        return PiecewiseLinear(tuple(v["times"]), tuple(v["values"]))
    return PiecewiseLinear.constant(float(v))


@dataclass
class Scenario:
    """Runtime objects built from a resolved config."""

    config: ScenarioConfig
    dims: HilbertDims
    hamiltonian: HamiltonianModel
    initial: DensityOperator
    policy: object
    temperatures: object
    omega_ex: ConstitutiveOmega
    omega_int: ConstitutiveOmega
    t_span: tuple
    dt: float
    k_B: float
    hbar: float
    z: float


def build(cfg: ScenarioConfig) -> Scenario:
    data = cfg.data
    dims = HilbertDims.of(data["dims"])
    seed = data.get("seed")
    ham = data["hamiltonian"]
    k_B = data["constants"]["k_B"]
    hbar = data["constants"]["hbar"]
    z = data["constants"]["Z"]
    h1 = build_operator(ham["h1"], dims.d1, seed, "/hamiltonian/h1")
    h2 = build_operator(ham["h2"], dims.d2, seed, "/hamiltonian/h2") if "h2" in ham else None
    h12 = build_operator(ham["h12"], dims.d, seed, "/hamiltonian/h12") if "h12" in ham else None
    work = []
    for i, w in enumerate(ham["work"]):
        dim = {"h1": dims.d1, "h2": dims.d2, "h12": dims.d}[w["target"]]
        g = build_operator(w["generator"], dim, seed, f"/hamiltonian/work/{i}/generator")
        pr = PiecewiseLinear(tuple(w["protocol"]["times"]), tuple(w["protocol"]["values"]))
        work.append(WorkTerm(w["target"], w["variable"], g, pr))
    model = HamiltonianModel(dims, h1, h2, h12, tuple(work))
    t0 = data["integration"]["t_start"]
    h0 = model.at(t0)
    h1_loc = h0.local(1)
    h2_loc = h0.local(2)
    rho0 = _build_state(data["initial_state"], dims.d, h0.total, seed, "/initial_state", k_B, dims,
                        (h1_loc, h2_loc))
    try:
        initial = DensityOperator(rho0, dims)
    except ValueError as e:
        raise ConfigError([f"/initial_state: {e}"]) from e

    om_ex = ConstitutiveOmega(data["omega"]["kappa_ex"], "external")
    om_int = ConstitutiveOmega(data["omega"]["kappa_int"], "internal")
    tcfg = data["temperatures"]
    fns = {k: _temp_fn(v) for k, v in tcfg.items() if k not in ("mode", "theta") and v is not None}
    theta_spec = tcfg["theta"]
    theta_fn = None if theta_spec == "auto" else _temp_fn(theta_spec)
    bip = dims.bipartite

    def temperatures(t: float) -> Temperatures:
        vals = {k: f(t) for k, f in fns.items()}
        if theta_fn is not None:
            vals["theta"] = theta_fn(t)
        else:
            vals["theta"] = undecomposed_contact_temperature(vals["theta1"], vals["theta2"], om_ex)
        if not bip:
            vals["theta1"] = vals["theta"]
        return Temperatures(**vals)

    p = data["propagator"]
    policy_name = p["policy"]
    if policy_name == "none":
        policy = NoPropagator()
    elif policy_name == "separation":
        policy = SeparationPolicy(z=z)
    elif policy_name == "reservoir":
        policy = ReservoirPolicy(p["T0"], p["Tdot"], hbar=hbar, k_B=k_B)
    else:
        policy = ConstrainedPolicy(
            temperatures, om_ex, om_int, mode=tcfg["mode"], diagonal=p["diagonal"],
            contact_consistent=p["contact_consistent"], iso_separation=p["iso_separation"],
            hbar=hbar, k_B=k_B, z=z,
        )
    integ = data["integration"]
    return Scenario(cfg, dims, model, initial, policy, temperatures, om_ex, om_int,
                    (integ["t_start"], integ["t_end"]), integ["dt"], k_B, hbar, z)
