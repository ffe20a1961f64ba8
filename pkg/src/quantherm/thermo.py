"""Thermodynamic observables of undecomposed and bipartite systems.

Conventions: with ``M = -(i/hbar)[H12, rho]`` (Hermitian), the heat of
sub-system A is ``Tr(H^A (ro + M))`` and its entropy rate is
``-k_B Tr{(ro + M) ln(Z rho^A)}``.  Undecomposed systems use dims ``(d, 1)``;
then ``H2 = H12 = 0`` and every sub-system-2 quantity vanishes.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ._validation import DimensionError, as_square, check_positive, trace_of_product
from .operators import (
    RATE_EPS,
    HilbertDims,
    commutator,
    embed_left,
    embed_right,
    hermitian,
    hermitian_deviation,
    partial_trace,
)
from .state import DensityOperator, Propagator, log_z_rho, shannon_entropy

__all__ = [
    "HamiltonianTriple",
    "PiecewiseLinear",
    "WorkTerm",
    "HamiltonianModel",
    "Temperatures",
    "ExchangeLedger",
    "ContactTemperatureError",
    "energy",
    "energies",
    "power_exchanges",
    "heat_exchanges",
    "first_law_rates",
    "entropy_rates",
    "entropy_exchanges",
    "entropy_production",
    "contact_temperature",
    "subsystem_contact_temperature",
    "probe_contact_temperature",
    "undecomposed_contact_temperature",
    "compound_deficiency",
    "classify_partition",
    "InequalityResult",
    "inequality_suite",
    "compute_ledger",
    "LEDGER_COLUMNS",
]


# ---------------------------------------------------------------------------
# Hamiltonians


def _stack(ops, d) -> np.ndarray:
    if ops is None or len(ops) == 0:
        return np.zeros((0, d, d), dtype=complex)
    return np.stack([hermitian(as_square(o, "derivative")) for o in ops])


def _rates(r, n) -> np.ndarray:
    r = np.zeros(n) if r is None else np.atleast_1d(np.asarray(r, dtype=float))
    if r.shape != (n,):
        raise DimensionError(f"expected {n} work-variable rates, got shape {r.shape}")
    return r


@dataclass(frozen=True, eq=False)
class HamiltonianTriple:
    """Snapshot of ``H = H1 + H2 + H12`` at one instant.

    All operators are embedded in the composite space.  Partial derivatives
    with respect to the work variables are stacks ``(n, d, d)``, the rates
    are length-``n`` vectors.  ``H12`` never depends on ``a1`` or ``a2``,
    so there is no field for those derivatives.
    """

    dims: HilbertDims
    h1: np.ndarray
    h2: np.ndarray | None = None
    h12: np.ndarray | None = None
    dh1_da1: np.ndarray | None = None
    dh1_da12: np.ndarray | None = None
    dh2_da2: np.ndarray | None = None
    dh2_da12: np.ndarray | None = None
    dh12_da12: np.ndarray | None = None
    a1_dot: np.ndarray | None = None
    a2_dot: np.ndarray | None = None
    a12_dot: np.ndarray | None = None

    def __post_init__(self):
        dims = HilbertDims.of(self.dims)
        object.__setattr__(self, "dims", dims)
        d = dims.d
        for name in ("h1", "h2", "h12"):
            v = getattr(self, name)
            v = np.zeros((d, d), dtype=complex) if v is None else hermitian(as_square(v, name))
            if v.shape != (d, d):
                raise DimensionError(f"{name} has dim {v.shape[0]}, composite dim is {d}")
            object.__setattr__(self, name, v)
        for name in ("dh1_da1", "dh1_da12", "dh2_da2", "dh2_da12", "dh12_da12"):
            v = _stack(getattr(self, name), d)
            if v.shape[1:] != (d, d):
                raise DimensionError(f"{name} has wrong operator shape {v.shape[1:]}")
            object.__setattr__(self, name, v)
        n12 = self.dh12_da12.shape[0]
        for name in ("dh1_da12", "dh2_da12"):
            if getattr(self, name).shape[0] not in (0, n12):
                raise DimensionError(f"{name} must have one entry per a12 variable")
        object.__setattr__(self, "a1_dot", _rates(self.a1_dot, self.dh1_da1.shape[0]))
        object.__setattr__(self, "a2_dot", _rates(self.a2_dot, self.dh2_da2.shape[0]))
        n = max(n12, self.dh1_da12.shape[0], self.dh2_da12.shape[0])
        object.__setattr__(self, "a12_dot", _rates(self.a12_dot, n))
        for name in ("dh1_da12", "dh2_da12", "dh12_da12"):
            if getattr(self, name).shape[0] == 0 and n:
                object.__setattr__(self, name, np.zeros((n, d, d), dtype=complex))

    @classmethod
    def from_local(cls, h1_local, h2_local=None, h12=None, **kwargs) -> "HamiltonianTriple":
        h1_local = as_square(h1_local, "H1")
        d1 = h1_local.shape[0]
        d2 = 1 if h2_local is None else as_square(h2_local, "H2").shape[0]
        dims = HilbertDims(d1, d2)
        h2 = None if h2_local is None else embed_right(h2_local, dims)
        return cls(dims, embed_left(h1_local, dims), h2, h12, **kwargs)

    @classmethod
    def single(cls, h) -> "HamiltonianTriple":
        """Undecomposed system with Hamiltonian ``h``."""
        return cls.from_local(h)

    @property
    def total(self) -> np.ndarray:
        return self.h1 + self.h2 + self.h12

    def local(self, which: int) -> np.ndarray:
        """Un-embedded ``H^A`` (exact for operators of the form A(x)I)."""
        h = self.h1 if which == 1 else self.h2
        other = self.dims.d2 if which == 1 else self.dims.d1
        over = 2 if which == 1 else 1
        return partial_trace(h, over, self.dims) / other

    @property
    def h_dot(self) -> np.ndarray:
        """``dH/dt`` from the work-variable rates."""
        out = np.einsum("kij,k->ij", self.dh1_da1, self.a1_dot)
        out = out + np.einsum("kij,k->ij", self.dh2_da2, self.a2_dot)
        for s in (self.dh1_da12, self.dh2_da12, self.dh12_da12):
            out = out + np.einsum("kij,k->ij", s, self.a12_dot)
        return out

    @property
    def static(self) -> bool:
        return not (np.any(self.a1_dot) or np.any(self.a2_dot) or np.any(self.a12_dot))


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear protocol through ``(times[i], values[i])``.

    Constant continuation outside the knot range.  The rate is taken from the
    segment that contains ``t`` (right-continuous at knots).
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        v = tuple(float(x) for x in self.values)
        if len(t) != len(v) or not t:
            raise ValueError("protocol needs equally many (>= 1) times and values")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("protocol times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseLinear":
        return cls((0.0,), (value,))

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def rate(self, t: float) -> float:
        ts = self.times
        if len(ts) == 1 or t < ts[0] or t >= ts[-1]:
            return 0.0
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return (self.values[i + 1] - self.values[i]) / (ts[i + 1] - ts[i])


@dataclass(frozen=True, eq=False)
class WorkTerm:
    """``a(t) * G`` added to one of the three Hamiltonians.

    ``variable`` is ``a1``, ``a2`` or ``a12``; ``target`` is ``h1``, ``h2`` or
    ``h12``.  ``generator`` is local for ``h1``/``h2`` and composite for
    ``h12``.
    """

    target: str
    variable: str
    generator: np.ndarray
    protocol: PiecewiseLinear

    _ALLOWED = {"a1": ("h1",), "a2": ("h2",), "a12": ("h1", "h2", "h12")}

    def __post_init__(self):
        if self.variable not in self._ALLOWED:
            raise ValueError(f"unknown work variable {self.variable!r}")
        if self.target not in self._ALLOWED[self.variable]:
            raise ValueError(f"work variable {self.variable} cannot act on {self.target}")
        object.__setattr__(self, "generator", hermitian(as_square(self.generator, "generator")))


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """Time-dependent Hamiltonian, affine in piecewise-linear work variables."""

    dims: HilbertDims
    h1_local: np.ndarray
    h2_local: np.ndarray | None = None
    h12: np.ndarray | None = None
    work: tuple = ()

    def __post_init__(self):
        dims = HilbertDims.of(self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "work", tuple(self.work))
        for w in self.work:
            want = dims.d if w.target == "h12" else dims.sub(1 if w.target == "h1" else 2)
            if w.generator.shape[0] != want:
                raise DimensionError(f"generator for {w.target} has dim {w.generator.shape[0]}, expected {want}")
        # embeddings do not depend on t; build them once
        d = dims.d
        base = {
            "h1": embed_left(self.h1_local, dims),
            "h2": None if self.h2_local is None else embed_right(self.h2_local, dims),
            "h12": self.h12,
        }
        base = {k: (np.zeros((d, d), complex) if v is None else np.asarray(v, complex)) for k, v in base.items()}
        object.__setattr__(self, "_base", base)
        object.__setattr__(self, "_generators", tuple(self._embed(w.target, w.generator) for w in self.work))
        self.at(0.0)

    def _embed(self, target, op):
        if target == "h1":
            return embed_left(op, self.dims)
        if target == "h2":
            return embed_right(op, self.dims)
        return op

    def at(self, t: float) -> HamiltonianTriple:
        parts = dict(self._base)
        d = self.dims.d
        derivs = {k: [] for k in ("dh1_da1", "dh2_da2", "dh1_da12", "dh2_da12", "dh12_da12")}
        rates = {"a1": [], "a2": [], "a12": []}
        zero = np.zeros((d, d), dtype=complex)
        for w, g in zip(self.work, self._generators):
            parts[w.target] = parts[w.target] + w.protocol(t) * g
            rates[w.variable].append(w.protocol.rate(t))
            if w.variable == "a12":
                for tgt in ("h1", "h2", "h12"):
                    derivs[f"d{tgt}_da12"].append(g if tgt == w.target else zero)
            else:
                derivs[f"d{w.target}_d{w.variable}"].append(g)
        return HamiltonianTriple(
            self.dims, parts["h1"], parts["h2"], parts["h12"],
            a1_dot=rates["a1"], a2_dot=rates["a2"], a12_dot=rates["a12"], **derivs,
        )

    def __call__(self, t: float) -> HamiltonianTriple:
        return self.at(t)


# ---------------------------------------------------------------------------
# temperatures


@dataclass(frozen=True)
class Temperatures:
    """Contact temperatures ``theta`` (undecomposed), ``theta1``, ``theta2``;
    environment temperature ``t_box``; replacement temperatures ``t1``,
    ``t2``; optional partition temperatures ``t12``, ``theta12``."""

    theta: float = 1.0
    theta1: float = 1.0
    theta2: float = 1.0
    t_box: float = 1.0
    t1: float = 1.0
    t2: float = 1.0
    t12: float | None = None
    theta12: float | None = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            object.__setattr__(self, f.name, check_positive(v, f.name))

    def replace(self, **changes) -> "Temperatures":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# helpers


class ContactTemperatureError(ValueError):
    """Contact temperature undefined (no exchange) or non-positive."""


def _mat(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def _coupling_flow(ham: HamiltonianTriple, rho, hbar: float) -> np.ndarray:
    # M = -(i/hbar)[H12, rho]
    return hermitian((-1j / hbar) * commutator(ham.h12, _mat(rho)))


def _split(ro: Propagator):
    if not ro.has_split:
        raise ValueError("propagator lacks its ex/iso split")
    return ro.ex, ro.iso


def _tr(a, b, what="trace") -> float:
    return trace_of_product(np.asarray(a), np.asarray(b), 1e-10, what)


def _local_log(rho_m: np.ndarray, dims: HilbertDims, which: int, z: float, eps: float) -> np.ndarray:
    over = 2 if which == 1 else 1
    return log_z_rho(partial_trace(rho_m, over, dims), z, eps)


def _embedded_log(rho_m, dims, which, z, eps):
    loc = _local_log(rho_m, dims, which, z, eps)
    return embed_left(loc, dims) if which == 1 else embed_right(loc, dims)


# ---------------------------------------------------------------------------
# energies, powers, heats


def energy(rho, h) -> float:
    """``E = Tr(H rho)``."""
    return _tr(h, _mat(rho), "energy")


def energies(rho, ham: HamiltonianTriple) -> dict:
    r = _mat(rho)
    return {
        "E": energy(r, ham.total),
        "E1": energy(r, ham.h1),
        "E2": energy(r, ham.h2),
        "E12": energy(r, ham.h12),
    }


def _power(stack, rates, rho_m) -> float:
    if stack.shape[0] == 0:
        return 0.0
    vals = np.einsum("kij,ji->k", stack, rho_m)
    if np.any(np.abs(vals.imag) > 1e-10 * np.maximum(1.0, np.abs(vals.real))):
        raise FloatingPointError("power exchange has an imaginary part; Hermiticity broken upstream")
    return float(vals.real @ rates)


def power_exchanges(rho, ham: HamiltonianTriple) -> dict:
    """External and internal power exchanges plus the undecomposed total.

    ``W_int`` is the sum of the three internal terms; the setting wants it
    zero, which is a scenario property reported here, not enforced.
    """
    r = _mat(rho)
    out = {
        "W1_ex": _power(ham.dh1_da1, ham.a1_dot, r),
        "W2_ex": _power(ham.dh2_da2, ham.a2_dot, r),
        "W1_int": _power(ham.dh1_da12, ham.a12_dot, r),
        "W2_int": _power(ham.dh2_da12, ham.a12_dot, r),
        "W12_int": _power(ham.dh12_da12, ham.a12_dot, r),
    }
    out["W_ex"] = out["W1_ex"] + out["W2_ex"]
    out["W_int"] = out["W1_int"] + out["W2_int"] + out["W12_int"]
    out["W"] = _tr(ham.h_dot, r, "power")
    return out


def heat_exchanges(rho, ham: HamiltonianTriple, ro: Propagator, hbar: float = 1.0) -> dict:
    """All heat exchanges per channel.

    Returns the totals ``Q1, Q2, Q12``, the splits ``*_ex``/``*_int``, the
    undecomposed ``Q = Tr(H ro)``, ``Q_ex = Tr(H ro_ex)``,
    ``Q_iso = Tr(H ro_iso)``.
    """
    ex, iso = _split(ro)
    r = _mat(rho)
    m = _coupling_flow(ham, r, hbar)
    m12 = hermitian((-1j / hbar) * commutator(ham.h1 + ham.h2, r))
    out = {
        "Q": _tr(ham.total, ro.matrix, "heat"),
        "Q_ex": _tr(ham.total, ex, "heat"),
        "Q_iso": _tr(ham.total, iso, "heat"),
        "Q1_ex": _tr(ham.h1, ex, "heat"),
        "Q2_ex": _tr(ham.h2, ex, "heat"),
        "Q12_ex": _tr(ham.h12, ex, "heat"),
        "Q1_int": _tr(ham.h1, iso + m, "heat"),
        "Q2_int": _tr(ham.h2, iso + m, "heat"),
        "Q12_int": _tr(ham.h12, iso + m12, "heat"),
    }
    # totals from the unsplit formula, so the split can be checked against it
    out["Q1"] = _tr(ham.h1, ro.matrix + m, "heat")
    out["Q2"] = _tr(ham.h2, ro.matrix + m, "heat")
    out["Q12"] = _tr(ham.h12, ro.matrix + m12, "heat")
    return out


def first_law_rates(rho, ham: HamiltonianTriple, ro: Propagator, hbar: float = 1.0,
                    rho_dot: np.ndarray | None = None) -> dict:
    """Energy rates computed directly from ``rho_dot`` and the First Law
    residuals.

    ``residual`` is ``E1_dot + E2_dot + E12_dot - W_ex - Q_ex``; the
    ``balance*`` entries compare each direct rate with its exchange terms.
    """
    r = _mat(rho)
    if rho_dot is None:
        rho_dot = hermitian((-1j / hbar) * commutator(ham.total, r) + ro.matrix)
    w = power_exchanges(r, ham)
    q = heat_exchanges(r, ham, ro, hbar)
    dots = {}
    for name, h, parts in (
        ("E1_dot", ham.h1, ((ham.dh1_da1, ham.a1_dot), (ham.dh1_da12, ham.a12_dot))),
        ("E2_dot", ham.h2, ((ham.dh2_da2, ham.a2_dot), (ham.dh2_da12, ham.a12_dot))),
        ("E12_dot", ham.h12, ((ham.dh12_da12, ham.a12_dot),)),
    ):
        dots[name] = sum(_power(s, a, r) for s, a in parts) + _tr(h, rho_dot, "energy rate")
    dots["E_dot"] = _tr(ham.h_dot, r, "power") + _tr(ham.total, rho_dot, "energy rate")
    terms = {
        "E1_dot": (w["W1_ex"], w["W1_int"], q["Q1_ex"], q["Q1_int"]),
        "E2_dot": (w["W2_ex"], w["W2_int"], q["Q2_ex"], q["Q2_int"]),
        "E12_dot": (w["W12_int"], q["Q12_int"]),
    }
    out = dict(dots)
    for key, parts in terms.items():
        out["balance_" + key[:-4]] = dots[key] - sum(parts)
    lhs = dots["E1_dot"] + dots["E2_dot"] + dots["E12_dot"]
    out["first_law"] = lhs - w["W_ex"] - q["Q_ex"]
    out["first_law_scale"] = max(1.0, abs(dots["E1_dot"]) + abs(dots["E2_dot"]) + abs(dots["E12_dot"])
                                 + abs(w["W_ex"]) + abs(q["Q_ex"]))
    return out


# ---------------------------------------------------------------------------
# entropies


def entropy_rates(rho: DensityOperator, ro: Propagator, ham: HamiltonianTriple | None = None,
                  z: float = 1.0, k_B: float = 1.0, hbar: float = 1.0, eps: float = RATE_EPS) -> dict:
    """Entropy rates of the whole system and both sub-systems.

    The partial rates are evaluated in the local spaces; the compound
    deficiency ``S1_dot + S2_dot - S_dot`` is also computed from the single
    composite-space trace and the gap between both is ``S_dot_cd_check``.
    """
    r = rho.matrix
    dims = rho.dims
    d = dims.d
    h12 = np.zeros((d, d), complex) if ham is None else ham.h12
    m = hermitian((-1j / hbar) * commutator(h12, r))
    log = log_z_rho(r, z, eps)
    out = {"S_dot": -k_B * _tr(ro.matrix, log, "entropy rate")}
    flow = ro.matrix + m
    has_split = ro.has_split
    for which in (1, 2):
        over = 2 if which == 1 else 1
        loc_log = _local_log(r, dims, which, z, eps)
        loc_flow = partial_trace(flow, over, dims)
        out[f"S{which}_dot"] = -k_B * _tr(loc_flow, loc_log, "entropy rate")
        if has_split:
            loc_ex = partial_trace(ro.ex, over, dims)
            loc_int = partial_trace(ro.iso + m, over, dims)
            out[f"S{which}_dot_ex"] = -k_B * _tr(loc_ex, loc_log, "entropy rate")
            out[f"S{which}_dot_int"] = -k_B * _tr(loc_int, loc_log, "entropy rate")
    l12 = _embedded_log(r, dims, 1, z, eps) + _embedded_log(r, dims, 2, z, eps)
    rhs = -k_B * (_tr(flow, l12, "entropy rate") - _tr(ro.matrix, log, "entropy rate"))
    out["S_dot_cd"] = out["S1_dot"] + out["S2_dot"] - out["S_dot"]
    out["S_dot_cd_check"] = out["S_dot_cd"] - rhs
    return out


def entropy_exchanges(heats: dict, temps: Temperatures) -> dict:
    """Entropy exchanges ``Q/Theta`` per channel and the environment's
    ``-Q_ex / T_box``."""
    return {
        "Xi1_ex": heats["Q1_ex"] / temps.theta1,
        "Xi2_ex": heats["Q2_ex"] / temps.theta2,
        "Xi1_int": heats["Q1_int"] / temps.theta1,
        "Xi2_int": heats["Q2_int"] / temps.theta2,
        "Xi_ex": heats["Q_ex"] / temps.theta,
        "Xi_box_ex": -heats["Q_ex"] / temps.t_box,
    }


def entropy_production(rho: DensityOperator, temps: Temperatures, ro: Propagator,
                       ham: HamiltonianTriple, z: float = 1.0, k_B: float = 1.0,
                       hbar: float = 1.0, eps: float = RATE_EPS) -> dict:
    """Sub-system entropy productions and both undecomposed forms.

    ``Sigma`` uses the full propagator with the undecomposed contact
    temperature, ``Sigma_iso`` only the iso part; they agree when the contact
    temperature is the one extracted from ``ro_ex`` and ``Tr(H ro_iso) = 0``.
    """
    r = rho.matrix
    dims = rho.dims
    m = _coupling_flow(ham, r, hbar)
    out = {}
    for which, h, th in ((1, ham.h1, temps.theta1), (2, ham.h2, temps.theta2)):
        bracket = h / th + k_B * _embedded_log(r, dims, which, z, eps)
        out[f"Sigma{which}"] = -_tr(bracket, ro.matrix + m, "entropy production")
        out[f"Sigma{which}_oqu"] = -_tr(bracket, m, "entropy production")
    log = log_z_rho(r, z, eps)
    out["Sigma"] = -_tr(ham.total / temps.theta + k_B * log, ro.matrix, "entropy production")
    if ro.has_split:
        out["Sigma_iso"] = -k_B * _tr(ro.iso, log, "entropy production")
    else:
        out["Sigma_iso"] = float("nan")
    out["Sigma_form_gap"] = out["Sigma"] - out["Sigma_iso"]
    return out


# ---------------------------------------------------------------------------
# contact temperatures

DENOM_TOL = 1e-12


def contact_temperature(rho, h, ro_ex, z: float = 1.0, k_B: float = 1.0, eps: float = RATE_EPS) -> float:
    """``1/Theta = -Tr{k_B ln(Z rho) ro_ex} / Tr{H ro_ex}``.

    Raises ``ContactTemperatureError`` when ``|Tr(H ro_ex)|`` is below
    ``1e-12`` or the result is not positive.
    """
    r = _mat(rho)
    ex = np.asarray(ro_ex, dtype=complex)
    denom = _tr(h, ex, "contact temperature")
    if abs(denom) <= DENOM_TOL:
        raise ContactTemperatureError(f"no heat exchange (Tr(H ro_ex) = {denom:.3e}); contact temperature undefined")
    inv = -k_B * _tr(log_z_rho(r, z, eps), ex, "contact temperature") / denom
    if not inv > 0.0:
        raise ContactTemperatureError(f"extracted inverse contact temperature is non-positive ({inv:.6g})")
    return 1.0 / inv


def subsystem_contact_temperature(rho: DensityOperator, ham: HamiltonianTriple, ro_ex, which: int,
                                  z: float = 1.0, k_B: float = 1.0, eps: float = RATE_EPS) -> float:
    """Contact temperature of sub-system ``which`` from the composite ``ro_ex``."""
    over = 2 if which == 1 else 1
    dims = rho.dims
    loc_ex = partial_trace(np.asarray(ro_ex), over, dims)
    return contact_temperature(partial_trace(rho.matrix, over, dims), ham.local(which), loc_ex, z, k_B, eps)


def probe_contact_temperature(rho: DensityOperator, ham: HamiltonianTriple, which: int = 1,
                              k_B: float = 1.0, eps: float = RATE_EPS) -> float:
    """Contact temperature as a state function.

    Uses the traceless part of the local Hamiltonian as probe exchange
    propagator; this reproduces the canonical temperature exactly for
    canonical reduced states.
    """
    h = ham.local(which)
    probe = h - np.trace(h).real / h.shape[0] * np.eye(h.shape[0])
    over = 2 if which == 1 else 1
    return contact_temperature(partial_trace(rho.matrix, over, rho.dims), h, probe, 1.0, k_B, eps)


def undecomposed_contact_temperature(theta1: float, theta2: float, omega1, omega2=None) -> float:
    """Environment temperature at which the total external heat
    ``Omega1(1/Theta1 - 1/T) + Omega2(1/Theta2 - 1/T)`` changes sign."""
    omega2 = omega1 if omega2 is None else omega2
    if math.isclose(theta1, theta2, rel_tol=0.0, abs_tol=0.0):
        return float(theta1)
    f = lambda b: omega1(1.0 / theta1 - b) + omega2(1.0 / theta2 - b)  # noqa: E731
    lo, hi = sorted((1.0 / theta1, 1.0 / theta2))
    beta = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return 1.0 / beta


# ---------------------------------------------------------------------------
# compound deficiencies and partitions


def compound_deficiency(kind: str, rho: DensityOperator | None = None, ham: HamiltonianTriple | None = None,
                        ro: Propagator | None = None, k_B: float = 1.0, hbar: float = 1.0, z: float = 1.0):
    """``X - X1 - X2`` for ``kind`` in hamiltonian, entropy, entropy_rate,
    energy_rate."""
    if kind == "hamiltonian":
        return ham.total - ham.h1 - ham.h2
    if kind == "entropy":
        s = shannon_entropy(rho, k_B)
        s1 = shannon_entropy(partial_trace(rho.matrix, 2, rho.dims), k_B)
        s2 = shannon_entropy(partial_trace(rho.matrix, 1, rho.dims), k_B)
        return s - s1 - s2
    if kind == "entropy_rate":
        rates = entropy_rates(rho, ro, ham, z, k_B, hbar)
        return -rates["S_dot_cd"]
    if kind == "energy_rate":
        fl = first_law_rates(rho, ham, ro, hbar)
        return fl["E_dot"] - fl["E1_dot"] - fl["E2_dot"]
    raise ValueError(f"unknown compound deficiency kind {kind!r}")


def classify_partition(heats: dict, temps: Temperatures, tol: float = 1e-9) -> tuple[str, str]:
    inert = "inert" if abs(heats["Q12_int"]) <= tol else "non_inert"
    sheet = "mono_sheet" if abs(temps.t1 - temps.t2) <= tol else "double_sheet"
    return inert, sheet


# ---------------------------------------------------------------------------
# ledger


@dataclass
class ExchangeLedger:
    """One row of thermodynamic bookkeeping.  Field order is the CSV column
    order.  Residuals are signed."""

    t: float = 0.0
    E: float = 0.0
    E1: float = 0.0
    E2: float = 0.0
    E12: float = 0.0
    E_dot: float = 0.0
    E1_dot: float = 0.0
    E2_dot: float = 0.0
    E12_dot: float = 0.0
    W: float = 0.0
    W_ex: float = 0.0
    W1_ex: float = 0.0
    W2_ex: float = 0.0
    W1_int: float = 0.0
    W2_int: float = 0.0
    W12_int: float = 0.0
    Q: float = 0.0
    Q_ex: float = 0.0
    Q_iso: float = 0.0
    Q1: float = 0.0
    Q2: float = 0.0
    Q12: float = 0.0
    Q1_ex: float = 0.0
    Q2_ex: float = 0.0
    Q12_ex: float = 0.0
    Q1_int: float = 0.0
    Q2_int: float = 0.0
    Q12_int: float = 0.0
    S: float = 0.0
    S1: float = 0.0
    S2: float = 0.0
    S_cd: float = 0.0
    S_dot: float = 0.0
    S1_dot: float = 0.0
    S2_dot: float = 0.0
    S1_dot_ex: float = 0.0
    S2_dot_ex: float = 0.0
    S1_dot_int: float = 0.0
    S2_dot_int: float = 0.0
    S_dot_cd: float = 0.0
    Xi_ex: float = 0.0
    Xi_box_ex: float = 0.0
    Xi1_ex: float = 0.0
    Xi2_ex: float = 0.0
    Xi1_int: float = 0.0
    Xi2_int: float = 0.0
    Sigma: float = 0.0
    Sigma_iso: float = 0.0
    Sigma1: float = 0.0
    Sigma2: float = 0.0
    Sigma1_oqu: float = 0.0
    Sigma2_oqu: float = 0.0
    theta: float = 1.0
    theta1: float = 1.0
    theta2: float = 1.0
    t_box: float = 1.0
    t1: float = 1.0
    t2: float = 1.0
    theta_ext: float = float("nan")
    theta1_ext: float = float("nan")
    theta2_ext: float = float("nan")
    T_HR: float = float("nan")
    Tdot_HR: float = 0.0
    C_HR: float = 0.0
    C_HR_Tdot: float = 0.0
    Q2_HR: float = 0.0
    res_trace: float = 0.0
    res_hermiticity: float = 0.0
    min_eig: float = 0.0
    res_first_law: float = 0.0
    res_balance_E1: float = 0.0
    res_balance_E2: float = 0.0
    res_balance_E12: float = 0.0
    res_heat_sum: float = 0.0
    res_ex_additivity: float = 0.0
    res_internal_sum: float = 0.0
    res_W_int: float = 0.0
    res_S_dot_cd: float = 0.0
    res_Sigma_forms: float = 0.0
    first_law_scale: float = 1.0

    def as_row(self) -> list[float]:
        return [float(getattr(self, f)) for f in LEDGER_COLUMNS]


LEDGER_COLUMNS = tuple(f.name for f in dataclasses.fields(ExchangeLedger))


def _try_theta(fn, *args, **kwargs) -> float:
    try:
        return fn(*args, **kwargs)
    except ContactTemperatureError:
        return float("nan")


def compute_ledger(t: float, rho: DensityOperator, ham: HamiltonianTriple, ro: Propagator,
                   temps: Temperatures, *, k_B: float = 1.0, hbar: float = 1.0, z: float = 1.0,
                   reservoir=None, rho_dot: np.ndarray | None = None) -> ExchangeLedger:
    """Evaluate every observable at one state.

    ``reservoir`` is an optional ``(T_HR, Tdot_HR, C_HR)`` triple; the
    reservoir heat ``Q2_HR`` is then taken from the sub-system-2 heat.
    """
    if not ro.has_split:
        ro = Propagator.from_split(np.zeros_like(ro.matrix), ro.matrix)
    row = ExchangeLedger(t=float(t))
    vals = {}
    vals.update(energies(rho, ham))
    vals.update(power_exchanges(rho, ham))
    heats = heat_exchanges(rho, ham, ro, hbar)
    vals.update(heats)
    fl = first_law_rates(rho, ham, ro, hbar, rho_dot)
    for k in ("E_dot", "E1_dot", "E2_dot", "E12_dot"):
        vals[k] = fl[k]
    s = shannon_entropy(rho, k_B)
    s1 = shannon_entropy(partial_trace(rho.matrix, 2, rho.dims), k_B)
    s2 = shannon_entropy(partial_trace(rho.matrix, 1, rho.dims), k_B)
    vals.update(S=s, S1=s1, S2=s2, S_cd=s - s1 - s2)
    rates = entropy_rates(rho, ro, ham, z, k_B, hbar)
    vals.update({k: v for k, v in rates.items() if k != "S_dot_cd_check"})
    vals.update(entropy_exchanges(heats, temps))
    prod = entropy_production(rho, temps, ro, ham, z, k_B, hbar)
    vals.update({k: v for k, v in prod.items() if k != "Sigma_form_gap"})
    vals.update(theta=temps.theta, theta1=temps.theta1, theta2=temps.theta2, t_box=temps.t_box,
                t1=temps.t1, t2=temps.t2)
    vals["theta_ext"] = _try_theta(contact_temperature, rho, ham.total, ro.ex, z, k_B)
    vals["theta1_ext"] = _try_theta(subsystem_contact_temperature, rho, ham, ro.ex, 1, z, k_B)
    vals["theta2_ext"] = (_try_theta(subsystem_contact_temperature, rho, ham, ro.ex, 2, z, k_B)
                          if rho.dims.bipartite else float("nan"))
    if reservoir is not None:
        t_hr, tdot, c_hr = reservoir
        vals.update(T_HR=t_hr, Tdot_HR=tdot, C_HR=c_hr, C_HR_Tdot=c_hr * tdot, Q2_HR=heats["Q2"])
    m = rho.matrix
    vals.update(
        res_trace=float(np.trace(m).real - 1.0),
        res_hermiticity=rho.deviation,
        min_eig=float(np.linalg.eigvalsh(m)[0]),
        res_first_law=fl["first_law"],
        res_balance_E1=fl["balance_E1"],
        res_balance_E2=fl["balance_E2"],
        res_balance_E12=fl["balance_E12"],
        res_heat_sum=heats["Q1"] + heats["Q2"] + heats["Q12"] - heats["Q"],
        res_ex_additivity=heats["Q1_ex"] + heats["Q2_ex"] - heats["Q_ex"],
        res_internal_sum=heats["Q1_int"] + heats["Q2_int"] + heats["Q12_int"],
        res_W_int=vals["W_int"],
        res_S_dot_cd=rates["S_dot_cd_check"],
        res_Sigma_forms=prod["Sigma_form_gap"],
        first_law_scale=fl["first_law_scale"],
    )
    for k, v in vals.items():
        if hasattr(row, k):
            setattr(row, k, float(v))
    return row


# ---------------------------------------------------------------------------
# inequalities


@dataclass(frozen=True)
class InequalityResult:
    """``lhs >= rhs`` evaluated with signed ``margin = lhs - rhs``.

    ``applicable`` is False when the partition type or inputs do not match
    the inequality's premises; ``satisfied`` is then None.
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    satisfied: bool | None
    applicable: bool = True


def _ineq(name, lhs, rhs, tol, applicable=True):
    if not applicable:
        return InequalityResult(name, float("nan"), float("nan"), float("nan"), None, False)
    margin = float(lhs - rhs)
    return InequalityResult(name, float(lhs), float(rhs), margin, bool(margin >= -tol), True)


INEQUALITY_NAMES = (
    "defining_undecomposed",
    "defining_external_1",
    "defining_external_2",
    "defining_internal_1",
    "defining_internal_2",
    "external_sum",
    "external_sign_chain",
    "internal_double_sheet",
    "internal_mono_sheet",
    "internal_equal_contact",
    "partition_mono_equal_contact",
    "inert_double_sheet_1",
    "inert_double_sheet_2",
    "inert_mono_sheet_1",
    "inert_mono_sheet_2",
    "inert_mono_sheet_sum",
    "entropy_exchange_external",
    "entropy_exchange_internal",
    "entropy_exchange_inert_double",
    "entropy_exchange_mono",
    "entropy_exchange_inert_mono",
    "inert_contact_heat",
    "reservoir_heat",
)


def inequality_suite(ledger: ExchangeLedger, temps: Temperatures | None = None, *, tol: float = 1e-9,
                     bipartite: bool = True, omega_ex=None, partition_tol: float | None = None) -> list:
    """Evaluate the defining inequalities and their consequences.

    Every name in ``INEQUALITY_NAMES`` appears once in the result, in that
    order; inequalities whose premises do not hold are marked not
    applicable.  ``omega_ex`` (a constitutive law) enables the sign-chain
    check of the external heat at ``T_box`` equal to each contact
    temperature.
    """
    L = ledger
    if temps is None:
        temps = Temperatures(L.theta, L.theta1, L.theta2, L.t_box, L.t1, L.t2)
    ptol = tol if partition_tol is None else partition_tol
    inert, sheet = classify_partition({"Q12_int": L.Q12_int}, temps, ptol)
    is_inert = inert == "inert"
    mono = sheet == "mono_sheet"
    b1, b2, bb = 1.0 / temps.theta1, 1.0 / temps.theta2, 1.0 / temps.t_box
    c1, c2 = 1.0 / temps.t1, 1.0 / temps.t2
    same_theta = abs(temps.theta1 - temps.theta2) <= ptol
    theta12 = temps.theta12 if temps.theta12 is not None else temps.theta1
    t12 = temps.t12 if temps.t12 is not None else temps.t1
    q1i, q2i, q12i = L.Q1_int, L.Q2_int, L.Q12_int
    q_ex = L.Q1_ex + L.Q2_ex
    isolated = abs(L.Q1_ex) <= ptol and abs(L.Q2_ex) <= ptol
    out = [
        _ineq("defining_undecomposed", (1.0 / temps.theta - bb) * L.Q_ex, 0.0, tol),
        _ineq("defining_external_1", (b1 - bb) * L.Q1_ex, 0.0, tol),
        _ineq("defining_external_2", (b2 - bb) * L.Q2_ex, 0.0, tol, bipartite),
        _ineq("defining_internal_1", (b1 - c1) * q1i, 0.0, tol, bipartite),
        _ineq("defining_internal_2", (b2 - c2) * q2i, 0.0, tol, bipartite),
        _ineq("external_sum", L.Q1_ex * b1 + L.Q2_ex * b2 - q_ex * bb, 0.0, tol, bipartite),
    ]
    if omega_ex is not None and bipartite:
        def q_at(tb):
            return omega_ex(b1 - 1.0 / tb) + omega_ex(b2 - 1.0 / tb)
        lo, hi = sorted((temps.theta1, temps.theta2))
        out.append(_ineq("external_sign_chain", min(q_at(hi), -q_at(lo)), 0.0, tol))
    else:
        out.append(_ineq("external_sign_chain", 0, 0, tol, False))
    out += [
        _ineq("internal_double_sheet", 2.0 * (q1i * b1 + q2i * b2),
              (c1 - c2) * (q1i - q2i) - (c1 + c2) * q12i, tol, bipartite),
        _ineq("internal_mono_sheet", q1i * b1 + q2i * b2, -q12i / t12, tol, bipartite and mono),
        _ineq("internal_equal_contact", 0.0,
              (c1 - c2) * (q1i - q2i) + (2.0 / theta12 - c1 - c2) * q12i, tol, bipartite and same_theta),
        _ineq("partition_mono_equal_contact", (1.0 / t12 - 1.0 / theta12) * q12i, 0.0, tol,
              bipartite and mono and same_theta),
        _ineq("inert_double_sheet_1", (c2 - c1) * q1i, 0.0, tol, bipartite and is_inert and same_theta),
        _ineq("inert_double_sheet_2", (c1 - c2) * q2i, 0.0, tol, bipartite and is_inert and same_theta),
        _ineq("inert_mono_sheet_1", (b1 - b2) * q1i, 0.0, tol, bipartite and is_inert and mono),
        _ineq("inert_mono_sheet_2", (b2 - b1) * q2i, 0.0, tol, bipartite and is_inert and mono),
        _ineq("inert_mono_sheet_sum", (b1 - b2) * q1i + (b2 - b1) * q2i, 0.0, tol, bipartite and is_inert and mono),
        _ineq("entropy_exchange_external", L.Xi1_ex + L.Xi2_ex, q_ex * bb, tol),
        _ineq("entropy_exchange_internal", L.Xi1_int + L.Xi2_int,
              0.5 * (c1 - c2) * (q1i - q2i) - 0.5 * (c1 + c2) * q12i, tol, bipartite),
        _ineq("entropy_exchange_inert_double", L.Xi1_int + L.Xi2_int, (c1 - c2) * q1i, tol,
              bipartite and is_inert and not mono),
        _ineq("entropy_exchange_mono", L.Xi1_int + L.Xi2_int, -q12i / t12, tol, bipartite and mono and not is_inert),
        _ineq("entropy_exchange_inert_mono", L.Xi1_int + L.Xi2_int, 0.0, tol, bipartite and is_inert and mono),
        _ineq("inert_contact_heat", (b2 - b1) * L.Q2, 0.0, tol, bipartite and is_inert and mono and isolated),
    ]
    has_res = np.isfinite(L.T_HR)
    out.append(_ineq("reservoir_heat", (1.0 / L.T_HR - b1) * L.Q2_HR if has_res else 0.0, 0.0, tol, has_res))
    return out
