"""Equilibrium verification for supplied states (no equilibrium finding)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import RATE_EPS, commutator, hermitian, partial_trace
from .state import DensityOperator, Propagator, log_partition, log_z_rho
from .thermo import (
    HamiltonianTriple,
    Temperatures,
    entropy_production,
    entropy_rates,
    heat_exchanges,
)

__all__ = [
    "EquilibriumReport",
    "check_equilibrium_undecomposed",
    "check_equilibrium_bipartite",
    "OP_TOL",
    "RATE_TOL",
]

OP_TOL = 1e-9
RATE_TOL = 1e-10


@dataclass
class EquilibriumReport:
    """Layered result: necessary, complementary and sufficient conditions.

    ``residuals`` holds the number behind every flag (Frobenius norms for
    operators, absolute values for scalars).
    """

    necessary: dict = field(default_factory=dict)
    complementary: dict = field(default_factory=dict)
    sufficient_ok: bool = False
    residuals: dict = field(default_factory=dict)

    @property
    def necessary_ok(self) -> bool:
        return all(self.necessary.values())

    @property
    def complementary_ok(self) -> bool:
        return all(self.complementary.values())

    @property
    def is_equilibrium(self) -> bool:
        return self.sufficient_ok

    def failed(self) -> list[str]:
        return [k for k, v in {**self.necessary, **self.complementary}.items() if not v]

    def to_dict(self) -> dict:
        return {
            "necessary": {k: bool(v) for k, v in self.necessary.items()},
            "complementary": {k: bool(v) for k, v in self.complementary.items()},
            "sufficient_ok": bool(self.sufficient_ok),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


class _Collector:
    def __init__(self, op_tol, rate_tol):
        self.op_tol = op_tol
        self.rate_tol = rate_tol
        self.report = EquilibriumReport()

    def op(self, layer, name, a):
        r = float(np.linalg.norm(np.asarray(a)))
        self.report.residuals[name] = r
        getattr(self.report, layer)[name] = r <= self.op_tol
        return r

    def scalar(self, layer, name, x, tol=None):
        r = abs(complex(x))
        self.report.residuals[name] = r
        getattr(self.report, layer)[name] = r <= (self.rate_tol if tol is None else tol)
        return r


def _canonical_bracket(h, rho_m, theta, k_B):
    # H/Theta + k_B ln(Z rho), Z the partition function at theta
    ln_z = log_partition(h, theta, k_B)
    return h / theta + k_B * (log_z_rho(rho_m, 1.0, RATE_EPS) + ln_z * np.eye(h.shape[0]))


def check_equilibrium_undecomposed(rho: DensityOperator, h, ro: Propagator, a_dot=0.0, theta: float = 1.0,
                                   t_box: float = 1.0, tol: float = OP_TOL, rate_tol: float = RATE_TOL, *,
                                   h_dot=None, k_B: float = 1.0, hbar: float = 1.0,
                                   z: float = 1.0) -> EquilibriumReport:
    """Necessary, complementary and sufficient equilibrium conditions of an
    undecomposed system.

    Sufficient means the canonical bracket ``H/Theta + k_B ln(Z rho)``
    vanishes together with ``ro`` and every necessary condition holds.
    """
    if isinstance(h, HamiltonianTriple):
        h_dot = h.h_dot if h_dot is None else h_dot
        h = h.total
    h = hermitian(h)
    r = rho.matrix
    d = r.shape[0]
    h_dot = np.zeros((d, d)) if h_dot is None else np.asarray(h_dot)
    ex = ro.ex if ro.has_split else np.zeros((d, d))
    iso = ro.iso if ro.has_split else ro.matrix
    c = _Collector(tol, rate_tol)
    comm = commutator(h, r)
    c.op("necessary", "rho_dot", (-1j / hbar) * comm + ro.matrix)
    c.op("necessary", "ro", ro.matrix)
    c.op("necessary", "ro_iso", iso)
    c.scalar("necessary", "a_dot", np.max(np.abs(np.atleast_1d(a_dot)), initial=0.0))
    c.op("complementary", "commutator_H_rho", comm)
    c.op("complementary", "ro_ex", ex)
    log = log_z_rho(r, z)
    q = np.einsum("ij,ji->", h, ro.matrix).real
    c.scalar("complementary", "W", np.einsum("ij,ji->", h_dot, r).real)
    c.scalar("complementary", "Q", q)
    c.scalar("complementary", "S_dot", -k_B * np.einsum("ij,ji->", ro.matrix, log).real)
    c.scalar("complementary", "Xi", q / theta)
    c.scalar("complementary", "Sigma", -np.einsum("ij,ji->", h / theta + k_B * log, ro.matrix).real)
    c.scalar("complementary", "theta_equals_t_box", theta - t_box, tol)
    bracket = c.op("complementary", "canonical_bracket", _canonical_bracket(h, r, theta, k_B))
    rep = c.report
    rep.sufficient_ok = bool(bracket <= tol and rep.residuals["ro"] <= tol and rep.necessary_ok)
    return rep


def check_equilibrium_bipartite(rho: DensityOperator, ham: HamiltonianTriple, ro: Propagator,
                                temps: Temperatures, tol: float = OP_TOL, rate_tol: float = RATE_TOL, *,
                                k_B: float = 1.0, hbar: float = 1.0, z: float = 1.0) -> EquilibriumReport:
    """Endoreversible equilibrium of a bipartite system.

    Vanishing partial entropy productions are checked but are not enough:
    the reduced propagators and the traced coupling must vanish as well.
    The full set of necessary conditions is the sufficient one.
    """
    if not rho.dims.bipartite:
        raise ValueError("bipartite check needs a bipartite state")
    if not ro.has_split:
        ro = Propagator.from_split(np.zeros_like(ro.matrix), ro.matrix)
    dims = rho.dims
    r = rho.matrix
    c = _Collector(tol, rate_tol)
    c.scalar("necessary", "a12_dot", np.max(np.abs(ham.a12_dot), initial=0.0))
    prod = entropy_production(rho, temps, ro, ham, z, k_B, hbar)
    rates = entropy_rates(rho, ro, ham, z, k_B, hbar)
    heats = heat_exchanges(rho, ham, ro, hbar)
    comm12 = commutator(ham.h12, r)
    for which, theta in ((1, temps.theta1), (2, temps.theta2)):
        over = 2 if which == 1 else 1
        rho_a = partial_trace(r, over, dims)
        h_a = ham.local(which)
        ro_a = partial_trace(ro.matrix, over, dims)
        coupling = (1j / hbar) * partial_trace(comm12, over, dims)
        c.scalar("necessary", f"Sigma{which}", prod[f"Sigma{which}"])
        c.op("necessary", f"reduced_flow_{which}", ro_a - coupling)
        c.op("necessary", f"canonical_{which}", _canonical_bracket(h_a, rho_a, theta, k_B))
        rho_a_dot = (-1j / hbar) * commutator(h_a, rho_a) - coupling + ro_a
        c.op("necessary", f"rho{which}_dot", rho_a_dot)
        c.op("necessary", f"ro{which}", ro_a)
        c.op("necessary", f"coupling_{which}", coupling)
        c.scalar("necessary", f"S{which}_dot", rates[f"S{which}_dot"])
        c.scalar("necessary", f"Q{which}", heats[f"Q{which}"])
        c.scalar("necessary", f"Xi{which}", heats[f"Q{which}"] / theta)
        c.op("complementary", f"modified_propagator_{which}", ro_a - coupling)
        c.op("complementary", f"commutator_H{which}_rho{which}", commutator(h_a, rho_a))
    c.scalar("complementary", "theta1_equals_theta2", temps.theta1 - temps.theta2, tol)
    c.scalar("complementary", "coupling_trace", np.trace(comm12))
    c.scalar("complementary", "inert_power", float(np.einsum("kij,ji,k->", ham.dh12_da12, r, ham.a12_dot).real)
             if ham.a12_dot.size else 0.0)
    c.scalar("complementary", "inert_heat", heats["Q12"])
    rep = c.report
    rep.sufficient_ok = rep.necessary_ok
    return rep
