"""Concrete propagator models and the policies that feed them to the integrator.

The thermodynamic setting only fixes traces of the propagator against a few
operators (heats against Hamiltonians, zero exchange through the partition,
...).  ``solve_trace_constraints`` closes that under-determined problem by
taking the minimum Frobenius-norm Hermitian traceless operator meeting the
constraints.  Coordinates are taken in the generalized Gell-Mann basis, which
is orthonormal under ``Tr(A B)``, so the operator norm equals the coordinate
norm and ordinary least squares gives the minimum-norm solution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._validation import DimensionError, as_square, check_positive
from .operators import (
    ENTROPY_EPS,
    RATE_EPS,
    HilbertDims,
    commutator,
    embed_left,
    embed_right,
    hermitian,
    mat_log_regularized,
    partial_trace,
)
from .state import DensityOperator, Propagator, canonical, log_z_rho
from .thermo import HamiltonianTriple, Temperatures, probe_contact_temperature

__all__ = [
    "ConstitutiveOmega",
    "omega_eval",
    "ReservoirSpec",
    "ConstraintError",
    "gell_mann_basis",
    "traceless_coords",
    "from_traceless_coords",
    "solve_trace_constraints",
    "constrained_propagator",
    "separation_propagator",
    "lift_local",
    "reservoir_rate",
    "reservoir_heat_capacity",
    "reservoir_propagator",
    "exchange_targets",
    "iso_targets",
    "split_propagator",
    "inert_partner_temperature",
    "NoPropagator",
    "SeparationPolicy",
    "ReservoirPolicy",
    "ConstrainedPolicy",
]


# ---------------------------------------------------------------------------
# constitutive laws


@dataclass(frozen=True)
class ConstitutiveOmega:
    """Strictly increasing odd heat-exchange law ``Omega(x)``.

    ``x`` is a reciprocal-temperature difference such as ``1/Theta - 1/T``.
    The default linear law is ``kappa * x``.  A custom ``func`` may be given;
    it is spot-checked for oddness and monotonicity.
    """

    kappa: float = 1.0
    channel: str = "external"
    kind: str = "linear"
    func: Callable[[float], float] | None = None

    def __post_init__(self):
        check_positive(self.kappa, "kappa")
        if self.channel not in ("external", "internal"):
            raise ValueError(f"channel must be 'external' or 'internal', got {self.channel!r}")
        if self.func is not None:
            object.__setattr__(self, "kind", "custom")
            xs = np.linspace(-2.0, 2.0, 41)
            ys = np.array([self.func(x) for x in xs])
            if np.any(np.abs(ys + ys[::-1]) > 1e-12 * max(1.0, np.abs(ys).max())):
                raise ValueError("custom Omega must be odd")
            if np.any(np.diff(ys) <= 0.0):
                raise ValueError("custom Omega must be strictly increasing")
        elif self.kind != "linear":
            raise ValueError(f"unknown Omega kind {self.kind!r}")

    def __call__(self, x: float) -> float:
        if self.func is not None:
            return float(self.func(x))
        return self.kappa * float(x)


def omega_eval(omega: ConstitutiveOmega, x: float) -> float:
    return omega(x)


# ---------------------------------------------------------------------------
# minimum-norm trace-constrained solve


class ConstraintError(ValueError):
    """The trace constraints admit no Hermitian traceless solution."""

    def __init__(self, message, rank=None, n_constraints=None, residual=None):
        super().__init__(message)
        self.rank = rank
        self.n_constraints = n_constraints
        self.residual = residual


def _gm_index(d: int):
    j, k = np.triu_indices(d, 1)
    l = np.arange(1, d)
    return j, k, l


def gell_mann_basis(d: int) -> np.ndarray:
    """Stack of the ``d**2 - 1`` generalized Gell-Mann matrices, normalized
    so that ``Tr(B_i B_j) = delta_ij``.

    Ordering matches ``traceless_coords``: symmetric off-diagonal, then
    antisymmetric off-diagonal (both over ``triu_indices``), then diagonal.
    """
    j, k, l = _gm_index(d)
    n = len(j)
    basis = np.zeros((2 * n + d - 1, d, d), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    idx = np.arange(n)
    basis[idx, j, k] = s
    basis[idx, k, j] = s
    basis[n + idx, j, k] = -1j * s
    basis[n + idx, k, j] = 1j * s
    for m, ll in enumerate(l):
        norm = 1.0 / np.sqrt(ll * (ll + 1))
        basis[2 * n + m, np.arange(ll), np.arange(ll)] = norm
        basis[2 * n + m, ll, ll] = -ll * norm
    return basis


def traceless_coords(a) -> np.ndarray:
    """Real coordinates ``Tr(a B_i)`` of Hermitian ``a`` in the Gell-Mann basis.

    Accepts a stack ``(..., d, d)``; the identity component is dropped.
    """
    a = np.asarray(a, dtype=complex)
    d = a.shape[-1]
    j, k, l = _gm_index(d)
    off = a[..., j, k]
    diag = a[..., np.arange(d), np.arange(d)].real
    csum = np.cumsum(diag, axis=-1)
    dcoord = (csum[..., l - 1] - l * diag[..., l]) / np.sqrt(l * (l + 1))
    return np.concatenate([np.sqrt(2.0) * off.real, -np.sqrt(2.0) * off.imag, dcoord], axis=-1)


def from_traceless_coords(x, d: int) -> np.ndarray:
    """Inverse of ``traceless_coords``: ``sum_i x_i B_i``."""
    x = np.asarray(x, dtype=float)
    j, k, l = _gm_index(d)
    n = len(j)
    out = np.zeros((d, d), dtype=complex)
    vals = (x[:n] + 1j * (-x[n : 2 * n])) / np.sqrt(2.0)
    # coordinate convention: sym -> sqrt2 Re a_jk, antisym -> -sqrt2 Im a_jk
    out[j, k] = vals
    out[k, j] = vals.conj()
    dx = x[2 * n :]
    norm = dx / np.sqrt(l * (l + 1))
    # B_l has norm on entries m < l and -l*norm on entry l
    tail = np.concatenate([np.cumsum(norm[::-1])[::-1], [0.0]])
    diag = tail.copy()
    diag[l] -= l * norm
    out[np.arange(d), np.arange(d)] = diag
    return out


def _diag_coords(a: np.ndarray) -> np.ndarray:
    d = a.shape[-1]
    l = np.arange(1, d)
    diag = np.diagonal(a, axis1=-2, axis2=-1).real
    csum = np.cumsum(diag, axis=-1)
    return (csum[..., l - 1] - l * diag[..., l]) / np.sqrt(l * (l + 1))


def _from_diag_coords(y: np.ndarray, d: int) -> np.ndarray:
    l = np.arange(1, d)
    norm = y / np.sqrt(l * (l + 1))
    diag = np.concatenate([np.cumsum(norm[::-1])[::-1], [0.0]])
    diag[l] -= l * norm
    return diag


def solve_trace_constraints(
    operators: Sequence[np.ndarray],
    targets: Sequence[float],
    *,
    base: np.ndarray | None = None,
    eigvecs: np.ndarray | None = None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Minimum-norm Hermitian traceless ``X`` with ``Tr(O_i X) = t_i``.

    With ``base`` given, returns ``base + Y`` where ``Y`` is the
    minimum-norm correction.  With ``eigvecs`` (columns of a unitary ``U``)
    the search is restricted to operators diagonal in that basis, i.e.
    ``U diag(y) U^dagger`` with ``sum(y) = 0``.

    Raises ``ConstraintError`` when the system is inconsistent; the error
    carries the numerical rank of the constraint matrix.
    """
    ops = [hermitian(as_square(o, "constraint operator")) for o in operators]
    t = np.asarray(targets, dtype=float)
    if len(ops) != t.shape[0]:
        raise ValueError("need one target per constraint operator")
    if not ops:
        raise ValueError("at least one constraint is required")
    d = ops[0].shape[0]
    for o in ops:
        if o.shape != (d, d):
            raise DimensionError("constraint operators must share one dimension")
    stack = np.stack(ops)
    if base is not None:
        base = hermitian(as_square(base, "base"))
        t = t - np.einsum("kij,ji->k", stack, base).real
    if eigvecs is not None:
        u = np.asarray(eigvecs, dtype=complex)
        a = _diag_coords(u.conj().T @ stack @ u)
    else:
        a = traceless_coords(stack)
    if a.shape[1] == 0:
        x = np.zeros(0)
        rank = 0
    else:
        x, _, rank, _ = np.linalg.lstsq(a, t, rcond=None)
    resid = a @ x - t if a.shape[1] else -t
    scale = max(1.0, float(np.max(np.abs(t), initial=0.0)))
    worst = float(np.max(np.abs(resid), initial=0.0))
    if worst > tol * scale:
        raise ConstraintError(
            f"trace constraints are inconsistent: {len(ops)} constraints, rank {rank}, "
            f"rank deficiency {len(ops) - rank}, worst residual {worst:.3e}",
            rank=int(rank),
            n_constraints=len(ops),
            residual=worst,
        )
    if eigvecs is not None:
        y = _from_diag_coords(x, d)
        sol = (u * y) @ u.conj().T
    else:
        sol = from_traceless_coords(x, d)
    sol = hermitian(sol)
    return sol if base is None else sol + base


def constrained_propagator(operators, targets, **kwargs) -> Propagator:
    return Propagator(solve_trace_constraints(operators, targets, **kwargs))


# ---------------------------------------------------------------------------
# separation-axiom propagator


def separation_propagator(h_a, rho_a, z: float = 1.0, eps: float = RATE_EPS) -> Propagator:
    """``[H, [ln(Z rho), H]]`` for one (sub-)system.

    Heat-silent, ``Tr(H ro) = 0``, with non-negative entropy rate
    ``k_B Tr(K K^dagger)``, ``K = [ln(Z rho), H]``.
    """
    h = hermitian(as_square(h_a, "H"))
    r = rho_a.matrix if isinstance(rho_a, DensityOperator) else as_square(rho_a, "rho")
    if h.shape != r.shape:
        raise DimensionError(f"H has dim {h.shape[0]}, rho has dim {r.shape[0]}")
    k = commutator(log_z_rho(r, z, eps), h)
    return Propagator(hermitian(commutator(h, k)))


def lift_local(ro1, ro2, rho1, rho2) -> np.ndarray:
    """Composite propagator ``ro1 (x) rho2 + rho1 (x) ro2``.

    Its partial traces are ``ro1`` and ``ro2``, and for a product state it
    generates exactly the product of the two local flows.
    """
    ro1, ro2, rho1, rho2 = (np.asarray(x, dtype=complex) for x in (ro1, ro2, rho1, rho2))
    return hermitian(np.kron(ro1, rho2) + np.kron(rho1, ro2))


# ---------------------------------------------------------------------------
# heat reservoir


@dataclass(frozen=True)
class ReservoirSpec:
    """Quasi-static canonical reservoir at temperature ``T_HR`` drifting at
    rate ``Tdot_HR``."""

    T_HR: float
    Tdot_HR: float
    H2: np.ndarray

    def __post_init__(self):
        check_positive(self.T_HR, "T_HR")
        object.__setattr__(self, "H2", hermitian(as_square(self.H2, "H2")))
        if abs(self.Tdot_HR) > 1e-2 * self.T_HR:
            warnings.warn(
                f"reservoir temperature rate {self.Tdot_HR} is not small against T_HR={self.T_HR}",
                stacklevel=2,
            )


def reservoir_rate(spec: ReservoirSpec, k_B: float = 1.0, z: float = 1.0):
    """Time derivative of the form-invariant canonical reservoir state.

    Returns ``(rho_dot, C_op)`` with
    ``C_op = rho {Tr(rho ln(Z rho)) - ln(Z rho)} / T_HR`` and
    ``rho_dot = C_op * Tdot_HR``.  ``Z`` cancels.
    """
    rho = canonical(spec.H2, spec.T_HR, k_B).matrix
    log = mat_log_regularized(rho, ENTROPY_EPS) + np.log(z) * np.eye(rho.shape[0])
    mean = np.einsum("ij,ji->", rho, log).real
    c_op = hermitian(rho @ (mean * np.eye(rho.shape[0]) - log)) / spec.T_HR
    return c_op * spec.Tdot_HR, c_op


def reservoir_heat_capacity(spec: ReservoirSpec, k_B: float = 1.0) -> float:
    """``C_HR = Tr(H2 C_op)``, the coefficient of ``Tdot_HR`` in the heat."""
    _, c_op = reservoir_rate(spec, k_B)
    return float(np.einsum("ij,ji->", spec.H2, c_op).real)


def reservoir_propagator(spec: ReservoirSpec, h12, rho_full: DensityOperator, hbar: float = 1.0,
                         k_B: float = 1.0) -> Propagator:
    """Reservoir-side propagator ``(i/hbar) Tr_1[H12, rho] + C_op Tdot_HR``."""
    dims = rho_full.dims
    h12 = as_square(h12, "H12")
    if h12.shape[0] != dims.d:
        raise DimensionError(f"H12 has dim {h12.shape[0]}, composite dim is {dims.d}")
    if spec.H2.shape[0] != dims.d2:
        raise DimensionError(f"H2 has dim {spec.H2.shape[0]}, d2 = {dims.d2}")
    rho_dot, _ = reservoir_rate(spec, k_B)
    coupling = (1j / hbar) * partial_trace(commutator(h12, rho_full.matrix), 1, dims)
    return Propagator(hermitian(coupling) + rho_dot)


def reservoir_full_propagator(spec: ReservoirSpec, ham: HamiltonianTriple, rho: DensityOperator,
                              hbar: float = 1.0, k_B: float = 1.0) -> Propagator:
    """Composite propagator for system #1 in inert contact with a reservoir #2.

    Minimum-norm operator whose sub-system-2 trace equals the reservoir
    propagator, with an inert partition (zero non-inertness) and zero total
    heat (the pair is isolated).  Returned as pure ``iso`` with ``ex = 0``.
    """
    dims = rho.dims
    ro2 = reservoir_propagator(spec, ham.h12, rho, hbar, k_B).matrix
    d2 = dims.d2
    basis2 = gell_mann_basis(d2)
    ops = [embed_right(b, dims) for b in basis2]
    targets = [float(np.einsum("ij,ji->", b, ro2).real) for b in basis2]
    comm12 = commutator(ham.h1 + ham.h2, rho.matrix)
    ops.append(ham.h12)
    targets.append(float(np.einsum("ij,ji->", ham.h12, (1j / hbar) * comm12).real))
    ops.append(ham.total)
    targets.append(0.0)
    x = solve_trace_constraints(ops, targets)
    return Propagator.from_split(np.zeros_like(x), x)


# ---------------------------------------------------------------------------
# exchange / iso split from constitutive laws


def inert_partner_temperature(theta1: float, theta2: float, t1: float) -> float:
    """Replacement temperature ``T2`` making an odd internal law inert:
    ``1/Theta2 - 1/T2 = -(1/Theta1 - 1/T1)``."""
    inv = 1.0 / theta2 + 1.0 / theta1 - 1.0 / t1
    if inv <= 0.0:
        raise ValueError("no positive partner temperature exists for these inputs")
    return 1.0 / inv


def _omegas(omega, n):
    if isinstance(omega, ConstitutiveOmega):
        return [omega] * n
    return list(omega)


def exchange_targets(ham: HamiltonianTriple, temps: Temperatures, omega_ex, rho: DensityOperator | None = None,
                     *, k_B: float = 1.0, z: float = 1.0, contact_consistent: bool = False):
    """Constraint list for ``ro_ex``: external heats from the constitutive
    law, nothing through the partition, and optionally zero exchange entropy
    production so that the contact temperature extracted from ``ro_ex`` is
    the one prescribed."""
    bip = ham.dims.bipartite
    om = _omegas(omega_ex, 2)
    ops = [ham.h1]
    targets = [om[0](1.0 / temps.theta1 - 1.0 / temps.t_box)]
    if bip:
        ops.append(ham.h2)
        targets.append(om[1](1.0 / temps.theta2 - 1.0 / temps.t_box))
        ops.append(ham.h12)
        targets.append(0.0)
    if contact_consistent:
        if rho is None:
            raise ValueError("contact_consistent needs the state")
        from .state import embedded_log_reduced

        for which, h_a, th in ((1, ham.h1, temps.theta1), (2, ham.h2, temps.theta2)):
            if which == 2 and not bip:
                continue
            ops.append(h_a / th + k_B * embedded_log_reduced(rho, which, z))
            targets.append(0.0)
    return ops, targets


def iso_targets(ham: HamiltonianTriple, temps: Temperatures, omega_int, rho: DensityOperator,
                *, hbar: float = 1.0):
    """Constraint list for ``ro_iso``: zero total internal heat and the
    internal heats of both sub-systems from the constitutive law."""
    ops = [ham.total]
    targets = [0.0]
    if ham.dims.bipartite:
        om = _omegas(omega_int, 2)
        comm = commutator(ham.h12, rho.matrix)
        for h_a, th, t_a, o in ((ham.h1, temps.theta1, temps.t1, om[0]), (ham.h2, temps.theta2, temps.t2, om[1])):
            quantum = float(np.einsum("ij,ji->", h_a, (1j / hbar) * comm).real)
            ops.append(h_a)
            targets.append(o(1.0 / th - 1.0 / t_a) + quantum)
    return ops, targets


def split_propagator(ham: HamiltonianTriple, rho: DensityOperator, temps: Temperatures,
                     omega_ex, omega_int, *, hbar: float = 1.0, k_B: float = 1.0, z: float = 1.0,
                     diagonal: bool = False, contact_consistent: bool = False,
                     iso_base: np.ndarray | None = None) -> Propagator:
    """``ro = ro_ex + ro_iso`` from the constitutive heat-exchange laws."""
    eig = np.linalg.eigh(rho.matrix)[1] if diagonal else None
    ops, t = exchange_targets(ham, temps, omega_ex, rho, k_B=k_B, z=z, contact_consistent=contact_consistent)
    ex = solve_trace_constraints(ops, t, eigvecs=eig)
    ops, t = iso_targets(ham, temps, omega_int, rho, hbar=hbar)
    iso = solve_trace_constraints(ops, t, eigvecs=eig, base=iso_base)
    return Propagator.from_split(ex, iso)


# ---------------------------------------------------------------------------
# policies: callables (t, rho, ham) -> Propagator used by the integrator


class NoPropagator:
    """Original quantum mechanics: ``ro = 0``."""

    name = "none"

    def __call__(self, t, rho, ham):
        return Propagator.zero(rho.dim)


@dataclass
class SeparationPolicy:
    """Separation-axiom propagator on each sub-system, lifted to the
    composite space.  The whole propagator is dissipative (``ro_ex = 0``)."""

    z: float = 1.0
    eps: float = RATE_EPS
    name: str = "separation"

    def __call__(self, t, rho: DensityOperator, ham: HamiltonianTriple):
        dims = rho.dims
        if not dims.bipartite:
            ro = separation_propagator(ham.h1, rho, self.z, self.eps).matrix
        else:
            rho1 = partial_trace(rho.matrix, 2, dims)
            rho2 = partial_trace(rho.matrix, 1, dims)
            ro1 = separation_propagator(ham.local(1), rho1, self.z, self.eps).matrix
            ro2 = separation_propagator(ham.local(2), rho2, self.z, self.eps).matrix
            ro = lift_local(ro1, ro2, rho1, rho2)
        return Propagator.from_split(np.zeros_like(ro), ro)


@dataclass
class ReservoirPolicy:
    """System #1 coupled to a canonical reservoir #2 whose temperature
    follows ``T_HR(t) = T0 + Tdot * t``."""

    T0: float
    Tdot: float
    hbar: float = 1.0
    k_B: float = 1.0
    name: str = "reservoir"

    def spec(self, t: float, h2_local: np.ndarray) -> ReservoirSpec:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return ReservoirSpec(self.T0 + self.Tdot * t, self.Tdot, h2_local)

    def reservoir_info(self, t, ham) -> tuple[float, float, float]:
        """``(T_HR, Tdot_HR, C_HR)`` at time ``t`` for the ledger."""
        spec = self.spec(t, ham.local(2))
        return spec.T_HR, spec.Tdot_HR, reservoir_heat_capacity(spec, self.k_B)

    def __call__(self, t, rho, ham):
        if not rho.dims.bipartite:
            raise ValueError("reservoir policy needs a bipartite system")
        return reservoir_full_propagator(self.spec(t, ham.local(2)), ham, rho, self.hbar, self.k_B)


@dataclass
class ConstrainedPolicy:
    """Exchange/iso split built from constitutive laws.

    ``temperatures`` is a callable ``t -> Temperatures``.  In ``extracted``
    mode the contact temperatures are replaced by the ones extracted from the
    current state (see ``probe_contact_temperature``).
    """

    temperatures: Callable[[float], Temperatures]
    omega_ex: object
    omega_int: object
    mode: str = "prescribed"
    diagonal: bool = False
    contact_consistent: bool = False
    iso_separation: bool = False
    hbar: float = 1.0
    k_B: float = 1.0
    z: float = 1.0
    name: str = "constrained"

    def effective_temperatures(self, t, rho, ham) -> Temperatures:
        temps = self.temperatures(t)
        if self.mode == "extracted":
            th1 = probe_contact_temperature(rho, ham, 1, k_B=self.k_B)
            th2 = probe_contact_temperature(rho, ham, 2, k_B=self.k_B) if rho.dims.bipartite else temps.theta2
            temps = temps.replace(theta1=th1, theta2=th2)
            if not rho.dims.bipartite:
                temps = temps.replace(theta=th1)
        elif self.mode != "prescribed":
            raise ValueError(f"unknown temperature mode {self.mode!r}")
        return temps

    def __call__(self, t, rho, ham):
        temps = self.effective_temperatures(t, rho, ham)
        base = None
        if self.iso_separation:
            base = SeparationPolicy(self.z)(t, rho, ham).matrix
        return split_propagator(
            ham, rho, temps, self.omega_ex, self.omega_int,
            hbar=self.hbar, k_B=self.k_B, z=self.z, diagonal=self.diagonal,
            contact_consistent=self.contact_consistent, iso_base=base,
        )
