"""Fixed-step RK4 integration of the modified von Neumann equation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._validation import DimensionError, as_square, check_positive
from .operators import HilbertDims, commutator, hermitian, hermitian_deviation, partial_trace
from .state import DensityOperator, Propagator, log_z_rho
from .thermo import HamiltonianTriple, Temperatures, compute_ledger

__all__ = [
    "PositivityError",
    "rhs_full",
    "rhs_traced",
    "modified_propagator",
    "Trajectory",
    "evolve",
    "evolve_traced",
    "evolve_many",
    "BatchResult",
    "POSITIVITY_ABORT",
]

POSITIVITY_ABORT = 1e-8


class PositivityError(FloatingPointError):
    """The state left the positive cone by more than the abort threshold."""

    def __init__(self, t: float, step: int, min_eig: float):
        super().__init__(f"positivity breach at step {step} (t = {t:.10g}): min eigenvalue {min_eig:.3e}")
        self.t = t
        self.step = step
        self.min_eig = min_eig


def _h_matrix(h) -> np.ndarray:
    return h.total if isinstance(h, HamiltonianTriple) else np.asarray(h, dtype=complex)


def rhs_full(rho, h, ro, hbar: float = 1.0) -> np.ndarray:
    """``-(i/hbar)[H, rho] + ro``."""
    r = rho.matrix if isinstance(rho, DensityOperator) else as_square(rho, "rho")
    hm = _h_matrix(h)
    rm = np.asarray(ro.matrix if isinstance(ro, Propagator) else ro, dtype=complex)
    if hm.shape != r.shape or rm.shape != r.shape:
        raise DimensionError(f"rho {r.shape}, H {hm.shape} and ro {rm.shape} must agree")
    return hermitian((-1j / hbar) * commutator(hm, r) + rm)


def modified_propagator(rho: DensityOperator, ham: HamiltonianTriple, ro, which: int,
                        hbar: float = 1.0) -> np.ndarray:
    """``-(i/hbar) Tr_B[H12, rho] + ro^A`` for sub-system ``which``."""
    over = 2 if which == 1 else 1
    rm = ro.matrix if isinstance(ro, Propagator) else np.asarray(ro, dtype=complex)
    flow = (-1j / hbar) * commutator(ham.h12, rho.matrix) + rm
    return hermitian(partial_trace(flow, over, rho.dims))


def rhs_traced(rho: DensityOperator, ham: HamiltonianTriple, ro, hbar: float = 1.0):
    """Equations of motion of both reduced states.

    ``rho_A_dot = -(i/hbar)[H^A, rho^A] + modified propagator of A``, all in
    the local spaces.
    """
    if not rho.dims.bipartite:
        raise ValueError("traced equations need a bipartite state")
    out = []
    for which in (1, 2):
        over = 2 if which == 1 else 1
        rho_a = partial_trace(rho.matrix, over, rho.dims)
        h_a = ham.local(which)
        out.append(hermitian((-1j / hbar) * commutator(h_a, rho_a)) + modified_propagator(rho, ham, ro, which, hbar))
    return tuple(out)


# ---------------------------------------------------------------------------


def _as_model(h) -> Callable[[float], HamiltonianTriple]:
    if isinstance(h, HamiltonianTriple):
        return lambda t: h
    if callable(h):
        return h
    triple = HamiltonianTriple.single(np.asarray(h, dtype=complex))
    return lambda t: triple


def _as_temps(temps) -> Callable[[float], Temperatures]:
    if temps is None:
        default = Temperatures()
        return lambda t: default
    if isinstance(temps, Temperatures):
        return lambda t: temps
    return temps


def _zero_policy(t, rho, ham):
    return Propagator.zero(rho.dim)


def _check_finite(m: np.ndarray, t: float, step: int) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise FloatingPointError(f"non-finite state at step {step} (t = {t:.10g})")
    return m


def _sanitize(m: np.ndarray, t: float, step: int):
    """Symmetrize, renormalize and guard positivity; returns (matrix, deviation)."""
    _check_finite(m, t, step)
    dev = hermitian_deviation(m)
    m = hermitian(m)
    m = m / np.trace(m).real
    w, v = np.linalg.eigh(m)
    if w[0] < -POSITIVITY_ABORT:
        raise PositivityError(t, step, float(w[0]))
    if w[0] < 0.0:
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        m = hermitian((v * w) @ v.conj().T)
    return m, dev


def _n_steps(t_span, dt) -> int:
    t0, t1 = (float(x) for x in t_span)
    dt = check_positive(dt, "dt")
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    n = (t1 - t0) / dt
    steps = int(round(n))
    if abs(n - steps) > 1e-9 * max(1.0, n):
        raise ValueError(f"t_span length {t1 - t0} is not a whole number of steps dt = {dt}")
    return steps


@dataclass
class Trajectory:
    times: np.ndarray
    states: list = field(default_factory=list)
    propagators: list = field(default_factory=list)
    ledger: list = field(default_factory=list)

    @property
    def final(self) -> DensityOperator:
        return self.states[-1]

    def ledger_rows(self) -> np.ndarray:
        return np.array([row.as_row() for row in self.ledger])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.ledger])


def evolve(initial: DensityOperator, hamiltonian, policy=None, t_span=(0.0, 1.0), dt: float = 1e-2, *,
           temperatures=None, hbar: float = 1.0, k_B: float = 1.0, z: float = 1.0,
           record_ledger: bool = True, keep_states: bool = True) -> Trajectory:
    """Integrate ``rho_dot = -(i/hbar)[H(t), rho] + ro(t, rho)`` with RK4.

    ``hamiltonian`` is a ``HamiltonianTriple``, a callable ``t -> triple``
    (e.g. ``HamiltonianModel``) or a plain matrix.  ``policy(t, rho, ham)``
    returns the propagator; it is evaluated at every stage.  After each step
    the state is symmetrized, renormalized and checked for positivity.
    """
    model = _as_model(hamiltonian)
    policy = _zero_policy if policy is None else policy
    temps_of = _as_temps(temperatures)
    eff_temps = getattr(policy, "effective_temperatures", None)
    res_info = getattr(policy, "reservoir_info", None)
    steps = _n_steps(t_span, dt)
    t0 = float(t_span[0])
    dims = initial.dims
    times = t0 + dt * np.arange(steps + 1)
    traj = Trajectory(times=times)

    def stage(t, m, n):
        _check_finite(m, t, n)
        ham = model(t)
        ro = policy(t, DensityOperator.unchecked(m, dims), ham)
        return rhs_full(m, ham, ro, hbar)

    def record(t, rho, ham, ro):
        if keep_states:
            traj.states.append(rho)
            traj.propagators.append(ro)
        if record_ledger:
            temps = eff_temps(t, rho, ham) if eff_temps is not None else temps_of(t)
            res = res_info(t, ham) if res_info is not None else None
            traj.ledger.append(compute_ledger(t, rho, ham, ro, temps, k_B=k_B, hbar=hbar, z=z,
                                              reservoir=res, rho_dot=rhs_full(rho, ham, ro, hbar)))

    rho = initial
    try:
        for n in range(steps + 1):
            t = times[n]
            ham = model(t)
            ro = policy(t, rho, ham)
            record(t, rho, ham, ro)
            if n == steps:
                break
            m = rho.matrix
            k1 = rhs_full(m, ham, ro, hbar)
            k2 = stage(t + 0.5 * dt, m + 0.5 * dt * k1, n + 1)
            k3 = stage(t + 0.5 * dt, m + 0.5 * dt * k2, n + 1)
            k4 = stage(t + dt, m + dt * k3, n + 1)
            new = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            new, dev = _sanitize(new, times[n + 1], n + 1)
            rho = DensityOperator(new, dims)
            object.__setattr__(rho, "deviation", dev)
    except Exception as e:
        # hand the rows computed so far to the caller
        e.partial = traj
        raise
    if not keep_states:
        traj.states.append(rho)
        traj.propagators.append(ro)
    return traj


def evolve_traced(initial: DensityOperator, hamiltonian, policy=None, t_span=(0.0, 1.0), dt: float = 1e-2,
                  hbar: float = 1.0):
    """Co-integrate the reduced states with their own equations of motion.

    The traced equations need the composite state (through the coupling
    and the propagator), so ``(rho, rho1, rho2)`` are advanced together with
    one RK4 scheme.  Returns the final ``(rho1, rho2)`` of the traced
    equations.  No renormalization is applied to any component.
    """
    if not initial.dims.bipartite:
        raise ValueError("traced integration needs a bipartite state")
    model = _as_model(hamiltonian)
    policy = _zero_policy if policy is None else policy
    steps = _n_steps(t_span, dt)
    dims = initial.dims
    t = float(t_span[0])

    def f(t, y):
        m, _, _ = y
        ham = model(t)
        rho = DensityOperator.unchecked(m, dims)
        ro = policy(t, rho, ham)
        d1, d2 = rhs_traced(rho, ham, ro, hbar)
        return rhs_full(m, ham, ro, hbar), d1, d2

    y = (initial.matrix.copy(), partial_trace(initial.matrix, 2, dims), partial_trace(initial.matrix, 1, dims))
    add = lambda y, k, c: tuple(a + c * b for a, b in zip(y, k))  # noqa: E731
    for n in range(steps):
        k1 = f(t, y)
        k2 = f(t + 0.5 * dt, add(y, k1, 0.5 * dt))
        k3 = f(t + 0.5 * dt, add(y, k2, 0.5 * dt))
        k4 = f(t + dt, add(y, k3, dt))
        y = tuple(hermitian(a + (dt / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
        t += dt
    return y[1], y[2]


@dataclass
class BatchResult:
    states: np.ndarray
    max_trace_error: float
    max_spectrum_drift: float
    max_entropy_rate: float
    min_eig: float


def evolve_many(states, h, dt: float, steps: int, hbar: float = 1.0, k_B: float = 1.0,
                check_every: int = 100) -> BatchResult:
    """Free evolution (``ro = 0``) of a stack of states under a static ``H``.

    Vectorized over the leading axis.  Tracks the worst trace error and the
    worst spectrum drift relative to the initial spectra; the entropy rate
    ``-k_B Tr(ro ln rho)`` with ``ro = 0`` is evaluated on the sampled states.
    """
    x = hermitian(np.asarray(states, dtype=complex))
    hm = _h_matrix(h)
    spec0 = np.linalg.eigvalsh(x)
    c = -1j / hbar
    ro = np.zeros_like(hm)
    f = lambda m: c * (hm @ m - m @ hm)  # noqa: E731
    tr_err = drift = rate = 0.0
    min_eig = float(spec0.min())
    for n in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = hermitian(x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        tr = np.trace(x, axis1=-2, axis2=-1).real
        x = x / tr[:, None, None]
        tr_err = max(tr_err, float(np.max(np.abs(np.trace(x, axis1=-2, axis2=-1).real - 1.0))))
        if n % check_every == 0 or n == steps:
            w = np.linalg.eigvalsh(x)
            if w.min() < -POSITIVITY_ABORT:
                raise PositivityError(n * dt, n, float(w.min()))
            min_eig = min(min_eig, float(w.min()))
            drift = max(drift, float(np.max(np.abs(w - spec0))))
            rate = max(rate, max(abs(k_B * np.einsum("ij,ji->", ro, log_z_rho(m)).real) for m in x))
    return BatchResult(x, tr_err, drift, rate, min_eig)
