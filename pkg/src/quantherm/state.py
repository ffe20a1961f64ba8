"""Density operators, propagators, equilibrium distributions and entropies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import DimensionError, as_square, check_positive
from .operators import (
    ENTROPY_EPS,
    RATE_EPS,
    HilbertDims,
    embed_left,
    embed_right,
    hermitian,
    hermitian_deviation,
    mat_log_regularized,
    partial_trace,
)

__all__ = [
    "DensityOperator",
    "Propagator",
    "from_weights",
    "propagator_from_weight_rates",
    "canonical",
    "log_partition",
    "microcanonical",
    "shannon_entropy",
    "partial_entropies",
    "log_z_rho",
    "PSD_TOL",
    "TRACE_TOL",
]

PSD_TOL = 1e-10
TRACE_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix.

    The input is Hermitian-symmetrized on construction; the size of the
    removed anti-Hermitian part is kept in ``deviation``.
    """

    matrix: np.ndarray
    dims: HilbertDims = None
    deviation: float = field(default=0.0, compare=False)

    def __post_init__(self):
        m = as_square(self.matrix, "density matrix")
        dims = HilbertDims(m.shape[0], 1) if self.dims is None else HilbertDims.of(self.dims)
        if dims.d != m.shape[0]:
            raise DimensionError(f"density matrix has dim {m.shape[0]}, dims give {dims.d}")
        object.__setattr__(self, "deviation", hermitian_deviation(m))
        m = hermitian(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -PSD_TOL:
            raise ValueError(f"density matrix not positive semidefinite: min eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def unchecked(cls, matrix, dims) -> "DensityOperator":
        """Wrap an already-sanitized matrix without spectral validation.

        Used for intermediate Runge-Kutta stage states, which need not be
        exactly positive.
        """
        obj = object.__new__(cls)
        m = hermitian(matrix)
        object.__setattr__(obj, "matrix", _frozen(m))
        object.__setattr__(obj, "dims", HilbertDims.of(dims))
        object.__setattr__(obj, "deviation", 0.0)
        return obj

    @property
    def dim(self) -> int:
        return self.dims.d

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def reduced(self, keep: int) -> "DensityOperator":
        """Reduced state of sub-system ``keep`` (1 or 2)."""
        over = 2 if keep == 1 else 1
        r = partial_trace(self.matrix, over, self.dims)
        return DensityOperator(r, HilbertDims(self.dims.sub(keep), 1))

    @classmethod
    def product(cls, rho1, rho2) -> "DensityOperator":
        r1 = rho1.matrix if isinstance(rho1, DensityOperator) else as_square(rho1)
        r2 = rho2.matrix if isinstance(rho2, DensityOperator) else as_square(rho2)
        return cls(np.kron(r1, r2), HilbertDims(r1.shape[0], r2.shape[0]))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Propagator:
    """Hermitian, traceless modifier of the von Neumann equation.

    Optionally carries the split into an exchange part ``ex`` and the part
    ``iso`` that survives isolation; ``ex + iso == matrix``.
    """

    matrix: np.ndarray
    ex: np.ndarray | None = None
    iso: np.ndarray | None = None

    def __post_init__(self):
        m = hermitian(as_square(self.matrix, "propagator"))
        scale = max(1.0, float(np.linalg.norm(m)))
        tr = np.trace(m).real
        if abs(tr) > TRACE_TOL * scale:
            raise ValueError(f"propagator must be traceless, Tr = {tr:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))
        if (self.ex is None) != (self.iso is None):
            raise ValueError("give both ex and iso parts or neither")
        if self.ex is not None:
            ex = hermitian(as_square(self.ex, "ro_ex"))
            iso = hermitian(as_square(self.iso, "ro_iso"))
            if ex.shape != m.shape or iso.shape != m.shape:
                raise DimensionError("split parts must match the propagator shape")
            gap = float(np.max(np.abs(ex + iso - m)))
            if gap > 1e-12 * scale:
                raise ValueError(f"ex + iso differs from the propagator by {gap:.3e}")
            for name, part in (("ro_ex", ex), ("ro_iso", iso)):
                if abs(np.trace(part).real) > TRACE_TOL * scale:
                    raise ValueError(f"{name} must be traceless")
            object.__setattr__(self, "ex", _frozen(ex))
            object.__setattr__(self, "iso", _frozen(iso))

    @classmethod
    def from_split(cls, ex, iso) -> "Propagator":
        ex = hermitian(ex)
        iso = hermitian(iso)
        return cls(ex + iso, ex, iso)

    @classmethod
    def zero(cls, d: int) -> "Propagator":
        z = np.zeros((d, d), dtype=complex)
        return cls(z, z, z)

    @property
    def has_split(self) -> bool:
        return self.ex is not None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def reduced(self, keep: int, dims) -> "Propagator":
        """Partial trace onto sub-system ``keep``; the split is traced too."""
        over = 2 if keep == 1 else 1
        tr = lambda a: partial_trace(a, over, dims)  # noqa: E731
        if self.has_split:
            return Propagator(tr(self.matrix), tr(self.ex), tr(self.iso))
        return Propagator(tr(self.matrix))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _check_basis(basis) -> np.ndarray:
    b = np.asarray(basis, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("basis must be a square array with basis vectors as columns")
    gram = b.conj().T @ b
    if np.max(np.abs(gram - np.eye(b.shape[1]))) > 1e-10:
        raise ValueError("basis is not orthonormal")
    return b


def from_weights(basis, p, dims=None) -> DensityOperator:
    """``sum_j p_j |phi_j><phi_j|`` for orthonormal columns ``basis[:, j]``."""
    b = _check_basis(basis)
    p = np.asarray(p, dtype=float)
    if p.shape != (b.shape[1],):
        raise DimensionError(f"need {b.shape[1]} weights, got {p.shape}")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("weights must lie in [0, 1]")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {p.sum()!r}, expected 1")
    return DensityOperator((b * p) @ b.conj().T, dims)


def propagator_from_weight_rates(basis, p_dot) -> Propagator:
    """``sum_j pdot_j |phi_j><phi_j|`` with ``sum_j pdot_j = 0``."""
    b = _check_basis(basis)
    p_dot = np.asarray(p_dot, dtype=float)
    if p_dot.shape != (b.shape[1],):
        raise DimensionError(f"need {b.shape[1]} weight rates, got {p_dot.shape}")
    if abs(p_dot.sum()) > 1e-12 * max(1.0, np.abs(p_dot).sum()):
        raise ValueError("weight rates must sum to zero")
    return Propagator((b * p_dot) @ b.conj().T)


def log_partition(h, theta: float, k_B: float = 1.0) -> float:
    """``ln Tr exp(-H / (k_B theta))`` computed without overflow."""
    theta = check_positive(theta, "theta")
    w = np.linalg.eigvalsh(hermitian(as_square(h, "H")))
    x = -w / (k_B * theta)
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def canonical(h, theta: float, k_B: float = 1.0, dims=None) -> DensityOperator:
    """Canonical state ``exp(-H/(k_B theta)) / Z``."""
    theta = check_positive(theta, "theta")
    h = hermitian(as_square(h, "H"))
    w, v = np.linalg.eigh(h)
    x = -w / (k_B * theta)
    p = np.exp(x - x.max())
    p /= p.sum()
    return DensityOperator((v * p) @ v.conj().T, dims)


def microcanonical(dim: int, dims=None) -> DensityOperator:
    """Equal-weight state ``I / dim``."""
    if int(dim) != dim or dim < 1:
        raise ValueError("dim must be a positive integer")
    return DensityOperator(np.eye(int(dim)) / dim, dims)


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def shannon_entropy(rho, k_B: float = 1.0, eps: float = ENTROPY_EPS) -> float:
    """``-k_B Tr(rho ln rho)`` from the spectrum, with ``0 ln 0 = 0``."""
    lam = np.linalg.eigvalsh(hermitian(_matrix(rho)))
    lam = np.clip(lam, 0.0, None)
    return float(-k_B * np.sum(lam * np.log(np.maximum(lam, eps))))


def partial_entropies(rho: DensityOperator, k_B: float = 1.0) -> tuple[float, float, float]:
    """Entropies of both reduced states and the subadditivity gap.

    Returns ``(S1, S2, S1 + S2 - S)``; the gap is non-negative.
    """
    s = shannon_entropy(rho, k_B)
    s1 = shannon_entropy(partial_trace(rho.matrix, 2, rho.dims), k_B)
    s2 = shannon_entropy(partial_trace(rho.matrix, 1, rho.dims), k_B)
    return s1, s2, s1 + s2 - s


def log_z_rho(rho, z: float = 1.0, eps: float = RATE_EPS) -> np.ndarray:
    """``ln(Z rho)`` with the eigenvalue floor used in rate formulas."""
    z = check_positive(z, "Z")
    m = _matrix(rho)
    return mat_log_regularized(m, eps) + np.log(z) * np.eye(m.shape[0])


def embedded_log_reduced(rho: DensityOperator, which: int, z: float = 1.0, eps: float = RATE_EPS) -> np.ndarray:
    """``ln(Z rho^A)`` of a reduced state, embedded in the composite space."""
    over = 2 if which == 1 else 1
    local = log_z_rho(partial_trace(rho.matrix, over, rho.dims), z, eps)
    if which == 1:
        return embed_left(local, rho.dims)
    return embed_right(local, rho.dims)
