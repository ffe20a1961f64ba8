"""Dense Hermitian operator algebra on bipartite Hilbert spaces.

Composite basis ordering is row-major: the product vector
``|k>_1 |l>_2`` sits at index ``k * d2 + l``, which is what ``np.kron``
produces.  All matrix functions go through a full Hermitian
eigendecomposition; dimensions here are small (tens), so O(d^3) is fine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import DimensionError, as_square, check_same_dim

__all__ = [
    "HilbertDims",
    "hermitian",
    "hermitian_deviation",
    "embed_left",
    "embed_right",
    "partial_trace",
    "commutator",
    "mat_log_regularized",
    "mat_exp_hermitian",
    "ENTROPY_EPS",
    "RATE_EPS",
]

# Eigenvalue floors for the matrix logarithm.  Entropy needs 0 ln 0 -> 0,
# rate formulas need a bounded operator.
ENTROPY_EPS = 1e-300
RATE_EPS = 1e-12


@dataclass(frozen=True)
class HilbertDims:
    """Dimensions ``(d1, d2)`` of a bipartite system.

    An undecomposed system of dimension ``d`` is represented as ``(d, 1)``.
    """

    d1: int
    d2: int = 1

    def __post_init__(self):
        for name in ("d1", "d2"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def d(self) -> int:
        return self.d1 * self.d2

    @property
    def bipartite(self) -> bool:
        return self.d2 > 1

    def sub(self, which: int) -> int:
        if which == 1:
            return self.d1
        if which == 2:
            return self.d2
        raise ValueError(f"sub-system index must be 1 or 2, got {which!r}")

    @classmethod
    def of(cls, dims) -> "HilbertDims":
        if isinstance(dims, HilbertDims):
            return dims
        if np.ndim(dims) == 0:
            return cls(int(dims), 1)
        dims = tuple(dims)
        if len(dims) == 1:
            return cls(int(dims[0]), 1)
        if len(dims) == 2:
            return cls(int(dims[0]), int(dims[1]))
        raise ValueError(f"only uni- and bipartite dims are supported, got {dims!r}")


def hermitian_deviation(a: np.ndarray) -> float:
    """Largest entry of ``|a - a^dagger|``."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().swapaxes(-1, -2)), initial=0.0))


def hermitian(a) -> np.ndarray:
    """Hermitian part ``(a + a^dagger) / 2`` as a complex array.

    Works on stacks of matrices (leading axes are batch axes).
    """
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().swapaxes(-1, -2))


def embed_left(a, dims) -> np.ndarray:
    """``a (x) I_2`` for an operator ``a`` acting on sub-system 1."""
    dims = HilbertDims.of(dims)
    a = as_square(a, "A")
    if a.shape[0] != dims.d1:
        raise DimensionError(f"operator has dim {a.shape[0]} but d1 = {dims.d1}")
    return np.kron(a, np.eye(dims.d2))


def embed_right(b, dims) -> np.ndarray:
    """``I_1 (x) b`` for an operator ``b`` acting on sub-system 2."""
    dims = HilbertDims.of(dims)
    b = as_square(b, "B")
    if b.shape[0] != dims.d2:
        raise DimensionError(f"operator has dim {b.shape[0]} but d2 = {dims.d2}")
    return np.kron(np.eye(dims.d1), b)


def partial_trace(a, over: int, dims) -> np.ndarray:
    """Trace out sub-system ``over`` (1 or 2) of a composite operator.

    ``over=2`` returns the sub-system-1 operator ``Tr_2 A`` (dim ``d1``),
    ``over=1`` returns ``Tr_1 A`` (dim ``d2``).  Leading batch axes are kept.
    """
    dims = HilbertDims.of(dims)
    a = np.asarray(a)
    if a.shape[-2:] != (dims.d, dims.d):
        raise DimensionError(f"operator has shape {a.shape[-2:]} but d1*d2 = {dims.d}")
    batch = a.shape[:-2]
    t = a.reshape(batch + (dims.d1, dims.d2, dims.d1, dims.d2))
    if over == 2:
        return np.trace(t, axis1=-3, axis2=-1)
    if over == 1:
        return np.trace(t, axis1=-4, axis2=-2)
    raise ValueError(f"'over' must be 1 or 2, got {over!r}")


def commutator(a, b) -> np.ndarray:
    """``ab - ba``; anti-Hermitian when both arguments are Hermitian."""
    a = np.asarray(a)
    b = np.asarray(b)
    check_same_dim(a, b, names=("A", "B"))
    return a @ b - b @ a


def _spectral(a: np.ndarray):
    w, v = np.linalg.eigh(hermitian(a))
    return w, v


def _reassemble(v: np.ndarray, f: np.ndarray) -> np.ndarray:
    # v diag(f) v^dagger, batched
    return hermitian((v * f[..., None, :]) @ v.conj().swapaxes(-1, -2))


def mat_log_regularized(rho, eps: float = ENTROPY_EPS) -> np.ndarray:
    """Matrix logarithm of a positive semidefinite operator.

    Eigenvalues below ``eps`` are raised to ``eps`` before the scalar log,
    so rank-deficient states give a finite (large negative) result.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    w, v = _spectral(np.asarray(rho, dtype=complex))
    return _reassemble(v, np.log(np.maximum(w, eps)))


def mat_exp_hermitian(a) -> np.ndarray:
    """``exp(a)`` for Hermitian ``a`` via eigendecomposition."""
    w, v = _spectral(np.asarray(a, dtype=complex))
    return _reassemble(v, np.exp(w))
