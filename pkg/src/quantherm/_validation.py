"""Input validation helpers shared by the public functions."""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Raised when operator shapes do not agree."""


def as_square(a, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a complex 2-d square array, raising on bad shape."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_same_dim(*ops: np.ndarray, names: tuple[str, ...] | None = None) -> int:
    dims = [op.shape[-1] for op in ops]
    if len(set(dims)) != 1:
        labels = names or tuple(f"arg{i}" for i in range(len(ops)))
        detail = ", ".join(f"{n}={d}" for n, d in zip(labels, dims))
        raise DimensionError(f"dimension mismatch: {detail}")
    return dims[0]


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def real_trace(a: np.ndarray, tol: float = 1e-10, what: str = "trace") -> float:
    """Real part of ``Tr(a)``.

    Traces of products of Hermitian operators must be real; an imaginary part
    above ``tol`` (relative to the magnitude) means Hermiticity was lost
    upstream and is treated as a hard error.
    """
    tr = np.trace(a)
    scale = max(1.0, abs(tr.real))
    if abs(tr.imag) > tol * scale:
        raise FloatingPointError(
            f"{what} has imaginary part {tr.imag:.3e}; Hermiticity broken upstream"
        )
    return float(tr.real)


def trace_of_product(a: np.ndarray, b: np.ndarray, tol: float = 1e-10, what: str = "trace") -> float:
    """``Re Tr(a b)`` computed without forming the product."""
    tr = np.einsum("ij,ji->", a, b)
    scale = max(1.0, abs(tr.real))
    if abs(tr.imag) > tol * scale:
        raise FloatingPointError(
            f"{what} has imaginary part {tr.imag:.3e}; Hermiticity broken upstream"
        )
    return float(tr.real)
