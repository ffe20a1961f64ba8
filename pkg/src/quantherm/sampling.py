"""Seeded random operators for tests, scenarios and property checks."""

from __future__ import annotations

import numpy as np

from .operators import hermitian


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def random_hermitian(d: int, rng=None, scale: float = 1.0) -> np.ndarray:
    """GUE-like Hermitian matrix with entries of order ``scale``."""
    rng = _rng(rng)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * hermitian(g) / np.sqrt(2.0)


def random_unitary(d: int, rng=None) -> np.ndarray:
    """Haar unitary via QR with phase correction."""
    rng = _rng(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng=None, rank: int | None = None, floor: float = 0.0) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble.

    ``rank`` defaults to ``d`` (full rank).  A positive ``floor`` mixes in
    the maximally mixed state, ``(1 - floor d) rho + floor I``, which keeps
    every eigenvalue at or above ``floor``.
    """
    rng = _rng(rng)
    k = d if rank is None else int(rank)
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    rho = hermitian(rho / np.trace(rho).real)
    if floor > 0.0:
        if floor * d >= 1.0:
            raise ValueError("floor too large for dimension")
        rho = (1.0 - floor * d) * rho + floor * np.eye(d)
    return rho


def random_pure(d: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
