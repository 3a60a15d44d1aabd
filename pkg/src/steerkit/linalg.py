"""Dense complex linear algebra on plain numpy arrays.

Operators are numpy arrays of complex128 in row-major order.  Hermiticity
is validated at entry points against a max-abs entry tolerance (1e-12 by
default); everything downstream assumes validated inputs.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_ATOL = 1e-12


class NumericalFailure(RuntimeError):
    """Raised when an iterative numerical routine cannot certify its result."""


def as_operator(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def is_hermitian(m, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(m)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.abs(a - a.conj().T).max() <= atol


def require_hermitian(m, atol: float = HERMITIAN_ATOL, what: str = "operator") -> np.ndarray:
    a = as_operator(m)
    dev = np.abs(a - a.conj().T).max()
    if dev > atol:
        raise ValueError(f"{what} is not Hermitian (max deviation {dev:.3e} > {atol:.1e})")
    return a


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def eig_max(h, atol: float = HERMITIAN_ATOL) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a normalized eigenvector of a Hermitian matrix."""
    a = require_hermitian(h, atol=atol)
    vals, vecs = np.linalg.eigh(a)
    return float(vals[-1]), vecs[:, -1]


def eig_min(h, atol: float = HERMITIAN_ATOL) -> float:
    a = require_hermitian(h, atol=atol)
    return float(np.linalg.eigvalsh(a)[0])


def trace_norm(h) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    a = require_hermitian(h)
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def kron(a, b) -> np.ndarray:
    return np.kron(as_operator(a), as_operator(b))


def partial_trace(m, dims: tuple[int, int], over: str) -> np.ndarray:
    """Trace out subsystem ``over`` in {"A", "B"} of an operator on dA x dB."""
    a = as_operator(m)
    da, db = int(dims[0]), int(dims[1])
    if da < 1 or db < 1 or a.shape[0] != da * db:
        raise ValueError(f"dimension mismatch: operator side {a.shape[0]} != {da}*{db}")
    t = a.reshape(da, db, da, db)
    if over == "A":
        return np.einsum("iaib->ab", t)
    if over == "B":
        return np.einsum("aibi->ab", t)
    raise ValueError(f"over must be 'A' or 'B', got {over!r}")
