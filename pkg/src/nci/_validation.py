"""Small input-validation helpers shared across modules."""

from __future__ import annotations

import numbers

import numpy as np

_SEED_LIMIT = 2**64


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise TypeError("seed must be an integer")
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return int(seed)


def as_matrix(A):
    """Return the dense array behind a matrix-like wrapper."""
    for attr in ("matrix", "entries"):
        if hasattr(A, attr):
            A = getattr(A, attr)
            break
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def check_hermitian(A, rtol=1e-12, name="matrix"):
    A = as_matrix(A)
    scale = max(float(np.max(np.abs(A))) if A.size else 0.0, 1.0)
    resid = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if resid > rtol * scale:
        raise ValueError(f"{name} is not Hermitian (residual {resid:.3e})")
    return A


def check_interval(window, name="window"):
    lo, hi = (float(v) for v in window)
    if not lo < hi:
        raise ValueError(f"{name} must satisfy lo < hi")
    return lo, hi
