"""Dense linear algebra and statistics primitives.

Matrices are plain 2-D ``float64`` numpy arrays with objects stored as rows
(``N x d``). Random streams are ``numpy.random.Generator`` objects backed by
PCG64, which produces identical streams on every platform for a given seed.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from sklearn.utils import check_array

from .exceptions import (
    EmptyListError,
    EmptyMatrixError,
    NoConvergenceError,
    NonFiniteError,
    ZeroRowError,
)

ZERO_ROW_TOL = 1e-12


def as_matrix(m, name: str = "matrix", allow_empty: bool = False) -> np.ndarray:
    """Validate ``m`` as a finite 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] == 0 and not allow_empty:
        raise EmptyMatrixError(f"{name} has no rows")
    if arr.size and not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")
    if arr.shape[0] == 0:
        return arr
    return check_array(arr, dtype=np.float64, ensure_min_features=0, copy=False)


def as_generator(seed=None) -> np.random.Generator:
    """Return a PCG64-backed generator.

    An existing ``Generator`` is passed through untouched so callers can share
    one stream across several draws.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        seed = 0
    return np.random.Generator(np.random.PCG64(int(seed)))


def unit_normalize_rows(m) -> np.ndarray:
    m = as_matrix(m)
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(norms < ZERO_ROW_TOL)
    if bad.size:
        raise ZeroRowError(bad[0])
    return m / norms[:, None]


def column_mean(m) -> np.ndarray:
    m = as_matrix(m)
    return m.mean(axis=0)


def gram(m) -> np.ndarray:
    """Pairwise inner products of the rows of ``m``."""
    m = as_matrix(m, allow_empty=True)
    g = m @ m.T
    # symmetrize away BLAS rounding asymmetry
    return 0.5 * (g + g.T)


def svd(m):
    """Thin SVD ``m = U @ diag(S) @ V.T``.

    Returns ``(U, S, V)`` with ``V`` holding right singular vectors as columns.
    """
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergenceError(str(exc)) from exc
    return u, s, vt.T


def percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile.

    Sort ascending and return the element with 1-based rank ``ceil(p/100*n)``,
    clamped to ``[1, n]``.
    """
    vals = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = vals.size
    if n == 0:
        raise EmptyListError("percentile of an empty list")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"p must lie in [0, 100], got {p}")
    rank = math.ceil(p * n / 100.0)
    rank = min(max(rank, 1), n)
    return float(vals[rank - 1])


def center_columns(m) -> np.ndarray:
    m = as_matrix(m)
    return m - m.mean(axis=0, keepdims=True)
