"""Permutation-matched correlation between two sparse code matrices.

Two dictionaries learned independently index their features in arbitrary
order, so codes are compared after the best feature permutation: an exact
maximum-weight perfect matching on the ``D x D`` co-activation matrix.
Significance comes from a null built by shuffling the objects on one side.
"""
from __future__ import annotations

from collections import deque
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from .exceptions import DegenerateNullError, NonFiniteError, NotSquareError, RowCountMismatchError
from .numerics import as_generator


@dataclass
class MatchResult:
    permutation: np.ndarray  # permutation[i] = column of z2 matched to column i of z1
    total_weight: float
    correlation: float

    def to_dict(self, include_permutation: bool = False) -> dict:
        out = {"total_weight": self.total_weight, "correlation": self.correlation}
        if include_permutation:
            out["permutation"] = [int(p) for p in self.permutation]
        return out


@dataclass
class NullDistribution:
    draws: list[float]
    mean: float
    std: float
    observed: float
    zscore: float
    min: float
    max: float

    def to_dict(self, include_draws: bool = False) -> dict:
        out = asdict(self)
        if not include_draws:
            out.pop("draws")
        return out


def _tight_alternatives(w: np.ndarray, perm: np.ndarray, tol: float) -> list[np.ndarray]:
    """Columns each row can take in *some* maximum-weight matching.

    Works on the exchange graph over rows, where edge ``a -> b`` (row ``a``
    takes row ``b``'s column) costs the weight lost by row ``a``. An edge lies
    on a zero-cost cycle, and hence in an alternative optimum, iff its
    reduced cost is zero and both ends share a strongly connected component
    of the zero-reduced-cost subgraph.
    """
    n = w.shape[0]
    own = w[np.arange(n), perm]
    cost = own[:, None] - w[:, perm]
    dist = np.zeros(n)
    for _ in range(n + 1):
        cand = (dist[:, None] + cost).min(axis=0)
        improved = cand < dist - tol
        if not improved.any():
            break
        dist = np.where(improved, cand, dist)
    reduced = cost + dist[:, None] - dist[None, :]
    tight = reduced <= tol
    np.fill_diagonal(tight, False)
    allowed = [np.array([perm[a]]) for a in range(n)]
    if not tight.any():
        return allowed
    _, labels = connected_components(sp.csr_matrix(tight), directed=True, connection="strong")
    same = labels[:, None] == labels[None, :]
    alt = tight & same
    for a in np.flatnonzero(alt.any(axis=1)):
        allowed[a] = np.sort(np.concatenate([[perm[a]], perm[np.flatnonzero(alt[a])]]))
    return allowed


def _lexicographic_refine(perm: np.ndarray, allowed: list[np.ndarray]) -> np.ndarray:
    """Smallest permutation, in lexicographic order, using only allowed edges."""
    n = perm.size
    match = perm.copy()
    owner = np.empty(n, dtype=np.int64)
    owner[match] = np.arange(n)
    for i in range(n):
        for j in allowed[i]:
            if j >= match[i]:
                break
            r0 = owner[j]
            if r0 < i:
                continue
            target = match[i]
            # alternating path over unfixed rows: r0 gives up j, each row
            # moves onto the next row's column, the last one takes `target`
            parent = {r0: None}
            queue = deque([r0])
            last = None
            while queue and last is None:
                r = queue.popleft()
                for c in allowed[r]:
                    if c == target:
                        last = r
                        break
                    nxt = owner[c]
                    if nxt > i and nxt not in parent:
                        parent[nxt] = r
                        queue.append(nxt)
            if last is None:
                continue
            r, new = last, target
            while r is not None:
                old = match[r]
                match[r] = new
                owner[new] = r
                r, new = parent[r], old
            match[i] = j
            owner[j] = i
            break
    return match


def assignment_max(weights) -> tuple[np.ndarray, float]:
    """Exact maximum-weight perfect matching.

    Returns ``(permutation, total_weight)`` with row ``i`` matched to column
    ``permutation[i]``. Among optimal permutations the lexicographically
    smallest is returned.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise NotSquareError(f"weights must be square, got shape {w.shape}")
    if not np.isfinite(w).all():
        raise NonFiniteError("weights contain NaN or Inf")
    n = w.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    _, cols = linear_sum_assignment(w, maximize=True)
    perm = cols.astype(np.int64)
    scale = max(1.0, float(np.abs(w).max()))
    tol = 1e-12 * scale * n
    allowed = _tight_alternatives(w, perm, tol)
    if any(a.size > 1 for a in allowed):
        perm = _lexicographic_refine(perm, allowed)
    total = float(w[np.arange(n), perm].sum())
    return perm, total


def _as_codes(z) -> sp.csr_matrix:
    return sp.csr_matrix(z, dtype=np.float64)


def _pad_columns(z: sp.csr_matrix, width: int) -> sp.csr_matrix:
    if z.shape[1] == width:
        return z
    return sp.csr_matrix((z.data, z.indices, z.indptr), shape=(z.shape[0], width))


def permutation_correlation(z1, z2) -> MatchResult:
    """Best-permutation correlation ``max_P <Z1, Z2 P> / (|Z1|_F |Z2|_F)``."""
    z1 = _as_codes(z1)
    z2 = _as_codes(z2)
    if z1.shape[0] != z2.shape[0]:
        raise RowCountMismatchError(f"row counts differ: {z1.shape[0]} vs {z2.shape[0]}")
    width = max(z1.shape[1], z2.shape[1])
    z1 = _pad_columns(z1, width)
    z2 = _pad_columns(z2, width)
    weights = (z1.T @ z2).toarray()
    perm, total = assignment_max(weights)
    den = sp.linalg.norm(z1) * sp.linalg.norm(z2)
    corr = float(total / den) if den > 0 else 0.0
    return MatchResult(permutation=perm, total_weight=total, correlation=corr)


def permutation_null(z1, z2, n_draws: int = 100, seed=None) -> NullDistribution:
    """Null distribution of the matched correlation under random object shuffles of ``z1``."""
    if n_draws < 2:
        raise ValueError("n_draws must be >= 2")
    z1 = _as_codes(z1)
    z2 = _as_codes(z2)
    observed = permutation_correlation(z1, z2).correlation
    rng = as_generator(seed)
    n = z1.shape[0]
    draws = np.array([
        permutation_correlation(z1[rng.permutation(n)], z2).correlation for _ in range(n_draws)
    ])
    mean = float(draws.mean())
    std = float(draws.std())
    if std < 1e-12:
        raise DegenerateNullError("null draws have (near) zero spread")
    return NullDistribution(
        draws=[float(d) for d in draws], mean=mean, std=std, observed=float(observed),
        zscore=(observed - mean) / std, min=float(draws.min()), max=float(draws.max()),
    )
