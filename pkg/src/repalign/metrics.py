"""Representation similarity metrics.

All metrics compare two representations of the same ``N`` objects, given as
``N x d`` matrices with matching row order. Larger values mean more similar,
except for :func:`knn_edit_distance` where larger means less similar.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import (
    KTooLargeError,
    NotSquareError,
    RankDeficientError,
    RowCountMismatchError,
    SampleTooLargeError,
    TooFewSamplesError,
)
from .numerics import as_generator, as_matrix, center_columns, gram

METRIC_NAMES = ("cka", "cka_unbiased", "svcca", "knn_overlap", "knn_edit")
_PARAMETRIC = {"svcca", "knn_overlap", "knn_edit"}


@dataclass(frozen=True)
class MetricId:
    """A metric name plus its single integer parameter (``c`` or ``k``)."""

    name: str
    param: int | None = None

    def __post_init__(self):
        if self.name not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.name!r}; choose from {METRIC_NAMES}")
        if self.name in _PARAMETRIC:
            if self.param is None or int(self.param) < 1:
                raise ValueError(f"metric {self.name} needs a parameter >= 1")
            object.__setattr__(self, "param", int(self.param))
        elif self.param is not None:
            raise ValueError(f"metric {self.name} takes no parameter")

    @classmethod
    def parse(cls, text: str) -> "MetricId":
        """Parse ``"cka"``, ``"knn_overlap:10"`` or ``"svcca:100"``."""
        name, _, param = text.strip().partition(":")
        return cls(name, int(param) if param else None)

    @property
    def larger_is_more_similar(self) -> bool:
        return self.name != "knn_edit"

    def __str__(self):
        return self.name if self.param is None else f"{self.name}:{self.param}"


@dataclass
class AlignmentReport:
    metric: MetricId
    values: list[float]
    n_points: int
    seed: int | None = None
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        self.values = [float(v) for v in vals]
        self.mean = float(vals.mean()) if vals.size else float("nan")
        # population convention
        self.std = float(vals.std()) if vals.size else float("nan")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["metric"] = str(self.metric)
        return out


def _pair(f, g):
    f = as_matrix(f, "f")
    g = as_matrix(g, "g")
    if f.shape[0] != g.shape[0]:
        raise RowCountMismatchError(f"row counts differ: {f.shape[0]} vs {g.shape[0]}")
    return f, g


def linear_cka(f, g) -> float:
    """Linear CKA computed in feature space on column-centered inputs."""
    f, g = _pair(f, g)
    if f.shape[0] < 2:
        raise TooFewSamplesError("linear CKA needs at least 2 rows")
    fc = center_columns(f)
    gc = center_columns(g)
    cross = np.linalg.norm(gc.T @ fc) ** 2
    den = np.linalg.norm(fc.T @ fc) * np.linalg.norm(gc.T @ gc)
    if den == 0.0:
        return 0.0
    return float(min(max(cross / den, 0.0), 1.0))


def _unbiased_hsic(k: np.ndarray, l: np.ndarray) -> float:
    n = k.shape[0]
    k = k.copy()
    l = l.copy()
    np.fill_diagonal(k, 0.0)
    np.fill_diagonal(l, 0.0)
    ones_k = k.sum(axis=0)
    ones_l = l.sum(axis=0)
    trace_term = float(np.sum(k * l))  # tr(K L) for symmetric K, L
    total_term = float(ones_k.sum() * ones_l.sum()) / ((n - 1) * (n - 2))
    cross_term = 2.0 / (n - 2) * float(ones_k @ ones_l)
    return (trace_term + total_term - cross_term) / (n * (n - 3))


def unbiased_cka(f, g) -> float:
    """CKA built on the unbiased (U-statistic) HSIC estimator.

    Uses linear-kernel Gramians with zeroed diagonals. The value can be
    slightly negative for unrelated inputs.
    """
    f, g = _pair(f, g)
    n = f.shape[0]
    if n < 4:
        raise TooFewSamplesError(f"unbiased CKA needs N >= 4, got {n}")
    k = gram(f)
    l = gram(g)
    xy = _unbiased_hsic(k, l)
    xx = _unbiased_hsic(k, k)
    yy = _unbiased_hsic(l, l)
    den = xx * yy
    if den <= 0.0:
        return 0.0
    return float(xy / np.sqrt(den))


def _svd_projection(m: np.ndarray, c: int) -> np.ndarray:
    mc = center_columns(m)
    u, s, _ = np.linalg.svd(mc, full_matrices=False)
    tol = (s[0] if s.size else 0.0) * max(mc.shape) * np.finfo(np.float64).eps
    rank = int(np.sum(s > tol))
    if rank < c:
        raise RankDeficientError(f"only {rank} nonzero singular values, need {c}")
    return u[:, :c] * s[:c]


def canonical_correlations(x, y) -> np.ndarray:
    """Canonical correlations between two column-centered data matrices.

    Whitening is done by orthonormalizing each column space; the singular
    values of the product of the two bases are the canonical correlations.
    """
    x = center_columns(x)
    y = center_columns(y)
    qx, _ = np.linalg.qr(x)
    qy, _ = np.linalg.qr(y)
    rho = np.linalg.svd(qx.T @ qy, compute_uv=False)
    return np.clip(rho, 0.0, 1.0)


def svcca(f, g, c: int) -> float:
    """SVCCA: keep the top ``c`` singular directions of each side, then
    average the ``c`` canonical correlations between them."""
    f, g = _pair(f, g)
    c = int(c)
    if c < 1:
        raise ValueError("c must be >= 1")
    if f.shape[0] <= c:
        raise TooFewSamplesError(f"SVCCA-{c} needs more than {c} rows, got {f.shape[0]}")
    if c > min(f.shape[1], g.shape[1]):
        raise RankDeficientError(f"c={c} exceeds a representation dimension")
    px = _svd_projection(f, c)
    py = _svd_projection(g, c)
    rho = canonical_correlations(px, py)
    return float(np.mean(rho[:c]))


def knn_indices(gramian, k: int) -> np.ndarray:
    """Indices of the ``k`` most similar other rows, most similar first.

    Self-similarity is excluded and ties go to the smaller index.
    """
    s = np.array(gramian, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise NotSquareError(f"gramian must be square, got shape {s.shape}")
    n = s.shape[0]
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n - 1:
        raise KTooLargeError(f"k={k} but only {n - 1} neighbors exist")
    np.fill_diagonal(s, -np.inf)
    order = np.argsort(-s, axis=1, kind="stable")
    return order[:, :k]


def _neighbor_lists(f, g, k):
    f, g = _pair(f, g)
    return knn_indices(gram(f), k), knn_indices(gram(g), k)


def overlap_from_indices(a: np.ndarray, b: np.ndarray) -> float:
    k = a.shape[1]
    shared = (a[:, :, None] == b[:, None, :]).any(axis=2).sum(axis=1)
    return float(np.mean(shared / k))


def mutual_knn_overlap(f, g, k: int) -> float:
    """Mean fraction of shared ``k``-nearest neighbors per object."""
    a, b = _neighbor_lists(f, g, k)
    return overlap_from_indices(a, b)


def levenshtein_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Levenshtein distance between two integer sequence arrays.

    The dynamic program runs over sequence positions and is vectorized across
    rows.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    n, la = a.shape
    lb = b.shape[1]
    prev = np.broadcast_to(np.arange(lb + 1), (n, lb + 1)).copy()
    for i in range(1, la + 1):
        cur = np.empty_like(prev)
        cur[:, 0] = i
        sub_cost = (a[:, i - 1][:, None] != b).astype(prev.dtype)
        # deletion / substitution do not depend on the current row
        partial = np.minimum(prev[:, 1:] + 1, prev[:, :-1] + sub_cost)
        for j in range(1, lb + 1):
            cur[:, j] = np.minimum(partial[:, j - 1], cur[:, j - 1] + 1)
        prev = cur
    return prev[:, lb]


def knn_edit_distance(f, g, k: int) -> float:
    """Mean Levenshtein distance between ordered neighbor lists, over ``k``."""
    a, b = _neighbor_lists(f, g, k)
    return float(np.mean(levenshtein_rows(a, b) / a.shape[1]))


def compute_metric(metric: MetricId | str, f, g) -> float:
    if isinstance(metric, str):
        metric = MetricId.parse(metric)
    if metric.name == "cka":
        return linear_cka(f, g)
    if metric.name == "cka_unbiased":
        return unbiased_cka(f, g)
    if metric.name == "svcca":
        return svcca(f, g, metric.param)
    if metric.name == "knn_overlap":
        return mutual_knn_overlap(f, g, metric.param)
    return knn_edit_distance(f, g, metric.param)


def draw_subsamples(n: int, sample_size: int, n_samples: int, seed=None) -> list[np.ndarray]:
    """Pre-draw ``n_samples`` index sets of size ``sample_size`` without replacement."""
    if sample_size > n:
        raise SampleTooLargeError(f"sample_size={sample_size} exceeds N={n}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = as_generator(seed)
    return [np.sort(rng.choice(n, size=sample_size, replace=False)) for _ in range(n_samples)]


def subsampled_alignment(f, g, metric: MetricId | str, sample_size: int,
                         n_samples: int, seed=None) -> AlignmentReport:
    """Average a metric over random row subsets shared by both sides."""
    if isinstance(metric, str):
        metric = MetricId.parse(metric)
    f, g = _pair(f, g)
    draws = draw_subsamples(f.shape[0], int(sample_size), int(n_samples), seed)
    values = [compute_metric(metric, f[idx], g[idx]) for idx in draws]
    recorded = int(seed) if isinstance(seed, (int, np.integer)) else None
    return AlignmentReport(metric=metric, values=values, n_points=int(sample_size), seed=recorded)
