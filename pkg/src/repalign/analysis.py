"""Downstream analyses of alignment scores.

* :class:`Debiaser` / :func:`debias` remove each model's mean embedding.
* :func:`sliding_window_trend` relates alignment to word frequency.
* :func:`build_spec_features` and :func:`ridge_fit` decompose pairwise
  alignment onto model specifications.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    ConstantXError,
    DimMismatchError,
    SingularError,
    TooFewModelsError,
    TooFewSamplesError,
    WindowTooLargeError,
)
from .metrics import MetricId, compute_metric
from .numerics import as_matrix, unit_normalize_rows

MODALITIES = ("llm", "text_emb", "mm_text", "mm_image", "image_foundation")
TEXT_MODALITIES = frozenset({"llm", "text_emb", "mm_text"})
MODALITY_PAIRS = ("text-text", "text-img", "img-img")
FEATURE_NAMES = (
    "min_params", "max_params", "min_depth", "max_depth",
    "min_dimension", "max_dimension", "min_images", "max_images",
    "min_tokens", "max_tokens", "min_year", "max_year",
    "text-text", "text-img", "img-img",
)


# -- debiasing ---------------------------------------------------------------

class Debiaser(TransformerMixin, BaseEstimator):
    """Subtract the fitted column mean, then scale rows to unit norm."""

    def fit(self, X, y=None):
        X = as_matrix(X, "X")
        if X.shape[0] < 2:
            raise TooFewSamplesError("debiasing needs at least 2 rows")
        self.mean_ = X.mean(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = as_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise DimMismatchError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return unit_normalize_rows(X - self.mean_)


def debias(f) -> np.ndarray:
    return Debiaser().fit_transform(f)


# -- frequency trend ---------------------------------------------------------

@dataclass
class OlsResult:
    slope: float
    intercept: float
    r_squared: float
    zero_variance: bool = False


def ols_fit(x, y) -> OlsResult:
    """Least-squares line ``y ~ slope * x + intercept``.

    When ``y`` is constant the fit is exact but R^2 is undefined; it is then
    reported as 0 with ``zero_variance`` set.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise DimMismatchError(f"x has {x.size} values, y has {y.size}")
    if x.size < 2:
        raise TooFewSamplesError("OLS needs at least 2 points")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-300 or np.ptp(x) == 0.0:
        raise ConstantXError("x is constant")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(yc @ yc)
    if ss_tot <= 1e-24 * max(1.0, float(y @ y)):
        return OlsResult(slope=0.0, intercept=float(y.mean()), r_squared=0.0, zero_variance=True)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(resid @ resid) / ss_tot
    return OlsResult(slope=slope, intercept=intercept, r_squared=min(max(r2, 0.0), 1.0))


@dataclass
class TrendReport:
    metric: str
    window: int
    step: int
    window_centers: list[float]
    alignments: list[float]
    slope: float | None
    intercept: float | None
    r_squared: float | None
    zero_variance: bool = False
    single_window: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def window_starts(n: int, window: int, step: int) -> list[int]:
    """Start offsets of full windows; a trailing partial window is dropped."""
    if window < 1 or step < 1:
        raise ValueError("window and step must be >= 1")
    if window > n:
        raise WindowTooLargeError(f"window={window} exceeds N={n}")
    return list(range(0, n - window + 1, step))


def sliding_window_trend(f, g, frequencies, window: int = 500, step: int = 250,
                         metric: MetricId | str = "knn_overlap:10") -> TrendReport:
    """Alignment on frequency-sorted windows against mean ``f^(-1/2)``.

    Rows are sorted by descending frequency (stable), each window of
    ``window`` consecutive rows is scored with ``metric`` on both models, and
    the scores are regressed on the window's mean inverse square-root
    frequency.
    """
    metric = MetricId.parse(metric) if isinstance(metric, str) else metric
    f = as_matrix(f, "f")
    g = as_matrix(g, "g")
    freqs = np.asarray(frequencies, dtype=np.float64).ravel()
    if not (f.shape[0] == g.shape[0] == freqs.size):
        raise DimMismatchError("f, g and frequencies must have the same number of rows")
    if not np.all(np.isfinite(freqs)) or np.any(freqs <= 0):
        raise ValueError("frequencies must be finite and strictly positive")
    order = np.argsort(-freqs, kind="stable")
    f, g, freqs = f[order], g[order], freqs[order]
    inv_sqrt = freqs ** -0.5
    centers, scores = [], []
    for start in window_starts(freqs.size, int(window), int(step)):
        sl = slice(start, start + window)
        centers.append(float(inv_sqrt[sl].mean()))
        scores.append(float(compute_metric(metric, f[sl], g[sl])))
    report = TrendReport(metric=str(metric), window=int(window), step=int(step),
                         window_centers=centers, alignments=scores,
                         slope=None, intercept=None, r_squared=None)
    if len(centers) == 1:
        report.single_window = True
        return report
    fit = ols_fit(centers, scores)
    report.slope, report.intercept, report.r_squared = fit.slope, fit.intercept, fit.r_squared
    report.zero_variance = fit.zero_variance
    return report


# -- specification regression ------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    name: str
    params_count: int
    depth: int
    width: int
    text_tokens: int
    image_tokens: int
    modality: str
    year: int

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}; choose from {MODALITIES}")
        for name in ("params_count", "depth", "width", "text_tokens", "image_tokens", "year"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def represents_text(self) -> bool:
        return self.modality in TEXT_MODALITIES

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(name=str(d["name"]), params_count=int(d["params_count"]), depth=int(d["depth"]),
                   width=int(d["width"]), text_tokens=int(d["text_tokens"]),
                   image_tokens=int(d["image_tokens"]), modality=str(d["modality"]), year=int(d["year"]))

    def to_dict(self) -> dict:
        return asdict(self)


def reference_specs() -> list[ModelSpec]:
    """The 30 model specifications bundled with the package."""
    text = resources.files("repalign").joinpath("data/reference_models.json").read_text()
    return [ModelSpec.from_dict(d) for d in json.loads(text)["models"]]


def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else 0.0


def _log10p1(x: float) -> float:
    # zero token / image counts occur in the tables
    return math.log10(x + 1.0)


@dataclass
class SpecFeatureMatrix:
    pair_index: list[tuple[str, str]]
    features: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    raw: np.ndarray | None = None
    degenerate: list[str] = field(default_factory=list)


def _pre_features(a: ModelSpec, b: ModelSpec) -> list[float]:
    out = []
    for fn, attr in ((_log10, "params_count"), (float, "depth"), (_log10, "width"),
                     (_log10p1, "image_tokens"), (_log10p1, "text_tokens"), (float, "year")):
        va, vb = fn(getattr(a, attr)), fn(getattr(b, attr))
        out += [min(va, vb), max(va, vb)]
    n_text = int(a.represents_text) + int(b.represents_text)
    onehot = [0.0, 0.0, 0.0]
    onehot[{2: 0, 1: 1, 0: 2}[n_text]] = 1.0
    return out + onehot


def build_spec_features(specs, pairs=None) -> SpecFeatureMatrix:
    """Pairwise specification features, each column centered and unit-normalized.

    ``pairs`` defaults to all unordered pairs in input order. A column that is
    constant across pairs has no direction to normalize; it is left at zero
    and its name listed in ``degenerate``.
    """
    specs = list(specs)
    if len(specs) < 2:
        raise TooFewModelsError(f"need at least 2 models, got {len(specs)}")
    if pairs is None:
        pairs = list(itertools.combinations(range(len(specs)), 2))
    raw = np.array([_pre_features(specs[i], specs[j]) for i, j in pairs], dtype=np.float64)
    centered = raw - raw.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    scale = np.maximum(np.abs(raw).max(axis=0), 1.0)
    ok = norms > 1e-12 * scale * math.sqrt(raw.shape[0])
    features = np.zeros_like(centered)
    features[:, ok] = centered[:, ok] / norms[ok]
    return SpecFeatureMatrix(
        pair_index=[(specs[i].name, specs[j].name) for i, j in pairs],
        features=features, raw=raw,
        degenerate=[FEATURE_NAMES[c] for c in np.flatnonzero(~ok)],
    )


def ridge_fit(x, y, lam: float) -> np.ndarray:
    """Ridge coefficients ``(X^T X + lam I)^-1 X^T y`` (no intercept)."""
    x = as_matrix(x, "x")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != x.shape[0]:
        raise DimMismatchError(f"x has {x.shape[0]} rows, y has {y.size} values")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    gram = x.T @ x
    if lam == 0.0 and np.linalg.matrix_rank(x) < x.shape[1]:
        raise SingularError("X^T X is rank-deficient; use lambda > 0")
    lhs = gram + lam * np.eye(x.shape[1])
    try:
        return scipy.linalg.solve(lhs, x.T @ y, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularError(str(exc)) from exc


class RidgeDecomposition(RegressorMixin, BaseEstimator):
    """Ridge regression of alignment scores on centered features.

    With ``fit_intercept`` the target mean is removed before solving and
    stored in ``intercept_``.
    """

    def __init__(self, alpha=1.0, fit_intercept=True):
        self.alpha = alpha
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X = as_matrix(X, "X")
        y = np.asarray(y, dtype=np.float64).ravel()
        x_mean = X.mean(axis=0) if self.fit_intercept else np.zeros(X.shape[1])
        y_mean = float(y.mean()) if self.fit_intercept else 0.0
        self.coef_ = ridge_fit(X - x_mean, y - y_mean, float(self.alpha))
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = as_matrix(X, "X")
        return X @ self.coef_ + self.intercept_
