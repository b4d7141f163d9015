"""Top-k sparse autoencoders with dead-neuron resampling.

The functional core (:func:`sae_init`, :func:`sae_train`, :func:`encode_topk`,
:func:`decode`, :func:`resample_dead`) works on :class:`SaeParams`;
:class:`TopKSAE` wraps it in a scikit-learn transformer.

Sparse codes are ``scipy.sparse.csr_matrix`` objects with sorted column
indices and only strictly positive stored values.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import (
    AllZeroError,
    BadThresholdsError,
    BatchTooLargeError,
    DimMismatchError,
    IndexOutOfRangeError,
    TooFewColumnsError,
)
from .numerics import as_generator, as_matrix, percentile

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
RENORM_EPS = 1e-8
RESIDUAL_EPS = 1e-8


@dataclass(frozen=True)
class SaeConfig:
    d_model: int
    d_sparse: int
    k: int
    batch_size: int = 1024
    steps: int = 20000
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    resample_period: int = 2500
    resample_cutoff_fraction: float = 0.8
    decoder_renorm: bool = True
    resample: bool = True
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("d_model", "d_sparse", "k", "batch_size", "resample_period"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.k > self.d_sparse:
            raise ValueError(f"k={self.k} exceeds d_sparse={self.d_sparse}")
        if not 0.0 < self.resample_cutoff_fraction <= 1.0:
            raise ValueError("resample_cutoff_fraction must lie in (0, 1]")


@dataclass
class SaeParams:
    encoder_weight: np.ndarray  # (d_sparse, d_model)
    encoder_bias: np.ndarray  # (d_sparse,)
    decoder_weight: np.ndarray  # (d_model, d_sparse)
    decoder_bias: np.ndarray  # (d_model,)

    @property
    def d_model(self) -> int:
        return self.decoder_weight.shape[0]

    @property
    def d_sparse(self) -> int:
        return self.decoder_weight.shape[1]

    def copy(self) -> "SaeParams":
        return SaeParams(*(a.copy() for a in self.arrays()))

    def arrays(self):
        return (self.encoder_weight, self.encoder_bias, self.decoder_weight, self.decoder_bias)

    def equals(self, other: "SaeParams") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


@dataclass
class TrainingLog:
    """One record per monitoring interval (every ``resample_period`` steps and at the end)."""

    steps: list[int] = field(default_factory=list)
    mean_residual: list[float] = field(default_factory=list)
    dead_features: list[int] = field(default_factory=list)
    resampled: list[int] = field(default_factory=list)

    def append(self, step, residual, dead, resampled):
        self.steps.append(int(step))
        self.mean_residual.append(float(residual))
        self.dead_features.append(int(dead))
        self.resampled.append(int(resampled))

    def rows(self):
        return [
            {"step": s, "mean_residual": r, "dead_features": d, "resampled": m}
            for s, r, d, m in zip(self.steps, self.mean_residual, self.dead_features, self.resampled)
        ]


def _check_data(data, d_model):
    data = as_matrix(data, "data")
    if data.shape[1] != d_model:
        raise DimMismatchError(f"data has {data.shape[1]} columns, expected d_model={d_model}")
    return data


def _init_params(config: SaeConfig, data: np.ndarray, rng: np.random.Generator) -> SaeParams:
    dtype = np.dtype(config.dtype)
    bound = np.sqrt(6.0 / config.d_sparse)
    decoder = rng.uniform(-bound, bound, size=(config.d_model, config.d_sparse)).astype(dtype)
    return SaeParams(
        encoder_weight=decoder.T.copy(),
        encoder_bias=np.zeros(config.d_sparse, dtype=dtype),
        decoder_weight=decoder,
        decoder_bias=data.mean(axis=0).astype(dtype),
    )


def sae_init(config: SaeConfig, data) -> SaeParams:
    """Kaiming-uniform decoder, encoder tied to its transpose, data-mean decoder bias."""
    data = _check_data(data, config.d_model)
    return _init_params(config, data, as_generator(config.seed))


def topk_mask(acts: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask of the ``k`` largest positive entries per row.

    Ties at the cut-off value go to the smaller column index.
    """
    acts = np.atleast_2d(acts)
    n, width = acts.shape
    if k >= width:
        return acts > 0
    part = np.partition(acts, width - k, axis=1)
    kth = part[:, width - k][:, None]
    greater = acts > kth
    need = k - greater.sum(axis=1, keepdims=True)
    equal = acts == kth
    if np.array_equal(equal.sum(axis=1, keepdims=True), need):
        keep = greater | equal
    else:
        keep = greater | (equal & (np.cumsum(equal, axis=1) <= need))
    return keep & (acts > 0)


def _forward(params: SaeParams, x: np.ndarray, k: int):
    centered = x - params.decoder_bias
    pre = centered @ params.encoder_weight.T + params.encoder_bias
    acts = np.maximum(pre, 0.0)
    z = np.where(topk_mask(acts, k), acts, 0.0)
    recon = z @ params.decoder_weight.T + params.decoder_bias
    return centered, z, recon


def encode_batch(params: SaeParams, x, k: int) -> np.ndarray:
    """Dense top-k codes for every row of ``x``."""
    x = _check_data(np.atleast_2d(x), params.d_model)
    return _forward(params, x, k)[1]


def encode_topk(params: SaeParams, x, k: int) -> sp.csr_matrix:
    """Encode a single vector into a 1-row sparse code."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != params.d_model:
        raise DimMismatchError(f"expected a vector of length {params.d_model}")
    return to_sparse_codes(encode_batch(params, x[None, :], k))


def encode_codes(params: SaeParams, data, k: int, chunk: int = 4096) -> sp.csr_matrix:
    data = _check_data(data, params.d_model)
    blocks = [to_sparse_codes(encode_batch(params, data[i:i + chunk], k))
              for i in range(0, data.shape[0], chunk)]
    if not blocks:
        return sp.csr_matrix((0, params.d_sparse))
    return sp.vstack(blocks, format="csr")


def to_sparse_codes(dense) -> sp.csr_matrix:
    codes = sp.csr_matrix(np.asarray(dense, dtype=np.float64))
    codes.eliminate_zeros()
    codes.sort_indices()
    return codes


def decode(params: SaeParams, z) -> np.ndarray:
    """Reconstruct from sparse (or dense) codes; a single row gives a vector."""
    if sp.issparse(z):
        z = sp.csr_matrix(z)
        if z.shape[1] != params.d_sparse:
            if z.nnz and z.indices.max() >= params.d_sparse:
                raise IndexOutOfRangeError("code index exceeds d_sparse")
            raise DimMismatchError(f"codes have {z.shape[1]} columns, expected {params.d_sparse}")
        out = np.asarray(z @ params.decoder_weight.T) + params.decoder_bias
    else:
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != params.d_sparse:
            raise DimMismatchError(f"codes have {z.shape[-1]} columns, expected {params.d_sparse}")
        out = z @ params.decoder_weight.T + params.decoder_bias
    return out[0] if out.ndim == 2 and out.shape[0] == 1 else out


def decode_entries(params: SaeParams, entries) -> np.ndarray:
    """Reconstruct from a list of ``(index, value)`` pairs."""
    out = params.decoder_bias.copy()
    for j, v in entries:
        if not 0 <= j < params.d_sparse:
            raise IndexOutOfRangeError(f"code index {j} outside [0, {params.d_sparse})")
        out += v * params.decoder_weight[:, j]
    return out


def _renormalize_decoder(params: SaeParams) -> None:
    norms = np.linalg.norm(params.decoder_weight, axis=0)
    params.decoder_weight /= np.maximum(norms, RENORM_EPS)


def resample_dead(params: SaeParams, data, activity, k: int, rng) -> tuple[SaeParams, int]:
    """Point every dead feature (zero activity) at a normalized residual.

    Exactly ``m`` row indices are drawn from ``rng`` for ``m`` dead features;
    with no dead features the stream is untouched and ``params`` returned as is.
    """
    activity = np.asarray(activity)
    if activity.shape != (params.d_sparse,):
        raise DimMismatchError(f"activity must have length {params.d_sparse}")
    dead = np.flatnonzero(activity == 0)
    if dead.size == 0:
        return params, 0
    data = _check_data(data, params.d_model)
    rng = as_generator(rng)
    idx = rng.integers(0, data.shape[0], size=dead.size)
    x = data[idx]
    _, _, recon = _forward(params, x, k)
    resid = x - recon
    units = resid / (np.linalg.norm(resid, axis=1, keepdims=True) + RESIDUAL_EPS)
    out = params.copy()
    out.decoder_weight[:, dead] = units.T
    out.encoder_weight[dead, :] = 0.1 * units
    out.encoder_bias[dead] = 0.0
    return out, int(dead.size)


class _AdamW:
    """Decoupled-weight-decay Adam over a fixed list of arrays, updated in place."""

    def __init__(self, arrays, lr, weight_decay):
        self.lr = lr
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays, grads):
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1 ** self.t
        bc2 = 1.0 - ADAM_BETA2 ** self.t
        for p, g, m, v in zip(arrays, grads, self.m, self.v):
            p *= 1.0 - self.lr * self.weight_decay
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


def _mse_grads(params: SaeParams, x: np.ndarray, k: int):
    centered, z, recon = _forward(params, x, k)
    err = recon - x
    g = 2.0 * err / err.size
    active = z > 0
    grad_dec_w = g.T @ z
    dz = (g @ params.decoder_weight) * active
    grad_enc_w = dz.T @ centered
    grad_enc_b = dz.sum(axis=0)
    grad_dec_b = g.sum(axis=0) - (dz @ params.encoder_weight).sum(axis=0)
    residual = float(np.mean(np.linalg.norm(err, axis=1)))
    return (grad_enc_w, grad_enc_b, grad_dec_w, grad_dec_b), active, residual


def sae_train(config: SaeConfig, data) -> tuple[SaeParams, TrainingLog]:
    """Train a top-k SAE on MSE reconstruction with AdamW.

    Every ``resample_period`` steps, while ``t < resample_cutoff_fraction * steps``,
    features inactive since the previous reset are resampled and the activity
    counter is cleared.
    """
    data = _check_data(data, config.d_model)
    n = data.shape[0]
    if config.batch_size > n:
        raise BatchTooLargeError(f"batch_size={config.batch_size} exceeds N={n}")
    rng = as_generator(config.seed)
    params = _init_params(config, data, rng)
    data = data.astype(config.dtype, copy=False)
    log = TrainingLog()
    if config.steps == 0:
        return params, log
    opt = _AdamW(list(params.arrays()), config.learning_rate, config.weight_decay)
    activity = np.zeros(config.d_sparse, dtype=np.int64)
    interval_resid = []
    cutoff = config.resample_cutoff_fraction * config.steps
    for t in range(1, config.steps + 1):
        batch = data[rng.integers(0, n, size=config.batch_size)]
        grads, active, resid = _mse_grads(params, batch, config.k)
        opt.step(list(params.arrays()), grads)
        if config.decoder_renorm:
            _renormalize_decoder(params)
        activity += active.sum(axis=0)
        interval_resid.append(resid)
        at_boundary = t % config.resample_period == 0
        if at_boundary or t == config.steps:
            dead = int(np.sum(activity == 0))
            resampled = 0
            if at_boundary and config.resample and t < cutoff:
                new, resampled = resample_dead(params, data, activity, config.k, rng)
                # copy back in place so the optimizer keeps tracking the same arrays
                for dst, src in zip(params.arrays(), new.arrays()):
                    dst[...] = src
                activity[:] = 0
            log.append(t, np.mean(interval_resid), dead, resampled)
            logger.debug("step %d residual %.5f dead %d resampled %d", t, log.mean_residual[-1], dead, resampled)
            interval_resid = []
    return params, log


def dead_feature_count(params: SaeParams, data, k: int) -> int:
    """Features that never fire on any row of ``data``."""
    codes = encode_codes(params, data, k)
    fired = np.zeros(params.d_sparse, dtype=bool)
    fired[np.unique(codes.indices)] = True
    return int(np.sum(~fired))


@dataclass
class FeatureFilter:
    kept: np.ndarray
    activation_frequency: np.ndarray


def filter_features(codes, upper: float = 0.1, lower: float = 0.00001) -> FeatureFilter:
    """Keep features whose activation frequency lies in ``[lower, upper]``.

    Frequencies are fractions of rows (0.1 means 10% of rows).
    """
    if not upper > lower:
        raise BadThresholdsError(f"upper={upper} must exceed lower={lower}")
    codes = sp.csr_matrix(codes)
    n = codes.shape[0]
    counts = np.bincount(codes.indices[codes.data != 0], minlength=codes.shape[1])
    freq = counts / n if n else np.zeros(codes.shape[1])
    kept = np.flatnonzero((freq >= lower) & (freq <= upper))
    return FeatureFilter(kept=kept, activation_frequency=freq)


def residual_stats(params: SaeParams, data, k: int) -> float:
    """Mean reconstruction residual norm over the rows of ``data``."""
    data = _check_data(data, params.d_model)
    recon = decode(params, encode_codes(params, data, k))
    recon = np.atleast_2d(recon)
    return mean_residual_norm(data, recon)


def mean_residual_norm(data, recon) -> float:
    return float(np.mean(np.linalg.norm(np.asarray(data) - np.asarray(recon), axis=1)))


def magnitude_stats(codes, k: int) -> tuple[float, float, float]:
    """5th/95th nearest-rank percentiles of nonzero code values times sqrt(k), and their ratio."""
    values = sp.csr_matrix(codes).data if sp.issparse(codes) else np.asarray(codes).ravel()
    values = values[values != 0]
    if values.size == 0:
        raise AllZeroError("codes have no nonzero entries")
    scaled = values * np.sqrt(k)
    p5 = percentile(scaled, 5)
    p95 = percentile(scaled, 95)
    return p5, p95, p95 / p5


def incoherence_stats(dictionary, block: int = 2048) -> tuple[float, float]:
    """Mean and max ``|<A_i, A_j>|`` over distinct unit-normalized columns."""
    a = as_matrix(dictionary, "dictionary")
    m = a.shape[1]
    if m < 2:
        raise TooFewColumnsError("need at least two dictionary columns")
    norms = np.linalg.norm(a, axis=0)
    a = a / np.where(norms > 0, norms, 1.0)
    total = 0.0
    peak = 0.0
    for start in range(0, m, block):
        stop = min(start + block, m)
        g = np.abs(a[:, start:stop].T @ a[:, start:])
        # keep strictly upper-triangular entries (global j > i)
        rows = np.arange(start, stop)[:, None]
        cols = np.arange(start, m)[None, :]
        upper = g[cols > rows]
        if upper.size:
            total += float(upper.sum())
            peak = max(peak, float(upper.max()))
    n_pairs = m * (m - 1) / 2
    return total / n_pairs, peak


class TopKSAE(TransformerMixin, BaseEstimator):
    """Top-k sparse autoencoder as a scikit-learn transformer.

    ``transform`` returns CSR sparse codes; ``inverse_transform`` decodes them.

    Parameters
    ----------
    d_sparse : int
        Dictionary size.
    k : int
        Nonzeros kept per code.
    batch_size, steps, learning_rate, weight_decay : training schedule.
    resample_period : int
        Steps between dead-feature resampling.
    resample_cutoff_fraction : float
        Resampling stops once ``t >= fraction * steps``.
    decoder_renorm : bool
        Renormalize decoder columns after every step.
    resample : bool
        Set to False to disable dead-feature resampling.
    random_state : int
        Seed for initialization and batch sampling.
    """

    def __init__(self, d_sparse=16384, k=32, batch_size=1024, steps=20000,
                 learning_rate=1e-3, weight_decay=1e-4, resample_period=2500,
                 resample_cutoff_fraction=0.8, decoder_renorm=True, resample=True,
                 random_state=0):
        self.d_sparse = d_sparse
        self.k = k
        self.batch_size = batch_size
        self.steps = steps
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.resample_period = resample_period
        self.resample_cutoff_fraction = resample_cutoff_fraction
        self.decoder_renorm = decoder_renorm
        self.resample = resample
        self.random_state = random_state

    def _config(self, d_model) -> SaeConfig:
        return SaeConfig(
            d_model=d_model, d_sparse=self.d_sparse, k=self.k,
            batch_size=self.batch_size, steps=self.steps,
            learning_rate=self.learning_rate, weight_decay=self.weight_decay,
            resample_period=self.resample_period,
            resample_cutoff_fraction=self.resample_cutoff_fraction,
            decoder_renorm=self.decoder_renorm, resample=self.resample,
            seed=0 if self.random_state is None else int(self.random_state),
        )

    def fit(self, X, y=None):
        X = as_matrix(X, "X")
        self.config_ = self._config(X.shape[1])
        self.params_, self.training_log_ = sae_train(self.config_, X)
        self.n_features_in_ = X.shape[1]
        return self

    @classmethod
    def from_params(cls, params: SaeParams, k: int) -> "TopKSAE":
        est = cls(d_sparse=params.d_sparse, k=k)
        est.params_ = params
        est.n_features_in_ = params.d_model
        est.training_log_ = TrainingLog()
        return est

    def transform(self, X):
        check_is_fitted(self, "params_")
        return encode_codes(self.params_, X, self.k)

    def inverse_transform(self, Z):
        check_is_fitted(self, "params_")
        return np.atleast_2d(decode(self.params_, Z))

    def reconstruction_residual(self, X) -> float:
        check_is_fitted(self, "params_")
        return residual_stats(self.params_, X, self.k)

    @property
    def dictionary_(self) -> np.ndarray:
        check_is_fitted(self, "params_")
        return self.params_.decoder_weight


__all__ = [
    "SaeConfig", "SaeParams", "TrainingLog", "FeatureFilter", "TopKSAE",
    "sae_init", "sae_train", "encode_topk", "encode_batch", "encode_codes",
    "decode", "decode_entries", "resample_dead", "filter_features",
    "residual_stats", "magnitude_stats", "incoherence_stats", "topk_mask",
    "to_sparse_codes", "dead_feature_count",
]
