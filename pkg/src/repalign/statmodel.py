"""Synthetic generator for sparse-dictionary representations.

Each object's representation is ``f = A (Z * M) + eta``: a dictionary ``A`` with
unit columns, a binary support ``Z`` with exactly ``k`` ones, non-negative
magnitudes ``M`` bracketed by ``[phi/sqrt(k), Phi/sqrt(k)]`` on the support, and
noise ``eta``. Generated representations have unit norm; the noise recorded
is the effective noise ``f - A (Z * M)`` after normalization, so the model
identity holds exactly.

The module also splits representation inner products into signal, bias and
noise parts, checks the corresponding bounds, and verifies the two
implications linking shared supports and large inner products.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import hadamard

from .exceptions import (
    DegenerateSignalError,
    DimMismatchError,
    IndexOutOfRangeError,
    InfeasibleError,
)
from .numerics import as_generator

DICTIONARY_MODES = ("gaussian", "orthonormal", "mub")
BOUND_TOL = 1e-9
SUPPORT_RETRIES = 100


def _pairwise_coherence(a: np.ndarray) -> tuple[float, float]:
    g = np.abs(a.T @ a)
    iu = np.triu_indices(a.shape[1], k=1)
    vals = g[iu]
    return float(vals.max()), float(vals.mean())


def _gf2_rank(mat: np.ndarray) -> int:
    m = mat.copy() % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivots = np.flatnonzero(m[rank:, c]) + rank
        if pivots.size == 0:
            continue
        p = pivots[0]
        m[[rank, p]] = m[[p, rank]]
        hits = np.flatnonzero(m[:, c])
        hits = hits[hits != rank]
        m[hits] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def mub_frame(d: int, n_bases: int, rng) -> np.ndarray:
    """Columns from ``n_bases`` real mutually unbiased bases of ``R^d``.

    ``d`` must be a power of 4. The bases are the standard basis, the
    normalized Sylvester-Hadamard basis, and Hadamard bases sign-flipped by
    quadratic bent functions; any two vectors from different bases have
    ``|<u, v>| = 1/sqrt(d)``.
    """
    n = int(round(math.log2(d))) if d > 0 else -1
    if d < 4 or 2 ** n != d or n % 2:
        raise InfeasibleError(f"mub frame needs d to be a power of 4, got {d}")
    max_bases = 2 ** (n - 1) + 1
    if n_bases > max_bases:
        raise InfeasibleError(f"at most {max_bases} real unbiased bases exist in dimension {d}")
    rng = as_generator(rng)
    bits = (np.arange(d)[:, None] >> np.arange(n)[None, :]) & 1
    had = hadamard(d).astype(np.float64) / np.sqrt(d)
    bases = [np.eye(d), had]
    forms = [np.zeros((n, n), dtype=np.int64)]
    attempts = 0
    while len(bases) < n_bases:
        attempts += 1
        if attempts > 10000:
            raise InfeasibleError("could not find enough mutually bent quadratic forms")
        upper = np.triu(rng.integers(0, 2, size=(n, n)), 1)
        sym = (upper + upper.T) % 2
        # each pair of forms must differ by a non-degenerate symplectic form
        if any(_gf2_rank((sym + other) % 2) < n for other in forms):
            continue
        forms.append(sym)
        q = np.einsum("xi,ij,xj->x", bits, upper, bits) % 2
        bases.append(((-1.0) ** q)[:, None] * had)
    return np.hstack(bases[:n_bases])


def generate_dictionary(d: int, m: int, rng=None, mode: str = "gaussian"):
    """Unit-column dictionary plus its measured max and mean coherence.

    ``mode`` is ``"gaussian"`` (independent Gaussian directions),
    ``"orthonormal"`` (exact orthonormal columns, needs ``m <= d``) or ``"mub"``
    (columns of real mutually unbiased bases, coherence exactly ``1/sqrt(d)``).
    """
    if m < 2 or d < 1:
        raise ValueError("need m >= 2 and d >= 1")
    rng = as_generator(rng)
    if mode == "gaussian":
        a = rng.standard_normal((d, m))
        a /= np.linalg.norm(a, axis=0, keepdims=True)
    elif mode == "orthonormal":
        if m > d:
            raise InfeasibleError(f"cannot fit {m} orthonormal columns in dimension {d}")
        q, r = np.linalg.qr(rng.standard_normal((d, m)))
        a = q * np.sign(np.diag(r))
    elif mode == "mub":
        a = mub_frame(d, -(-m // d), rng)[:, :m]
    else:
        raise ValueError(f"unknown dictionary mode {mode!r}; choose from {DICTIONARY_MODES}")
    eps_max, eps_mean = _pairwise_coherence(a)
    return a, eps_max, eps_mean


def sample_support_pair(m: int, k: int, t: int, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Two sorted ``k``-subsets of ``range(m)`` sharing exactly ``t`` indices."""
    if not 0 <= t <= k:
        raise ValueError(f"need 0 <= t <= k, got t={t}, k={k}")
    if 2 * k - t > m:
        raise InfeasibleError(f"2k - t = {2 * k - t} exceeds m = {m}")
    rng = as_generator(rng)
    picks = rng.choice(m, size=2 * k - t, replace=False)
    shared = picks[:t]
    z1 = np.concatenate([shared, picks[t:k]])
    z2 = np.concatenate([shared, picks[k:]])
    return np.sort(z1), np.sort(z2)


@dataclass(frozen=True)
class SyntheticConfig:
    d: int = 64
    m: int = 256
    k: int = 4
    phi: float = 0.8
    Phi: float = 1.2
    eps_noise_raw: float = 0.02
    n_pairs: int = 1000
    overlap_schedule: tuple[int, ...] = (0, 1, 2, 3, 4)
    seed: int = 0
    dictionary_mode: str = "gaussian"
    unit_signal: bool = False

    def __post_init__(self):
        if not 0 < self.phi <= self.Phi:
            raise ValueError("need 0 < phi <= Phi")
        if self.k > self.m:
            raise ValueError("k must not exceed m")
        if any(not 0 <= t <= self.k for t in self.overlap_schedule):
            raise ValueError("every overlap t must lie in [0, k]")
        if self.eps_noise_raw < 0:
            raise ValueError("eps_noise_raw must be >= 0")
        object.__setattr__(self, "overlap_schedule", tuple(int(t) for t in self.overlap_schedule))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["overlap_schedule"] = list(self.overlap_schedule)
        return out


# the configuration whose draws satisfy the coherence/noise precondition
CERTIFY_CONFIG = SyntheticConfig(dictionary_mode="mub", unit_signal=True)


@dataclass
class SyntheticInstance:
    dictionary: np.ndarray  # (d, m)
    supports: np.ndarray  # (N, m) 0/1
    magnitudes: np.ndarray  # (N, m)
    representations: np.ndarray  # (N, d)
    noise_effective: np.ndarray  # (N, d)
    eps_dict_max: float
    eps_dict_mean: float
    eps_noise_effective: float
    k: int
    phi: float
    Phi: float
    pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    @property
    def signals(self) -> np.ndarray:
        return (self.supports * self.magnitudes) @ self.dictionary.T


@dataclass
class PairSample:
    supports: tuple[np.ndarray, np.ndarray]
    magnitudes: np.ndarray  # (2, m)
    representations: np.ndarray  # (2, d)
    noise_effective: np.ndarray  # (2, d)

    @property
    def eps_noise_effective(self) -> float:
        return float(np.linalg.norm(self.noise_effective, axis=1).max())


def _draw_magnitudes(config: SyntheticConfig, dictionary, support, rng, max_tries=200):
    lo = config.phi / math.sqrt(config.k)
    hi = config.Phi / math.sqrt(config.k)
    for _ in range(max_tries):
        vals = rng.uniform(lo, hi, size=support.size)
        if not config.unit_signal:
            return vals
        norm = np.linalg.norm(dictionary[:, support] @ vals)
        if norm < 1e-12:
            continue
        scaled = vals / norm
        # rounding tolerance matters when phi == Phi
        if scaled.min() >= lo * (1 - 1e-12) and scaled.max() <= hi * (1 + 1e-12):
            return np.clip(scaled, lo, hi)
    raise DegenerateSignalError("could not draw magnitudes with a unit-norm signal inside the bracket")


def uniform_ball(rng, radius: float, d: int, size: int | None = None) -> np.ndarray:
    """Points drawn uniformly from the ``d``-dimensional ball of ``radius``."""
    shape = (d,) if size is None else (size, d)
    direction = rng.standard_normal(shape)
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    r = radius * rng.uniform(size=None if size is None else (size, 1)) ** (1.0 / d)
    return direction * r


def synthesize_pair(config: SyntheticConfig, dictionary, z1, z2, rng=None) -> PairSample:
    dictionary = np.asarray(dictionary, dtype=np.float64)
    if dictionary.shape != (config.d, config.m):
        raise DimMismatchError(f"dictionary shape {dictionary.shape} != ({config.d}, {config.m})")
    rng = as_generator(rng)
    mags = np.zeros((2, config.m))
    reps = np.zeros((2, config.d))
    noise = np.zeros((2, config.d))
    for row, support in enumerate((np.asarray(z1), np.asarray(z2))):
        mags[row, support] = _draw_magnitudes(config, dictionary, support, rng)
        signal = dictionary @ mags[row]
        raw = signal + uniform_ball(rng, config.eps_noise_raw, config.d)
        norm = np.linalg.norm(raw)
        if norm < 1e-9:
            raise DegenerateSignalError("signal plus noise vanished")
        reps[row] = raw / norm
        noise[row] = reps[row] - signal
    return PairSample((np.asarray(z1), np.asarray(z2)), mags, reps, noise)


def generate_instance(config: SyntheticConfig, dictionary=None) -> SyntheticInstance:
    """Draw ``n_pairs`` object pairs for every overlap in the schedule.

    Rows ``2p`` and ``2p + 1`` form pair ``p``.
    """
    rng = as_generator(config.seed)
    if dictionary is None:
        dictionary, eps_max, eps_mean = generate_dictionary(config.d, config.m, rng, config.dictionary_mode)
    else:
        dictionary = np.asarray(dictionary, dtype=np.float64)
        eps_max, eps_mean = _pairwise_coherence(dictionary)
    total = config.n_pairs * len(config.overlap_schedule)
    supports = np.zeros((2 * total, config.m))
    mags = np.zeros((2 * total, config.m))
    reps = np.zeros((2 * total, config.d))
    noise = np.zeros((2 * total, config.d))
    p = 0
    for t in config.overlap_schedule:
        for _ in range(config.n_pairs):
            for attempt in range(SUPPORT_RETRIES):
                z1, z2 = sample_support_pair(config.m, config.k, t, rng)
                try:
                    pair = synthesize_pair(config, dictionary, z1, z2, rng)
                    break
                except DegenerateSignalError:
                    # some supports admit no unit-norm signal inside the bracket
                    if attempt == SUPPORT_RETRIES - 1:
                        raise
            rows = slice(2 * p, 2 * p + 2)
            supports[2 * p, z1] = 1.0
            supports[2 * p + 1, z2] = 1.0
            mags[rows] = pair.magnitudes
            reps[rows] = pair.representations
            noise[rows] = pair.noise_effective
            p += 1
    eps_noise = float(np.linalg.norm(noise, axis=1).max()) if total else 0.0
    pairs = np.arange(2 * total, dtype=np.int64).reshape(-1, 2)
    return SyntheticInstance(
        dictionary=dictionary, supports=supports, magnitudes=mags,
        representations=reps, noise_effective=noise,
        eps_dict_max=eps_max, eps_dict_mean=eps_mean, eps_noise_effective=eps_noise,
        k=config.k, phi=config.phi, Phi=config.Phi, pairs=pairs,
    )


@dataclass
class Decomposition:
    signal: float
    bias: float
    noise: float
    inner_product: float
    support_overlap: int

    @property
    def additivity_error(self) -> float:
        return abs(self.signal + self.bias + self.noise - self.inner_product)


def decompose_pairs(instance: SyntheticInstance, i, j) -> dict[str, np.ndarray]:
    """Vectorized signal/bias/noise split for index arrays ``i`` and ``j``."""
    i = np.atleast_1d(np.asarray(i, dtype=np.int64))
    j = np.atleast_1d(np.asarray(j, dtype=np.int64))
    n = instance.representations.shape[0]
    if i.size and (i.min() < 0 or j.min() < 0 or i.max() >= n or j.max() >= n):
        raise IndexOutOfRangeError(f"pair index outside [0, {n})")
    if np.any(i == j):
        raise ValueError("pairs need two distinct objects")
    wi = instance.supports[i] * instance.magnitudes[i]
    wj = instance.supports[j] * instance.magnitudes[j]
    signal = np.sum(wi * wj, axis=1)
    g = instance.dictionary.T @ instance.dictionary
    np.fill_diagonal(g, 0.0)
    bias = np.einsum("pa,ab,pb->p", wi, g, wj)
    fi, fj = instance.representations[i], instance.representations[j]
    ei, ej = instance.noise_effective[i], instance.noise_effective[j]
    noise = np.sum(fi * ej, axis=1) + np.sum(fj * ei, axis=1) - np.sum(ei * ej, axis=1)
    inner = np.sum(fi * fj, axis=1)
    overlap = np.sum(instance.supports[i] * instance.supports[j], axis=1).round().astype(np.int64)
    return {"signal": signal, "bias": bias, "noise": noise, "inner_product": inner, "support_overlap": overlap}


def decompose_inner_product(instance: SyntheticInstance, i: int, j: int) -> Decomposition:
    parts = decompose_pairs(instance, [i], [j])
    return Decomposition(
        signal=float(parts["signal"][0]), bias=float(parts["bias"][0]),
        noise=float(parts["noise"][0]), inner_product=float(parts["inner_product"][0]),
        support_overlap=int(parts["support_overlap"][0]),
    )


@dataclass
class BoundReport:
    signal_low: float
    signal_high: float
    bias_bound: float
    noise_bound: float
    signal_slack: float  # distance to the nearer bracket end, negative when outside
    bias_slack: float
    noise_slack: float
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def bias_bound(instance: SyntheticInstance) -> float:
    return instance.k * instance.eps_dict_max * instance.Phi ** 2


def noise_bound(instance: SyntheticInstance) -> float:
    return 3.0 * instance.eps_noise_effective


def check_bounds(decomposition: Decomposition, instance: SyntheticInstance) -> BoundReport:
    """Check one decomposition against the signal bracket and the bias/noise bounds."""
    t = decomposition.support_overlap
    lo = instance.phi ** 2 * t / instance.k
    hi = instance.Phi ** 2 * t / instance.k
    b_bound = bias_bound(instance)
    n_bound = noise_bound(instance)
    s = decomposition.signal
    s_slack = min(s - lo, hi - s)
    b_slack = b_bound - abs(decomposition.bias)
    n_slack = n_bound - abs(decomposition.noise)
    violations = []
    if s_slack < -BOUND_TOL:
        violations.append(f"signal {s:.6g} outside [{lo:.6g}, {hi:.6g}]")
    if b_slack < -BOUND_TOL:
        violations.append(f"|bias| {abs(decomposition.bias):.6g} exceeds {b_bound:.6g}")
    if n_slack < -BOUND_TOL:
        violations.append(f"|noise| {abs(decomposition.noise):.6g} exceeds {n_bound:.6g}")
    return BoundReport(lo, hi, b_bound, n_bound, s_slack, b_slack, n_slack, violations)


@dataclass
class Prop1Report:
    gamma: float
    precondition_value: float
    precondition_met: bool
    n_pairs: int
    part1_threshold: float  # support overlap needed to trigger part 1
    part1_triggered: int
    part1_failures: int
    part2_threshold: float  # inner product needed to trigger part 2
    part2_triggered: int
    part2_failures: int

    @property
    def ok(self) -> bool:
        return self.part1_failures == 0 and self.part2_failures == 0

    @property
    def status(self) -> str:
        if not self.precondition_met:
            return "precondition unmet"
        return "pass" if self.ok else "fail"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["status"] = self.status
        return out


def verify_prop1(instance: SyntheticInstance, gamma: float, pairs=None) -> Prop1Report:
    """Check both neighborhood implications on every pair.

    Part 1: enough shared support forces a large inner product. Part 2: a
    large inner product forces shared support. Implications are evaluated
    even when the precondition fails; the report flags that case.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    pairs = instance.pairs if pairs is None else np.asarray(pairs, dtype=np.int64)
    parts = decompose_pairs(instance, pairs[:, 0], pairs[:, 1])
    slack = bias_bound(instance) + noise_bound(instance)
    k = instance.k
    t1 = 2.0 * k / instance.phi ** 2 * (slack + gamma / 2.0)
    t2 = slack + gamma
    overlap = parts["support_overlap"]
    inner = parts["inner_product"]
    trig1 = overlap >= t1
    trig2 = inner >= t2
    fail1 = trig1 & ~(inner >= t2)
    fail2 = trig2 & ~(overlap >= k * gamma / instance.Phi ** 2)
    return Prop1Report(
        gamma=float(gamma), precondition_value=float(slack), precondition_met=bool(slack <= 1.0),
        n_pairs=int(pairs.shape[0]), part1_threshold=float(t1),
        part1_triggered=int(trig1.sum()), part1_failures=int(fail1.sum()),
        part2_threshold=float(t2), part2_triggered=int(trig2.sum()), part2_failures=int(fail2.sum()),
    )


@dataclass
class CertificationReport:
    config: dict
    eps_dict_max: float
    eps_dict_mean: float
    eps_noise_effective: float
    n_pairs: int
    max_additivity_error: float
    bound_violations: dict[str, int]
    prop1: list[Prop1Report]
    min_slack: dict[str, float]
    unit_norm_error: float
    support_sizes_exact: bool
    pairs: list[dict] | None = None

    @property
    def passed(self) -> bool:
        return (
            self.max_additivity_error <= BOUND_TOL
            and not any(self.bound_violations.values())
            and all(r.ok and r.precondition_met for r in self.prop1)
            and self.unit_norm_error <= BOUND_TOL
            and self.support_sizes_exact
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["prop1"] = [r.to_dict() for r in self.prop1]
        out["passed"] = self.passed
        if self.pairs is None:
            out.pop("pairs")
        return out


def certify(config: SyntheticConfig = CERTIFY_CONFIG, gammas=(0.05, 0.1, 0.2),
            verbose: bool = False) -> CertificationReport:
    """Generate an instance and run additivity, bound and implication checks on every pair."""
    inst = generate_instance(config)
    pairs = inst.pairs
    parts = decompose_pairs(inst, pairs[:, 0], pairs[:, 1])
    t = parts["support_overlap"]
    lo = inst.phi ** 2 * t / inst.k
    hi = inst.Phi ** 2 * t / inst.k
    s = parts["signal"]
    slack = {
        "signal": float(np.min(np.minimum(s - lo, hi - s))) if s.size else 0.0,
        "bias": float(bias_bound(inst) - np.max(np.abs(parts["bias"]), initial=0.0)),
        "noise": float(noise_bound(inst) - np.max(np.abs(parts["noise"]), initial=0.0)),
    }
    violations = {
        "signal": int(np.sum((s - lo < -BOUND_TOL) | (hi - s < -BOUND_TOL))),
        "bias": int(np.sum(np.abs(parts["bias"]) - bias_bound(inst) > BOUND_TOL)),
        "noise": int(np.sum(np.abs(parts["noise"]) - noise_bound(inst) > BOUND_TOL)),
    }
    additivity = np.abs(parts["signal"] + parts["bias"] + parts["noise"] - parts["inner_product"])
    norms = np.linalg.norm(inst.representations, axis=1)
    detail = None
    if verbose:
        detail = [
            {key: (int(v[p]) if key == "support_overlap" else float(v[p])) for key, v in parts.items()}
            for p in range(pairs.shape[0])
        ]
    return CertificationReport(
        config=config.to_dict(),
        eps_dict_max=inst.eps_dict_max, eps_dict_mean=inst.eps_dict_mean,
        eps_noise_effective=inst.eps_noise_effective, n_pairs=int(pairs.shape[0]),
        max_additivity_error=float(additivity.max(initial=0.0)),
        bound_violations=violations,
        prop1=[verify_prop1(inst, g, pairs) for g in gammas],
        min_slack=slack,
        unit_norm_error=float(np.abs(norms - 1.0).max(initial=0.0)),
        support_sizes_exact=bool(np.all(inst.supports.sum(axis=1) == inst.k)),
        pairs=detail,
    )


def sample_supports(n: int, m: int, k: int, rng=None) -> np.ndarray:
    """``n`` binary rows with exactly ``k`` ones at uniformly random positions."""
    if k > m:
        raise InfeasibleError(f"k={k} exceeds m={m}")
    rng = as_generator(rng)
    keys = rng.random((n, m))
    idx = np.argpartition(keys, k - 1, axis=1)[:, :k] if k < m else np.tile(np.arange(m), (n, 1))
    z = np.zeros((n, m))
    np.put_along_axis(z, idx, 1.0, axis=1)
    return z


def sample_magnitudes(supports, k: int, phi: float, Phi: float, rng=None) -> np.ndarray:
    """Uniform magnitudes in ``[phi/sqrt(k), Phi/sqrt(k)]`` on the support, zero elsewhere."""
    rng = as_generator(rng)
    supports = np.asarray(supports, dtype=np.float64)
    vals = rng.uniform(phi / math.sqrt(k), Phi / math.sqrt(k), size=supports.shape)
    return vals * supports


def represent(dictionary, supports, magnitudes, noise_scale=0.0, rng=None, offset=None):
    """Unit-norm representations of objects under one model.

    ``noise_scale`` (scalar or per-row) is the radius of the uniform-ball raw
    noise; ``offset`` is an optional constant vector added before
    normalization. Returns ``(representations, effective_noise)`` where the
    effective noise is everything beyond the sparse signal.
    """
    rng = as_generator(rng)
    dictionary = np.asarray(dictionary, dtype=np.float64)
    signal = (np.asarray(supports) * np.asarray(magnitudes)) @ dictionary.T
    n, d = signal.shape
    radius = np.broadcast_to(np.asarray(noise_scale, dtype=np.float64), (n,))
    raw = signal + uniform_ball(rng, 1.0, d, size=n) * radius[:, None]
    if offset is not None:
        raw = raw + np.asarray(offset, dtype=np.float64)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    if np.any(norms < 1e-9):
        raise DegenerateSignalError("a representation vanished before normalization")
    reps = raw / norms
    return reps, reps - signal


def biased_model_pair(n: int = 500, d: int = 64, m: int = 256, k: int = 4, offset_norm: float = 0.5,
                      noise_scale: float = 0.02, phi: float = 0.8, Phi: float = 1.2, seed=0):
    """Two models of the same ``n`` objects, each shifted by its own constant vector.

    Both models share the dictionary and supports but draw magnitudes and
    noise independently. Each adds a random offset of norm ``offset_norm``
    before normalization, which is the kind of global bias that mean
    subtraction removes.
    """
    rng = as_generator(seed)
    dictionary, _, _ = generate_dictionary(d, m, rng)
    supports = sample_supports(n, m, k, rng)
    offsets = rng.normal(size=(2, d))
    offsets *= offset_norm / np.linalg.norm(offsets, axis=1, keepdims=True)
    f, _ = represent(dictionary, supports, sample_magnitudes(supports, k, phi, Phi, rng),
                     noise_scale, rng, offset=offsets[0])
    g, _ = represent(dictionary, supports, sample_magnitudes(supports, k, phi, Phi, rng),
                     noise_scale, rng, offset=offsets[1])
    return f, g


def zipf_frequencies(n: int, exponent: float = 1.0) -> np.ndarray:
    """Relative frequencies ``proportional to rank^-exponent``, descending, summing to 1."""
    f = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    return f / f.sum()


def frequency_noise_pair(n: int = 5000, d: int = 64, m: int = 256, k: int = 4,
                         base_noise: float = 0.005, phi: float = 0.8, Phi: float = 1.2, seed=0):
    """Two models whose per-object noise grows like ``f^(-1/2)``.

    Objects ("words") get Zipfian frequencies; the noise radius of object
    ``i`` is ``base_noise * sqrt(f_max / f_i)``, mimicking an estimation error
    that shrinks with the number of observations. Returns ``(f, g, freqs)``.
    """
    rng = as_generator(seed)
    dictionary, _, _ = generate_dictionary(d, m, rng)
    supports = sample_supports(n, m, k, rng)
    magnitudes = sample_magnitudes(supports, k, phi, Phi, rng)
    freqs = zipf_frequencies(n)
    radius = base_noise * np.sqrt(freqs[0] / freqs)
    f, _ = represent(dictionary, supports, magnitudes, radius, rng)
    g, _ = represent(dictionary, supports, magnitudes, radius, rng)
    return f, g, freqs
