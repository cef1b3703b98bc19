"""Differential-entropy estimators, entropy power and the EPI gap.

All entropies are in nats.  A complex ``n``-vector is handled as ``2n`` real
coordinates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from ..spectrum import Ensemble

JITTER = 1e-12
MIN_SAMPLES = 100
DEFAULT_SPLITS = 10


class Estimator(str, enum.Enum):
    KNN = "knn"
    GAUSSIAN_PLUGIN = "gaussian_plugin"
    DISCRETE_EXACT = "discrete_exact"


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    stderr: float
    estimator: Estimator
    sample_count: int
    real_dims: int
    degenerate: bool = False

    @property
    def per_dim(self) -> float:
        return self.value / self.real_dims

    def to_bits(self) -> float:
        return self.value / np.log(2)


def noise_entropy_constant(n: int) -> float:
    """``C_n = log(pi e / n)``."""
    return float(np.log(np.pi * np.e / n))


def _as_real_samples(samples) -> np.ndarray:
    if isinstance(samples, Ensemble):
        return samples.real_view()
    x = np.asarray(samples)
    if np.iscomplexobj(x):
        x = np.concatenate([x.real, x.imag], axis=-1) if x.ndim > 1 else np.stack([x.real, x.imag], axis=1)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def _kl_entropy(x: np.ndarray, k: int) -> float:
    n, d = x.shape
    dist, _ = cKDTree(x).query(x, k=k + 1, p=np.inf)
    eps = dist[:, -1]
    if np.any(eps == 0):
        scale = JITTER * (1.0 + np.abs(x))
        x = x + scale * np.random.default_rng(0).uniform(-1, 1, size=x.shape)
        dist, _ = cKDTree(x).query(x, k=k + 1, p=np.inf)
        eps = dist[:, -1]
    # max-norm ball of radius eps has volume (2 eps)^d
    return float(digamma(n) - digamma(k) + d * np.mean(np.log(2 * eps)))


def knn_entropy(samples, k: int = 5, splits: int = DEFAULT_SPLITS) -> EntropyEstimate:
    """Kozachenko-Leonenko entropy estimate with Chebyshev distances.

    Args:
        samples: an :class:`Ensemble`, a complex array (modes on the last axis)
            or a real ``(count, dims)`` array.
        k: neighbour order, 3..20.
        splits: number of disjoint subsamples used for the standard error.

    Returns:
        An :class:`EntropyEstimate`.  A zero-variance sample yields
        ``value = -inf`` with ``degenerate=True``.
    """
    x = _as_real_samples(samples)
    count, dims = x.shape
    if count < MIN_SAMPLES:
        raise ValueError(f"knn_entropy needs at least {MIN_SAMPLES} samples, got {count}")
    if not 3 <= k <= 20:
        raise ValueError(f"k must be in [3, 20], got {k}")
    if splits < 4:
        raise ValueError("at least 4 splits are needed for a standard error")
    if np.all(np.ptp(x, axis=0) == 0):
        return EntropyEstimate(-np.inf, 0.0, Estimator.KNN, count, dims, degenerate=True)
    value = _kl_entropy(x, k)
    size = count // splits
    parts = [_kl_entropy(x[i * size:(i + 1) * size], k) for i in range(splits)]
    stderr = float(np.std(parts, ddof=1) / np.sqrt(splits))
    return EntropyEstimate(value, stderr, Estimator.KNN, count, dims)


def gaussian_entropy(samples) -> EntropyEstimate:
    """Entropy of the Gaussian with the sample covariance (an upper bound)."""
    x = _as_real_samples(samples)
    count, dims = x.shape
    cov = np.atleast_2d(np.cov(x, rowvar=False, bias=True))
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        return EntropyEstimate(-np.inf, 0.0, Estimator.GAUSSIAN_PLUGIN, count, dims, degenerate=True)
    value = 0.5 * (dims * np.log(2 * np.pi * np.e) + logdet)
    # asymptotic sd of the sample log-determinant is sqrt(2 d / N)
    stderr = 0.5 * np.sqrt(2 * dims / count)
    return EntropyEstimate(float(value), float(stderr), Estimator.GAUSSIAN_PLUGIN, count, dims)


def entropy_power(h: EntropyEstimate) -> float:
    """``exp(2 h / d) / (2 pi e)``: variance of the equal-entropy Gaussian per real dimension."""
    if h.real_dims < 1:
        raise ValueError("real_dims must be >= 1")
    if h.value == -np.inf:
        return 0.0
    if not np.isfinite(h.value):
        raise ValueError("entropy must be finite")
    return float(np.exp(2 * h.value / h.real_dims) / (2 * np.pi * np.e))


def entropy_power_stderr(h: EntropyEstimate) -> float:
    return entropy_power(h) * 2 * h.stderr / h.real_dims


@dataclass(frozen=True)
class EpiGap:
    gap: float
    stderr: float
    power_sum: float
    power_x: float
    power_y: float
    h_sum: EntropyEstimate
    h_x: EntropyEstimate
    h_y: EntropyEstimate

    def holds(self, n_sigma: float = 2.0) -> bool:
        return self.gap >= -n_sigma * self.stderr


def epi_gap(x_samples, y_samples, k: int = 5, rng: np.random.Generator | None = None) -> EpiGap:
    """Entropy-power-inequality gap ``N(X+Y) - N(X) - N(Y)`` from samples.

    ``X + Y`` is formed by pairing the two sample sets through a random
    permutation of ``y_samples``.
    """
    x = _as_real_samples(x_samples)
    y = _as_real_samples(y_samples)
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    count = min(len(x), len(y))
    rng = rng or np.random.default_rng(0)
    s = x[:count] + y[rng.permutation(len(y))[:count]]
    hx, hy, hs = (knn_entropy(v, k=k) for v in (x, y, s))
    nx, ny, ns = entropy_power(hx), entropy_power(hy), entropy_power(hs)
    err = np.sqrt(sum(entropy_power_stderr(h) ** 2 for h in (hx, hy, hs)))
    return EpiGap(ns - nx - ny, float(err), ns, nx, ny, hs, hx, hy)
