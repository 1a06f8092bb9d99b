"""Small statistics helpers: Wilson intervals, batch means, TV distance."""
from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion ``k / n``."""
    if n <= 0:
        return 0.0, 1.0
    ph = k / n
    den = 1 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def batch_means(x, n_batches: int = 20, conf: float = 0.95) -> tuple[float, float, float]:
    """Mean and a t-interval from non-overlapping batch means."""
    x = np.asarray(x, dtype=np.float64)
    b = len(x) // n_batches
    if b < 1:
        raise ValueError("not enough data for batch means")
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    m = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    t = sps.t.ppf(0.5 + conf / 2, n_batches - 1)
    return m, m - t * se, m + t * se


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p - q).sum())


def empirical_pmf(codes, n_states: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    return np.bincount(codes, minlength=n_states) / max(len(codes), 1)
