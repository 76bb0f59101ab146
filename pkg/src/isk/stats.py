"""Error bars for correlated time series and sample means."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["EstimateWithError", "integrated_autocorr_time", "blocked_stderr",
           "mean_with_error"]


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    stderr: float
    n_samples: int
    tau: float = 1.0

    def __iter__(self):
        yield self.mean
        yield self.stderr

    def within(self, value: float, k: float = 3.0, extra: float = 0.0) -> bool:
        """True if |mean - value| <= k * sqrt(stderr^2 + extra^2)."""
        return abs(self.mean - value) <= k * math.hypot(self.stderr, extra)


def integrated_autocorr_time(x) -> float:
    """Integrated autocorrelation time with Sokal's self-consistent window."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return 1.0
    y = x - x.mean()
    var = y @ y / n
    if var == 0.0:
        return 1.0
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(y, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n] / (n * var)
    taus = 2.0 * np.cumsum(acf) - 1.0
    window = np.arange(n) >= 5.0 * taus
    w = int(np.argmax(window)) if window.any() else n - 1
    return max(float(taus[w]), 1.0)


def _block_se(x, b):
    m = len(x) // b
    means = x[: m * b].reshape(m, b).mean(axis=1)
    return means.std(ddof=1) / math.sqrt(m)


def blocked_stderr(x, min_blocks: int = 32):
    """Standard error of the mean of a correlated series.

    The block size doubles until it exceeds four autocorrelation times and
    the next doubling no longer raises the estimate beyond its own noise.
    Returns (stderr, tau, block_size).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return 0.0, 1.0, 1
    tau = integrated_autocorr_time(x)
    b = 1
    se = _block_se(x, 1)
    while n // (2 * b) >= min_blocks:
        nb = n // (2 * b)
        nxt = _block_se(x, 2 * b)
        if b >= 4 * tau and nxt <= se * (1.0 + 2.0 / math.sqrt(2.0 * (nb - 1))):
            break
        se = max(se, nxt)
        b *= 2
    return float(se), tau, b


def mean_with_error(values) -> EstimateWithError:
    """Mean and standard error of independent values."""
    v = np.asarray(values, dtype=float)
    se = v.std(ddof=1) / math.sqrt(len(v)) if len(v) > 1 else 0.0
    return EstimateWithError(float(v.mean()), float(se), len(v))
