"""Time-domain feature kernels: moments, fractal dimensions, entropies,
Hjorth descriptors, and detrended fluctuation analysis.

The loop-heavy kernels (Higuchi lengths, ApEn/SampEn counting, DFA box
fluctuations) run on the compiled backend when available.
"""

from __future__ import annotations

import math

from typing import NamedTuple

import numpy as np

from .. import kernels

HIGUCHI_K_MAX = 8
SHANNON_BINS = 64
ENTROPY_M = 2
ENTROPY_R_FACTOR = 0.2
DFA_N_SCALES = 10

class Moments(NamedTuple):
    mean: float
    variance: float
    skewness: float
    kurtosis: float  # excess kurtosis (m4/m2^2 - 3)
    degenerate: bool = False

def moments(x) -> Moments:
    """Mean, sample variance, skewness, excess kurtosis.

    A zero-variance input reports skewness/kurtosis as 0 with the
    ``degenerate`` flag set instead of dividing by zero.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 4:
        raise ValueError("need at least 4 samples")
    mu = float(x.mean())
    centered = x - mu
    m2 = float(np.mean(centered**2))
    var = float(np.sum(centered**2) / (x.size - 1))
    if m2 == 0.0:
        return Moments(mu, 0.0, 0.0, 0.0, degenerate=True)
    skew = float(np.mean(centered**3) / m2**1.5)
    kurt = float(np.mean(centered**4) / m2**2 - 3.0)
    return Moments(mu, var, skew, kurt)

def fractal_dimension(x, method: str = "higuchi", k_max: int = HIGUCHI_K_MAX) -> float:
    """Higuchi or Katz fractal dimension of one channel."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 32:
        raise ValueError("need at least 32 samples")
    if method == "higuchi":
        ks = np.arange(1, k_max + 1)
        lengths = kernels.higuchi_lengths(np.ascontiguousarray(x), k_max)
        # slope of log L(k) against log(1/k)
        return float(np.polyfit(np.log(1.0 / ks), np.log(lengths), 1)[0])
    if method == "katz":
        diffs = np.abs(np.diff(x))
        path = float(diffs.sum())
        extent = float(np.abs(x - x[0]).max())
        if path == 0.0 or extent == 0.0:
            return 1.0
        n = x.size - 1
        return float(math.log10(n) / (math.log10(n) + math.log10(extent / path)))
    raise ValueError(f"unknown fractal method {method!r}")

def entropy(x, method: str = "shannon", m: int = ENTROPY_M,
            r_factor: float = ENTROPY_R_FACTOR, bins: int = SHANNON_BINS) -> float:
    """Shannon (histogram plug-in, bits), approximate, or sample entropy.

    ApEn/SampEn use Chebyshev distance with tolerance r = r_factor * std.
    Sample entropy with zero template matches is +inf (callers building
    feature vectors substitute and flag it).
    """
    x = np.asarray(x, dtype=np.float64)
    if method == "shannon":
        counts, _ = np.histogram(x, bins=bins)
        p = counts[counts > 0] / x.size
        return float(-(p * np.log2(p)).sum())
    if x.size < 64:
        raise ValueError("ApEn/SampEn need at least 64 samples")
    r = r_factor * float(x.std())
    xc = np.ascontiguousarray(x)
    if method == "approximate":
        return float(kernels.apen_phi(xc, m, r) - kernels.apen_phi(xc, m + 1, r))
    if method == "sample":
        b, a = kernels.sampen_counts(xc, m, r)
        if a == 0 or b == 0:
            return math.inf
        return float(-math.log(a / b))
    raise ValueError(f"unknown entropy method {method!r}")

def hjorth(x) -> tuple:
    """(activity, mobility, complexity); scale-invariant beyond activity."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        raise ValueError("need at least 3 samples")
    var0 = float(np.var(x, ddof=1))
    if var0 == 0.0:
        raise ValueError("zero-variance input has no Hjorth parameters")
    d1 = np.diff(x)
    d2 = np.diff(d1)
    var1 = float(np.var(d1, ddof=1))
    var2 = float(np.var(d2, ddof=1))
    mobility = math.sqrt(var1 / var0)
    if var1 == 0.0:
        raise ValueError("first difference has zero variance")
    complexity = math.sqrt(var2 / var1) / mobility
    return var0, mobility, complexity

def dfa_scales(n: int, n_scales: int = DFA_N_SCALES) -> np.ndarray:
    """Log-spaced integer box sizes in [4, n/4], deduplicated."""
    raw = np.geomspace(4, n // 4, n_scales)
    return np.unique(np.round(raw).astype(int))

def dfa(x) -> float:
    """Detrended fluctuation scaling exponent alpha.

    Cumulative-sum profile of the demeaned signal, order-1 detrend per box,
    slope of log F(s) against log s over log-spaced scales.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 256:
        raise ValueError("need at least 256 samples")
    profile = np.cumsum(x - x.mean())
    scales = dfa_scales(x.size)
    flucts = kernels.dfa_fluctuations(np.ascontiguousarray(profile), scales)
    return float(np.polyfit(np.log(scales), np.log(flucts), 1)[0])
