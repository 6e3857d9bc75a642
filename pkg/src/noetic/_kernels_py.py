"""NumPy/SciPy fallback implementations of the hot kernels.

Same call signatures as the compiled module ``_kernels_c``; ``noetic.kernels``
picks whichever is available at import time. The entropy counters work in
column chunks so memory stays bounded on long windows.
"""

import numpy as np
from scipy import signal as _sig

BACKEND = "python"

_CHUNK = 256


def sosfilt(sos, x, zi):
    """Causal second-order-section cascade over the last axis.

    Parameters
    ----------
    sos : (S, 6) float64, rows (b0, b1, b2, a0, a1, a2) with a0 == 1
    x : (C, T) float64
    zi : (S, C, 2) float64, updated in place

    Returns
    -------
    y : (C, T) float64
    """
    y, zf = _sig.sosfilt(sos, x, axis=-1, zi=zi)
    zi[...] = zf
    return y


def sampen_counts(x, m, r):
    """Template-match pair counts for sample entropy.

    Counts pairs i < j (over the N-m templates that admit an (m+1)-length
    extension) whose Chebyshev distance is <= r, for lengths m and m+1.
    Returns (b_count, a_count).
    """
    x = np.asarray(x, dtype=np.float64)
    n_t = x.size - m
    if n_t < 2:
        return 0, 0
    tm = np.lib.stride_tricks.sliding_window_view(x, m)[:n_t]
    t1 = np.lib.stride_tricks.sliding_window_view(x, m + 1)[:n_t]
    b = a = 0
    for i in range(0, n_t - 1, _CHUNK):
        hi = min(i + _CHUNK, n_t - 1)
        for k in range(i, hi):
            dm = np.abs(tm[k + 1 :] - tm[k]).max(axis=1)
            hits = dm <= r
            b += int(hits.sum())
            if hits.any():
                d1 = np.abs(t1[k + 1 :, -1][hits] - t1[k, -1])
                a += int((d1 <= r).sum())
    return b, a


def apen_phi(x, m, r):
    """Phi(m) for approximate entropy: mean log of self-inclusive match ratios."""
    x = np.asarray(x, dtype=np.float64)
    n_t = x.size - m + 1
    tm = np.lib.stride_tricks.sliding_window_view(x, m)
    counts = np.empty(n_t)
    for k in range(n_t):
        d = np.abs(tm - tm[k]).max(axis=1)
        counts[k] = np.count_nonzero(d <= r)
    return float(np.mean(np.log(counts / n_t)))


def higuchi_lengths(x, k_max):
    """Mean normalized curve length L(k) for k = 1 .. k_max."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    lengths = np.empty(k_max)
    for k in range(1, k_max + 1):
        acc = 0.0
        for m in range(k):
            pts = x[m::k]
            n_seg = pts.size - 1
            if n_seg < 1:
                continue
            acc += np.abs(np.diff(pts)).sum() * (n - 1) / (n_seg * k) / k
        lengths[k - 1] = acc / k
    return lengths


def dfa_fluctuations(profile, scales):
    """RMS fluctuation of the linearly detrended profile per box size."""
    profile = np.asarray(profile, dtype=np.float64)
    n = profile.size
    out = np.empty(len(scales))
    for si, s in enumerate(scales):
        n_boxes = n // s
        seg = profile[: n_boxes * s].reshape(n_boxes, s)
        t = np.arange(s, dtype=np.float64)
        design = np.column_stack([t, np.ones(s)])
        coef, _, _, _ = np.linalg.lstsq(design, seg.T, rcond=None)
        resid = seg - (design @ coef).T
        out[si] = np.sqrt(np.mean(resid**2))
    return out
