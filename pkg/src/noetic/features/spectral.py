"""Frequency and time-frequency kernels: Welch periodograms, band powers,
STFT magnitudes, and pairwise connectivity (xcorr, coherence, PSI).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import FeatureVector

DEFAULT_NPERSEG = 256
DEFAULT_OVERLAP = 0.5
TOTAL_POWER_BAND = (1.0, 45.0)
EEG_BANDS = (
    ("delta", 1.0, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
)
STFT_NPERSEG = 128
STFT_HOP = 64

@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    power: np.ndarray  # density, microvolt^2 / Hz
    window: str = "hann"
    nperseg: int = DEFAULT_NPERSEG
    noverlap: int = DEFAULT_NPERSEG // 2

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=np.float64)
        power = np.asarray(self.power, dtype=np.float64)
        if freqs.shape != power.shape:
            raise ValueError("freqs and power must align")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("freqs must ascend")
        if np.any(power < 0):
            raise ValueError("power density must be nonnegative")
        for name, arr in (("freqs", freqs), ("power", power)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

def _hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)

def _segments(x: np.ndarray, nperseg: int, step: int) -> np.ndarray:
    n_seg = (x.size - nperseg) // step + 1
    idx = np.arange(nperseg)[None, :] + step * np.arange(n_seg)[:, None]
    return x[idx]

def _welch_xspec(x, y, fs, nperseg=None, overlap=DEFAULT_OVERLAP):
    """Averaged one-sided cross spectral density E[conj(X) Y] (density scaling)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size:
        raise ValueError("inputs must have equal length")
    nperseg = min(nperseg or DEFAULT_NPERSEG, x.size)
    step = max(int(nperseg * (1.0 - overlap)), 1)
    w = _hann(nperseg)
    scale = 1.0 / (fs * np.sum(w**2))
    segs_x = _segments(x, nperseg, step)
    segs_y = _segments(y, nperseg, step)
    fx = np.fft.rfft(w * (segs_x - segs_x.mean(axis=1, keepdims=True)), axis=1)
    fy = np.fft.rfft(w * (segs_y - segs_y.mean(axis=1, keepdims=True)), axis=1)
    pxy = (np.conj(fx) * fy).mean(axis=0) * scale
    pxy[1:] *= 2.0
    if nperseg % 2 == 0:
        pxy[-1] /= 2.0
    freqs = np.fft.rfftfreq(nperseg, 1.0 / fs)
    return freqs, pxy

def welch_psd(x, fs, nperseg=None, overlap=DEFAULT_OVERLAP) -> Spectrum:
    """Averaged modified periodogram: Hann window, 50% overlap by default,
    one-sided density scaled by 1/(fs * sum(w^2)), per-segment demeaning."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 8:
        raise ValueError("need at least 8 samples")
    nperseg = min(nperseg or DEFAULT_NPERSEG, x.size)
    freqs, pxx = _welch_xspec(x, x, fs, nperseg, overlap)
    return Spectrum(freqs, pxx.real, nperseg=nperseg,
                    noverlap=nperseg - max(int(nperseg * (1 - overlap)), 1))

def integrate_band(spectrum: Spectrum, lo: float, hi: float) -> float:
    """Trapezoidal band power with PSD interpolated at the band edges,
    so adjacent bands tile exactly."""
    if hi <= lo:
        raise ValueError("band must have positive width")
    f, p = spectrum.freqs, spectrum.power
    lo = max(lo, float(f[0]))
    hi = min(hi, float(f[-1]))
    if hi <= lo:
        raise ValueError(f"band [{lo}, {hi}] outside spectrum range")
    inner = (f > lo) & (f < hi)
    grid = np.concatenate(([lo], f[inner], [hi]))
    vals = np.interp(grid, f, p)
    return float(np.trapezoid(vals, grid))

def band_powers(spectrum: Spectrum, bands: Sequence = EEG_BANDS,
                relative: bool = False, channel: int | None = None) -> FeatureVector:
    """Per-band trapezoidal power; relative divides by the 1-45 Hz total."""
    total = integrate_band(spectrum, *TOTAL_POWER_BAND) if relative else 1.0
    values, names = [], []
    prefix = f"ch{channel}." if channel is not None else ""
    kind = "relpow" if relative else "power"
    for name, lo, hi in bands:
        p = integrate_band(spectrum, lo, hi)
        values.append(p / total if total else 0.0)
        names.append(f"{prefix}band.{name}.{kind}")
    return FeatureVector(np.array(values), tuple(names))

def stft(x, fs, nperseg: int = STFT_NPERSEG, hop: int = STFT_HOP):
    """One-sided STFT magnitudes.

    Returns (freqs, frame_times, mag) with mag shaped (frames, bins) and
    frames = floor((N - nperseg) / hop) + 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < nperseg:
        raise ValueError(f"need at least {nperseg} samples")
    w = _hann(nperseg)
    segs = _segments(x, nperseg, hop)
    mag = np.abs(np.fft.rfft(segs * w, axis=1))
    freqs = np.fft.rfftfreq(nperseg, 1.0 / fs)
    times = (np.arange(segs.shape[0]) * hop + nperseg / 2) / fs
    return freqs, times, mag

def _xcorr(x, y) -> Tuple[float, int]:
    n = x.size
    sx, sy = x.std(), y.std()
    if sx == 0 or sy == 0:
        raise ValueError("zero-variance input")
    xz = (x - x.mean()) / sx
    yz = (y - y.mean()) / sy
    c = np.correlate(yz, xz, mode="full") / n
    lags = np.arange(-(n - 1), n)
    best = int(np.argmax(np.abs(c)))
    return float(c[best]), int(lags[best])

def connectivity(x_i, x_j, fs, method: str = "coherence",
                 band: Tuple[float, float] = TOTAL_POWER_BAND,
                 nperseg: int | None = None):
    """Pairwise coupling between two equal-length channels.

    xcorr: (peak normalized cross-correlation, lag); positive lag means
    x_j is a delayed copy of x_i.
    coherence: band-mean magnitude-squared coherence.
    psi: phase slope index over the band; positive means x_i leads x_j.
    """
    x = np.asarray(x_i, dtype=np.float64)
    y = np.asarray(x_j, dtype=np.float64)
    if x.size != y.size or x.size < 64:
        raise ValueError("need equal lengths >= 64")
    if method == "xcorr":
        return _xcorr(x, y)
    if x.std() == 0 or y.std() == 0:
        raise ValueError("zero-variance input")
    freqs, pxy = _welch_xspec(x, y, fs, nperseg)
    _, pxx = _welch_xspec(x, x, fs, nperseg)
    _, pyy = _welch_xspec(y, y, fs, nperseg)
    denom = np.sqrt(pxx.real * pyy.real)
    valid = denom > 0
    coherency = np.zeros_like(pxy)
    coherency[valid] = pxy[valid] / denom[valid]
    mask = (freqs >= band[0]) & (freqs <= band[1]) & valid
    if not mask.any():
        raise ValueError(f"band [{band[0]}, {band[1]}] outside spectrum range")
    if method == "coherence":
        return float(np.mean(np.abs(coherency[mask]) ** 2))
    if method == "psi":
        idx = np.flatnonzero(mask)
        pairs = [(a, b) for a, b in zip(idx[:-1], idx[1:]) if b == a + 1]
        psi = sum(coherency[a] * np.conj(coherency[b]) for a, b in pairs)
        return float(np.imag(psi))
    raise ValueError(f"unknown connectivity method {method!r}")
