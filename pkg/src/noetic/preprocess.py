"""Epoch-level preprocessing: re-referencing, windowing, amplitude-based
rejection, and regression-based artifact removal from calibration data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import EpochSet, SignalBlock

KAISER_BETA = 8.6
RIDGE = 1e-8


def common_average_reference(x):
    """Subtract the cross-channel mean from every sample vector."""
    if isinstance(x, EpochSet):
        if x.n_channels < 2:
            raise ValueError("common average needs at least 2 channels")
        return x.replace_data(x.data - x.data.mean(axis=1, keepdims=True))
    data = np.asarray(x, dtype=np.float64)
    if data.shape[0] < 2:
        raise ValueError("common average needs at least 2 channels")
    return data - data.mean(axis=0, keepdims=True)


def kaiser_window(epochs, beta: float = KAISER_BETA, length: int | None = None):
    """Pointwise multiply each channel by an I0-based Kaiser window."""
    if isinstance(epochs, EpochSet):
        data = epochs.data
        n = data.shape[2]
    else:
        data = np.asarray(epochs, dtype=np.float64)
        n = data.shape[-1]
    if length is not None and length != n:
        raise ValueError(f"window length {length} != epoch length {n}")
    w = np.kaiser(n, beta)
    if isinstance(epochs, EpochSet):
        return epochs.replace_data(data * w)
    return data * w


@dataclass(frozen=True)
class RejectedEpoch:
    index: int
    channel: int
    peak_uv: float


@dataclass(frozen=True)
class RejectionReport:
    kept: int
    rejected: tuple

    @property
    def total(self) -> int:
        return self.kept + len(self.rejected)


def reject_epochs_amplitude(epochs: EpochSet, threshold_uv: float):
    """Drop epochs where any |sample| exceeds the threshold on any channel."""
    if not threshold_uv > 0:
        raise ValueError("threshold must be > 0")
    peaks = np.abs(epochs.data).max(axis=2)  # (n, channels)
    bad = peaks.max(axis=1) > threshold_uv
    rejected = tuple(
        RejectedEpoch(int(i), int(np.argmax(peaks[i])), float(peaks[i].max()))
        for i in np.flatnonzero(bad)
    )
    keep = ~bad
    kept = EpochSet(
        epochs.data[keep],
        tuple(c for c, k in zip(epochs.class_ids, keep) if k),
        tuple(t for t, k in zip(epochs.marker_times, keep) if k),
        epochs.fs, epochs.channels, epochs.pre_s, epochs.post_s,
    )
    return kept, RejectionReport(kept=int(keep.sum()), rejected=rejected)


@dataclass(frozen=True)
class RegressionCleaner:
    coefficients: np.ndarray  # (reference channels, data channels)
    reference_channels: tuple

    def __post_init__(self):
        b = np.asarray(self.coefficients, dtype=np.float64)
        if not np.isfinite(b).all():
            raise ValueError("coefficients must be finite")
        b.flags.writeable = False
        object.__setattr__(self, "coefficients", b)
        object.__setattr__(self, "reference_channels", tuple(self.reference_channels))


def fit_regression_cleaner(calibration: SignalBlock,
                           reference_channels: Sequence[int]) -> RegressionCleaner:
    """Least-squares artifact coefficients from a calibration recording.

    Solves B = argmin ||X - R B||^2 with a small ridge, where R stacks the
    reference channels and X the remaining ones; fitted once on calibration
    data and reused on experimental data.
    """
    refs = tuple(int(c) for c in reference_channels)
    for c in refs:
        if not 0 <= c < calibration.n_channels:
            raise ValueError(f"reference channel {c} not in recording")
    if not refs:
        raise ValueError("need at least one reference channel")
    if calibration.n_samples < 10 * len(refs):
        raise ValueError("calibration too short: need >= 10 samples per reference channel")
    data_idx = [i for i in range(calibration.n_channels) if i not in refs]
    r = calibration.samples[list(refs)].T          # (T, n_ref)
    x = calibration.samples[data_idx].T            # (T, n_data)
    gram = r.T @ r + RIDGE * np.eye(len(refs))
    coef = np.linalg.solve(gram, r.T @ x)
    if not np.isfinite(coef).all():
        raise ValueError("rank-deficient reference channels")
    return RegressionCleaner(coef, refs)


def _clean_matrix(data: np.ndarray, cleaner: RegressionCleaner) -> np.ndarray:
    refs = list(cleaner.reference_channels)
    data_idx = [i for i in range(data.shape[0]) if i not in cleaner.reference_channels]
    out = data.copy()
    out[data_idx] = data[data_idx] - cleaner.coefficients.T @ data[refs]
    return out


def regression_clean(x, cleaner: RegressionCleaner):
    """Subtract the fitted reference projection; references pass through."""
    if isinstance(x, SignalBlock):
        return SignalBlock(_clean_matrix(x.samples, cleaner), x.fs, x.t0, x.channels)
    if isinstance(x, EpochSet):
        cleaned = np.stack([_clean_matrix(e, cleaner) for e in x.data]) \
            if x.n_epochs else x.data
        return x.replace_data(cleaned)
    return _clean_matrix(np.asarray(x, dtype=np.float64), cleaner)
