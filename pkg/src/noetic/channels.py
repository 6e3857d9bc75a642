"""Channel relevance ranking: correlation, mutual information, chi-squared,
and CSP-pattern criteria over per-epoch log-variance scalars.

Every method is normalized so that higher means more relevant, and rankings
are invariant to positive per-channel amplitude gain (the CSP path
standardizes channel variance before fitting to guarantee this).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import EpochSet
from .features.csp import channel_scores_from_patterns, csp_fit

METHODS = ("correlation", "mutual_information", "chi_squared", "csp")
N_BINS = 16


@dataclass(frozen=True)
class ChannelScores:
    method: str
    scores: np.ndarray
    n_epochs: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        scores = np.asarray(self.scores, dtype=np.float64)
        if not np.isfinite(scores).all():
            raise ValueError("scores must be finite")
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    def to_report(self, chosen: Sequence[int]) -> str:
        return json.dumps({
            "method": self.method,
            "scores": [float(s) for s in self.scores],
            "n_epochs": self.n_epochs,
            "chosen": [int(c) for c in chosen],
        }, indent=2, sort_keys=True)


def channel_scalars(epochs: EpochSet) -> np.ndarray:
    """(epochs x channels) matrix of ln(channel variance + 1e-12).

    Log-variance is the standard band-power proxy that turns a time series
    into one scalar per epoch before the statistical criteria apply.
    """
    if epochs.n_epochs < 1:
        raise ValueError("need at least one epoch")
    var = epochs.data.var(axis=2, ddof=1)
    return np.log(var + 1e-12)


def _equal_freq_bins(x: np.ndarray, n_bins: int = N_BINS) -> np.ndarray:
    edges = np.unique(np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1]))
    return np.searchsorted(edges, x, side="right")


def _contingency(bins: np.ndarray, labels: np.ndarray) -> np.ndarray:
    b_vals, b_idx = np.unique(bins, return_inverse=True)
    c_vals, c_idx = np.unique(labels, return_inverse=True)
    table = np.zeros((b_vals.size, c_vals.size))
    np.add.at(table, (b_idx, c_idx), 1.0)
    return table


def _mutual_information_bits(table: np.ndarray) -> float:
    n = table.sum()
    pxy = table / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    return float((pxy[nz] * np.log2(pxy[nz] / (px @ py)[nz])).sum())


def _chi_squared(table: np.ndarray) -> float:
    n = table.sum()
    expected = table.sum(axis=1, keepdims=True) @ table.sum(axis=0, keepdims=True) / n
    nz = expected > 0
    return float(((table[nz] - expected[nz]) ** 2 / expected[nz]).sum())


def _max_abs_corr(s: np.ndarray, labels: np.ndarray, classes: np.ndarray) -> float:
    best = 0.0
    if s.std() == 0:
        return 0.0
    for c in classes:
        y = (labels == c).astype(np.float64)
        r = np.corrcoef(s, y)[0, 1]
        if np.isfinite(r):
            best = max(best, abs(r))
    return best


def score_channels(epochs: EpochSet, labels=None, method: str = "correlation") -> ChannelScores:
    """Score every channel's relevance to the class label.

    correlation: max over classes of |Pearson r| between the channel scalar
    and a one-vs-rest indicator. mutual_information: plug-in MI in bits on
    16 equal-frequency bins. chi_squared: Pearson chi-squared on the same
    contingency table. csp: max absolute CSP pattern weight per channel
    (two-class only, channels variance-standardized first).
    """
    labels = epochs.labels() if labels is None else np.asarray(labels)
    if any(l is None for l in labels):
        raise ValueError("all epochs need a class id")
    labels = labels.astype(int)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("degenerate labels: need at least 2 classes")
    if epochs.n_epochs < 4:
        raise ValueError("need at least 4 epochs")
    if method == "csp":
        if classes.size != 2:
            raise ValueError("csp scoring needs exactly 2 classes")
        std = epochs.data.std(axis=(0, 2))
        std[std == 0] = 1.0
        scaled = epochs.replace_data(epochs.data / std[None, :, None])
        m = min(3, epochs.n_channels // 2)
        model = csp_fit(scaled, labels, m=m)
        scores = channel_scores_from_patterns(model)
        return ChannelScores("csp", scores, epochs.n_epochs)
    scalars = channel_scalars(epochs)
    scores = np.empty(epochs.n_channels)
    for j in range(epochs.n_channels):
        s = scalars[:, j]
        if method == "correlation":
            scores[j] = _max_abs_corr(s, labels, classes)
        elif method in ("mutual_information", "chi_squared"):
            table = _contingency(_equal_freq_bins(s), labels)
            scores[j] = (_mutual_information_bits(table) if method == "mutual_information"
                         else _chi_squared(table))
        else:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return ChannelScores(method, scores, epochs.n_epochs)


def select_top_n(scores: ChannelScores, n: int) -> List[int]:
    """Indices of the n best channels, score descending, ties to lower index."""
    k = scores.scores.size
    if not 1 <= n <= k:
        raise ValueError(f"n must be in [1, {k}]")
    order = np.lexsort((np.arange(k), -scores.scores))
    return [int(i) for i in order[:n]]
