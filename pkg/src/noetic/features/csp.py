"""Common spatial patterns: two-class variance-maximizing spatial filters.

Fitting averages trace-normalized epoch covariances per class, whitens the
composite, and eigendecomposes the whitened first-class covariance. The m
largest and m smallest eigenvectors become filters; patterns are the
pseudo-inverse columns. Features are log normalized variances of the 2m
filtered signals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..core import EpochSet
from . import FeatureVector

DEFAULT_PAIRS = 3


@dataclass(frozen=True)
class CspModel:
    filters: np.ndarray   # (2m, channels)
    patterns: np.ndarray  # (channels, 2m)
    class_pair: tuple     # (low_id, high_id); eigen order follows low_id
    m: int

    def __post_init__(self):
        for name in ("filters", "patterns"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def _mean_normalized_cov(data: np.ndarray) -> np.ndarray:
    covs = []
    for epoch in data:
        centered = epoch - epoch.mean(axis=1, keepdims=True)
        c = centered @ centered.T / (epoch.shape[1] - 1)
        covs.append(c / np.trace(c))
    return np.mean(covs, axis=0)


def csp_fit(epochs: EpochSet, labels=None, m: int = DEFAULT_PAIRS) -> CspModel:
    """Fit CSP filters on a two-class epoch set."""
    labels = epochs.labels() if labels is None else np.asarray(labels)
    classes = sorted(set(int(c) for c in labels))
    if len(classes) != 2:
        raise ValueError(
            f"CSP needs exactly 2 classes, got {len(classes)}; use one-vs-rest for more")
    if 2 * m > epochs.n_channels:
        raise ValueError("m too large: need 2m <= channel count")
    lo, hi = classes
    data = epochs.data
    for c in classes:
        if np.sum(labels == c) < 2:
            raise ValueError(f"class {c} needs at least 2 epochs")
    c_lo = _mean_normalized_cov(data[labels == lo])
    c_hi = _mean_normalized_cov(data[labels == hi])
    composite = c_lo + c_hi
    evals, evecs = np.linalg.eigh(composite)
    keep = evals > 1e-12 * evals.max()
    whiten = (evecs[:, keep] / np.sqrt(evals[keep])).T  # (k, channels)
    s_lo = whiten @ c_lo @ whiten.T
    evals2, evecs2 = np.linalg.eigh(s_lo)  # ascending
    order = np.argsort(evals2)
    largest = order[::-1][:m]
    smallest = order[:m]
    sel = np.concatenate([largest, smallest])
    filters = (evecs2[:, sel].T @ whiten)
    patterns = np.linalg.pinv(filters)
    return CspModel(filters, patterns, (lo, hi), m)


def csp_features(epoch: np.ndarray, model: CspModel,
                 channel_prefix: bool = False) -> FeatureVector:
    """Log normalized variance of each spatially filtered signal."""
    epoch = np.asarray(epoch, dtype=np.float64)
    if epoch.ndim != 2 or epoch.shape[0] != model.filters.shape[1]:
        raise ValueError("epoch channel count does not match the model")
    z = model.filters @ (epoch - epoch.mean(axis=1, keepdims=True))
    var = z.var(axis=1, ddof=1)
    feats = np.log(var / var.sum())
    names = tuple(f"csp.f{i}.logvar" for i in range(feats.size))
    return FeatureVector(feats, names)


def channel_scores_from_patterns(model: CspModel) -> np.ndarray:
    """Per-channel relevance: max absolute pattern weight over the 2m
    retained patterns."""
    return np.abs(model.patterns).max(axis=1)


def model_to_json(model: CspModel) -> str:
    return json.dumps({
        "format": "noetic-csp", "version": 1,
        "filters": model.filters.tolist(),
        "patterns": model.patterns.tolist(),
        "class_pair": list(model.class_pair),
        "m": model.m,
    }, sort_keys=True)


def model_from_json(text: str) -> CspModel:
    d = json.loads(text)
    if d.get("format") != "noetic-csp":
        raise ValueError("not a CSP model document")
    return CspModel(np.array(d["filters"]), np.array(d["patterns"]),
                    tuple(d["class_pair"]), d["m"])
