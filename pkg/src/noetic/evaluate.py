"""Evaluation: stratified cross-validation, confusion metrics (accuracy and
multiclass Matthews correlation), and information transfer rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .classify import predict_many, train


def stratified_folds(labels, k: int, seed: int = 0) -> List[np.ndarray]:
    """Deal label-sorted indices round-robin into k folds.

    Indices are sorted by label (stable), the seed permutes order within
    each class, and the running deal position continues across class
    boundaries, so per-fold class counts stay within one of proportional.
    """
    labels = np.asarray(labels)
    n = labels.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    ordered = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        ordered.extend(idx[rng.permutation(idx.size)])
    folds = [[] for _ in range(k)]
    for pos, idx in enumerate(ordered):
        folds[pos % k].append(int(idx))
    return [np.array(sorted(f), dtype=int) for f in folds]


@dataclass(frozen=True)
class FoldResult:
    accuracy: float
    mcc: float
    test_indices: tuple


@dataclass(frozen=True)
class CvResult:
    kind: str
    folds: tuple
    mean_accuracy: float
    mean_mcc: float


def cross_validate(kind: str, data, labels, k: int = 5, seed: int = 0) -> CvResult:
    """k-fold stratified CV; reports accuracy and MCC per fold and averaged."""
    labels = np.asarray(labels, dtype=int)
    data = np.asarray(data, dtype=np.float64)
    for c in np.unique(labels):
        if np.sum(labels == c) < k:
            raise ValueError(f"class {c} has fewer than k={k} samples")
    folds = stratified_folds(labels, k, seed)
    results = []
    n_classes = np.unique(labels).size
    for test_idx in folds:
        mask = np.zeros(labels.size, dtype=bool)
        mask[test_idx] = True
        model = train(kind, data[~mask], labels[~mask])
        pred = predict_many(model, data[mask])
        _, acc, mcc, _ = confusion_metrics(labels[mask], pred, n_classes)
        results.append(FoldResult(acc, mcc, tuple(int(i) for i in test_idx)))
    return CvResult(
        kind, tuple(results),
        float(np.mean([r.accuracy for r in results])),
        float(np.mean([r.mcc for r in results])),
    )


def confusion_metrics(y_true, y_pred, n_classes: int):
    """(confusion matrix, accuracy, mcc, degenerate_flag).

    MCC uses the multiclass R_K form, which reduces to the familiar binary
    formula for two classes; a zero denominator yields 0 with the flag set.
    """
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size != y_pred.size or y_true.size < 1:
        raise ValueError("need equal-length nonempty label arrays")
    if y_true.min() < 0 or y_pred.min() < 0 or max(y_true.max(), y_pred.max()) >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    total = float(cm.sum())
    accuracy = float(np.trace(cm) / total)
    t = cm.sum(axis=1).astype(np.float64)  # true counts
    p = cm.sum(axis=0).astype(np.float64)  # predicted counts
    cov_tp = np.trace(cm) * total - float(t @ p)
    denom = math.sqrt(total**2 - float(p @ p)) * math.sqrt(total**2 - float(t @ t))
    if denom == 0.0:
        return cm, accuracy, 0.0, True
    return cm, accuracy, float(np.clip(cov_tp / denom, -1.0, 1.0)), False


def itr_bits_per_selection(n_classes: int, accuracy: float) -> float:
    """Wolpaw information transfer rate in bits per selection."""
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if not 0.0 <= accuracy <= 1.0:
        raise ValueError("accuracy must be in [0, 1]")
    p = accuracy
    bits = math.log2(n_classes)
    if p > 0.0:
        bits += p * math.log2(p)
    if p < 1.0:
        bits += (1.0 - p) * math.log2((1.0 - p) / (n_classes - 1))
    return bits
