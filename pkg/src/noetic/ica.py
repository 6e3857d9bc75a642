"""Blind source separation: symmetric fixed-point ICA with tanh contrast,
plus heuristic artifact-component rejection and inverse reconstruction.

Component labeling is a deterministic kurtosis + correlation rule rather
than a learned classifier: blink/EOG components are strongly super-Gaussian
and track frontal or reference channels, which is exactly what the rule
keys on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import EpochSet, SignalBlock

MAX_ITER = 200
TOLERANCE = 1e-4
EIGEN_FLOOR = 1e-12
KURTOSIS_THRESHOLD = 5.0
FRONTAL_CORR_THRESHOLD = 0.6
TEMPLATE_CORR_THRESHOLD = 0.7


@dataclass(frozen=True)
class IcaModel:
    whitener: np.ndarray    # (k, channels)
    unmixing: np.ndarray    # (k, channels), rows give sources in input space
    mixing: np.ndarray      # (channels, k)
    mean: np.ndarray        # (channels,)
    n_components: int
    iterations: int
    converged: bool
    seed: int

    def __post_init__(self):
        for name in ("whitener", "unmixing", "mixing", "mean"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def sources(self, data: np.ndarray) -> np.ndarray:
        return self.unmixing @ (np.asarray(data, dtype=np.float64)
                                - self.mean[:, None])


def model_to_json(model: IcaModel) -> str:
    return json.dumps({
        "format": "noetic-ica", "version": 1,
        "whitener": model.whitener.tolist(),
        "unmixing": model.unmixing.tolist(),
        "mixing": model.mixing.tolist(),
        "mean": model.mean.tolist(),
        "n_components": model.n_components,
        "iterations": model.iterations,
        "converged": model.converged,
        "seed": model.seed,
    }, sort_keys=True)


def model_from_json(text: str) -> IcaModel:
    d = json.loads(text)
    if d.get("format") != "noetic-ica":
        raise ValueError("not an ICA model document")
    return IcaModel(np.array(d["whitener"]), np.array(d["unmixing"]),
                    np.array(d["mixing"]), np.array(d["mean"]),
                    d["n_components"], d["iterations"], d["converged"], d["seed"])


def _as_matrix(x) -> np.ndarray:
    if isinstance(x, SignalBlock):
        return np.asarray(x.samples)
    if isinstance(x, EpochSet):
        return np.concatenate(list(x.data), axis=1)
    return np.asarray(x, dtype=np.float64)


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(w @ w.T)
    return (evecs / np.sqrt(evals)) @ evecs.T @ w


def ica_fit(x, seed: int = 0) -> IcaModel:
    """Fit the unmixing on a block, an epoch set, or a (channels, T) array.

    PCA whitening discards near-null directions; the fixed-point iteration
    stops when every component direction moves by less than the tolerance,
    or reports non-convergence in the model after the iteration cap.
    """
    data = _as_matrix(x)
    n_ch, n_t = data.shape
    if n_t < 20 * n_ch:
        raise ValueError("need at least 20 samples per channel for a stable fit")
    mean = data.mean(axis=1)
    centered = data - mean[:, None]
    cov = centered @ centered.T / (n_t - 1)
    evals, evecs = np.linalg.eigh(cov)
    keep = evals > EIGEN_FLOOR * evals.max()
    evals, evecs = evals[keep][::-1], evecs[:, keep][:, ::-1]
    whitener = (evecs / np.sqrt(evals)).T  # (k, channels)
    z = whitener @ centered
    k = z.shape[0]

    rng = np.random.default_rng(seed)
    w = _sym_decorrelate(rng.standard_normal((k, k)))
    iterations = 0
    converged = False
    for iterations in range(1, MAX_ITER + 1):
        g = np.tanh(w @ z)
        w_new = g @ z.T / n_t - np.diag((1.0 - g**2).mean(axis=1)) @ w
        w_new = _sym_decorrelate(w_new)
        delta = np.max(np.abs(1.0 - np.abs(np.sum(w_new * w, axis=1))))
        w = w_new
        if delta < TOLERANCE:
            converged = True
            break

    unmixing = w @ whitener
    mixing = np.linalg.pinv(unmixing)
    # order components by the input-space power they explain
    order = np.argsort(-np.sum(mixing**2, axis=0), kind="stable")
    return IcaModel(whitener, unmixing[order], mixing[:, order], mean,
                    k, iterations, converged, seed)


def _excess_kurtosis(s: np.ndarray) -> np.ndarray:
    c = s - s.mean(axis=1, keepdims=True)
    m2 = np.mean(c**2, axis=1)
    m4 = np.mean(c**4, axis=1)
    return m4 / np.maximum(m2**2, 1e-300) - 3.0


def _abs_corr(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(abs(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)))


def reject_components(model: IcaModel, data: np.ndarray,
                      frontal_channels: Sequence[int] = (),
                      blink_template: Optional[np.ndarray] = None) -> list:
    """Component ids flagged artifactual.

    A component is rejected when it is strongly super-Gaussian (excess
    kurtosis > 5) AND tracks a frontal/EOG channel (|corr| > 0.6), or when
    it matches a calibration blink template (|corr| > 0.7).
    """
    sources = model.sources(data)
    kurt = _excess_kurtosis(sources)
    rejected = []
    for i, s in enumerate(sources):
        frontal_hit = any(
            _abs_corr(s, data[ch]) > FRONTAL_CORR_THRESHOLD for ch in frontal_channels
        )
        template_hit = (blink_template is not None
                        and _abs_corr(s, np.asarray(blink_template)) > TEMPLATE_CORR_THRESHOLD)
        if (kurt[i] > KURTOSIS_THRESHOLD and frontal_hit) or template_hit:
            rejected.append(i)
    return rejected


def _reconstruct(model: IcaModel, data: np.ndarray, rejected: Sequence[int]) -> np.ndarray:
    sources = model.sources(data)
    mixing = model.mixing.copy()
    mixing[:, list(rejected)] = 0.0
    return mixing @ sources + model.mean[:, None]


def ica_clean(x, model: IcaModel, frontal_channels: Optional[Sequence[int]] = None,
              blink_template: Optional[np.ndarray] = None) -> Tuple[object, list]:
    """Remove artifact components and reconstruct; returns (cleaned, ids).

    When frontal channels are not given explicitly, channels with the
    eog-reference role are used.
    """
    if frontal_channels is None:
        if isinstance(x, (SignalBlock, EpochSet)):
            frontal_channels = [c.index for c in x.channels if c.role == "eog-reference"]
        else:
            frontal_channels = []
    data = _as_matrix(x)
    rejected = reject_components(model, data, frontal_channels, blink_template)
    if isinstance(x, EpochSet):
        cleaned = np.stack([_reconstruct(model, e, rejected) for e in x.data]) \
            if x.n_epochs else x.data
        return x.replace_data(cleaned), rejected
    cleaned = _reconstruct(model, data, rejected)
    if isinstance(x, SignalBlock):
        return SignalBlock(cleaned, x.fs, x.t0, x.channels), rejected
    return cleaned, rejected
