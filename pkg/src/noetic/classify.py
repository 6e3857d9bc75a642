"""Classifiers for the offline-train / online-predict handoff: Gaussian
Naive Bayes on feature vectors, Riemannian minimum distance to mean on
covariances, and tangent-space projection with a regularized logistic.

Models serialize to a versioned JSON document with 17-significant-digit
decimal floats so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import riemann

KINDS = ("nb", "rmdm", "tangent_linear")
MODEL_FORMAT = "noetic-model"
MODEL_VERSION = 1

NB_VAR_FLOOR = 1e-9
LOGISTIC_L2 = 1e-3
LOGISTIC_STEPS = 500
LOGISTIC_RATE = 0.1
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ClassifierModel:
    kind: str
    classes: tuple
    params: dict
    hyper: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected {KINDS}")
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))


def _check_training(labels: np.ndarray) -> np.ndarray:
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least 2 classes to train")
    for c in classes:
        if np.sum(labels == c) < 2:
            raise ValueError(f"class {c} needs at least 2 training samples")
    return classes


def _train_nb(x: np.ndarray, labels: np.ndarray, classes: np.ndarray) -> dict:
    means, variances, priors = [], [], []
    for c in classes:
        rows = x[labels == c]
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), NB_VAR_FLOOR))
        priors.append(np.log(rows.shape[0] / x.shape[0]))
    return {"means": np.stack(means), "vars": np.stack(variances),
            "log_priors": np.array(priors)}


def _train_logistic(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fixed-budget full-batch gradient descent; returns (d + 1,) with bias last."""
    n, d = x.shape
    w = np.zeros(d + 1)
    xb = np.hstack([x, np.ones((n, 1))])
    for _ in range(LOGISTIC_STEPS):
        p = 1.0 / (1.0 + np.exp(-(xb @ w)))
        grad = xb.T @ (p - y) / n
        grad[:d] += 2.0 * LOGISTIC_L2 * w[:d]  # bias unregularized
        w -= LOGISTIC_RATE * grad
    return w


def _train_tangent(covs: np.ndarray, labels: np.ndarray, classes: np.ndarray) -> dict:
    reference = riemann.riemann_mean(covs)
    feats = riemann.tangent_matrix(covs, reference)
    mu = feats.mean(axis=0)
    sd = np.maximum(feats.std(axis=0), STD_FLOOR)
    z = (feats - mu) / sd
    if classes.size == 2:
        weights = _train_logistic(z, (labels == classes[1]).astype(np.float64))[None, :]
    else:
        weights = np.stack([
            _train_logistic(z, (labels == c).astype(np.float64)) for c in classes
        ])
    return {"reference": reference, "feat_mean": mu, "feat_std": sd,
            "weights": weights}


def train(kind: str, data, labels, shrinkage: float = riemann.DEFAULT_SHRINKAGE) -> ClassifierModel:
    """Train on features (nb) or a stack of SPD covariances (rmdm,
    tangent_linear). Training is bit-deterministic given its inputs."""
    labels = np.asarray(labels, dtype=int)
    classes = _check_training(labels)
    if kind == "nb":
        x = np.asarray(data, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError("nb expects a (samples, features) matrix")
        params = _train_nb(x, labels, classes)
    elif kind == "rmdm":
        covs = np.asarray(data, dtype=np.float64)
        params = {"class_means": np.stack([
            riemann.riemann_mean(covs[labels == c]) for c in classes
        ])}
    elif kind == "tangent_linear":
        covs = np.asarray(data, dtype=np.float64)
        params = _train_tangent(covs, labels, classes)
    else:
        raise ValueError(f"unknown classifier kind {kind!r}; expected {KINDS}")
    return ClassifierModel(kind, tuple(classes), params,
                           hyper={"shrinkage": shrinkage})


def _scores_nb(model: ClassifierModel, x: np.ndarray) -> np.ndarray:
    means = model.params["means"]
    variances = model.params["vars"]
    log_lik = -0.5 * (np.log(2.0 * np.pi * variances)
                      + (x[None, :] - means) ** 2 / variances).sum(axis=1)
    return model.params["log_priors"] + log_lik


def predict(model: ClassifierModel, x) -> Tuple[int, np.ndarray]:
    """Returns (class id, per-class scores; higher is more likely).

    Ties resolve to the lowest class id.
    """
    if model.kind == "nb":
        x = np.asarray(x, dtype=np.float64)
        if x.shape != model.params["means"].shape[1:]:
            raise ValueError(f"feature dimension {x.shape} does not match the model")
        scores = _scores_nb(model, x)
    elif model.kind == "rmdm":
        scores = -np.array([
            riemann.airm_distance(np.asarray(x), m) for m in model.params["class_means"]
        ])
    else:
        feats = riemann.tangent_vector(np.asarray(x), model.params["reference"])
        z = (feats - model.params["feat_mean"]) / model.params["feat_std"]
        w = model.params["weights"]
        logits = w[:, :-1] @ z + w[:, -1]
        if len(model.classes) == 2:
            p1 = 1.0 / (1.0 + np.exp(-logits[0]))
            scores = np.array([1.0 - p1, p1])
        else:
            scores = logits
    best = int(np.argmax(scores))  # argmax takes the first (lowest id) on ties
    return model.classes[best], scores


def predict_many(model: ClassifierModel, xs) -> np.ndarray:
    return np.array([predict(model, x)[0] for x in xs], dtype=int)


def _enc(a) -> object:
    arr = np.asarray(a, dtype=np.float64)
    flat = [format(v, ".17g") for v in arr.ravel()]
    return {"shape": list(arr.shape), "data": flat}


def _dec(d) -> np.ndarray:
    return np.array([float(s) for s in d["data"]], dtype=np.float64).reshape(d["shape"])


def serialize_model(model: ClassifierModel) -> str:
    return json.dumps({
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "classes": list(model.classes),
        "hyper": model.hyper,
        "params": {k: _enc(v) for k, v in model.params.items()},
    }, indent=2, sort_keys=True)


def deserialize_model(text: str) -> ClassifierModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a model document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    params = {k: _dec(v) for k, v in doc["params"].items()}
    return ClassifierModel(doc["kind"], tuple(doc["classes"]), params,
                           doc.get("hyper", {}))
