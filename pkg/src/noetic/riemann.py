"""SPD covariance machinery: shrunk epoch covariances, the affine-invariant
distance, Fréchet means, and tangent-space coordinates.

Matrix log/exp/sqrt go through symmetric eigendecompositions with
eigenvalues clamped at 1e-12; shrinkage keeps inputs away from the clamp in
practice, and clamp events are counted so silent degradation is visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as _la

DEFAULT_SHRINKAGE = 0.1
EIG_CLAMP = 1e-12
MEAN_TOL = 1e-8
MEAN_MAX_ITER = 50

_clamp_events = 0


def clamp_event_count() -> int:
    return _clamp_events


def check_spd(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(a - a.T).max() > tol:
        raise ValueError("matrix is not symmetric")
    if np.linalg.eigvalsh(a).min() <= 0:
        raise ValueError("matrix is not positive definite")
    return a


def epoch_covariance(epoch: np.ndarray, shrinkage: float = DEFAULT_SHRINKAGE) -> np.ndarray:
    """Shrunk sample covariance of one (channels, T) epoch.

    Shrinkage pulls toward the scaled identity (trace preserved), which
    guarantees positive definiteness even for short epochs.
    """
    x = np.asarray(epoch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] <= x.shape[0]:
        raise ValueError("epoch must be (channels, T) with T > channels")
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError("shrinkage must be in [0, 1]")
    centered = x - x.mean(axis=1, keepdims=True)
    c = centered @ centered.T / (x.shape[1] - 1)
    c = 0.5 * (c + c.T)
    n = c.shape[0]
    return (1.0 - shrinkage) * c + shrinkage * (np.trace(c) / n) * np.eye(n)


def _sym_apply(a: np.ndarray, fn) -> np.ndarray:
    global _clamp_events
    evals, evecs = np.linalg.eigh(a)
    if np.any(evals < EIG_CLAMP):
        _clamp_events += int(np.sum(evals < EIG_CLAMP))
        evals = np.maximum(evals, EIG_CLAMP)
    return (evecs * fn(evals)) @ evecs.T


def sqrtm(a):
    return _sym_apply(a, np.sqrt)


def invsqrtm(a):
    return _sym_apply(a, lambda v: 1.0 / np.sqrt(v))


def logm(a):
    return _sym_apply(a, np.log)


def expm(a):
    evals, evecs = np.linalg.eigh(a)
    return (evecs * np.exp(evals)) @ evecs.T


def airm_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Affine-invariant distance: sqrt of the summed squared log generalized
    eigenvalues of (a, b)."""
    a = check_spd(a)
    b = check_spd(b)
    if a.shape != b.shape:
        raise ValueError("matrices must share a size")
    evals = _la.eigh(a, b, eigvals_only=True)
    return float(np.sqrt(np.sum(np.log(evals) ** 2)))


@dataclass(frozen=True)
class MeanInfo:
    iterations: int
    residual: float
    converged: bool


def riemann_mean(mats: Sequence[np.ndarray], tol: float = MEAN_TOL,
                 max_iter: int = MEAN_MAX_ITER, info: bool = False):
    """Fréchet mean under the affine-invariant metric.

    Fixed-point iteration from the arithmetic mean; stops when the
    Frobenius norm of the mean log-map falls below tol. Non-convergence is
    reported through MeanInfo rather than raised.
    """
    mats = [np.asarray(m, dtype=np.float64) for m in mats]
    if not mats:
        raise ValueError("need at least one matrix")
    mean = np.mean(mats, axis=0)
    residual = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        m_half = sqrtm(mean)
        m_inv_half = invsqrtm(mean)
        logs = np.mean([logm(m_inv_half @ c @ m_inv_half) for c in mats], axis=0)
        logs = 0.5 * (logs + logs.T)
        residual = float(np.linalg.norm(logs, "fro"))
        if residual < tol:
            converged = True
            break
        mean = m_half @ expm(logs) @ m_half
        mean = 0.5 * (mean + mean.T)
    result = MeanInfo(iterations, residual, converged)
    return (mean, result) if info else mean


def tangent_vector(cov: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Upper-triangle coordinates of log(R^-1/2 C R^-1/2), off-diagonals
    weighted by sqrt(2) so Euclidean norms match the manifold metric at R."""
    r_inv_half = invsqrtm(reference)
    s = logm(r_inv_half @ cov @ r_inv_half)
    n = s.shape[0]
    iu = np.triu_indices(n)
    weights = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return s[iu] * weights


def tangent_matrix(covs: Sequence[np.ndarray], reference: np.ndarray) -> np.ndarray:
    return np.stack([tangent_vector(c, reference) for c in covs])
