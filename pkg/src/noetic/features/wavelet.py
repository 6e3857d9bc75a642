"""Daubechies-4 discrete wavelet transform and log subband energies.

The analysis bank is orthonormal, so with periodized extension and even
lengths at every level the subband energies sum exactly to the input
energy; symmetric (half-point reflection) extension is the default for
feature use on arbitrary lengths.
"""

from __future__ import annotations

import numpy as np

from . import FeatureVector

# Daubechies-4 synthesis lowpass (8 taps, standard published constants)
_REC_LO = np.array([
    0.23037781330885523, 0.7148465705525415, 0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278,
])
DEC_LO = _REC_LO[::-1].copy()
DEC_HI = (_REC_LO * np.where(np.arange(_REC_LO.size) % 2, -1.0, 1.0)).copy()


def default_levels(n: int) -> int:
    return min(5, int(np.floor(np.log2(n))) - 2)


def _step_periodic(x: np.ndarray):
    n = x.size
    if n % 2:
        x = np.concatenate([x, x[-1:]])  # pad odd lengths to even
        n += 1
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(DEC_LO.size)[None, :]) % n
    win = x[idx]
    return win @ DEC_LO, win @ DEC_HI


def _step_symmetric(x: np.ndarray):
    pad = DEC_LO.size - 1
    xp = np.concatenate([x[pad - 1::-1], x, x[:-pad - 1:-1]])
    out_len = (x.size + pad) // 2
    idx = 2 * np.arange(out_len)[:, None] + np.arange(DEC_LO.size)[None, :]
    win = xp[idx]
    return win @ DEC_LO, win @ DEC_HI


def dwt(x, levels: int | None = None, mode: str = "symmetric"):
    """Multi-level analysis: returns [approx_L, detail_L, ..., detail_1]."""
    x = np.asarray(x, dtype=np.float64)
    levels = default_levels(x.size) if levels is None else levels
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if x.size < 2**levels:
        raise ValueError(f"{levels} levels too deep for {x.size} samples")
    step = {"symmetric": _step_symmetric, "periodic": _step_periodic}[mode]
    details = []
    approx = x
    for _ in range(levels):
        approx, detail = step(approx)
        details.append(detail)
    return [approx] + details[::-1]


def dwt_energies(x, levels: int | None = None, mode: str = "symmetric",
                 channel: int | None = None) -> FeatureVector:
    """ln(sum of squared coefficients + 1e-12) per detail level plus the
    final approximation: levels + 1 features."""
    coeffs = dwt(x, levels, mode)
    n_levels = len(coeffs) - 1
    prefix = f"ch{channel}." if channel is not None else ""
    names = [f"{prefix}dwt.a{n_levels}"] + [
        f"{prefix}dwt.d{n_levels - i}" for i in range(n_levels)
    ]
    values = [np.log(np.sum(c**2) + 1e-12) for c in coeffs]
    return FeatureVector(np.array(values), tuple(names))
