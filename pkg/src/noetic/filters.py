"""Butterworth filter design and application as second-order sections.

Design goes through SciPy's analog-prototype / prewarp / bilinear path
(explicit order, or minimal order from passband/stopband edges). The
cascade itself runs on the kernel backend so the streaming engine can carry
per-channel state across chunks; the zero-phase path is forward-backward
with odd-reflection padding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import signal as _sig

from . import kernels
from .core import SignalBlock

KINDS = ("lowpass", "highpass", "bandpass", "bandstop")
_BTYPE = {"lowpass": "lowpass", "highpass": "highpass",
          "bandpass": "bandpass", "bandstop": "bandstop"}


class NyquistError(ValueError):
    pass


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    order: int
    cutoffs: Tuple[float, ...]
    fs: float
    sos: np.ndarray  # (sections, 6)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        sos = np.ascontiguousarray(self.sos, dtype=np.float64)
        poles = self.poles(sos)
        if np.any(np.abs(poles) >= 1.0 - 1e-9):
            raise ValueError("unstable design: pole on or outside the unit circle")
        sos.flags.writeable = False
        object.__setattr__(self, "sos", sos)
        object.__setattr__(self, "cutoffs", tuple(float(c) for c in self.cutoffs))

    @staticmethod
    def poles(sos: np.ndarray) -> np.ndarray:
        return np.concatenate([np.roots([1.0, a1, a2]) for _, _, _, _, a1, a2 in sos])

    @property
    def n_sections(self) -> int:
        return self.sos.shape[0]

    def zero_state(self, n_channels: int) -> np.ndarray:
        return np.zeros((self.n_sections, n_channels, 2))

    def magnitude(self, freqs_hz) -> np.ndarray:
        """|H| of the cascade at the given frequencies."""
        _, h = _sig.sosfreqz(self.sos, worN=np.asarray(freqs_hz, dtype=np.float64),
                             fs=self.fs)
        return np.abs(h)

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "order": self.order,
            "cutoffs": list(self.cutoffs),
            "fs": self.fs,
            "sections": [list(map(float, row)) for row in self.sos],
        }, indent=2, sort_keys=True)


def _check_cutoffs(cutoffs: Sequence[float], fs: float) -> Tuple[float, ...]:
    nyq = fs / 2.0
    for c in cutoffs:
        if not 0.0 < c < nyq:
            raise NyquistError(
                f"cutoff {c} Hz violates Nyquist: must lie strictly inside (0, {nyq})")
    return tuple(float(c) for c in cutoffs)


def design_butterworth(kind: str, fs: float, order: Optional[int] = None,
                       cutoffs: Optional[Sequence[float]] = None,
                       passband: Optional[Sequence[float]] = None,
                       stopband: Optional[Sequence[float]] = None,
                       max_ripple_db: float = 3.0,
                       min_atten_db: float = 40.0) -> FilterSpec:
    """Design by explicit (order, cutoffs) or by band edges.

    The edge path derives the minimal integer order meeting max passband
    ripple and min stopband attenuation, which is how a requested
    transition bandwidth is realized for a Butterworth response.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown filter kind {kind!r}; expected one of {KINDS}")
    if not fs > 0:
        raise ValueError("fs must be > 0")
    if order is not None:
        if cutoffs is None:
            raise ValueError("explicit-order design needs cutoffs")
        if order < 1:
            raise ValueError("order must be >= 1")
        cutoffs = _check_cutoffs(np.atleast_1d(cutoffs), fs)
        wn = cutoffs if len(cutoffs) > 1 else cutoffs[0]
    else:
        if passband is None or stopband is None:
            raise ValueError("edge design needs passband and stopband")
        if not min_atten_db > max_ripple_db:
            raise ValueError("attenuation must exceed ripple")
        _check_cutoffs(np.atleast_1d(passband), fs)
        _check_cutoffs(np.atleast_1d(stopband), fs)
        order, wn = _sig.buttord(passband, stopband, max_ripple_db, min_atten_db, fs=fs)
        cutoffs = tuple(np.atleast_1d(wn).astype(float))
    sos = _sig.butter(order, wn, btype=_BTYPE[kind], output="sos", fs=fs)
    return FilterSpec(kind, int(order), cutoffs, fs, sos)


def apply_sos(x: np.ndarray, spec: FilterSpec, zi: Optional[np.ndarray] = None):
    """Causal cascade on a (channels, T) array; returns (y, final state)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if zi is None:
        zi = spec.zero_state(x.shape[0])
    y = kernels.sosfilt(np.ascontiguousarray(spec.sos), x, zi)
    return y, zi


def _odd_pad(x: np.ndarray, pad: int) -> np.ndarray:
    left = 2.0 * x[:, :1] - x[:, pad:0:-1]
    right = 2.0 * x[:, -1:] - x[:, -2:-pad - 2:-1]
    return np.concatenate([left, x, right], axis=1)


def apply_filter(x, spec: FilterSpec, zero_phase: bool = False):
    """Filter a SignalBlock or bare (channels, T) array.

    Causal mode is the streaming-safe single pass from zero state; zero
    phase runs forward-backward over an odd-reflection extension of
    3 * (2 * sections + 1) samples per end.
    """
    block = isinstance(x, SignalBlock)
    if block:
        if x.fs != spec.fs:
            raise ValueError(f"recording fs {x.fs} != filter fs {spec.fs}")
        data = x.samples
    else:
        data = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if not zero_phase:
        y, _ = apply_sos(data, spec)
    else:
        pad = 3 * (2 * spec.n_sections + 1)
        if data.shape[1] <= pad:
            raise ValueError(f"zero-phase needs more than {pad} samples")
        ext = _odd_pad(data, pad)
        fwd, _ = apply_sos(ext, spec)
        bwd, _ = apply_sos(fwd[:, ::-1], spec)
        y = bwd[:, ::-1][:, pad:pad + data.shape[1]]
    if block:
        return SignalBlock(y, x.fs, x.t0, x.channels)
    return y
