"""Synthetic EEG generator: pink/white noise, SSVEP tones, ERP bumps, blinks.

Everything is a pure function of (spec, seed) through the counter-based
SplitMix64 stream, so a spec renders to the identical recording on every
run. Pink noise uses the Voss-McCartney row-sum scheme: row k holds a
normal draw for 2**k samples, rows are summed and scaled to roughly unit
variance, which gives the required ~1/f spectral slope over the EEG band.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ._rng import SplitMix64
from .core import ChannelInfo, Marker, SignalBlock

_PINK_ROWS = 16
ERP_TEMPLATE_S = 0.300  # raised-cosine bump width
BLINK_WIDTH_S = 0.200


@dataclass(frozen=True)
class SsvepComponent:
    freq_hz: float
    channels: Tuple[int, ...]
    amplitude_uv: float
    schedule: Optional[Tuple[Tuple[float, float], ...]] = None  # None: always on


@dataclass(frozen=True)
class ErpComponent:
    label: str
    class_id: int
    latency_s: float
    amplitude_uv: float


@dataclass(frozen=True)
class BlinkSpec:
    rate_per_min: float
    amplitude_uv: float
    frontal_channels: Tuple[int, ...]


@dataclass(frozen=True)
class SynthSpec:
    duration_s: float
    fs: float
    n_channels: int
    pink_gain: float = 1.0
    white_gain: float = 0.5
    ssvep: Tuple[SsvepComponent, ...] = ()
    erp: Tuple[ErpComponent, ...] = ()
    erp_interval_s: float = 1.0
    blink: Optional[BlinkSpec] = None
    seed: int = 0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("duration_s must be > 0")
        if not self.fs > 0:
            raise ValueError("fs must be > 0")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")
        for comp in self.ssvep:
            if comp.freq_hz >= self.fs / 2:
                raise ValueError(
                    f"ssvep frequency {comp.freq_hz} Hz violates Nyquist (fs/2 = {self.fs / 2})")
            for ch in comp.channels:
                if not 0 <= ch < self.n_channels:
                    raise ValueError(f"ssvep channel {ch} out of range")


def pink_noise(n: int, rng: SplitMix64) -> np.ndarray:
    """Voss-McCartney row sum, normalized by sqrt(row count)."""
    total = np.zeros(n)
    for k in range(_PINK_ROWS):
        hold = 1 << k
        m = -(-n // hold)  # ceil
        total += np.repeat(rng.normal(m), hold)[:n]
    return total / np.sqrt(_PINK_ROWS)


def _raised_cosine(width_samples: int) -> np.ndarray:
    t = np.arange(width_samples)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * (t + 1) / (width_samples + 1)))


def _add_bump(row: np.ndarray, center_idx: int, width: int, amplitude: float) -> None:
    bump = amplitude * _raised_cosine(width)
    start = center_idx - width // 2
    lo = max(start, 0)
    hi = min(start + width, row.size)
    if hi > lo:
        row[lo:hi] += bump[lo - start:hi - start]


def synth_recording(spec: SynthSpec) -> Tuple[SignalBlock, list]:
    """Render the spec to (SignalBlock, markers)."""
    n = int(round(spec.duration_s * spec.fs))
    rng = SplitMix64(spec.seed)
    data = np.zeros((spec.n_channels, n))
    t = np.arange(n) / spec.fs
    markers = []

    for ch in range(spec.n_channels):
        if spec.pink_gain:
            data[ch] += spec.pink_gain * pink_noise(n, rng)
        if spec.white_gain:
            data[ch] += spec.white_gain * rng.normal(n)

    for idx, comp in enumerate(spec.ssvep):
        tone = comp.amplitude_uv * np.sin(2.0 * np.pi * comp.freq_hz * t)
        intervals = comp.schedule or ((0.0, spec.duration_s),)
        gate = np.zeros(n, dtype=bool)
        for t_on, t_off in intervals:
            i0 = max(int(round(t_on * spec.fs)), 0)
            i1 = min(int(round(t_off * spec.fs)), n)
            gate[i0:i1] = True
            if i0 < n:
                markers.append(Marker(t_on, f"ssvep:{comp.freq_hz:g}", class_id=idx))
        for ch in comp.channels:
            data[ch][gate] += tone[gate]

    if spec.erp:
        width = int(round(ERP_TEMPLATE_S * spec.fs))
        event_t = 1.0
        k = 0
        while event_t + 1.0 <= spec.duration_s:
            comp = spec.erp[k % len(spec.erp)]
            markers.append(Marker(event_t, comp.label, class_id=comp.class_id))
            peak = int(round((event_t + comp.latency_s) * spec.fs))
            for ch in range(spec.n_channels):
                _add_bump(data[ch], peak, width, comp.amplitude_uv)
            event_t += spec.erp_interval_s
            k += 1

    if spec.blink and spec.blink.rate_per_min > 0:
        n_blinks = int(spec.duration_s * spec.blink.rate_per_min / 60.0)
        width = int(round(BLINK_WIDTH_S * spec.fs))
        if n_blinks:
            interval = spec.duration_s / n_blinks
            jitter = (rng.uniform(n_blinks) - 0.5) * 0.4 * interval
            for b in range(n_blinks):
                bt = (b + 0.5) * interval + jitter[b]
                markers.append(Marker(float(bt), "blink"))
                center = int(round(bt * spec.fs))
                for ch in spec.blink.frontal_channels:
                    _add_bump(data[ch], center, width, spec.blink.amplitude_uv)

    channels = tuple(ChannelInfo(f"ch{i}", i) for i in range(spec.n_channels))
    rec = SignalBlock(data, spec.fs, 0.0, channels)
    return rec, sorted(markers, key=lambda m: m.t)
