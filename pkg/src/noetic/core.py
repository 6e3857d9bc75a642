"""Value types for multichannel signals, markers, and marker-locked epochs.

Everything here is an immutable value: arrays are flagged read-only at
construction and the operations are pure, so blocks and epoch sets can be
shared freely across the engine's producer/worker/observer contexts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

CHANNEL_ROLES = ("eeg", "eog-reference", "sync")


@dataclass(frozen=True)
class ChannelInfo:
    name: str
    index: int
    role: str = "eeg"

    def __post_init__(self):
        if self.role not in CHANNEL_ROLES:
            raise ValueError(f"unknown channel role {self.role!r}; expected one of {CHANNEL_ROLES}")
        if self.index < 0:
            raise ValueError("channel index must be >= 0")


def _check_channels(channels: Sequence[ChannelInfo], n_rows: int) -> tuple:
    channels = tuple(channels)
    if len(channels) != n_rows:
        raise ValueError(f"{n_rows} sample rows but {len(channels)} channel entries")
    names = [c.name for c in channels]
    if len(set(names)) != len(names):
        raise ValueError("channel names must be unique")
    if [c.index for c in channels] != list(range(len(channels))):
        raise ValueError("channel indices must be contiguous from 0")
    return channels


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SignalBlock:
    """channels x T sample matrix in microvolts, on one monotonic timebase."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    channels: tuple = ()

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] < 1:
            raise ValueError("samples must be a channels x T matrix with T >= 1")
        if not self.fs > 0:
            raise ValueError("invalid recording: fs must be > 0")
        if not np.isfinite(samples).all():
            raise ValueError("samples must all be finite")
        channels = self.channels or tuple(
            ChannelInfo(f"ch{i}", i) for i in range(samples.shape[0])
        )
        object.__setattr__(self, "channels", _check_channels(channels, samples.shape[0]))
        object.__setattr__(self, "samples", _freeze(samples))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs

    def channel_index(self, name: str) -> int:
        for c in self.channels:
            if c.name == name:
                return c.index
        raise KeyError(f"no channel named {name!r}")

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.fs


@dataclass(frozen=True, order=True)
class Marker:
    t: float
    label: str = ""
    class_id: Optional[int] = None

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("marker time must be finite")
        if self.class_id is not None and self.class_id < 0:
            raise ValueError("class_id must be >= 0")


@dataclass(frozen=True)
class EpochSet:
    """Marker-locked fixed-length segments: data is (n_epochs, channels, L)."""

    data: np.ndarray
    class_ids: tuple
    marker_times: tuple
    fs: float
    channels: tuple
    pre_s: float
    post_s: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError("epoch data must be (n_epochs, channels, length)")
        if not self.pre_s < self.post_s:
            raise ValueError("pre_s must be < post_s")
        n = data.shape[0]
        if len(self.class_ids) != n or len(self.marker_times) != n:
            raise ValueError("class_ids and marker_times must match epoch count")
        object.__setattr__(self, "channels", _check_channels(self.channels, data.shape[1]))
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "class_ids", tuple(self.class_ids))
        object.__setattr__(self, "marker_times", tuple(self.marker_times))

    @property
    def n_epochs(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def length(self) -> int:
        return self.data.shape[2]

    def labels(self) -> np.ndarray:
        return np.asarray(self.class_ids)

    def replace_data(self, data: np.ndarray) -> "EpochSet":
        """Same epoch metadata with new sample content (shape-checked)."""
        data = np.asarray(data)
        if data.shape != self.data.shape:
            raise ValueError(f"shape {data.shape} != {self.data.shape}")
        return EpochSet(data, self.class_ids, self.marker_times, self.fs,
                        self.channels, self.pre_s, self.post_s)


@dataclass(frozen=True)
class DroppedMarker:
    marker: Marker
    reason: str


@dataclass(frozen=True)
class EpochingReport:
    kept: int
    dropped: tuple = field(default_factory=tuple)

    @property
    def total(self) -> int:
        return self.kept + len(self.dropped)


def estimate_clock_offset(sync_markers: Sequence[Marker], sync_pulse_times: Sequence[float]) -> float:
    """Median of (marker.t - pulse_time) over paired sync events.

    Robust to occasional mis-detected pulses; the result maps device-clock
    marker times onto the recording timebase.
    """
    if len(sync_markers) == 0 or len(sync_pulse_times) == 0:
        raise ValueError("no sync events")
    if len(sync_markers) != len(sync_pulse_times):
        raise ValueError("sync markers and pulse times must pair up 1:1")
    diffs = np.array([m.t for m in sync_markers]) - np.asarray(sync_pulse_times, dtype=np.float64)
    return float(np.median(diffs))


def epoch_by_markers(rec: SignalBlock, markers: Sequence[Marker], pre_s: float,
                     post_s: float, offset: float = 0.0) -> tuple:
    """Cut half-open windows [m.t - offset + pre_s, m.t - offset + post_s).

    Markers whose window falls outside the recording are dropped and listed
    in the report. Returns (EpochSet, EpochingReport).
    """
    if not pre_s < post_s:
        raise ValueError("pre_s must be < post_s")
    length = int(round((post_s - pre_s) * rec.fs))
    if length < 1:
        raise ValueError("epoch window shorter than one sample")
    markers = sorted(markers, key=lambda m: m.t)
    kept, class_ids, times, dropped = [], [], [], []
    for m in markers:
        start = int(round((m.t - offset + pre_s - rec.t0) * rec.fs))
        if start < 0 or start + length > rec.n_samples:
            dropped.append(DroppedMarker(m, "window outside recording bounds"))
            continue
        kept.append(rec.samples[:, start:start + length])
        class_ids.append(m.class_id)
        times.append(m.t)
    data = np.stack(kept) if kept else np.empty((0, rec.n_channels, length))
    epochs = EpochSet(data, tuple(class_ids), tuple(times), rec.fs,
                      rec.channels, pre_s, post_s)
    return epochs, EpochingReport(kept=len(kept), dropped=tuple(dropped))
