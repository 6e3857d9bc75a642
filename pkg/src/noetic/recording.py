""".neeg recording container and CSV import.

Layout: one-line canonical JSON header (sorted keys, UTF-8), a "\\n\\0"
sentinel, raw little-endian float32 samples interleaved one channel vector
per tick, then a JSON-lines marker trailer. The header carries the sample
count, so the payload is seekable and the trailer self-locating.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import ChannelInfo, Marker, SignalBlock

FORMAT_NAME = "neeg"
FORMAT_VERSION = 1
_SENTINEL = b"\n\x00"


class FormatError(ValueError):
    """Raised for files that are not valid .neeg containers."""


class CorruptionError(FormatError):
    """Raised when the data section is shorter than the header promises."""


@dataclass(frozen=True)
class RecordingHeader:
    """Recording metadata shared by the file container and the wire protocol."""

    fs: float
    channels: tuple
    start_time: float = 0.0
    subject_tag: str = ""
    format_version: int = FORMAT_VERSION
    unit: str = "microvolt"

    def __post_init__(self):
        if not self.fs > 0:
            raise ValueError("fs must be > 0")
        if len(self.channels) < 1:
            raise ValueError("at least one channel required")
        object.__setattr__(self, "channels", tuple(self.channels))

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "fs": self.fs,
            "channels": [
                {"name": c.name, "index": c.index, "role": c.role}
                for c in self.channels
            ],
            "unit": self.unit,
            "start_time": self.start_time,
            "subject_tag": self.subject_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecordingHeader":
        channels = tuple(
            ChannelInfo(c["name"], c["index"], c.get("role", "eeg"))
            for c in d["channels"]
        )
        return cls(d["fs"], channels, d.get("start_time", 0.0),
                   d.get("subject_tag", ""), d.get("format_version", FORMAT_VERSION),
                   d.get("unit", "microvolt"))


def _header_dict(rec: SignalBlock, subject_tag: str, n_samples: int) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "fs": rec.fs,
        "channels": [
            {"name": c.name, "index": c.index, "role": c.role} for c in rec.channels
        ],
        "unit": "microvolt",
        "start_time": rec.t0,
        "subject_tag": subject_tag,
        "n_samples": n_samples,
    }


def _marker_line(m: Marker) -> str:
    d = {"t": m.t, "label": m.label}
    if m.class_id is not None:
        d["class_id"] = m.class_id
    return json.dumps(d, sort_keys=True)


def write_recording(rec: SignalBlock, markers: Sequence[Marker], path,
                    subject_tag: str = "") -> None:
    """Write the block and markers atomically (temp file + rename)."""
    header = json.dumps(_header_dict(rec, subject_tag, rec.n_samples),
                        sort_keys=True, separators=(",", ":"))
    payload = np.asarray(rec.samples, dtype="<f4").T.tobytes()  # tick-major
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as f:
        f.write(header.encode("utf-8"))
        f.write(_SENTINEL)
        f.write(payload)
        for m in sorted(markers, key=lambda m: m.t):
            f.write(_marker_line(m).encode("utf-8"))
            f.write(b"\n")
    os.replace(tmp, path)


def read_recording(path) -> Tuple[SignalBlock, List[Marker]]:
    """Inverse of :func:`write_recording`; float32 samples round-trip bit-exactly."""
    with open(path, "rb") as f:
        raw = f.read()
    cut = raw.find(_SENTINEL)
    if cut < 0:
        raise FormatError("bad magic: no header sentinel found")
    try:
        header = json.loads(raw[:cut].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"bad magic: header is not JSON ({e})") from e
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise FormatError("bad magic: not a neeg file")
    if header.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported version {header.get('version')!r}; "
                          f"this reader handles version {FORMAT_VERSION}")
    channels = tuple(
        ChannelInfo(c["name"], c["index"], c.get("role", "eeg"))
        for c in header["channels"]
    )
    n_ch, n_samp = len(channels), int(header["n_samples"])
    body = raw[cut + len(_SENTINEL):]
    need = n_ch * n_samp * 4
    if len(body) < need:
        raise CorruptionError(
            f"truncated data section: expected {need} payload bytes at offset "
            f"{cut + len(_SENTINEL)}, file ends {need - len(body)} bytes short")
    samples = np.frombuffer(body[:need], dtype="<f4").reshape(n_samp, n_ch).T
    markers = []
    for line in body[need:].splitlines():
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorruptionError(f"bad marker line {line[:60]!r}") from e
        markers.append(Marker(d["t"], d.get("label", ""), d.get("class_id")))
    rec = SignalBlock(samples.astype(np.float64), header["fs"],
                      header["start_time"], channels)
    return rec, markers


def read_csv_recording(path, fs: float, t0: float = 0.0) -> SignalBlock:
    """CSV import: first row channel names, one sample row per tick."""
    with open(path, "r", encoding="utf-8") as f:
        names = [s.strip() for s in f.readline().split(",")]
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    if data.shape[1] != len(names):
        raise FormatError(f"{len(names)} header columns but rows have {data.shape[1]}")
    channels = tuple(ChannelInfo(n, i) for i, n in enumerate(names))
    return SignalBlock(data.T, fs, t0, channels)


def write_markers_jsonl(markers: Sequence[Marker], path) -> None:
    """Markers alone, one JSON object per line (stimulus timeline export)."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        for m in sorted(markers, key=lambda m: m.t):
            f.write(_marker_line(m) + "\n")
    os.replace(tmp, path)


def read_markers_jsonl(path) -> List[Marker]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                d = json.loads(line)
                out.append(Marker(d["t"], d.get("label", ""), d.get("class_id")))
    return out
