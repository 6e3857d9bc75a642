"""Streaming wire protocol: self-delimiting frames over any byte stream.

Framing is a 4-byte little-endian length prefix (counting the kind byte and
payload) followed by one kind byte. Payloads: header frames carry the
recording header as JSON; data frames carry a float64 start time, a uint16
channel count, and little-endian float32 samples interleaved one channel
vector per tick; marker frames carry one marker as JSON; end frames are
empty. The stream contract is header first, then data/marker frames, then
end.
"""

from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence

import numpy as np

from .core import Marker, SignalBlock
from .recording import RecordingHeader

MAX_FRAME_BYTES = 16 * 1024 * 1024

KIND_HEADER = "header"
KIND_DATA = "data"
KIND_MARKER = "marker"
KIND_END = "end"

_KIND_BYTE = {KIND_HEADER: 1, KIND_DATA: 2, KIND_MARKER: 3, KIND_END: 4}
_BYTE_KIND = {v: k for k, v in _KIND_BYTE.items()}


class ProtocolError(ValueError):
    """Raised on malformed frames or oversized length prefixes."""


@dataclass(frozen=True)
class WireFrame:
    kind: str
    header: Optional[RecordingHeader] = None
    t0: float = 0.0
    samples: Optional[np.ndarray] = None  # (channels, k) float32
    marker: Optional[Marker] = None

    def __post_init__(self):
        if self.kind not in _KIND_BYTE:
            raise ProtocolError(f"unknown frame kind {self.kind!r}")
        if self.samples is not None:
            s = np.ascontiguousarray(self.samples, dtype="<f4")
            if s.ndim != 2:
                raise ProtocolError("data frame samples must be (channels, k)")
            s.flags.writeable = False
            object.__setattr__(self, "samples", s)

    def __eq__(self, other):
        if not isinstance(other, WireFrame):
            return NotImplemented
        if (self.kind, self.header, self.marker) != (other.kind, other.header, other.marker):
            return False
        if self.kind == KIND_DATA:
            return self.t0 == other.t0 and np.array_equal(self.samples, other.samples)
        return True


def header_frame(header: RecordingHeader) -> WireFrame:
    return WireFrame(KIND_HEADER, header=header)


def data_frame(t0: float, samples: np.ndarray) -> WireFrame:
    return WireFrame(KIND_DATA, t0=t0, samples=samples)


def marker_frame(marker: Marker) -> WireFrame:
    return WireFrame(KIND_MARKER, marker=marker)


def end_frame() -> WireFrame:
    return WireFrame(KIND_END)


def encode_frame(frame: WireFrame) -> bytes:
    if frame.kind == KIND_HEADER:
        payload = json.dumps(frame.header.to_dict(), sort_keys=True,
                             separators=(",", ":")).encode("utf-8")
    elif frame.kind == KIND_DATA:
        n_ch = frame.samples.shape[0]
        payload = struct.pack("<dH", frame.t0, n_ch) + frame.samples.T.tobytes()
    elif frame.kind == KIND_MARKER:
        m = frame.marker
        d = {"t": m.t, "label": m.label}
        if m.class_id is not None:
            d["class_id"] = m.class_id
        payload = json.dumps(d, sort_keys=True, separators=(",", ":")).encode("utf-8")
    else:
        payload = b""
    body = bytes([_KIND_BYTE[frame.kind]]) + payload
    if len(body) > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return struct.pack("<I", len(body)) + body


def decode_frame(buf: bytes) -> WireFrame:
    """Decode exactly one frame; the buffer must contain the whole frame."""
    frame, used = decode_prefix(buf)
    if frame is None:
        raise ProtocolError("incomplete frame")
    if used != len(buf):
        raise ProtocolError(f"{len(buf) - used} trailing bytes after frame")
    return frame


def decode_prefix(buf: bytes) -> tuple:
    """Decode one frame from the front of ``buf``.

    Returns (frame, bytes_consumed); (None, 0) when more bytes are needed.
    """
    if len(buf) < 4:
        return None, 0
    (length,) = struct.unpack_from("<I", buf)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"length prefix {length} exceeds {MAX_FRAME_BYTES}")
    if length < 1:
        raise ProtocolError("length prefix smaller than one kind byte")
    if len(buf) < 4 + length:
        return None, 0
    kind_byte = buf[4]
    payload = bytes(buf[5:4 + length])
    kind = _BYTE_KIND.get(kind_byte)
    if kind is None:
        raise ProtocolError(f"unknown frame kind byte {kind_byte}")
    if kind == KIND_HEADER:
        frame = WireFrame(kind, header=RecordingHeader.from_dict(_json(payload)))
    elif kind == KIND_DATA:
        if len(payload) < 10:
            raise ProtocolError("data frame shorter than its fixed fields")
        t0, n_ch = struct.unpack_from("<dH", payload)
        body = payload[10:]
        if n_ch == 0 or len(body) % (4 * n_ch) != 0:
            raise ProtocolError("data frame payload is not a whole number of sample vectors")
        samples = np.frombuffer(body, dtype="<f4").reshape(-1, n_ch).T
        frame = WireFrame(kind, t0=t0, samples=samples)
    elif kind == KIND_MARKER:
        d = _json(payload)
        frame = WireFrame(kind, marker=Marker(d["t"], d.get("label", ""),
                                              d.get("class_id")))
    else:
        if payload:
            raise ProtocolError("end frame must have empty payload")
        frame = WireFrame(kind)
    return frame, 4 + length


def _json(payload: bytes) -> dict:
    try:
        return json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"bad JSON payload: {e}") from e


class StreamDecoder:
    """Incremental splitter: feed bytes in, get whole frames out."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, chunk: bytes) -> List[WireFrame]:
        self._buf.extend(chunk)
        frames = []
        while True:
            frame, used = decode_prefix(self._buf)
            if frame is None:
                break
            del self._buf[:used]
            frames.append(frame)
        return frames

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


def replay_frames(rec: SignalBlock, markers: Sequence[Marker],
                  chunk_samples: int = 32, subject_tag: str = "") -> Iterator[WireFrame]:
    """Frame-ize a recording: header, interleaved data/marker frames, end.

    A marker frame is emitted right after the data chunk covering its time,
    so consumers always hold the samples up to each marker.
    """
    header = RecordingHeader(rec.fs, rec.channels, rec.t0, subject_tag)
    yield header_frame(header)
    pending = sorted(markers, key=lambda m: m.t)
    mi = 0
    for start in range(0, rec.n_samples, chunk_samples):
        chunk = rec.samples[:, start:start + chunk_samples]
        t0 = rec.t0 + start / rec.fs
        yield data_frame(t0, chunk.astype("<f4"))
        t_end = rec.t0 + (start + chunk.shape[1]) / rec.fs
        while mi < len(pending) and pending[mi].t < t_end:
            yield marker_frame(pending[mi])
            mi += 1
    while mi < len(pending):
        yield marker_frame(pending[mi])
        mi += 1
    yield end_frame()


def send_frames(sock: socket.socket, frames: Iterable[WireFrame]) -> int:
    """Write frames to a connected socket; returns the frame count."""
    n = 0
    for f in frames:
        sock.sendall(encode_frame(f))
        n += 1
    return n


def recv_frames(sock: socket.socket, bufsize: int = 65536) -> Iterator[WireFrame]:
    """Yield frames from a connected socket until end-frame or EOF."""
    dec = StreamDecoder()
    while True:
        chunk = sock.recv(bufsize)
        if not chunk:
            return
        for frame in dec.feed(chunk):
            yield frame
            if frame.kind == KIND_END:
                return
