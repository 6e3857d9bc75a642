"""Node catalog: every pipeline stage with its parameter schema, port
signature, batch implementation, and streaming implementation.

Epoch-level work is shared verbatim between the two paths (batch loops over
the same per-epoch function the stream path calls once per epoch), which is
what makes offline and online runs bit-identical for deterministic graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .. import classify as clf
from .. import filters, ica, preprocess, riemann
from ..core import ChannelInfo, EpochSet, Marker, SignalBlock, epoch_by_markers
from ..features import (FeatureVector, band_powers, dwt_energies, entropy,
                        fractal_dimension, hjorth, moments, welch_psd)
from ..features.csp import csp_features
from ..features.csp import model_from_json as csp_from_json
from ..features.spectral import EEG_BANDS, Spectrum
from ..recording import RecordingHeader, read_recording, write_recording
from ..sim import SimConfig, SimSession
from ..synth import (BlinkSpec, ErpComponent, SsvepComponent, SynthSpec,
                     synth_recording)

PORT_TYPES = ("raw-stream", "epochs", "features", "labels", "model",
              "spectrum", "events", "frame")
PLOT_POINT_CAP = 2048

_REQUIRED = object()

# ---------------------------------------------------------------- values

@dataclass(frozen=True)
class StreamValue:
    """Batch-mode payload of a raw-stream port."""
    rec: SignalBlock
    markers: tuple

@dataclass(frozen=True)
class FeaturesValue:
    values: np.ndarray  # (n, d)
    names: tuple
    times: tuple
    class_ids: tuple

@dataclass(frozen=True)
class Decision:
    t: float
    class_id: int
    scores: tuple

@dataclass(frozen=True)
class SpectrumValue:
    items: tuple  # of (t, Spectrum)

@dataclass(frozen=True)
class PlotFrame:
    session_id: str
    node_id: str
    kind: str
    t: float
    payload: dict
    seq: int

# streaming items
@dataclass(frozen=True)
class HeaderItem:
    header: RecordingHeader

@dataclass(frozen=True)
class Chunk:
    t0: float
    samples: np.ndarray  # (channels, k) float64

@dataclass(frozen=True)
class MarkerItem:
    marker: Marker

@dataclass(frozen=True)
class EndItem:
    pass

@dataclass(frozen=True)
class EpochItem:
    t: float
    class_id: Optional[int]
    data: np.ndarray  # (channels, L)
    index: int

@dataclass(frozen=True)
class FeatureItem:
    t: float
    class_id: Optional[int]
    vector: FeatureVector

@dataclass(frozen=True)
class SpectrumItem:
    t: float
    spectrum: Spectrum

class NodeError(RuntimeError):
    def __init__(self, node_id: str, cause: str):
        super().__init__(f"node {node_id!r}: {cause}")
        self.node_id = node_id

# ---------------------------------------------------------------- schema

@dataclass(frozen=True)
class ParamSpec:
    type: str  # float | int | str | bool | list | dict
    default: object = _REQUIRED
    tunable: bool = False
    choices: Optional[tuple] = None

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED

_CHECKS = {
    "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "list": lambda v: isinstance(v, list),
    "dict": lambda v: isinstance(v, dict),
}

@dataclass(frozen=True)
class NodeKindSpec:
    kind: str
    params: dict
    ports: Callable[[dict], tuple]  # params -> (inputs, outputs) port->type
    batch: Callable
    stream: Callable
    doc: str = ""

_CATALOG: Dict[str, NodeKindSpec] = {}

def register(spec: NodeKindSpec):
    _CATALOG[spec.kind] = spec
    return spec

def node_catalog() -> Dict[str, NodeKindSpec]:
    return dict(_CATALOG)

def validate_params(kind: str, params: dict) -> dict:
    """Fill defaults and type-check; unknown names and bad types raise."""
    spec = _CATALOG[kind]
    out = {}
    for name, value in params.items():
        if name not in spec.params:
            known = ", ".join(sorted(spec.params)) or "(none)"
            raise ValueError(f"unknown param {name!r} for kind {kind!r}; known: {known}")
        p = spec.params[name]
        if value is None and not p.required and p.default is None:
            out[name] = None  # nullable: the default stands in
            continue
        if p.type == "float" and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not _CHECKS[p.type](value):
            raise ValueError(f"param {name!r} must be {p.type}")
        if p.choices and value not in p.choices:
            raise ValueError(f"param {name!r} must be one of {p.choices}")
        out[name] = value
    for name, p in spec.params.items():
        if name not in out:
            if p.required:
                raise ValueError(f"missing required param {name!r} for kind {kind!r}")
            out[name] = p.default
    return out

def tunable_params(kind: str) -> tuple:
    return tuple(n for n, p in _CATALOG[kind].params.items() if p.tunable)

def is_sink(kind: str) -> bool:
    return kind.startswith("sink.") or kind == "sim.arena"

def is_source(kind: str) -> bool:
    return kind.startswith("source.")

# ---------------------------------------------------------------- helpers

def decimate_series(t: np.ndarray, series: np.ndarray, cap: int = PLOT_POINT_CAP):
    n = series.shape[-1]
    if n <= cap:
        return t, series
    stride = -(-n // cap)
    return t[::stride], series[..., ::stride]

class StreamNode:
    """Base streaming runtime: per-node state advanced only by the engine."""

    def __init__(self, node_id: str, params: dict, ctx):
        self.node_id = node_id
        self.params = dict(params)
        self.ctx = ctx

    def set_param(self, name: str, value):
        self.params[name] = value

    def on_item(self, port: str, item) -> list:
        raise NotImplementedError

    def on_end(self) -> list:
        return []

def _passthrough_end(outputs=()):
    return [("out", EndItem())] if outputs else []

# ---------------------------------------------------------------- sources

def _synth_spec_from_params(params: dict, seed: int) -> SynthSpec:
    d = dict(params.get("spec") or {})
    d.setdefault("seed", seed)
    ssvep = tuple(
        SsvepComponent(s["freq_hz"], tuple(s["channels"]), s["amplitude_uv"],
                       tuple(tuple(iv) for iv in s["schedule"]) if s.get("schedule") else None)
        for s in d.pop("ssvep", [])
    )
    erp = tuple(
        ErpComponent(e["label"], e["class_id"], e["latency_s"], e["amplitude_uv"])
        for e in d.pop("erp", [])
    )
    blink = d.pop("blink", None)
    if blink:
        blink = BlinkSpec(blink["rate_per_min"], blink["amplitude_uv"],
                          tuple(blink["frontal_channels"]))
    return SynthSpec(ssvep=ssvep, erp=erp, blink=blink, **d)

def _source_batch_factory(loader):
    def batch(node_id, params, ctx, inputs):
        if ctx.input_override is not None:
            rec, markers = ctx.input_override
        else:
            rec, markers = loader(node_id, params, ctx)
        return {"out": StreamValue(rec, tuple(markers))}
    return batch

class SourceStream(StreamNode):
    """Online source: frames arrive via the session and pass through."""

    def on_item(self, port, item):
        return [("out", item)]

def _replay_loader(node_id, params, ctx):
    try:
        return read_recording(params["path"])
    except (OSError, ValueError) as e:
        raise NodeError(node_id, f"cannot read recording {params['path']!r}: {e}")

def _synth_loader(node_id, params, ctx):
    try:
        return synth_recording(_synth_spec_from_params(params, ctx.seed))
    except (KeyError, TypeError, ValueError) as e:
        raise NodeError(node_id, f"bad synth spec: {e}")

def _stream_loader(node_id, params, ctx):
    raise NodeError(node_id, "source.stream has no offline mode; use source.replay")

register(NodeKindSpec(
    "source.replay",
    {"path": ParamSpec("str")},
    lambda p: ({}, {"out": "raw-stream"}),
    _source_batch_factory(_replay_loader), SourceStream,
    doc="Replay a .neeg recording as the stream source.",
))

register(NodeKindSpec(
    "source.synth",
    {"spec": ParamSpec("dict", default=None)},
    lambda p: ({}, {"out": "raw-stream"}),
    _source_batch_factory(_synth_loader), SourceStream,
    doc="Deterministic synthetic EEG source.",
))

register(NodeKindSpec(
    "source.stream",
    {"host": ParamSpec("str", default="127.0.0.1"),
     "port": ParamSpec("int", default=8899)},
    lambda p: ({}, {"out": "raw-stream"}),
    _source_batch_factory(_stream_loader), SourceStream,
    doc="Live TCP wire-protocol source (online only).",
))

# ---------------------------------------------------------------- epoching

def _epoch_batch(node_id, params, ctx, inputs):
    sv = inputs["in"]
    epochs, report = epoch_by_markers(sv.rec, list(sv.markers), params["pre_s"],
                                      params["post_s"], params["offset"])
    ctx.meta.setdefault(node_id, {})["dropped_markers"] = len(report.dropped)
    return {"out": epochs}

class EpochStream(StreamNode):
    """Assemble marker-locked epochs from buffered chunks.

    Start indices follow the batch path exactly: round((t - offset + pre -
    rec_t0) * fs), applied to the absolute sample counter.
    """

    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.fs = None
        self.rec_t0 = 0.0
        self.length = 0
        self.chunks: List[tuple] = []  # (abs_start, samples)
        self.total = 0
        self.pending: List[tuple] = []  # (start_idx, marker)
        self.emitted = 0
        self.dropped = 0

    def on_item(self, port, item):
        if isinstance(item, HeaderItem):
            self.fs = item.header.fs
            self.rec_t0 = item.header.start_time
            self.length = int(round((self.params["post_s"] - self.params["pre_s"]) * self.fs))
            if self.length < 1:
                raise NodeError(self.node_id, "epoch window shorter than one sample")
            return [("out", item)]  # channel metadata rides along the epochs port
        if isinstance(item, Chunk):
            self.chunks.append((self.total, item.samples))
            self.total += item.samples.shape[1]
            return [("out", e) for e in self._drain()]
        if isinstance(item, MarkerItem):
            m = item.marker
            start = int(round((m.t - self.params["offset"] + self.params["pre_s"]
                               - self.rec_t0) * self.fs))
            if start < 0:
                self.dropped += 1
            else:
                self.pending.append((start, m))
            return [("out", e) for e in self._drain()]
        if isinstance(item, EndItem):
            self.dropped += len(self.pending)  # windows past the recording end
            self.pending.clear()
            return [("out", EndItem())]
        return []

    def _drain(self) -> list:
        out = []
        while self.pending and self.pending[0][0] + self.length <= self.total:
            start, m = self.pending.pop(0)
            out.append(EpochItem(m.t, m.class_id, self._slice(start), self.emitted))
            self.emitted += 1
        self._trim()
        return out

    def _slice(self, start: int) -> np.ndarray:
        parts = []
        need_end = start + self.length
        for abs_start, samples in self.chunks:
            abs_end = abs_start + samples.shape[1]
            if abs_end <= start or abs_start >= need_end:
                continue
            lo = max(start - abs_start, 0)
            hi = min(need_end - abs_start, samples.shape[1])
            parts.append(samples[:, lo:hi])
        return np.concatenate(parts, axis=1)

    def _trim(self):
        floor = self.pending[0][0] if self.pending else self.total - self.length
        self.chunks = [(s, a) for s, a in self.chunks if s + a.shape[1] > floor]

register(NodeKindSpec(
    "epoch.markers",
    {"pre_s": ParamSpec("float"), "post_s": ParamSpec("float"),
     "offset": ParamSpec("float", default=0.0, tunable=True)},
    lambda p: ({"in": "raw-stream"}, {"out": "epochs"}),
    _epoch_batch, EpochStream,
    doc="Cut half-open marker-locked windows out of the stream.",
))

# ---------------------------------------------------------------- selection

def _subset_channels(chans: Sequence[ChannelInfo], indices) -> tuple:
    return tuple(ChannelInfo(chans[i].name, k, chans[i].role)
                 for k, i in enumerate(indices))

def _select_batch(node_id, params, ctx, inputs):
    sv = inputs["in"]
    idx = [int(i) for i in params["indices"]]
    for i in idx:
        if not 0 <= i < sv.rec.n_channels:
            raise NodeError(node_id, f"channel index {i} out of range")
    rec = SignalBlock(sv.rec.samples[idx], sv.rec.fs, sv.rec.t0,
                      _subset_channels(sv.rec.channels, idx))
    return {"out": StreamValue(rec, sv.markers)}

class SelectStream(StreamNode):
    def on_item(self, port, item):
        idx = [int(i) for i in self.params["indices"]]
        if isinstance(item, HeaderItem):
            h = item.header
            for i in idx:
                if not 0 <= i < len(h.channels):
                    raise NodeError(self.node_id, f"channel index {i} out of range")
            sub = replace(h, channels=_subset_channels(h.channels, idx))
            return [("out", HeaderItem(sub))]
        if isinstance(item, Chunk):
            return [("out", Chunk(item.t0, item.samples[idx]))]
        return [("out", item)]

register(NodeKindSpec(
    "select.channels",
    {"indices": ParamSpec("list", tunable=True)},
    lambda p: ({"in": "raw-stream"}, {"out": "raw-stream"}),
    _select_batch, SelectStream,
    doc="Keep only the listed channel indices (offline-chosen, reused online).",
))

# ---------------------------------------------------------------- filtering

def _design_from_params(node_id, params, fs) -> filters.FilterSpec:
    try:
        return filters.design_butterworth(params["kind"], fs, order=params["order"],
                                          cutoffs=params["cutoffs"])
    except ValueError as e:
        raise NodeError(node_id, str(e))

def _filter_batch(node_id, params, ctx, inputs):
    sv = inputs["in"]
    spec = _design_from_params(node_id, params, sv.rec.fs)
    rec = filters.apply_filter(sv.rec, spec, zero_phase=params["zero_phase"])
    return {"out": StreamValue(rec, sv.markers)}

class FilterStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.spec = None
        self.zi = None
        self.fs = None

    def set_param(self, name, value):
        super().set_param(name, value)
        # a retuned filter rebuilds its sections and starts from rest
        if self.fs is not None:
            self._rebuild()

    def _rebuild(self):
        self.spec = _design_from_params(self.node_id, self.params, self.fs)
        self.zi = None

    def on_item(self, port, item):
        if isinstance(item, HeaderItem):
            self.fs = item.header.fs
            self._rebuild()
            return [("out", item)]
        if isinstance(item, Chunk):
            if self.spec is None:
                raise NodeError(self.node_id, "data frame before header")
            if self.zi is None:
                self.zi = self.spec.zero_state(item.samples.shape[0])
            y, self.zi = filters.apply_sos(item.samples, self.spec, self.zi)
            return [("out", Chunk(item.t0, y))]
        return [("out", item)]

register(NodeKindSpec(
    "filt.butter",
    {"kind": ParamSpec("str", default="bandpass", choices=filters.KINDS),
     "order": ParamSpec("int", default=4),
     "cutoffs": ParamSpec("list", tunable=True),
     "zero_phase": ParamSpec("bool", default=False)},
    lambda p: ({"in": "raw-stream"}, {"out": "raw-stream"}),
    _filter_batch, FilterStream,
    doc="Butterworth SOS cascade; causal online, optionally zero-phase offline.",
))

# ---------------------------------------------------------------- epoch transforms

def _epoch_map_batch(fn):
    """Batch epoch transform that loops the per-epoch function, keeping
    the float ops identical to the streaming path."""
    def batch(node_id, params, ctx, inputs):
        es = inputs["in"]
        out = [fn(node_id, params, e) for e in es.data]
        data = np.stack(out) if out else es.data
        return {"out": es.replace_data(data)}
    return batch

def _epoch_map_stream(fn):
    class MapStream(StreamNode):
        def on_item(self, port, item):
            if isinstance(item, EpochItem):
                return [("out", replace(item, data=fn(self.node_id, self.params,
                                                      item.data)))]
            return [("out", item)]
    return MapStream

def _car_epoch(node_id, params, data):
    if data.shape[0] < 2:
        raise NodeError(node_id, "common average needs at least 2 channels")
    return preprocess.common_average_reference(data)

def _kaiser_epoch(node_id, params, data):
    length = params["length"]
    if length is not None and length != data.shape[1]:
        raise NodeError(node_id, f"window length {length} != epoch length {data.shape[1]}")
    return preprocess.kaiser_window(data, params["beta"])

register(NodeKindSpec(
    "ref.car",
    {},
    lambda p: ({"in": "epochs"}, {"out": "epochs"}),
    _epoch_map_batch(_car_epoch), _epoch_map_stream(_car_epoch),
    doc="Re-reference each sample vector to the common average.",
))

register(NodeKindSpec(
    "window.kaiser",
    {"beta": ParamSpec("float", default=preprocess.KAISER_BETA),
     "length": ParamSpec("int", default=None)},
    lambda p: ({"in": "epochs"}, {"out": "epochs"}),
    _epoch_map_batch(_kaiser_epoch), _epoch_map_stream(_kaiser_epoch),
    doc="Pointwise Kaiser window per channel.",
))

def _amplitude_batch(node_id, params, ctx, inputs):
    kept, report = preprocess.reject_epochs_amplitude(inputs["in"],
                                                      params["threshold_uv"])
    ctx.meta.setdefault(node_id, {})["rejected_epochs"] = len(report.rejected)
    return {"out": kept}

class AmplitudeStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.rejected = 0

    def on_item(self, port, item):
        if isinstance(item, EpochItem):
            if np.abs(item.data).max() > self.params["threshold_uv"]:
                self.rejected += 1
                return []
            return [("out", item)]
        return [("out", item)]

register(NodeKindSpec(
    "artifact.amplitude",
    {"threshold_uv": ParamSpec("float", tunable=True)},
    lambda p: ({"in": "epochs"}, {"out": "epochs"}),
    _amplitude_batch, AmplitudeStream,
    doc="Drop epochs whose absolute amplitude exceeds the threshold.",
))

def _load_regression(node_id, params):
    try:
        calib, _ = read_recording(params["calibration_path"])
        return preprocess.fit_regression_cleaner(
            calib, [int(i) for i in params["reference_channels"]])
    except (OSError, ValueError) as e:
        raise NodeError(node_id, f"regression calibration failed: {e}")

def _regression_batch(node_id, params, ctx, inputs):
    cleaner = _load_regression(node_id, params)
    es = inputs["in"]
    return {"out": preprocess.regression_clean(es, cleaner)}

class RegressionStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.cleaner = _load_regression(node_id, params)

    def on_item(self, port, item):
        if isinstance(item, EpochItem):
            cleaned = preprocess.regression_clean(item.data, self.cleaner)
            return [("out", replace(item, data=cleaned))]
        return [("out", item)]

register(NodeKindSpec(
    "artifact.regression",
    {"calibration_path": ParamSpec("str"),
     "reference_channels": ParamSpec("list")},
    lambda p: ({"in": "epochs"}, {"out": "epochs"}),
    _regression_batch, RegressionStream,
    doc="Subtract the reference-channel projection fitted on calibration data.",
))

def _ica_clean_epoch(model, data, frontal):
    rejected = ica.reject_components(model, data, frontal)
    cleaned, _ = ica.ica_clean(data, model, frontal_channels=frontal)
    return cleaned, rejected

def _ica_batch(node_id, params, ctx, inputs):
    es = inputs["in"]
    if params["model_path"]:
        with open(params["model_path"], "r", encoding="utf-8") as f:
            model = ica.model_from_json(f.read())
    else:
        if es.n_epochs == 0:
            return {"out": es}
        model = ica.ica_fit(es, seed=ctx.seed)
    frontal = [c.index for c in es.channels if c.role == "eog-reference"]
    out, rejected = [], set()
    for e in es.data:
        cleaned, rej = _ica_clean_epoch(model, e, frontal)
        rejected.update(rej)
        out.append(cleaned)
    ctx.meta.setdefault(node_id, {})["rejected_components"] = sorted(rejected)
    data = np.stack(out) if out else es.data
    return {"out": es.replace_data(data)}

class IcaStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        if not params["model_path"]:
            raise NodeError(node_id,
                            "online artifact.ica needs a model_path fitted offline")
        with open(params["model_path"], "r", encoding="utf-8") as f:
            self.model = ica.model_from_json(f.read())
        self.frontal: list = []

    def on_item(self, port, item):
        if isinstance(item, HeaderItem):
            self.frontal = [c.index for c in item.header.channels
                            if c.role == "eog-reference"]
            return [("out", item)]
        if isinstance(item, EpochItem):
            cleaned, _ = _ica_clean_epoch(self.model, item.data, self.frontal)
            return [("out", replace(item, data=cleaned))]
        return [("out", item)]

register(NodeKindSpec(
    "artifact.ica",
    {"model_path": ParamSpec("str", default="")},
    lambda p: ({"in": "epochs"}, {"out": "epochs"}),
    _ica_batch, IcaStream,
    doc="Reject artifact components and reconstruct; fits on the batch "
        "offline, reuses a saved model online.",
))

# ---------------------------------------------------------------- features

def _feature_vector(node_id, params, data, fs, kind):
    """One labeled feature vector for one (channels, L) epoch."""
    values, names = [], []
    if kind == "bandpower":
        bands = tuple((b[0], float(b[1]), float(b[2])) for b in params["bands"]) \
            if params["bands"] else EEG_BANDS
        for ch in range(data.shape[0]):
            spectrum = welch_psd(data[ch], fs)
            fv = band_powers(spectrum, bands, relative=params["relative"], channel=ch)
            values.extend(fv.values)
            names.extend(fv.names)
    elif kind == "logvar":
        for ch in range(data.shape[0]):
            values.append(np.log(data[ch].var(ddof=1) + 1e-12))
            names.append(f"ch{ch}.time.logvar")
    elif kind == "moments":
        for ch in range(data.shape[0]):
            m = moments(data[ch])
            values.extend([m.mean, m.variance, m.skewness, m.kurtosis])
            names.extend([f"ch{ch}.time.{x}" for x in
                          ("mean", "variance", "skewness", "kurtosis")])
    elif kind == "hjorth":
        for ch in range(data.shape[0]):
            try:
                a, mob, cpx = hjorth(data[ch])
            except ValueError:
                a, mob, cpx = 0.0, np.nan, np.nan  # flagged by FeatureVector
            values.extend([a, mob, cpx])
            names.extend([f"ch{ch}.hjorth.{x}" for x in
                          ("activity", "mobility", "complexity")])
    elif kind == "fractal":
        for ch in range(data.shape[0]):
            values.append(fractal_dimension(data[ch], params["method"]))
            names.append(f"ch{ch}.fd.{params['method']}")
    elif kind == "entropy":
        for ch in range(data.shape[0]):
            values.append(entropy(data[ch], params["method"]))
            names.append(f"ch{ch}.entropy.{params['method']}")
    elif kind == "dwt":
        for ch in range(data.shape[0]):
            fv = dwt_energies(data[ch], params["levels"], channel=ch)
            values.extend(fv.values)
            names.extend(fv.names)
    else:
        raise NodeError(node_id, f"unknown feature family {kind!r}")
    return FeatureVector(np.asarray(values, dtype=np.float64), tuple(names))

def _feature_batch_factory(kind):
    def batch(node_id, params, ctx, inputs):
        es = inputs["in"]
        rows, times, cids = [], [], []
        for i in range(es.n_epochs):
            rows.append(_feature_vector(node_id, params, es.data[i], es.fs, kind))
            times.append(es.marker_times[i])
            cids.append(es.class_ids[i])
        if rows:
            values = np.stack([r.values for r in rows])
            names = rows[0].names
        else:
            values, names = np.empty((0, 0)), ()
        return {"out": FeaturesValue(values, names, tuple(times), tuple(cids))}
    return batch

def _feature_stream_factory(kind):
    class FeatureStream(StreamNode):
        def __init__(self, node_id, params, ctx):
            super().__init__(node_id, params, ctx)
            self.fs = None

        def on_item(self, port, item):
            if isinstance(item, HeaderItem):
                self.fs = item.header.fs
                return [("out", item)]
            if isinstance(item, EpochItem):
                fv = _feature_vector(self.node_id, self.params, item.data,
                                     self.fs, kind)
                return [("out", FeatureItem(item.t, item.class_id, fv))]
            return [("out", item)]
    return FeatureStream

def _register_feature(kind, extra_params, doc):
    register(NodeKindSpec(
        f"feature.{kind}", extra_params,
        lambda p: ({"in": "epochs"}, {"out": "features"}),
        _feature_batch_factory(kind), _feature_stream_factory(kind), doc=doc,
    ))

_register_feature("bandpower", {
    "bands": ParamSpec("list", default=None),
    "relative": ParamSpec("bool", default=True),
}, "Per-channel (relative) band powers from Welch spectra.")
_register_feature("logvar", {}, "Per-channel log variance.")
_register_feature("moments", {}, "Per-channel statistical moments.")
_register_feature("hjorth", {}, "Per-channel Hjorth activity/mobility/complexity.")
_register_feature("fractal", {
    "method": ParamSpec("str", default="higuchi", choices=("higuchi", "katz")),
}, "Per-channel fractal dimension.")
_register_feature("entropy", {
    "method": ParamSpec("str", default="shannon",
                        choices=("shannon", "approximate", "sample")),
}, "Per-channel entropy.")
_register_feature("dwt", {
    "levels": ParamSpec("int", default=None),
}, "Per-channel wavelet subband log energies.")

def _csp_feature_batch(node_id, params, ctx, inputs):
    with open(params["model_path"], "r", encoding="utf-8") as f:
        model = csp_from_json(f.read())
    es = inputs["in"]
    rows = [csp_features(e, model) for e in es.data]
    values = np.stack([r.values for r in rows]) if rows else np.empty((0, 0))
    names = rows[0].names if rows else ()
    return {"out": FeaturesValue(values, names, es.marker_times, es.class_ids)}

class CspFeatureStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        with open(params["model_path"], "r", encoding="utf-8") as f:
            self.model = csp_from_json(f.read())

    def on_item(self, port, item):
        if isinstance(item, EpochItem):
            return [("out", FeatureItem(item.t, item.class_id,
                                        csp_features(item.data, self.model)))]
        return [("out", item)]

register(NodeKindSpec(
    "feature.csp",
    {"model_path": ParamSpec("str")},
    lambda p: ({"in": "epochs"}, {"out": "features"}),
    _csp_feature_batch, CspFeatureStream,
    doc="Log variance through pre-fitted CSP spatial filters.",
))

def _welch_node_batch(node_id, params, ctx, inputs):
    es = inputs["in"]
    ch = params["channel"]
    items = tuple((es.marker_times[i], welch_psd(es.data[i][ch], es.fs))
                  for i in range(es.n_epochs))
    return {"out": SpectrumValue(items)}

class WelchStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.fs = None

    def on_item(self, port, item):
        if isinstance(item, HeaderItem):
            self.fs = item.header.fs
            return [("out", item)]
        if isinstance(item, EpochItem):
            sp = welch_psd(item.data[self.params["channel"]], self.fs)
            return [("out", SpectrumItem(item.t, sp))]
        return [("out", item)]

register(NodeKindSpec(
    "feature.welch",
    {"channel": ParamSpec("int", default=0)},
    lambda p: ({"in": "epochs"}, {"out": "spectrum"}),
    _welch_node_batch, WelchStream,
    doc="Per-epoch Welch periodogram of one channel.",
))

# ---------------------------------------------------------------- classify

def _load_model(node_id, params) -> clf.ClassifierModel:
    try:
        with open(params["model_path"], "r", encoding="utf-8") as f:
            return clf.deserialize_model(f.read())
    except (OSError, ValueError) as e:
        raise NodeError(node_id, f"cannot load model: {e}")

def _decide_features(model, t, vector: FeatureVector) -> Decision:
    cid, scores = clf.predict(model, vector.values)
    return Decision(t, int(cid), tuple(float(s) for s in scores))

def _decide_epoch(model, t, data, shrinkage) -> Decision:
    cov = riemann.epoch_covariance(data, shrinkage)
    cid, scores = clf.predict(model, cov)
    return Decision(t, int(cid), tuple(float(s) for s in scores))

def _classify_nb_batch(node_id, params, ctx, inputs):
    model = _load_model(node_id, params)
    fv = inputs["in"]
    decisions = tuple(
        _decide_features(model, fv.times[i],
                         FeatureVector(fv.values[i], fv.names))
        for i in range(fv.values.shape[0])
    )
    return {"out": decisions}

class NbStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.model = _load_model(node_id, params)

    def on_item(self, port, item):
        if isinstance(item, FeatureItem):
            return [("out", _decide_features(self.model, item.t, item.vector))]
        return [("out", item)]

register(NodeKindSpec(
    "classify.nb",
    {"model_path": ParamSpec("str")},
    lambda p: ({"in": "features"}, {"out": "labels"}),
    _classify_nb_batch, NbStream,
    doc="Gaussian Naive Bayes on feature vectors (trained offline).",
))

def _classify_cov_batch(node_id, params, ctx, inputs):
    model = _load_model(node_id, params)
    es = inputs["in"]
    decisions = tuple(
        _decide_epoch(model, es.marker_times[i], es.data[i], params["shrinkage"])
        for i in range(es.n_epochs)
    )
    return {"out": decisions}

class CovClassifierStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.model = _load_model(node_id, params)

    def on_item(self, port, item):
        if isinstance(item, EpochItem):
            return [("out", _decide_epoch(self.model, item.t, item.data,
                                          self.params["shrinkage"]))]
        return [("out", item)]

for _kind in ("classify.rmdm", "classify.tangent"):
    register(NodeKindSpec(
        _kind,
        {"model_path": ParamSpec("str"),
         "shrinkage": ParamSpec("float", default=riemann.DEFAULT_SHRINKAGE)},
        lambda p: ({"in": "epochs"}, {"out": "labels"}),
        _classify_cov_batch, CovClassifierStream,
        doc="Riemannian classifier on shrunk epoch covariances.",
    ))

# ---------------------------------------------------------------- sinks

_PLOT_KINDS = ("raw", "filtered", "ic", "fft", "periodogram", "decision")
_PLOT_DEFAULT_INPUT = {"raw": "raw-stream", "filtered": "raw-stream",
                       "ic": "epochs", "fft": "epochs",
                       "periodogram": "epochs", "decision": "labels"}

def _plot_input_type(params) -> str:
    return params["input"] or _PLOT_DEFAULT_INPUT[params["kind"]]

def _series_payload(t0, fs, series) -> dict:
    t = t0 + np.arange(series.shape[-1]) / fs
    t, series = decimate_series(t, series)
    return {"t": t.tolist(), "series": np.asarray(series, dtype=float).tolist()}

def _spectrum_payload(sp: Spectrum) -> dict:
    f, p = decimate_series(sp.freqs, sp.power)
    return {"freqs": f.tolist(), "power": p.tolist()}

class PlotSink(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.seq = 0
        self.fs = None

    def _frame(self, t, payload) -> PlotFrame:
        frame = PlotFrame(self.ctx.session_id, self.node_id,
                          self.params["kind"], float(t), payload, self.seq)
        self.seq += 1
        return frame

    def on_item(self, port, item):
        kind = self.params["kind"]
        ch = self.params["channel"]
        if isinstance(item, HeaderItem):
            self.fs = item.header.fs
            return []
        if isinstance(item, Chunk) and kind in ("raw", "filtered", "ic"):
            return [("frames", self._frame(
                item.t0, _series_payload(item.t0, self.fs, item.samples[ch])))]
        if isinstance(item, EpochItem):
            if kind in ("raw", "filtered", "ic"):
                return [("frames", self._frame(
                    item.t, _series_payload(item.t, self.fs, item.data[ch])))]
            if kind in ("fft", "periodogram"):
                if kind == "fft":
                    mag = np.abs(np.fft.rfft(item.data[ch]))
                    freqs = np.fft.rfftfreq(item.data.shape[1], 1.0 / self.fs)
                    f, m = decimate_series(freqs, mag)
                    payload = {"freqs": f.tolist(), "power": m.tolist()}
                else:
                    payload = _spectrum_payload(welch_psd(item.data[ch], self.fs))
                return [("frames", self._frame(item.t, payload))]
        if isinstance(item, SpectrumItem) and kind in ("fft", "periodogram"):
            return [("frames", self._frame(item.t, _spectrum_payload(item.spectrum)))]
        if isinstance(item, Decision) and kind == "decision":
            return [("frames", self._frame(item.t, {
                "class_id": item.class_id, "scores": list(item.scores)}))]
        return []

def _plot_batch(node_id, params, ctx, inputs):
    sink = PlotSink(node_id, params, ctx)
    frames: List[PlotFrame] = []
    value = inputs["in"]

    def run(port_items):
        for it in port_items:
            frames.extend(f for _, f in sink.on_item("in", it))

    if isinstance(value, StreamValue):
        run([HeaderItem(RecordingHeader(value.rec.fs, value.rec.channels,
                                        value.rec.t0))])
        run([Chunk(value.rec.t0, value.rec.samples)])
    elif isinstance(value, EpochSet):
        run([HeaderItem(RecordingHeader(value.fs, value.channels))])
        run([EpochItem(value.marker_times[i], value.class_ids[i], value.data[i], i)
             for i in range(value.n_epochs)])
    elif isinstance(value, SpectrumValue):
        run([SpectrumItem(t, sp) for t, sp in value.items])
    elif isinstance(value, tuple):  # decisions
        run(list(value))
    else:
        raise NodeError(node_id, f"cannot plot value of type {type(value).__name__}")
    return {"frames": tuple(frames)}

def _plot_ports(params):
    return ({"in": _plot_input_type(params)}, {"frames": "frame"})

register(NodeKindSpec(
    "sink.plot",
    {"kind": ParamSpec("str", choices=_PLOT_KINDS),
     "channel": ParamSpec("int", default=0),
     "input": ParamSpec("str", default=None)},
    _plot_ports,
    _plot_batch, PlotSink,
    doc="Produce decimated plot frames (time series, spectra, decisions).",
))

def _file_sink_batch(node_id, params, ctx, inputs):
    sv = inputs["in"]
    write_recording(sv.rec, list(sv.markers), params["path"])
    return {"out": params["path"]}

class FileSinkStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.header = None
        self.chunks: list = []
        self.markers: list = []

    def on_item(self, port, item):
        if isinstance(item, HeaderItem):
            self.header = item.header
        elif isinstance(item, Chunk):
            self.chunks.append(item.samples)
        elif isinstance(item, MarkerItem):
            self.markers.append(item.marker)
        elif isinstance(item, EndItem):
            self._write()
        return []

    def on_end(self):
        self._write()
        return []

    def _write(self):
        if self.header is None or not self.chunks:
            return
        rec = SignalBlock(np.concatenate(self.chunks, axis=1), self.header.fs,
                          self.header.start_time, self.header.channels)
        write_recording(rec, self.markers, self.params["path"])
        self.chunks = []

register(NodeKindSpec(
    "sink.file",
    {"path": ParamSpec("str")},
    lambda p: ({"in": "raw-stream"}, {"out": "events"}),
    _file_sink_batch, FileSinkStream,
    doc="Write the stream back to a .neeg recording.",
))

def _features_sink_batch(node_id, params, ctx, inputs):
    fv = inputs["in"]
    from ..features import FeatureMatrix
    path = params["path"]
    if fv.values.size:
        text = FeatureMatrix(fv.values, fv.names).to_csv()
    else:
        text = ""
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return {"out": path}

class FeaturesSinkStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.rows: list = []

    def on_item(self, port, item):
        if isinstance(item, FeatureItem):
            self.rows.append(item.vector)
        return []

    def on_end(self):
        from ..features import FeatureMatrix
        if self.rows:
            with open(self.params["path"], "w", encoding="utf-8") as f:
                f.write(FeatureMatrix.from_rows(self.rows).to_csv())
        return []

register(NodeKindSpec(
    "sink.features",
    {"path": ParamSpec("str")},
    lambda p: ({"in": "features"}, {"out": "events"}),
    _features_sink_batch, FeaturesSinkStream,
    doc="Write feature rows to CSV with the names as header.",
))

def _decision_sink_batch(node_id, params, ctx, inputs):
    return {"out": tuple(inputs["in"])}

class DecisionSinkStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.decisions: list = []

    def on_item(self, port, item):
        if isinstance(item, Decision):
            self.decisions.append(item)
        return []

register(NodeKindSpec(
    "sink.decision",
    {},
    lambda p: ({"in": "labels"}, {"out": "labels"}),
    _decision_sink_batch, DecisionSinkStream,
    doc="Collect the decision sequence.",
))

def _sim_config(params, seed) -> SimConfig:
    classes = tuple(int(c) for c in params["classes"]) if params["classes"] else None
    return SimConfig(params["n_obstacles"], params["inter_obstacle_s"],
                     params["decision_window_s"], classes=classes,
                     seed=params["seed"] if params["seed"] is not None else seed)

def _sim_batch(node_id, params, ctx, inputs):
    session = SimSession(_sim_config(params, ctx.seed))
    for d in inputs["in"]:
        session.step(d.t, d.class_id)
    session.finish()
    return {"out": tuple(session.records())}

class SimStream(StreamNode):
    def __init__(self, node_id, params, ctx):
        super().__init__(node_id, params, ctx)
        self.session = SimSession(_sim_config(params, ctx.seed))

    def on_item(self, port, item):
        if isinstance(item, Decision):
            self.session.step(item.t, item.class_id)
        elif isinstance(item, EndItem):
            self.session.finish()
        return []

    def on_end(self):
        self.session.finish()
        return []

register(NodeKindSpec(
    "sim.arena",
    {"n_obstacles": ParamSpec("int"),
     "inter_obstacle_s": ParamSpec("float"),
     "decision_window_s": ParamSpec("float"),
     "classes": ParamSpec("list", default=None),
     "seed": ParamSpec("int", default=None)},
    lambda p: ({"in": "labels"}, {"out": "events"}),
    _sim_batch, SimStream,
    doc="Closed-loop two-class obstacle arena driven by decisions.",
))
