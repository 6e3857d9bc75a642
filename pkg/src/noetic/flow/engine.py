"""Execution: offline single-pass batch runs and online push sessions.

The two paths share every node's epoch-level math, so a recording replayed
frame-by-frame through a session produces bit-identical decisions to the
batch run. Online state lives per node, owned solely by the caller's
processing context; parameter updates apply between frames.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

import numpy as np

from ..wire import KIND_DATA, KIND_END, KIND_HEADER, KIND_MARKER, WireFrame
from .doc import PipelineError
from .graph import FlowGraph
from .nodes import (Chunk, Decision, EndItem, HeaderItem, MarkerItem, NodeError,
                    PlotFrame, node_catalog, validate_params)


@dataclass
class RunContext:
    seed: int
    session_id: str = "offline"
    input_override: Optional[tuple] = None
    meta: dict = field(default_factory=dict)


@dataclass
class RunResult:
    outputs: dict  # sink node id -> value
    values: dict   # (node id, port) -> value, every node
    meta: dict


def run_offline(graph: FlowGraph, recording=None, markers=None,
                seed: Optional[int] = None) -> RunResult:
    """Single batch pass in topological order; byte-deterministic."""
    if not graph.sources():
        raise PipelineError("graph needs at least one source node")
    if not graph.sinks():
        raise PipelineError("graph needs at least one sink node")
    catalog = node_catalog()
    ctx = RunContext(seed=graph.seed if seed is None else seed)
    if recording is not None:
        ctx.input_override = (recording, tuple(markers or ()))
    values: Dict[tuple, object] = {}
    incoming = {}
    for (src, port), edges in graph.edges_out.items():
        for e in edges:
            incoming[(e.to_id, e.to_port)] = (src, port)
    for node_id in graph.topo_order:
        rn = graph.nodes[node_id]
        inputs = {port: values[incoming[(node_id, port)]] for port in rn.inputs}
        try:
            outputs = catalog[rn.decl.kind].batch(node_id, rn.decl.params, ctx, inputs)
        except NodeError:
            raise
        except Exception as e:
            raise NodeError(node_id, f"{type(e).__name__}: {e}") from e
        for port, value in outputs.items():
            values[(node_id, port)] = value
    sink_outputs = {}
    for node_id in graph.sinks():
        ports = list(graph.nodes[node_id].outputs)
        sink_outputs[node_id] = values[(node_id, ports[0])] if ports else None
    return RunResult(sink_outputs, values, ctx.meta)


class OnlineSession:
    """Push execution: one stream source, per-node state keyed by node id."""

    def __init__(self, graph: FlowGraph, session_id: str = "online",
                 seed: Optional[int] = None):
        sources = graph.sources()
        if len(sources) != 1:
            raise PipelineError("online sessions need exactly one source node")
        for node_id in graph.topo_order:
            decl = graph.nodes[node_id].decl
            if decl.kind == "filt.butter" and decl.params.get("zero_phase"):
                raise PipelineError(
                    f"node {node_id!r}: zero-phase filtering is offline-only")
        self.graph = graph
        self.source_id = sources[0]
        self.session_id = session_id
        ctx = RunContext(seed=graph.seed if seed is None else seed,
                         session_id=session_id)
        self.ctx = ctx
        catalog = node_catalog()
        self.runtimes = {
            node_id: catalog[graph.nodes[node_id].decl.kind].stream(
                node_id, graph.nodes[node_id].decl.params, ctx)
            for node_id in graph.topo_order
        }
        self.frames_in = 0
        self.frames_consumed = 0
        self.malformed = 0
        self.decisions: List[Decision] = []
        self.frame_latencies: List[float] = []
        self.node_time: Dict[str, list] = {n: [] for n in graph.topo_order}
        self._saw_header = False
        self._stopped = False
        self._ended = False

    # -- push machinery

    def _dispatch(self, node_id: str, port: str, item, collected: list):
        runtime = self.runtimes[node_id]
        start = time.perf_counter()
        outputs = runtime.on_item(port, item)
        self.node_time[node_id].append(time.perf_counter() - start)
        for out_port, out_item in outputs:
            if isinstance(out_item, PlotFrame):
                collected.append(out_item)
                continue
            if isinstance(out_item, Decision):
                collected.append(out_item)  # surfaced once, at the producer
            for edge in self.graph.edges_out.get((node_id, out_port), ()):
                self._dispatch(edge.to_id, edge.to_port, out_item, collected)

    def _push_source(self, item, collected: list):
        self._dispatch(self.source_id, "in", item, collected)

    def note_malformed(self, count: int = 1):
        self.malformed += count

    def on_frame(self, frame: WireFrame) -> list:
        """Process one wire frame; returns emitted plot frames and decisions."""
        if self._stopped:
            raise ValueError("session stopped")
        collected: list = []
        start = time.perf_counter()
        if frame.kind == KIND_HEADER:
            self._saw_header = True
            self._push_source(HeaderItem(frame.header), collected)
        elif frame.kind == KIND_DATA:
            self.frames_in += 1
            if not self._saw_header:
                self.malformed += 1
                return []
            samples = np.ascontiguousarray(frame.samples, dtype=np.float64)
            self._push_source(Chunk(frame.t0, samples), collected)
            self.frames_consumed += 1
            self.frame_latencies.append(time.perf_counter() - start)
        elif frame.kind == KIND_MARKER:
            if not self._saw_header:
                self.malformed += 1
                return []
            self._push_source(MarkerItem(frame.marker), collected)
        elif frame.kind == KIND_END:
            if not self._ended:
                self._ended = True
                self._push_source(EndItem(), collected)
        for item in collected:
            if isinstance(item, Decision):
                self.decisions.append(item)
        return collected

    def update_param(self, node_id: str, param: str, value) -> int:
        """Apply a tunable change between frames; returns the index of the
        first data frame governed by the new value."""
        if node_id not in self.runtimes:
            raise KeyError(f"unknown node {node_id!r}")
        if param not in self.graph.tunables.get(node_id, ()):
            raise ValueError(f"param {param!r} of node {node_id!r} is not tunable")
        kind = self.graph.nodes[node_id].decl.kind
        merged = dict(self.graph.nodes[node_id].decl.params)
        merged[param] = value
        validate_params(kind, merged)  # type/choice check with full context
        self.runtimes[node_id].set_param(param, value)
        return self.frames_in

    def run(self, frames: Iterable[WireFrame]) -> list:
        emitted = []
        for frame in frames:
            emitted.extend(self.on_frame(frame))
        return emitted

    def stop(self) -> dict:
        """Flush sinks and report counters and per-node latency percentiles."""
        if not self._stopped:
            for node_id in self.graph.topo_order:
                self.runtimes[node_id].on_end()
            self._stopped = True
        per_node = {}
        for node_id, times in self.node_time.items():
            if times:
                arr = np.asarray(times) * 1e3
                per_node[node_id] = {
                    "items": len(times),
                    "p50_ms": float(np.percentile(arr, 50)),
                    "p95_ms": float(np.percentile(arr, 95)),
                }
            else:
                per_node[node_id] = {"items": 0, "p50_ms": 0.0, "p95_ms": 0.0}
        lat = np.asarray(self.frame_latencies) * 1e3 if self.frame_latencies else np.zeros(1)
        return {
            "frames_in": self.frames_in,
            "frames_consumed": self.frames_consumed,
            "malformed": self.malformed,
            "decisions": len(self.decisions),
            "dropped_plot_frames": 0,  # observers' drop counts merged by the gateway
            "frame_p50_ms": float(np.percentile(lat, 50)),
            "frame_p95_ms": float(np.percentile(lat, 95)),
            "nodes": per_node,
        }

    # -- sink access

    def sink_state(self, node_id: str):
        return self.runtimes[node_id]


def start_online(graph: FlowGraph, frames: Optional[Iterable[WireFrame]] = None,
                 session_id: str = "online", seed: Optional[int] = None) -> OnlineSession:
    """Create a session; when a frame iterable is given it is consumed
    immediately (file replay), otherwise push frames via on_frame."""
    session = OnlineSession(graph, session_id=session_id, seed=seed)
    if frames is not None:
        session.run(frames)
    return session
