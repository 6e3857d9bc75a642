"""Graph validation: port resolution, exactly-once input wiring, end-to-end
type matching, cycle rejection, and deterministic topological order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Dict, List, Tuple

from .doc import EdgeDecl, NodeDecl, PipelineDoc, PipelineError
from .nodes import PORT_TYPES, is_sink, is_source, node_catalog, tunable_params


@dataclass(frozen=True)
class ResolvedNode:
    decl: NodeDecl
    inputs: dict   # port -> type
    outputs: dict  # port -> type


@dataclass(frozen=True)
class FlowGraph:
    doc: PipelineDoc
    nodes: dict                 # id -> ResolvedNode
    topo_order: tuple
    edges_out: dict             # (node id, port) -> tuple[EdgeDecl]
    tunables: dict              # node id -> tuple of tunable param names

    @property
    def seed(self) -> int:
        return self.doc.seed

    def sources(self) -> List[str]:
        return [n for n in self.topo_order if is_source(self.nodes[n].decl.kind)]

    def sinks(self) -> List[str]:
        return [n for n in self.topo_order if is_sink(self.nodes[n].decl.kind)]


def _find_cycle(adjacency: Dict[str, list], candidates: list) -> List[str]:
    seen, stack = set(), []

    def visit(node) -> List[str]:
        if node in stack:
            return stack[stack.index(node):] + [node]
        if node in seen:
            return []
        seen.add(node)
        stack.append(node)
        for nxt in adjacency.get(node, []):
            cycle = visit(nxt)
            if cycle:
                return cycle
        stack.pop()
        return []

    for c in sorted(candidates):
        cycle = visit(c)
        if cycle:
            return cycle
    return []


def validate_graph(doc: PipelineDoc) -> FlowGraph:
    """Reject cycles, dangling inputs, and port-type mismatches; emit the
    topological order with ties broken by node id."""
    catalog = node_catalog()
    nodes: Dict[str, ResolvedNode] = {}
    for decl in doc.nodes:
        spec = catalog[decl.kind]
        inputs, outputs = spec.ports(decl.params)
        for t in list(inputs.values()) + list(outputs.values()):
            if t not in PORT_TYPES:
                raise PipelineError(f"node {decl.id!r}: bad port type {t!r}")
        nodes[decl.id] = ResolvedNode(decl, dict(inputs), dict(outputs))

    incoming: Dict[Tuple[str, str], EdgeDecl] = {}
    edges_out: Dict[Tuple[str, str], list] = {}
    for e in doc.edges:
        for end, port_attr, side in ((e.from_id, e.from_port, "outputs"),
                                     (e.to_id, e.to_port, "inputs")):
            if end not in nodes:
                raise PipelineError(f"edge references unknown node {end!r}")
            ports = getattr(nodes[end], side)
            if port_attr not in ports:
                raise PipelineError(
                    f"node {end!r} has no {side[:-1]} port {port_attr!r}; "
                    f"available: {sorted(ports) or '(none)'}")
        out_t = nodes[e.from_id].outputs[e.from_port]
        in_t = nodes[e.to_id].inputs[e.to_port]
        if out_t != in_t:
            raise PipelineError(
                f"type mismatch: {e.from_id}.{e.from_port} ({out_t}) cannot feed "
                f"{e.to_id}.{e.to_port} ({in_t})")
        key = (e.to_id, e.to_port)
        if key in incoming:
            raise PipelineError(
                f"input port {e.to_id}.{e.to_port} connected more than once")
        incoming[key] = e
        edges_out.setdefault((e.from_id, e.from_port), []).append(e)

    for node_id, rn in nodes.items():
        for port in rn.inputs:
            if (node_id, port) not in incoming:
                raise PipelineError(
                    f"node {node_id!r}: required input port {port!r} is not connected")

    adjacency = {n: [] for n in nodes}
    indegree = {n: 0 for n in nodes}
    for e in doc.edges:
        adjacency[e.from_id].append(e.to_id)
        indegree[e.to_id] += 1
    ready = [n for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for nxt in adjacency[n]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(nodes):
        remaining = [n for n, d in indegree.items() if d > 0]
        cycle = _find_cycle(adjacency, remaining)
        raise PipelineError("graph has a cycle: " + " -> ".join(cycle))

    tunables = {n: tunable_params(rn.decl.kind) for n, rn in nodes.items()}
    return FlowGraph(doc, nodes, tuple(order),
                     {k: tuple(v) for k, v in edges_out.items()}, tunables)
