"""Pipeline documents: parsing with node-level error reporting and canonical
serialization (sorted keys, two-space indent, LF, shortest float text).

A document may carry a "ui" extension object (editor layout); it round-trips
through the store but is excluded from the canonical form, so layout changes
never alter a pipeline's content hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

DOC_VERSION = 1


class PipelineError(ValueError):
    """Parse or validation failure; messages name the offending node."""


@dataclass(frozen=True)
class NodeDecl:
    id: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EdgeDecl:
    from_id: str
    from_port: str
    to_id: str
    to_port: str


@dataclass(frozen=True)
class PipelineDoc:
    version: int = DOC_VERSION
    nodes: Tuple[NodeDecl, ...] = ()
    edges: Tuple[EdgeDecl, ...] = ()
    seed: int = 0
    ui: Optional[dict] = None

    def node(self, node_id: str) -> NodeDecl:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise PipelineError(f"no node with id {node_id!r}")


def _require(cond: bool, msg: str):
    if not cond:
        raise PipelineError(msg)


def parse_pipeline(text: str, source: str = "<document>") -> PipelineDoc:
    """Parse and schema-check a pipeline document.

    Every error message carries the node id and the source path.
    """
    from .nodes import node_catalog, validate_params

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise PipelineError(f"{source}: not valid JSON: {e}") from e
    _require(isinstance(raw, dict), f"{source}: document must be a JSON object")
    version = raw.get("version", DOC_VERSION)
    _require(version == DOC_VERSION,
             f"{source}: unsupported document version {version!r}")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int), f"{source}: seed must be an integer")
    catalog = node_catalog()

    nodes = []
    seen = set()
    for entry in raw.get("nodes", []):
        _require(isinstance(entry, dict), f"{source}: node entries must be objects")
        node_id = entry.get("id")
        _require(isinstance(node_id, str) and node_id,
                 f"{source}: every node needs a string id")
        _require(node_id not in seen,
                 f"{source}: duplicate node id {node_id!r}")
        seen.add(node_id)
        kind = entry.get("kind")
        if kind not in catalog:
            known = ", ".join(sorted(catalog))
            raise PipelineError(
                f"{source}: node {node_id!r} has unknown kind {kind!r}; known kinds: {known}")
        try:
            params = validate_params(kind, entry.get("params", {}))
        except ValueError as e:
            raise PipelineError(f"{source}: node {node_id!r}: {e}") from e
        nodes.append(NodeDecl(node_id, kind, params))

    edges = []
    for entry in raw.get("edges", []):
        _require(isinstance(entry, dict), f"{source}: edge entries must be objects")
        for key in ("from", "to"):
            _require(isinstance(entry.get(key), str) and entry.get(key),
                     f"{source}: edges need string 'from' and 'to' node ids")
        edges.append(EdgeDecl(entry["from"], entry.get("from_port", "out"),
                              entry["to"], entry.get("to_port", "in")))

    ui = raw.get("ui")
    _require(ui is None or isinstance(ui, dict), f"{source}: ui block must be an object")
    return PipelineDoc(version, tuple(nodes), tuple(edges), seed, ui)


def doc_to_dict(doc: PipelineDoc, include_ui: bool = False) -> dict:
    d = {
        "version": doc.version,
        "seed": doc.seed,
        "nodes": [
            {"id": n.id, "kind": n.kind, "params": dict(sorted(n.params.items()))}
            for n in doc.nodes
        ],
        "edges": [
            {"from": e.from_id, "from_port": e.from_port,
             "to": e.to_id, "to_port": e.to_port}
            for e in doc.edges
        ],
    }
    if include_ui and doc.ui is not None:
        d["ui"] = doc.ui
    return d


def save_pipeline(doc: PipelineDoc, include_ui: bool = False) -> str:
    """Canonical text: parse(save(parse(x))) == parse(x), bytewise stable."""
    return json.dumps(doc_to_dict(doc, include_ui), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def canonical_hash(doc: PipelineDoc) -> str:
    """Content hash of the canonical form; the ui block never contributes."""
    return hashlib.sha256(save_pipeline(doc).encode("utf-8")).hexdigest()
