"""Pick-and-place pipeline: declarative node+edge documents validated into
typed dataflow graphs, executed offline (batch) or online (streaming push).
"""

from .doc import (  # noqa: F401
    EdgeDecl, NodeDecl, PipelineDoc, PipelineError, canonical_hash,
    parse_pipeline, save_pipeline,
)
from .graph import FlowGraph, validate_graph  # noqa: F401
from .nodes import PORT_TYPES, PlotFrame, node_catalog  # noqa: F401
from .engine import OnlineSession, run_offline, start_online  # noqa: F401
