"""File-backed pipeline store under NOETIC_DATA_DIR.

Documents are kept with their ui extension block; identity is the user name
while the canonical (ui-stripped) content hash provides dedup and
tamper-evidence.
"""

from __future__ import annotations

import os
import re
from typing import List, Optional, Tuple

from ..flow.doc import PipelineDoc, canonical_hash, parse_pipeline, save_pipeline

_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,128}$")


class PipelineStore:
    def __init__(self, root: Optional[str] = None):
        self.root = root or os.environ.get("NOETIC_DATA_DIR") or os.path.join(
            os.path.expanduser("~"), ".noetic")
        os.makedirs(os.path.join(self.root, "pipelines"), exist_ok=True)

    def _path(self, pipeline_id: str) -> str:
        if not _ID_RE.match(pipeline_id):
            raise KeyError(f"bad pipeline id {pipeline_id!r}")
        return os.path.join(self.root, "pipelines", f"{pipeline_id}.json")

    def put(self, pipeline_id: str, text: str) -> Tuple[PipelineDoc, str]:
        """Validates, stores canonically (ui kept), returns (doc, hash)."""
        doc = parse_pipeline(text, source=f"pipelines/{pipeline_id}")
        path = self._path(pipeline_id)
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(save_pipeline(doc, include_ui=True))
        os.replace(tmp, path)
        return doc, canonical_hash(doc)

    def get(self, pipeline_id: str) -> Tuple[PipelineDoc, str]:
        path = self._path(pipeline_id)
        if not os.path.exists(path):
            raise KeyError(f"no pipeline {pipeline_id!r}")
        with open(path, "r", encoding="utf-8") as f:
            doc = parse_pipeline(f.read(), source=f"pipelines/{pipeline_id}")
        return doc, canonical_hash(doc)

    def list_ids(self) -> List[str]:
        d = os.path.join(self.root, "pipelines")
        return sorted(f[:-5] for f in os.listdir(d) if f.endswith(".json"))
