"""HTTP/WebSocket service: pipelines, sessions, live parameters, and
plot-frame streams.

The engine worker owns all node state on its own thread; requests talk to it
exclusively through a bounded command queue, and each WebSocket subscriber
gets a bounded drop-oldest queue, so a slow chart can never stall the data
path.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Dict, Optional

import anyio
from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse

from ..flow.doc import PipelineError, parse_pipeline, save_pipeline
from ..flow.engine import OnlineSession
from ..flow.graph import validate_graph
from ..flow.nodes import NodeError, PlotFrame, node_catalog
from ..recording import read_recording
from ..synth import synth_recording
from ..wire import recv_frames, replay_frames
from .store import PipelineStore

SUBSCRIBER_QUEUE = 256
COMMAND_QUEUE = 4096


class Subscriber:
    def __init__(self, node_filter: Optional[str]):
        self.q: "queue.Queue[dict]" = queue.Queue(maxsize=SUBSCRIBER_QUEUE)
        self.node_filter = node_filter
        self.dropped = 0
        self.closed = False

    def push(self, msg: dict):
        if self.node_filter and msg["node"] != self.node_filter:
            return
        while True:
            try:
                self.q.put_nowait(msg)
                return
            except queue.Full:
                try:
                    self.q.get_nowait()
                    self.dropped += 1
                except queue.Empty:
                    pass


def _frame_msg(frame: PlotFrame) -> dict:
    return {"session": frame.session_id, "node": frame.node_id,
            "kind": frame.kind, "t": frame.t, "seq": frame.seq,
            "payload": frame.payload}


class EngineWorker(threading.Thread):
    """Single-writer engine context; frames and parameter updates share one
    queue, preserving total order."""

    def __init__(self, session: OnlineSession):
        super().__init__(daemon=True)
        self.session = session
        self.commands: "queue.Queue[tuple]" = queue.Queue(maxsize=COMMAND_QUEUE)
        self.subscribers: list = []
        self.sub_lock = threading.Lock()
        self.summary: Optional[dict] = None
        self.error: Optional[str] = None
        self._done = threading.Event()

    def run(self):
        while True:
            cmd = self.commands.get()
            if cmd[0] == "stop":
                self.summary = self.session.stop()
                with self.sub_lock:
                    self.summary["dropped_plot_frames"] = sum(
                        s.dropped for s in self.subscribers)
                cmd[1]["summary"] = self.summary
                cmd[1]["event"].set()
                break
            if cmd[0] == "param":
                _, node, param, value, reply = cmd
                try:
                    reply["applied"] = self.session.update_param(node, param, value)
                except (KeyError, ValueError) as e:
                    reply["error"] = str(e)
                reply["event"].set()
                continue
            try:
                emitted = self.session.on_frame(cmd[1])
            except NodeError as e:
                self.error = str(e)
                continue
            if emitted:
                with self.sub_lock:
                    subs = list(self.subscribers)
                for item in emitted:
                    if isinstance(item, PlotFrame):
                        msg = _frame_msg(item)
                        for s in subs:
                            s.push(msg)
        self._done.set()

    def submit_frame(self, frame):
        self.commands.put(("frame", frame))

    def update_param(self, node, param, value, timeout=10.0) -> int:
        reply = {"event": threading.Event()}
        self.commands.put(("param", node, param, value, reply))
        if not reply["event"].wait(timeout):
            raise TimeoutError("engine did not acknowledge the update")
        if "error" in reply:
            raise ValueError(reply["error"])
        return reply["applied"]

    def stop(self, timeout=30.0) -> dict:
        reply = {"event": threading.Event()}
        self.commands.put(("stop", reply))
        reply["event"].wait(timeout)
        self._done.wait(timeout)
        return self.summary or {}

    def subscribe(self, node_filter=None) -> Subscriber:
        sub = Subscriber(node_filter)
        with self.sub_lock:
            self.subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber):
        with self.sub_lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)


def _produce(worker: EngineWorker, source: dict, stop_flag: threading.Event):
    """Producer context: read/generate frames and hand them to the engine."""
    kind = source.get("kind", "file")
    chunk = int(source.get("chunk_samples", 32))
    paced = bool(source.get("paced", False))
    if kind in ("file", "synth"):
        if kind == "file":
            rec, markers = read_recording(source["path"])
        else:
            from ..flow.nodes import _synth_spec_from_params
            rec, markers = synth_recording(_synth_spec_from_params(
                {"spec": source.get("spec") or {}}, source.get("seed", 0)))
        t_start = time.monotonic()
        for frame in replay_frames(rec, markers, chunk):
            if stop_flag.is_set():
                break
            if paced and frame.kind == "data":
                due = t_start + (frame.t0 - rec.t0)
                delay = due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            worker.submit_frame(frame)
    elif kind == "tcp":
        with socket.create_connection((source.get("host", "127.0.0.1"),
                                       int(source["port"]))) as sock:
            sock.settimeout(1.0)
            dec_frames = recv_frames(sock)
            while not stop_flag.is_set():
                try:
                    frame = next(dec_frames)
                except StopIteration:
                    break
                except socket.timeout:
                    continue
                worker.submit_frame(frame)
    else:
        raise ValueError(f"unknown source kind {kind!r}")


@dataclass
class SessionEntry:
    id: str
    pipeline_id: str
    source: dict
    state: str = "created"
    started_at: Optional[float] = None
    graph: object = None
    worker: Optional[EngineWorker] = None
    producer: Optional[threading.Thread] = None
    stop_flag: threading.Event = field(default_factory=threading.Event)
    summary: Optional[dict] = None

    def descriptor(self) -> dict:
        return {"id": self.id, "pipeline_id": self.pipeline_id,
                "source": self.source, "state": self.state,
                "started_at": self.started_at}


def _catalog_listing() -> list:
    out = []
    for kind, spec in sorted(node_catalog().items()):
        params = {}
        defaults = {}
        dynamic = False
        for name, p in spec.params.items():
            params[name] = {"type": p.type, "tunable": p.tunable,
                            "required": p.required,
                            "default": None if p.required else p.default,
                            "choices": list(p.choices) if p.choices else None}
            if p.required:
                dynamic = True
            else:
                defaults[name] = p.default
        try:
            inputs, outputs = spec.ports(defaults if not dynamic else
                                         {**defaults, **{n: None for n, p in
                                                         spec.params.items() if p.required}})
        except Exception:
            inputs, outputs = {}, {}
        out.append({"kind": kind, "doc": spec.doc, "params": params,
                    "inputs": inputs, "outputs": outputs})
    return out


def create_app(data_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="noetic", version="0.1.0")
    store = PipelineStore(data_dir)
    sessions: Dict[str, SessionEntry] = {}
    registry_lock = threading.Lock()

    def _err(status: int, detail) -> JSONResponse:
        return JSONResponse({"detail": detail}, status_code=status)

    @app.get("/nodes")
    def nodes():
        return _catalog_listing()

    @app.get("/pipelines")
    def list_pipelines():
        return store.list_ids()

    @app.get("/pipelines/{pid}", response_class=PlainTextResponse)
    def get_pipeline(pid: str):
        try:
            doc, digest = store.get(pid)
        except KeyError:
            return PlainTextResponse(f"no pipeline {pid!r}", status_code=404)
        return PlainTextResponse(save_pipeline(doc, include_ui=True),
                                 headers={"X-Content-Hash": digest})

    @app.put("/pipelines/{pid}")
    async def put_pipeline(pid: str, request: Request):
        text = (await request.body()).decode("utf-8")
        try:
            doc, digest = store.put(pid, text)
        except KeyError as e:
            return _err(422, str(e))
        except PipelineError as e:
            return _err(422, str(e))
        try:
            validate_graph(doc)
            valid = True
            detail = None
        except PipelineError as e:
            valid = False
            detail = str(e)
        return {"id": pid, "hash": digest, "graph_valid": valid,
                "graph_error": detail}

    @app.post("/schedule/preview")
    async def schedule_preview(request: Request):
        """ERP timeline preview for the studio: events plus the closed-form
        total duration."""
        from ..stim import (ErpScheduleSpec, apportion_counts,
                            build_erp_schedule, schedule_duration)
        body = json.loads((await request.body()).decode("utf-8"))
        try:
            spec = ErpScheduleSpec(
                cue_time_s=body["cue_time_s"],
                buffer_time_s=body["buffer_time_s"],
                fixation_time_s=body["fixation_time_s"],
                n_classes=body["n_classes"],
                trial_count=body["trial_count"],
                weights=tuple(body["weights"]),
                seed=body.get("seed", 0))
        except (KeyError, TypeError, ValueError) as e:
            return _err(422, str(e))
        timeline = build_erp_schedule(spec)
        return {
            "duration_s": schedule_duration(spec),
            "counts": apportion_counts(spec.weights, spec.trial_count),
            "events": [
                {"t_on": e.t_on, "t_off": e.t_off, "label": e.label,
                 "class_id": e.class_id}
                for e in timeline.events
            ],
        }

    @app.post("/pipelines/validate")
    async def validate_pipeline(request: Request):
        """Validation without storing: the studio checks documents here."""
        text = (await request.body()).decode("utf-8")
        try:
            doc = parse_pipeline(text)
            validate_graph(doc)
        except PipelineError as e:
            return {"valid": False, "error": str(e)}
        return {"valid": True, "error": None}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = json.loads((await request.body()).decode("utf-8") or "{}")
        pid = body.get("pipeline_id")
        source = body.get("source") or {}
        try:
            doc, _ = store.get(pid)
        except KeyError:
            return _err(404, f"no pipeline {pid!r}")
        try:
            graph = validate_graph(doc)
            sid = uuid.uuid4().hex[:12]
            entry = SessionEntry(sid, pid, source, graph=graph)
            # eager construction surfaces node errors synchronously
            OnlineSession(graph, session_id=sid)
        except (PipelineError, NodeError) as e:
            return _err(422, str(e))
        with registry_lock:
            sessions[sid] = entry
        return entry.descriptor()

    def _get_entry(sid: str) -> Optional[SessionEntry]:
        with registry_lock:
            return sessions.get(sid)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        entry = _get_entry(sid)
        if entry is None:
            return _err(404, f"no session {sid!r}")
        d = entry.descriptor()
        if entry.summary is not None:
            d["summary"] = entry.summary
        return d

    @app.post("/sessions/{sid}/start")
    def start_session(sid: str):
        entry = _get_entry(sid)
        if entry is None:
            return _err(404, f"no session {sid!r}")
        with registry_lock:
            if entry.state != "created":
                return _err(409, f"session is {entry.state}, not created")
            entry.state = "running"
            entry.started_at = time.time()
        try:
            session = OnlineSession(entry.graph, session_id=sid)
        except (PipelineError, NodeError) as e:
            entry.state = "stopped"
            return _err(422, str(e))
        entry.worker = EngineWorker(session)
        entry.worker.start()
        entry.producer = threading.Thread(
            target=_produce, args=(entry.worker, entry.source, entry.stop_flag),
            daemon=True)
        entry.producer.start()
        return entry.descriptor()

    @app.post("/sessions/{sid}/stop")
    def stop_session(sid: str):
        entry = _get_entry(sid)
        if entry is None:
            return _err(404, f"no session {sid!r}")
        with registry_lock:
            if entry.state != "running":
                return _err(409, f"session is {entry.state}, not running")
            entry.state = "stopped"
        entry.stop_flag.set()
        if entry.producer is not None:
            entry.producer.join(timeout=30.0)
        entry.summary = entry.worker.stop()
        d = entry.descriptor()
        d["summary"] = entry.summary
        return d

    @app.post("/sessions/{sid}/params")
    async def update_params(sid: str, request: Request):
        entry = _get_entry(sid)
        if entry is None:
            return _err(404, f"no session {sid!r}")
        if entry.state != "running":
            return _err(409, f"session is {entry.state}, not running")
        body = json.loads((await request.body()).decode("utf-8"))
        try:
            applied = entry.worker.update_param(body["node"], body["param"],
                                                body["value"])
        except KeyError as e:
            return _err(404, str(e))
        except ValueError as e:
            return _err(422, str(e))
        return {"applied_frame_index": applied}

    @app.websocket("/sessions/{sid}/frames")
    async def ws_frames(ws: WebSocket, sid: str):
        entry = _get_entry(sid)
        if entry is None or entry.worker is None:
            await ws.close(code=4404, reason=f"no running session {sid!r}")
            return
        await ws.accept()
        node_filter = ws.query_params.get("node")
        sub = entry.worker.subscribe(node_filter)
        done = anyio.Event()

        def _poll():
            try:
                return sub.q.get(timeout=0.2)
            except queue.Empty:
                return None

        async def watch_disconnect():
            try:
                while True:
                    await ws.receive_text()  # clients never send; raises on close
            except (WebSocketDisconnect, RuntimeError):
                pass
            done.set()

        async def pump():
            try:
                while not done.is_set():
                    msg = await anyio.to_thread.run_sync(_poll)
                    if msg is None:
                        if entry.state == "stopped" and sub.q.empty():
                            break
                        continue
                    msg["dropped"] = sub.dropped
                    await ws.send_text(json.dumps(msg))
            except (WebSocketDisconnect, RuntimeError):
                pass
            done.set()

        try:
            async with anyio.create_task_group() as tg:
                tg.start_soon(watch_disconnect)
                tg.start_soon(pump)
                await done.wait()
                tg.cancel_scope.cancel()
        finally:
            entry.worker.unsubscribe(sub)
            sub.closed = True
        try:
            await ws.close()
        except RuntimeError:
            pass

    return app
