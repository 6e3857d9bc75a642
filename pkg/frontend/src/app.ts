// Studio wiring: palette + canvas editor + inspector on the left, session
// control and live charts on the right, schedule preview below.

import { GatewayClient } from "./api.js";
import { fetchCatalog, resolvePorts, type Catalog } from "./catalog.js";
import { ChartBinding, drawSpectrum, drawTimeseries } from "./charts.js";
import { CanvasGraph, type CanvasNode } from "./graph.js";
import { buildRibbon, closedFormDuration, emptyRibbon, renderRibbon,
         type ErpPreviewSpec } from "./schedule.js";
import { validateDoc } from "./validate.js";
import type { PlotFrameMsg } from "./types.js";

const base = (window as any).NOETIC_BASE ?? "http://127.0.0.1:8890";
const api = new GatewayClient(base);
let catalog: Catalog = new Map();
let graph = new CanvasGraph();
let selectedNode: string | null = null;
let pendingFrom: { node: string; port: string } | null = null;
let ws: WebSocket | null = null;
let sessionId: string | null = null;
const bindings = new Map<string, ChartBinding>();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

function setStatus(text: string, error = false) {
  const banner = el<HTMLDivElement>("status");
  banner.textContent = text;
  banner.className = error ? "status error" : "status";
}

function revalidate() {
  const verdict = validateDoc(graph.toDoc(), catalog);
  setStatus(verdict.valid ? "graph valid" : `invalid: ${verdict.error}`,
            !verdict.valid);
  renderCanvas();
}

// ---- canvas editor ---------------------------------------------------------

function renderPalette() {
  const palette = el<HTMLDivElement>("palette");
  palette.innerHTML = "";
  for (const entry of [...catalog.values()].sort((a, b) =>
    a.kind.localeCompare(b.kind))) {
    const btn = document.createElement("button");
    btn.textContent = entry.kind;
    btn.title = entry.doc;
    btn.onclick = () => {
      const n = graph.addNode(entry.kind, undefined,
                              40 + graph.nodes.size * 30, 60 + (graph.nodes.size % 6) * 70);
      selectedNode = n.id;
      renderInspector();
      revalidate();
    };
    palette.appendChild(btn);
  }
}

function portOffsets(node: CanvasNode) {
  const entry = catalog.get(node.kind);
  const resolved = entry ? resolvePorts(entry, node.params) :
    { inputs: {}, outputs: {} };
  return {
    inputs: Object.keys(resolved.inputs),
    outputs: Object.keys(resolved.outputs),
  };
}

function renderCanvas() {
  const svg = el<HTMLElement>("canvas");
  svg.innerHTML = "";
  const ns = "http://www.w3.org/2000/svg";
  for (const edge of graph.edges) {
    const a = graph.nodes.get(edge.from);
    const b = graph.nodes.get(edge.to);
    if (!a || !b) continue;
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(a.x + 140));
    line.setAttribute("y1", String(a.y + 20));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y + 20));
    line.setAttribute("class", "edge");
    line.addEventListener("dblclick", () => {
      graph.deleteEdge(graph.edges.indexOf(edge));
      revalidate();
    });
    svg.appendChild(line);
  }
  for (const node of graph.nodes.values()) {
    const g = document.createElementNS(ns, "g");
    g.setAttribute("transform", `translate(${node.x},${node.y})`);
    const rect = document.createElementNS(ns, "rect");
    rect.setAttribute("width", "140");
    rect.setAttribute("height", "40");
    rect.setAttribute("class", node.id === selectedNode ? "node selected" : "node");
    g.appendChild(rect);
    const label = document.createElementNS(ns, "text");
    label.setAttribute("x", "8");
    label.setAttribute("y", "17");
    label.textContent = node.kind;
    g.appendChild(label);
    const idLabel = document.createElementNS(ns, "text");
    idLabel.setAttribute("x", "8");
    idLabel.setAttribute("y", "33");
    idLabel.setAttribute("class", "node-id");
    idLabel.textContent = node.id;
    g.appendChild(idLabel);
    g.addEventListener("click", () => {
      const offs = portOffsets(node);
      if (pendingFrom && pendingFrom.node !== node.id) {
        graph.connect(pendingFrom.node, node.id, pendingFrom.port,
                      offs.inputs[0] ?? "in");
        pendingFrom = null;
      } else {
        selectedNode = node.id;
      }
      renderInspector();
      revalidate();
    });
    g.addEventListener("dblclick", () => {
      const offs = portOffsets(node);
      pendingFrom = { node: node.id, port: offs.outputs[0] ?? "out" };
      setStatus(`connecting from ${node.id}.${pendingFrom.port}: click a target node`);
    });
    svg.appendChild(g);
  }
}

function renderInspector() {
  const panel = el<HTMLDivElement>("inspector");
  panel.innerHTML = "";
  if (!selectedNode || !graph.nodes.has(selectedNode)) return;
  const node = graph.nodes.get(selectedNode)!;
  const entry = catalog.get(node.kind);
  const title = document.createElement("h3");
  title.textContent = `${node.id} (${node.kind})`;
  panel.appendChild(title);
  if (!entry) return;
  for (const [name, schema] of Object.entries(entry.params)) {
    const row = document.createElement("div");
    row.className = "param-row";
    const label = document.createElement("label");
    label.textContent = `${name}${schema.tunable ? " (live)" : ""}`;
    const input = document.createElement("input");
    const current = node.params[name] ?? schema.default;
    input.value = current === null || current === undefined
      ? "" : JSON.stringify(current);
    input.onchange = async () => {
      let value: unknown;
      try {
        value = input.value === "" ? null : JSON.parse(input.value);
      } catch {
        setStatus(`param ${name}: not valid JSON`, true);
        return;
      }
      graph.setParam(node.id, name, value);
      revalidate();
      if (schema.tunable && sessionId) {
        try {
          const ack = await api.updateParam(sessionId, node.id, name, value);
          bindings.get("__active__")?.annotate(ack.applied_frame_index,
                                               `${node.id}.${name}`);
          setStatus(`live update acked at frame ${ack.applied_frame_index}`);
        } catch (e) {
          setStatus(String(e), true);
        }
      }
    };
    row.appendChild(label);
    row.appendChild(input);
    panel.appendChild(row);
  }
  const del = document.createElement("button");
  del.textContent = "delete node";
  del.onclick = () => {
    graph.deleteNode(node.id);
    selectedNode = null;
    renderInspector();
    revalidate();
  };
  panel.appendChild(del);
}

// ---- save / load -----------------------------------------------------------

async function savePipeline() {
  const id = el<HTMLInputElement>("pipeline-id").value || "studio";
  const verdict = validateDoc(graph.toDoc(), catalog);
  try {
    const result = await api.putPipeline(id, graph.toDoc());
    if (result.graph_valid !== verdict.valid)
      setStatus(`validator disagreement (client ${verdict.valid} vs server ` +
                `${result.graph_valid}): this is a studio bug`, true);
    else if (!result.graph_valid)
      setStatus(`saved, but graph invalid: ${result.graph_error}`, true);
    else setStatus(`saved '${id}' (${result.hash.slice(0, 12)})`);
    graph.markSaved(id);
  } catch (e) {
    setStatus(String(e), true);
  }
}

async function loadPipeline() {
  const id = el<HTMLInputElement>("pipeline-id").value || "studio";
  try {
    const text = await api.getPipelineText(id);
    graph = CanvasGraph.fromDoc(JSON.parse(text), id);
    selectedNode = null;
    renderInspector();
    revalidate();
    setStatus(`loaded '${id}'`);
  } catch (e) {
    setStatus(String(e), true);
  }
}

// ---- live session ----------------------------------------------------------

function plotSinks(): string[] {
  return [...graph.nodes.values()]
    .filter((n) => n.kind === "sink.plot")
    .map((n) => n.id);
}

async function startSession() {
  const id = graph.boundPipelineId ?? el<HTMLInputElement>("pipeline-id").value;
  const sourceText = el<HTMLTextAreaElement>("source-spec").value;
  let source: Record<string, unknown>;
  try {
    source = JSON.parse(sourceText);
  } catch {
    setStatus("source spec is not valid JSON", true);
    return;
  }
  try {
    const descriptor = await api.createSession(id, source);
    sessionId = descriptor.id;
    await api.startSession(sessionId);
    setStatus(`session ${sessionId} running`);
    openCharts();
  } catch (e) {
    setStatus(String(e), true);
  }
}

function openCharts() {
  if (!sessionId) return;
  const container = el<HTMLDivElement>("charts");
  container.innerHTML = "";
  bindings.clear();
  for (const nodeId of plotSinks()) {
    const node = graph.nodes.get(nodeId)!;
    const spectral = node.params["kind"] === "fft" ||
      node.params["kind"] === "periodogram";
    const binding = new ChartBinding(nodeId, spectral ? "spectrum" : "timeseries");
    bindings.set(nodeId, binding);
    const wrap = document.createElement("div");
    const caption = document.createElement("div");
    caption.textContent = `${nodeId} (${node.params["kind"] ?? "raw"})`;
    const canvas = document.createElement("canvas");
    canvas.width = 640;
    canvas.height = 160;
    wrap.appendChild(caption);
    wrap.appendChild(canvas);
    container.appendChild(wrap);
    (binding as any).canvas = canvas;
  }
  const first = bindings.values().next().value;
  if (first) bindings.set("__active__", first);
  connectWs();
}

function connectWs(attempt = 0) {
  if (!sessionId) return;
  ws = new WebSocket(api.wsUrl(sessionId));
  ws.onmessage = (event) => {
    const msg = JSON.parse(event.data as string) as PlotFrameMsg;
    const binding = bindings.get(msg.node);
    if (!binding) return;
    binding.append(msg);
    const canvas = (binding as any).canvas as HTMLCanvasElement;
    if (binding.kind === "spectrum") drawSpectrum(canvas, binding);
    else drawTimeseries(canvas, binding);
  };
  ws.onclose = () => {
    // reconnect with backoff while running; the seq gap marks the outage
    if (sessionId && attempt < 5)
      setTimeout(() => connectWs(attempt + 1), 250 * 2 ** attempt);
  };
}

async function stopSession() {
  if (!sessionId) return;
  try {
    const descriptor = await api.stopSession(sessionId);
    setStatus(`stopped; summary: ${JSON.stringify(descriptor.summary ?? {})}`);
  } catch (e) {
    setStatus(String(e), true);
  }
  sessionId = null;
  ws?.close();
}

// ---- schedule preview ------------------------------------------------------

async function previewSchedule() {
  const specText = el<HTMLTextAreaElement>("erp-spec").value;
  const target = el<HTMLDivElement>("ribbon");
  let spec: ErpPreviewSpec;
  try {
    spec = JSON.parse(specText);
  } catch {
    renderRibbon(target, emptyRibbon());
    setStatus("schedule spec is not valid JSON", true);
    return;
  }
  try {
    const preview = await api.schedulePreview(spec as any);
    if (Math.abs(preview.duration_s - closedFormDuration(spec)) > 0) {
      setStatus("duration mismatch between studio and gateway", true);
      return;
    }
    renderRibbon(target, buildRibbon(spec, preview.events, preview.counts));
    setStatus(`schedule ok: ${preview.duration_s} s`);
  } catch (e) {
    renderRibbon(target, emptyRibbon());
    setStatus(String(e), true);
  }
}

// ---- boot ------------------------------------------------------------------

async function boot() {
  catalog = await fetchCatalog(base);
  renderPalette();
  revalidate();
  el<HTMLButtonElement>("save").onclick = savePipeline;
  el<HTMLButtonElement>("load").onclick = loadPipeline;
  el<HTMLButtonElement>("start").onclick = startSession;
  el<HTMLButtonElement>("stop").onclick = stopSession;
  el<HTMLButtonElement>("preview").onclick = previewSchedule;
}

boot().catch((e) => setStatus(`cannot reach gateway at ${base}: ${e}`, true));
