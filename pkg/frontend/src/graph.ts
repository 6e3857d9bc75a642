// Canvas graph model: the editor's gestures over nodes, edges, params, and
// layout. Mirrors a PipelineDoc exactly when not dirty; positions live only
// in the ui extension block so they never touch the canonical content hash.

import type { EdgeDecl, PipelineDoc } from "./types.js";

export interface CanvasNode {
  id: string;
  kind: string;
  params: Record<string, unknown>;
  x: number;
  y: number;
}

export class CanvasGraph {
  nodes = new Map<string, CanvasNode>();
  edges: EdgeDecl[] = [];
  seed = 0;
  dirty = false;
  boundPipelineId: string | null = null;
  private counter = 0;

  addNode(kind: string, id?: string, x = 40, y = 40): CanvasNode {
    let nodeId = id;
    if (!nodeId) {
      do {
        this.counter += 1;
        nodeId = `${kind.replace(/\./g, "-")}-${this.counter}`;
      } while (this.nodes.has(nodeId));
    }
    const node: CanvasNode = { id: nodeId, kind, params: {}, x, y };
    this.nodes.set(nodeId, node);
    this.dirty = true;
    return node;
  }

  connect(from: string, to: string, fromPort = "out", toPort = "in"): EdgeDecl {
    const edge: EdgeDecl = { from, from_port: fromPort, to, to_port: toPort };
    this.edges.push(edge);
    this.dirty = true;
    return edge;
  }

  deleteNode(id: string): void {
    if (!this.nodes.delete(id)) return;
    this.edges = this.edges.filter((e) => e.from !== id && e.to !== id);
    this.dirty = true;
  }

  deleteEdge(index: number): void {
    if (index >= 0 && index < this.edges.length) {
      this.edges.splice(index, 1);
      this.dirty = true;
    }
  }

  setParam(id: string, name: string, value: unknown): void {
    const node = this.nodes.get(id);
    if (!node) throw new Error(`no node '${id}'`);
    node.params[name] = value;
    this.dirty = true;
  }

  moveNode(id: string, x: number, y: number): void {
    const node = this.nodes.get(id);
    if (!node) return;
    node.x = x;
    node.y = y;
    // layout only: the canonical doc is unchanged, so the graph stays clean
  }

  /** The document this canvas mirrors; layout goes into the ui block. */
  toDoc(includeUi = true): PipelineDoc {
    const doc: PipelineDoc = {
      version: 1,
      seed: this.seed,
      nodes: [...this.nodes.values()].map((n) => ({
        id: n.id,
        kind: n.kind,
        params: { ...n.params },
      })),
      edges: this.edges.map((e) => ({ ...e })),
    };
    if (includeUi) {
      const positions: Record<string, [number, number]> = {};
      for (const n of this.nodes.values()) positions[n.id] = [n.x, n.y];
      doc.ui = { positions };
    }
    return doc;
  }

  static fromDoc(doc: PipelineDoc, pipelineId: string | null = null): CanvasGraph {
    const g = new CanvasGraph();
    g.seed = doc.seed ?? 0;
    const positions = doc.ui?.positions ?? {};
    let fallback = 0;
    for (const n of doc.nodes ?? []) {
      const [x, y] = positions[n.id] ?? [60 + fallback * 160, 80];
      fallback += 1;
      g.nodes.set(n.id, { id: n.id, kind: n.kind, params: { ...n.params }, x, y });
    }
    g.edges = (doc.edges ?? []).map((e) => ({ ...e }));
    g.boundPipelineId = pipelineId;
    g.dirty = false;
    return g;
  }

  markSaved(pipelineId: string): void {
    this.boundPipelineId = pipelineId;
    this.dirty = false;
  }
}
