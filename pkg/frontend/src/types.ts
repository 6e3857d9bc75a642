// Wire-level shapes shared across the studio.

export type PortType =
  | "raw-stream" | "epochs" | "features" | "labels"
  | "model" | "spectrum" | "events" | "frame";

export interface NodeDecl {
  id: string;
  kind: string;
  params: Record<string, unknown>;
}

export interface EdgeDecl {
  from: string;
  from_port: string;
  to: string;
  to_port: string;
}

export interface PipelineDoc {
  version: number;
  seed: number;
  nodes: NodeDecl[];
  edges: EdgeDecl[];
  ui?: { positions?: Record<string, [number, number]> };
}

export interface ParamSchema {
  type: "float" | "int" | "str" | "bool" | "list" | "dict";
  tunable: boolean;
  required: boolean;
  default: unknown;
  choices: unknown[] | null;
}

export interface CatalogEntry {
  kind: string;
  doc: string;
  params: Record<string, ParamSchema>;
  inputs: Record<string, PortType>;
  outputs: Record<string, PortType>;
}

export interface PlotFrameMsg {
  session: string;
  node: string;
  kind: string;
  t: number;
  seq: number;
  dropped?: number;
  payload: {
    t?: number[];
    series?: number[];
    freqs?: number[];
    power?: number[];
    class_id?: number;
    scores?: number[];
  };
}

export interface SessionDescriptor {
  id: string;
  pipeline_id: string;
  source: Record<string, unknown>;
  state: "created" | "running" | "stopped";
  started_at: number | null;
  summary?: Record<string, unknown>;
}

export interface Verdict {
  valid: boolean;
  error: string | null;
}
