// Thin client over the gateway's documented HTTP surface.

import type { PipelineDoc, SessionDescriptor, Verdict } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function expectJson(res: Response): Promise<any> {
  const body = await res.text();
  let parsed: any = null;
  try {
    parsed = body ? JSON.parse(body) : null;
  } catch {
    parsed = { detail: body };
  }
  if (!res.ok) throw new ApiError(res.status, parsed?.detail ?? body);
  return parsed;
}

export class GatewayClient {
  constructor(public base: string) {}

  async putPipeline(id: string, doc: PipelineDoc) {
    return expectJson(await fetch(`${this.base}/pipelines/${id}`, {
      method: "PUT",
      body: JSON.stringify(doc),
    })) as Promise<{ id: string; hash: string; graph_valid: boolean;
                     graph_error: string | null }>;
  }

  async getPipelineText(id: string): Promise<string> {
    const res = await fetch(`${this.base}/pipelines/${id}`);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.text();
  }

  async validate(doc: PipelineDoc): Promise<Verdict> {
    return expectJson(await fetch(`${this.base}/pipelines/validate`, {
      method: "POST",
      body: JSON.stringify(doc),
    }));
  }

  async createSession(pipelineId: string, source: Record<string, unknown>) {
    return expectJson(await fetch(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ pipeline_id: pipelineId, source }),
    })) as Promise<SessionDescriptor>;
  }

  async startSession(id: string) {
    return expectJson(await fetch(`${this.base}/sessions/${id}/start`,
                                  { method: "POST" })) as Promise<SessionDescriptor>;
  }

  async stopSession(id: string) {
    return expectJson(await fetch(`${this.base}/sessions/${id}/stop`,
                                  { method: "POST" })) as Promise<SessionDescriptor>;
  }

  async getSession(id: string) {
    return expectJson(await fetch(`${this.base}/sessions/${id}`)) as
      Promise<SessionDescriptor>;
  }

  async updateParam(sessionId: string, node: string, param: string, value: unknown) {
    return expectJson(await fetch(`${this.base}/sessions/${sessionId}/params`, {
      method: "POST",
      body: JSON.stringify({ node, param, value }),
    })) as Promise<{ applied_frame_index: number }>;
  }

  async schedulePreview(spec: Record<string, unknown>) {
    return expectJson(await fetch(`${this.base}/schedule/preview`, {
      method: "POST",
      body: JSON.stringify(spec),
    })) as Promise<{ duration_s: number; counts: number[];
                     events: { t_on: number; t_off: number; label: string;
                               class_id: number | null }[] }>;
  }

  wsUrl(sessionId: string, node?: string): string {
    const ws = this.base.replace(/^http/, "ws");
    return `${ws}/sessions/${sessionId}/frames${node ? `?node=${node}` : ""}`;
  }
}
