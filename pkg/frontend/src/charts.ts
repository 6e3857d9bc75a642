// Chart bindings: per-plot-sink frame buffers with sequence tracking.
// Gaps detected via sequence numbers are kept as breaks; segments are never
// interpolated across a drop. Rendering decimates to device pixels, but
// correctness (and these data structures) lives entirely below rendering.

import type { PlotFrameMsg } from "./types.js";

export type ChartKind = "timeseries" | "spectrum";

export interface Segment {
  t: number[];
  y: number[];
}

export interface Annotation {
  frameIndex: number;
  label: string;
}

export class ChartBinding {
  lastSeq = -1;
  gaps = 0;
  segments: Segment[] = [];
  latestSpectrum: { t: number; freqs: number[]; power: number[] } | null = null;
  annotations: Annotation[] = [];
  private open: Segment | null = null;

  constructor(
    public nodeId: string,
    public kind: ChartKind,
    public maxPoints = 8192,
  ) {}

  append(msg: PlotFrameMsg): void {
    if (msg.node !== this.nodeId) return;
    const gap = this.lastSeq >= 0 && msg.seq > this.lastSeq + 1;
    if (gap) {
      this.gaps += 1;
      this.open = null; // break: the next segment starts fresh
    }
    this.lastSeq = Math.max(this.lastSeq, msg.seq);
    if (this.kind === "spectrum") {
      if (msg.payload.freqs && msg.payload.power)
        this.latestSpectrum = {
          t: msg.t,
          freqs: msg.payload.freqs,
          power: msg.payload.power,
        };
      return;
    }
    const t = msg.payload.t ?? [];
    const y = msg.payload.series ?? [];
    if (!t.length) return;
    if (!this.open) {
      this.open = { t: [], y: [] };
      this.segments.push(this.open);
    }
    this.open.t.push(...t);
    this.open.y.push(...y);
    this.trim();
  }

  annotate(frameIndex: number, label: string): void {
    this.annotations.push({ frameIndex, label });
  }

  private trim(): void {
    let total = this.segments.reduce((n, s) => n + s.t.length, 0);
    while (total > this.maxPoints && this.segments.length) {
      const first = this.segments[0];
      const drop = Math.min(first.t.length, total - this.maxPoints);
      first.t.splice(0, drop);
      first.y.splice(0, drop);
      total -= drop;
      if (!first.t.length) this.segments.shift();
    }
  }
}

export function peakFrequency(spectrum: { freqs: number[]; power: number[] }): number {
  let best = 0;
  for (let i = 1; i < spectrum.power.length; i++)
    if (spectrum.power[i] > spectrum.power[best]) best = i;
  return spectrum.freqs[best];
}

/** Decimate to at most `width` points per segment (client-side display only). */
export function decimate(seg: Segment, width: number): Segment {
  if (seg.t.length <= width) return seg;
  const stride = Math.ceil(seg.t.length / width);
  const t: number[] = [];
  const y: number[] = [];
  for (let i = 0; i < seg.t.length; i += stride) {
    t.push(seg.t[i]);
    y.push(seg.y[i]);
  }
  return { t, y };
}

export function drawTimeseries(
  canvas: HTMLCanvasElement,
  binding: ChartBinding,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = binding.segments.flatMap((s) => s.y);
  if (!all.length) return;
  const tMin = binding.segments[0].t[0];
  const last = binding.segments[binding.segments.length - 1];
  const tMax = last.t[last.t.length - 1] || tMin + 1;
  const yMin = Math.min(...all);
  const yMax = Math.max(...all) || yMin + 1;
  const sx = (t: number) => ((t - tMin) / (tMax - tMin || 1)) * canvas.width;
  const sy = (v: number) =>
    canvas.height - ((v - yMin) / (yMax - yMin || 1)) * canvas.height;
  ctx.strokeStyle = "#3fa7d6";
  for (const seg of binding.segments) {
    const d = decimate(seg, canvas.width);
    ctx.beginPath();
    d.t.forEach((t, i) => (i ? ctx.lineTo(sx(t), sy(d.y[i])) : ctx.moveTo(sx(t), sy(d.y[i]))));
    ctx.stroke(); // one path per segment: gaps stay visible as breaks
  }
}

export function drawSpectrum(canvas: HTMLCanvasElement, binding: ChartBinding): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !binding.latestSpectrum) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const { freqs, power } = binding.latestSpectrum;
  const pMax = Math.max(...power) || 1;
  ctx.strokeStyle = "#e4572e";
  ctx.beginPath();
  freqs.forEach((f, i) => {
    const x = (f / (freqs[freqs.length - 1] || 1)) * canvas.width;
    const y = canvas.height - (power[i] / pMax) * canvas.height;
    i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
}
