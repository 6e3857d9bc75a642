// S2: scripted synth session. Editing the bandpass cutoff through the
// inspector path (params endpoint) yields a WS-acked frame index, and the
// filtered chart's spectral peak moves accordingly — checked on captured
// frames, not pixels.

import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { ChartBinding, peakFrequency } from "../src/charts.js";
import type { PlotFrameMsg } from "../src/types.js";
import { startGateway, type Gateway } from "./helpers.js";

let gw: Gateway;
let api: GatewayClient;

beforeAll(async () => {
  gw = await startGateway(8933);
  api = new GatewayClient(gw.base);
});

afterAll(() => gw?.stop());

const FS = 128.0;
const CHUNK = 64;

// two always-on tones; which one survives depends on the bandpass
const SOURCE = {
  kind: "synth",
  paced: true,
  chunk_samples: CHUNK,
  spec: {
    duration_s: 40.0,
    fs: FS,
    n_channels: 2,
    pink_gain: 0.2,
    white_gain: 0.2,
    ssvep: [
      { freq_hz: 10.0, channels: [0], amplitude_uv: 3.0 },
      { freq_hz: 22.0, channels: [0], amplitude_uv: 3.0 },
    ],
    erp: [{ label: "tick", class_id: 0, latency_s: 0.2, amplitude_uv: 0.0 }],
    erp_interval_s: 1.0,
  },
};

const DOC = {
  version: 1,
  seed: 0,
  nodes: [
    { id: "src", kind: "source.synth", params: {} },
    { id: "bp", kind: "filt.butter",
      params: { kind: "bandpass", order: 4, cutoffs: [5.0, 15.0] } },
    { id: "ep", kind: "epoch.markers", params: { pre_s: 0.0, post_s: 1.0 } },
    { id: "spec", kind: "sink.plot", params: { kind: "periodogram", channel: 0 } },
    { id: "wave", kind: "sink.plot", params: { kind: "filtered" } },
  ],
  edges: [
    { from: "src", to: "bp" },
    { from: "bp", to: "ep" },
    { from: "ep", to: "spec" },
    { from: "bp", to: "wave" },
  ],
};

describe("S2: live loop over the real gateway", () => {
  it("cutoff edit is WS-acked and the spectral peak moves", async () => {
    const put = await api.putPipeline("live", DOC as any);
    expect(put.graph_valid).toBe(true);
    const session = await api.createSession("live", SOURCE);
    await api.startSession(session.id);

    const binding = new ChartBinding("spec", "spectrum");
    const spectra: { t: number; peak: number; seq: number }[] = [];
    const ws = new WebSocket(api.wsUrl(session.id, "spec"));
    ws.on("message", (raw) => {
      const msg = JSON.parse(String(raw)) as PlotFrameMsg;
      binding.append(msg);
      if (binding.latestSpectrum)
        spectra.push({ t: msg.t, peak: peakFrequency(binding.latestSpectrum),
                       seq: msg.seq });
    });

    const waitFor = async (pred: () => boolean, timeoutMs: number) => {
      const t0 = Date.now();
      while (!pred()) {
        if (Date.now() - t0 > timeoutMs) throw new Error("timed out");
        await new Promise((r) => setTimeout(r, 100));
      }
    };

    // warm-up: a few epochs under the 5-15 Hz passband
    await waitFor(() => spectra.length >= 3, 20_000);
    const before = spectra[spectra.length - 1];
    expect(Math.abs(before.peak - 10.0)).toBeLessThanOrEqual(1.5);

    // inspector edit: retune to 18-26 Hz
    const ack = await api.updateParam(session.id, "bp", "cutoffs", [18.0, 26.0]);
    expect(ack.applied_frame_index).toBeGreaterThan(0);
    binding.annotate(ack.applied_frame_index, "bp.cutoffs");
    const ackTime = (ack.applied_frame_index * CHUNK) / FS;

    // epochs that start after the ack are fully governed by the new band
    await waitFor(
      () => spectra.some((s) => s.t >= ackTime + 1.0),
      25_000,
    );
    const after = spectra.filter((s) => s.t >= ackTime + 1.0).pop()!;
    expect(Math.abs(after.peak - 22.0)).toBeLessThanOrEqual(1.5);

    // sequence numbers strictly increase per node
    const seqs = spectra.map((s) => s.seq);
    expect([...seqs].sort((a, b) => a - b)).toEqual(seqs);

    ws.close();
    const stopped = await api.stopSession(session.id);
    expect(stopped.state).toBe("stopped");
    const summary = stopped.summary as Record<string, number>;
    expect(summary.frames_in).toBe(summary.frames_consumed);
  }, 90_000);

  it("session lifecycle surfaces illegal transitions", async () => {
    await api.putPipeline("live2", DOC as any);
    const session = await api.createSession("live2",
                                            { ...SOURCE, paced: false });
    await api.startSession(session.id);
    await expect(api.startSession(session.id)).rejects.toThrow(/409/);
    await new Promise((r) => setTimeout(r, 500));
    await api.stopSession(session.id);
    await expect(api.stopSession(session.id)).rejects.toThrow(/409/);
  });
});
