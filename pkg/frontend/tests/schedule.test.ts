import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { buildRibbon, closedFormDuration, emptyRibbon } from "../src/schedule.js";
import { startGateway, type Gateway } from "./helpers.js";

let gw: Gateway;
let api: GatewayClient;

beforeAll(async () => {
  gw = await startGateway(8931);
  api = new GatewayClient(gw.base);
});

afterAll(() => gw?.stop());

const ODDBALL = {
  cue_time_s: 1.0, buffer_time_s: 0.5, fixation_time_s: 2.0,
  n_classes: 3, trial_count: 20, weights: [0.1, 0.1, 0.8], seed: 4,
};

describe("schedule preview", () => {
  it("matches the gateway-computed duration exactly", async () => {
    const preview = await api.schedulePreview(ODDBALL);
    expect(preview.duration_s).toBe(closedFormDuration(ODDBALL));
    expect(preview.duration_s).toBe(32.0);
  });

  it("renders three classes in the oddball legend with their counts", async () => {
    const preview = await api.schedulePreview(ODDBALL);
    const ribbon = buildRibbon(ODDBALL, preview.events, preview.counts);
    expect(ribbon.legend).toHaveLength(3);
    expect(ribbon.legend.map((l) => l.count)).toEqual([2, 2, 16]);
    expect(ribbon.legend.map((l) => l.weight)).toEqual([0.1, 0.1, 0.8]);
    expect(ribbon.events).toHaveLength(20);
  });

  it("random specs agree with the gateway across the board", async () => {
    for (let i = 0; i < 20; i++) {
      const spec = {
        cue_time_s: 0.1 + (i % 5) * 0.3,
        buffer_time_s: 0.25 * (i % 3),
        fixation_time_s: i % 4,
        n_classes: 2,
        trial_count: 1 + i,
        weights: [0.5, 0.5],
        seed: i,
      };
      const preview = await api.schedulePreview(spec);
      expect(preview.duration_s).toBe(closedFormDuration(spec));
    }
  });

  it("invalid specs are rejected by the gateway", async () => {
    await expect(api.schedulePreview({ ...ODDBALL, trial_count: 0 }))
      .rejects.toThrow(/422/);
  });

  it("empty spec renders an empty ribbon", () => {
    const ribbon = emptyRibbon();
    expect(ribbon.events).toHaveLength(0);
    expect(ribbon.duration_s).toBe(0);
    expect(ribbon.legend).toHaveLength(0);
  });
});
