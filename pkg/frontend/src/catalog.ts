// Node catalog access and port resolution.
//
// The engine resolves sink.plot's input port type from its params, so the
// /nodes listing cannot carry it statically; the default-by-kind table is
// mirrored here and exercised against the server by the fuzz suite.

import type { CatalogEntry, PortType } from "./types.js";

export type Catalog = Map<string, CatalogEntry>;

const PLOT_DEFAULT_INPUT: Record<string, PortType> = {
  raw: "raw-stream",
  filtered: "raw-stream",
  ic: "epochs",
  fft: "epochs",
  periodogram: "epochs",
  decision: "labels",
};

export function toCatalog(entries: CatalogEntry[]): Catalog {
  return new Map(entries.map((e) => [e.kind, e]));
}

export async function fetchCatalog(base: string): Promise<Catalog> {
  const res = await fetch(`${base}/nodes`);
  if (!res.ok) throw new Error(`GET /nodes failed: ${res.status}`);
  return toCatalog((await res.json()) as CatalogEntry[]);
}

export function resolvePorts(
  entry: CatalogEntry,
  params: Record<string, unknown>,
): { inputs: Record<string, PortType>; outputs: Record<string, PortType> } {
  if (entry.kind === "sink.plot") {
    const explicit = params["input"];
    const kind = params["kind"];
    const input =
      typeof explicit === "string"
        ? (explicit as PortType)
        : PLOT_DEFAULT_INPUT[String(kind)];
    return { inputs: { in: input }, outputs: { frames: "frame" } };
  }
  return { inputs: { ...entry.inputs }, outputs: { ...entry.outputs } };
}
