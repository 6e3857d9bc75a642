// Spawns the real gateway for integration tests.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface Gateway {
  base: string;
  proc: ChildProcess;
  stop: () => void;
}

export async function startGateway(port: number): Promise<Gateway> {
  const dataDir = mkdtempSync(join(tmpdir(), "noetic-studio-"));
  const proc = spawn("noetic", ["serve", "--port", String(port)], {
    env: { ...process.env, NOETIC_DATA_DIR: dataDir },
    stdio: ["ignore", "pipe", "pipe"],
  });
  let stderr = "";
  proc.stderr?.on("data", (chunk) => (stderr += chunk));
  const base = `http://127.0.0.1:${port}`;
  for (let i = 0; i < 150; i++) {
    try {
      const res = await fetch(`${base}/nodes`);
      if (res.ok) return { base, proc, stop: () => proc.kill("SIGTERM") };
    } catch {
      /* not up yet */
    }
    if (proc.exitCode !== null)
      throw new Error(`gateway exited early (${proc.exitCode}): ${stderr}`);
    await new Promise((r) => setTimeout(r, 100));
  }
  proc.kill("SIGTERM");
  throw new Error(`gateway never came up on :${port}\n${stderr}`);
}

/** Deterministic PRNG so fuzz failures replay exactly. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pick<T>(rand: () => number, items: T[]): T {
  return items[Math.floor(rand() * items.length)];
}
