import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    testTimeout: 60_000,
    hookTimeout: 60_000,
    // each suite spawns its own gateway on a distinct port; keep them from
    // racing over CPU during the paced live-session test
    fileParallelism: false,
  },
});
