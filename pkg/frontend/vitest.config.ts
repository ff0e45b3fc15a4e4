import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // Every test drives a real server process; the trainer run covers
    // 10k environment steps, so give tests generous room.
    testTimeout: 300_000,
    hookTimeout: 60_000,
  },
});
