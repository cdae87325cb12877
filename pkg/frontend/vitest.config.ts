import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the e2e test spawns the Python service and builds a corpus first
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
