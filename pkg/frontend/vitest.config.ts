import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // pipeline runs on the 64^3 phantom take a few seconds each
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
