import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the equivalence suite captures a scan and drives a live service
    testTimeout: 60_000,
    hookTimeout: 180_000,
  },
});
