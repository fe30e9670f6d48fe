import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the integration file owns a real server process and the latency
    // check is timing-sensitive; keep files sequential
    fileParallelism: false,
    testTimeout: 10_000,
  },
});
