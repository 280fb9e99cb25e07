import { defineConfig } from "vitest/config";

// Dev server proxies /api to a locally running trial service; the
// production bundle is mounted at / by that same service, so all
// fetches use relative URLs.
export default defineConfig({
  server: {
    proxy: {
      "/api": "http://127.0.0.1:8000",
    },
  },
  build: {
    outDir: "dist",
  },
  test: {
    environment: "jsdom",
    globalSetup: "./tests/setup.global.ts",
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
