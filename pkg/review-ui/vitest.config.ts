import { defineConfig } from "vitest/config";

export default defineConfig({
  resolve: {
    // tsc emits browser ES modules, so source imports carry .js suffixes;
    // strip them here so vite-node resolves the .ts sources during tests
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: "$1" }],
  },
  test: {
    environment: "node",
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
