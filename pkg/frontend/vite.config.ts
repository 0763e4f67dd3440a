import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    proxy: {
      "/areas": "http://127.0.0.1:8000",
      "/recommendations": "http://127.0.0.1:8000",
      "/metrics": "http://127.0.0.1:8000",
      "/sim": "http://127.0.0.1:8000",
    },
  },
  test: {
    environment: "jsdom",
  },
});
