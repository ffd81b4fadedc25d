import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 7690,
    proxy: {
      // during development the gateway runs separately
      "/model": "http://127.0.0.1:7680",
      "/state": "http://127.0.0.1:7680",
      "/missions": "http://127.0.0.1:7680",
      "/events": "http://127.0.0.1:7680",
      "/captures": "http://127.0.0.1:7680",
      "/dates": "http://127.0.0.1:7680",
    },
  },
  test: {
    environment: "happy-dom",
  },
});
