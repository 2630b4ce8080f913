import { defineConfig } from "vitest/config";

// The bundle is served from the service origin in production, so the live
// test points the DOM window at the service and uses same-origin requests.
export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    environmentOptions: {
      happyDOM: {
        url: process.env.SERVICE_URL ?? "http://localhost/",
      },
    },
  },
});
