import { defineConfig } from 'vitest/config';

// training and export tests run real (tiny) model fits on the CPU backend
export default defineConfig({
  test: {
    testTimeout: 300_000,
    hookTimeout: 120_000,
  },
});
