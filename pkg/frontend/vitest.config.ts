import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'node',
    include: ['test/**/*.test.ts'],
    // The live contract test simulates a small scene and boots the
    // service before asserting, which dominates the runtime.
    testTimeout: 120_000,
    hookTimeout: 120_000,
    pool: 'forks',
  },
});
