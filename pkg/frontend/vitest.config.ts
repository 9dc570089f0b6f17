import { defineConfig } from 'vitest/config';

export default defineConfig({
  resolve: {
    // sources import with explicit .js extensions (browser ESM); map them
    // back to the .ts files for the test runner
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: '$1' }],
  },
  test: {
    environment: 'happy-dom',
    testTimeout: 120000,
    hookTimeout: 120000,
  },
});
