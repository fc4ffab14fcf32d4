/// <reference types="vitest" />
import { defineConfig } from 'vite';

export default defineConfig({
  base: './',
  build: {
    outDir: 'dist',
  },
  test: {
    environment: 'node',
    // the integration tests each spawn a server on a fixed port
    fileParallelism: false,
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
