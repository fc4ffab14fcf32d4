/**
 * Mouse-ray construction.  The pointer replaces the laser: a click
 * becomes a world-space ray through the pixel, and the server decides
 * what it hit.  No other mesh math happens on the client.
 */

import { PerspectiveCamera, Vector3 } from 'three';

import type { RayLike } from './api';

export interface Viewport {
  width: number;
  height: number;
}

export function pointerToRay(
  screenX: number,
  screenY: number,
  viewport: Viewport,
  camera: PerspectiveCamera,
): RayLike {
  const ndcX = (screenX / viewport.width) * 2 - 1;
  const ndcY = -(screenY / viewport.height) * 2 + 1;
  const target = new Vector3(ndcX, ndcY, 0.5).unproject(camera);
  const direction = target.sub(camera.position).normalize();
  return {
    origin: [camera.position.x, camera.position.y, camera.position.z],
    direction: [direction.x, direction.y, direction.z],
  };
}

/** Screen position of a world point; used to anchor marker glyphs. */
export function worldToScreen(
  world: [number, number, number],
  viewport: Viewport,
  camera: PerspectiveCamera,
): { x: number; y: number } {
  const projected = new Vector3(...world).project(camera);
  return {
    x: ((projected.x + 1) / 2) * viewport.width,
    y: ((1 - projected.y) / 2) * viewport.height,
  };
}
