/**
 * Hand-built wire payloads for tests that never touch the network.
 * Byte layout is written out with a DataView on purpose: these are the
 * independent reference against which the parsers are checked.
 */

export function buildGeometryBytes(positions: number[][], triangles: number[][]): ArrayBuffer {
  const v = positions.length;
  const t = triangles.length;
  const buffer = new ArrayBuffer(8 + 12 * v + 12 * t);
  const view = new DataView(buffer);
  view.setUint32(0, v, true);
  view.setUint32(4, t, true);
  positions.flat().forEach((value, i) => view.setFloat32(8 + 4 * i, value, true));
  triangles.flat().forEach((value, i) => view.setUint32(8 + 12 * v + 4 * i, value, true));
  return buffer;
}

export function buildDisplayBytes(rgba: number[][]): ArrayBuffer {
  return Uint8Array.from(rgba.flat()).buffer;
}

/** A unit square split into two triangles, the smallest mesh worth drawing. */
export const SQUARE = {
  positions: [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
  ],
  triangles: [
    [0, 1, 2],
    [0, 2, 3],
  ],
};
