/**
 * Binary wire formats of the annotation service.
 *
 * Geometry: u32 vertex count, u32 triangle count, then f32 positions
 * (3 per vertex) and u32 indices (3 per triangle), all little endian.
 * Display: 4 rgba bytes per vertex, applied verbatim.
 */

export interface GeometryBuffers {
  vertexCount: number;
  triangleCount: number;
  positions: Float32Array;
  indices: Uint32Array;
}

export class WireFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'WireFormatError';
  }
}

export function parseGeometry(buffer: ArrayBuffer): GeometryBuffers {
  if (buffer.byteLength < 8) {
    throw new WireFormatError(`geometry payload too short: ${buffer.byteLength} bytes`);
  }
  const view = new DataView(buffer);
  const vertexCount = view.getUint32(0, true);
  const triangleCount = view.getUint32(4, true);
  const expected = 8 + 12 * vertexCount + 12 * triangleCount;
  if (buffer.byteLength !== expected) {
    throw new WireFormatError(
      `geometry payload is ${buffer.byteLength} bytes, expected ${expected} ` +
      `for ${vertexCount} vertices and ${triangleCount} triangles`,
    );
  }
  return {
    vertexCount,
    triangleCount,
    positions: new Float32Array(buffer, 8, vertexCount * 3),
    indices: new Uint32Array(buffer, 8 + 12 * vertexCount, triangleCount * 3),
  };
}

export function parseDisplay(buffer: ArrayBuffer, vertexCount: number): Uint8Array {
  if (buffer.byteLength !== 4 * vertexCount) {
    throw new WireFormatError(
      `display payload is ${buffer.byteLength} bytes, expected ${4 * vertexCount} ` +
      `for ${vertexCount} vertices`,
    );
  }
  return new Uint8Array(buffer);
}
