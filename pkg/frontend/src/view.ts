/**
 * Client-side view state and the on-screen mesh.
 *
 * The view state holds only presentation choices (tool, brush radius,
 * contrast sliders, render mode) plus mirrors of server state (cursor,
 * version).  Annotation data itself lives on the server; MeshView just
 * applies the bytes it is given.
 */

import { BufferAttribute, BufferGeometry } from 'three';

import type { CursorState, RenderMode } from './api';
import { GeometryBuffers, WireFormatError } from './geometry';

export type Tool = 'marker' | 'paint' | 'erase' | 'opacity';

export const RENDER_MODES: RenderMode[] = ['original', 'twotone', 'cutout'];

export class ClientViewState {
  tool: Tool = 'marker';
  renderMode: RenderMode = 'original';
  cursor: CursorState = { frame: 0, playing: false, rate: 5, version: 0 };
  version = 0;
  opacityAlpha = 0.3;

  private radius = 1.0;
  private windows: [number, number, number, number] = [0, 255, 0, 255];

  get brushRadius(): number {
    return this.radius;
  }

  setBrushRadius(value: number): void {
    if (!(value > 0)) {
      throw new RangeError(`brush radius must be positive, got ${value}`);
    }
    this.radius = value;
  }

  get sliders(): { lo0: number; hi0: number; lo1: number; hi1: number } {
    const [lo0, hi0, lo1, hi1] = this.windows;
    return { lo0, hi0, lo1, hi1 };
  }

  setWindow(channel: 0 | 1, lo: number, hi: number): void {
    if (!(lo >= 0 && hi <= 255 && lo <= hi)) {
      throw new RangeError(`window must satisfy 0 <= lo <= hi <= 255, got (${lo}, ${hi})`);
    }
    this.windows[channel * 2] = lo;
    this.windows[channel * 2 + 1] = hi;
  }

  cycleRenderMode(): RenderMode {
    const next = (RENDER_MODES.indexOf(this.renderMode) + 1) % RENDER_MODES.length;
    this.renderMode = RENDER_MODES[next];
    return this.renderMode;
  }
}

/**
 * One frame's drawable mesh.  Geometry is uploaded once per frame;
 * display updates rewrite the colour attribute in place so scrubbing
 * the contrast sliders never re-sends positions or indices.
 */
export class MeshView {
  readonly geometry = new BufferGeometry();
  readonly uploads = { geometry: 0, display: 0 };

  private vertexCount = 0;
  private colours: Uint8Array = new Uint8Array(0);

  setGeometry(buffers: GeometryBuffers): void {
    this.vertexCount = buffers.vertexCount;
    this.geometry.setAttribute('position', new BufferAttribute(buffers.positions, 3));
    this.geometry.setIndex(new BufferAttribute(buffers.indices, 1));
    this.colours = new Uint8Array(4 * buffers.vertexCount);
    this.colours.fill(255);
    this.geometry.setAttribute('color', new BufferAttribute(this.colours, 4, true));
    this.uploads.geometry += 1;
  }

  applyDisplay(rgba: Uint8Array): void {
    // validate before touching the buffer: a bad payload draws nothing
    if (rgba.length !== 4 * this.vertexCount) {
      throw new WireFormatError(
        `display bytes for ${rgba.length / 4} vertices, mesh has ${this.vertexCount}`,
      );
    }
    this.colours.set(rgba);
    const attribute = this.geometry.getAttribute('color') as BufferAttribute;
    attribute.needsUpdate = true;
    this.uploads.display += 1;
  }

  colourAt(vertex: number): [number, number, number, number] {
    const base = vertex * 4;
    return [
      this.colours[base],
      this.colours[base + 1],
      this.colours[base + 2],
      this.colours[base + 3],
    ];
  }

  get count(): number {
    return this.vertexCount;
  }
}
