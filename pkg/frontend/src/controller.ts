/**
 * Gesture-to-API wiring.
 *
 * Every annotation edit goes to the server and the UI updates from the
 * response, never speculatively: the marker list grows when POST
 * /markers answers, painted colours change when the display buffer is
 * refetched.  At most one mutation is in flight; further gestures
 * queue behind it.  A 409 means someone else wrote first; the
 * controller refreshes from the server and says so.
 */

import type { PerspectiveCamera } from 'three';

import {
  ApiClient,
  ApiError,
  CursorState,
  Marker,
  PickHit,
  ProjectSummary,
  UndoDelta,
} from './api';
import type { GeometryBuffers } from './geometry';
import { WireFormatError } from './geometry';
import { actionForKey, KeyAction } from './keymap';
import { pointerToRay, Viewport } from './picking';
import { ClientViewState, MeshView } from './view';

export const DRAG_INTERVAL_MS = 50;

export interface ControllerEvents {
  onToast?(message: string): void;
  onBanner?(message: string): void;
  onMarkers?(markers: Marker[]): void;
  onCursor?(cursor: CursorState): void;
  onDisplay?(): void;
  onSaveRequested?(): void;
}

export interface ControllerOptions {
  state?: ClientViewState;
  events?: ControllerEvents;
  now?: () => number;
}

export class SessionController {
  readonly state: ClientViewState;
  markers: Marker[] = [];
  project: ProjectSummary | null = null;

  private readonly api: ApiClient;
  private readonly events: ControllerEvents;
  private readonly now: () => number;
  private view: MeshView | null = null;
  private readonly geometryCache = new Map<number, GeometryBuffers>();
  private queue: Promise<unknown> = Promise.resolve();
  private lastDragAt = -Infinity;

  constructor(api: ApiClient, options: ControllerOptions = {}) {
    this.api = api;
    this.state = options.state ?? new ClientViewState();
    this.events = options.events ?? {};
    this.now = options.now ?? (() => performance.now());
  }

  async open(): Promise<ProjectSummary> {
    this.project = await this.api.project();
    this.state.version = this.project.version;
    this.state.cursor = await this.api.cursor();
    return this.project;
  }

  attachView(view: MeshView): void {
    this.view = view;
  }

  // -- gestures -------------------------------------------------------------

  clickAt(x: number, y: number, viewport: Viewport, camera: PerspectiveCamera): Promise<void> {
    const ray = pointerToRay(x, y, viewport, camera);
    return this.mutate(async () => {
      const frame = this.state.cursor.frame;
      const picked = await this.api.pick(frame, ray);
      if (picked.hit === null) return;
      await this.applyTool(frame, picked.hit);
    });
  }

  /** Paint drags issue at most one stroke per DRAG_INTERVAL_MS. */
  dragTo(x: number, y: number, viewport: Viewport, camera: PerspectiveCamera): Promise<void> {
    if (this.state.tool === 'marker') return Promise.resolve();
    const t = this.now();
    if (t - this.lastDragAt < DRAG_INTERVAL_MS) return Promise.resolve();
    this.lastDragAt = t;
    return this.clickAt(x, y, viewport, camera);
  }

  scrollRadius(deltaY: number): void {
    const factor = deltaY < 0 ? 1.1 : 1 / 1.1;
    this.state.setBrushRadius(this.state.brushRadius * factor);
  }

  handleKey(key: string): Promise<void> {
    const action = actionForKey(key);
    if (action === null) return Promise.resolve();
    return this.performAction(action);
  }

  performAction(action: KeyAction): Promise<void> {
    switch (action) {
      case 'tool-marker':
        this.state.tool = 'marker';
        return Promise.resolve();
      case 'tool-paint':
        this.state.tool = 'paint';
        return Promise.resolve();
      case 'tool-erase':
        this.state.tool = 'erase';
        return Promise.resolve();
      case 'tool-opacity':
        this.state.tool = 'opacity';
        return Promise.resolve();
      case 'mode-cycle':
        this.state.cycleRenderMode();
        return this.refreshDisplay();
      case 'radius-down':
        this.scrollRadius(1);
        return Promise.resolve();
      case 'radius-up':
        this.scrollRadius(-1);
        return Promise.resolve();
      case 'undo':
        return this.mutate(async () => {
          const result = await this.api.undo(this.state.version);
          this.state.version = result.version;
          if (result.undone) await this.applyHistoryDelta(result.undone, 'undo');
        });
      case 'redo':
        return this.mutate(async () => {
          const result = await this.api.redo(this.state.version);
          this.state.version = result.version;
          if (result.redone) await this.applyHistoryDelta(result.redone, 'redo');
        });
      case 'step-back':
        return this.step(-1);
      case 'step-forward':
        return this.step(1);
      case 'play-pause':
        return this.mutate(async () => {
          const playing = this.state.cursor.playing;
          const cursor = await this.api.moveCursor(
            playing
              ? { pause: true, version: this.state.version }
              : { play: true, version: this.state.version },
          );
          await this.applyCursor(cursor);
        });
      case 'save':
        this.events.onSaveRequested?.();
        return Promise.resolve();
    }
  }

  step(delta: number): Promise<void> {
    return this.mutate(async () => {
      const cursor = await this.api.moveCursor({ step: delta, version: this.state.version });
      await this.applyCursor(cursor);
    });
  }

  scrubTo(frame: number): Promise<void> {
    return this.mutate(async () => {
      const cursor = await this.api.moveCursor({ frame, version: this.state.version });
      await this.applyCursor(cursor);
    });
  }

  save(directory: string): Promise<void> {
    return this.mutate(async () => {
      const result = await this.api.save(directory, this.state.version);
      this.state.version = result.version;
      this.events.onToast?.(`saved to ${directory}`);
    });
  }

  // -- display --------------------------------------------------------------

  async showCurrentFrame(): Promise<void> {
    if (!this.view) return;
    const frame = this.state.cursor.frame;
    const buffers = await this.ensureGeometry(frame);
    this.view.setGeometry(buffers);
    await this.refreshDisplay();
  }

  async refreshDisplay(): Promise<void> {
    if (!this.view || !this.project) return;
    const frame = this.state.cursor.frame;
    try {
      const rgba = await this.api.display(
        frame,
        { mode: this.state.renderMode, ...this.state.sliders },
        this.project.frames[frame].vertices,
      );
      this.view.applyDisplay(rgba);
      this.events.onDisplay?.();
    } catch (error) {
      if (error instanceof WireFormatError) {
        this.events.onBanner?.(error.message);
        return;
      }
      throw error;
    }
  }

  /** Pull server truth after a conflicting write elsewhere. */
  async refresh(): Promise<void> {
    this.project = await this.api.project();
    this.state.version = this.project.version;
    const cursor = await this.api.cursor();
    const frameChanged = cursor.frame !== this.state.cursor.frame;
    this.state.cursor = cursor;
    this.events.onCursor?.(cursor);
    if (frameChanged) {
      await this.showCurrentFrame();
    } else {
      await this.refreshDisplay();
    }
    this.events.onToast?.('refreshed after a concurrent edit');
  }

  // -- internals ------------------------------------------------------------

  private mutate(fn: () => Promise<void>): Promise<void> {
    const run = this.queue.then(fn, fn).catch((error) => this.handleGestureError(error));
    this.queue = run.catch(() => undefined);
    return run;
  }

  private async handleGestureError(error: unknown): Promise<void> {
    if (error instanceof ApiError && error.status === 409) {
      await this.refresh();
      return;
    }
    if (error instanceof WireFormatError) {
      this.events.onBanner?.(error.message);
      return;
    }
    if (error instanceof ApiError) {
      this.events.onToast?.(error.message);
      return;
    }
    throw error;
  }

  private async applyTool(frame: number, hit: PickHit): Promise<void> {
    const version = this.state.version;
    switch (this.state.tool) {
      case 'marker': {
        const result = await this.api.addMarker(frame, hit, version);
        this.state.version = result.version;
        this.markers.push(result.marker);
        this.events.onMarkers?.(this.markers);
        break;
      }
      case 'paint':
      case 'erase': {
        const result = await this.api.stroke(
          frame,
          hit.nearest_vertex,
          this.state.brushRadius,
          'geodesic',
          this.state.tool === 'erase' ? 'erase' : 'paint',
          version,
        );
        this.state.version = result.version;
        await this.refreshDisplay();
        break;
      }
      case 'opacity': {
        const result = await this.api.setOpacity(
          frame,
          hit.nearest_vertex,
          this.state.brushRadius,
          this.state.opacityAlpha,
          'geodesic',
          version,
        );
        this.state.version = result.version;
        await this.refreshDisplay();
        break;
      }
    }
  }

  private async applyCursor(cursor: CursorState): Promise<void> {
    const previousFrame = this.state.cursor.frame;
    this.state.cursor = cursor;
    this.state.version = cursor.version;
    this.events.onCursor?.(cursor);
    if (cursor.frame !== previousFrame) {
      await this.showCurrentFrame();
    }
  }

  private async applyHistoryDelta(delta: UndoDelta, direction: 'undo' | 'redo'): Promise<void> {
    if (delta.kind === 'stroke') {
      await this.refreshDisplay();
      return;
    }
    const markerId = delta.marker_id as number;
    const removing =
      (delta.kind === 'marker_add') === (direction === 'undo');
    if (removing) {
      this.markers = this.markers.filter((m) => m.id !== markerId);
    } else {
      this.markers.push({
        id: markerId,
        frame: delta.frame as number,
        vertex_index: delta.vertex_index as number,
        position: this.vertexPosition(delta.frame as number, delta.vertex_index as number),
      });
    }
    this.events.onMarkers?.(this.markers);
  }

  private vertexPosition(frame: number, vertex: number): [number, number, number] {
    const cached = this.geometryCache.get(frame);
    if (!cached) return [0, 0, 0];
    const base = vertex * 3;
    return [
      cached.positions[base],
      cached.positions[base + 1],
      cached.positions[base + 2],
    ];
  }

  private async ensureGeometry(frame: number): Promise<GeometryBuffers> {
    const cached = this.geometryCache.get(frame);
    if (cached) return cached;
    const fetched = await this.api.geometry(frame);
    this.geometryCache.set(frame, fetched);
    return fetched;
  }
}
