/**
 * Typed client for the annotation service HTTP API.
 *
 * Every mutation returns the new session version; callers pass the
 * version they last saw so concurrent writers are refused with 409
 * instead of silently interleaving.
 */

import { GeometryBuffers, parseDisplay, parseGeometry } from './geometry';

export interface FrameSummary {
  index: number;
  file: string;
  vertices: number;
  triangles: number;
  has_labels: boolean;
}

export interface ProjectSummary {
  id: string;
  source_dir: string;
  frame_count: number;
  frames: FrameSummary[];
  marker_count: number;
  dirty: boolean;
  version: number;
}

export interface PickHit {
  triangle_index: number;
  barycentric: [number, number, number];
  point: [number, number, number];
  nearest_vertex: number;
  distance: number;
}

export interface Marker {
  id: number;
  frame: number;
  position: [number, number, number];
  vertex_index: number;
}

export interface CursorState {
  frame: number;
  playing: boolean;
  rate: number;
  version: number;
}

export interface RayLike {
  origin: [number, number, number];
  direction: [number, number, number];
}

export type RenderMode = 'original' | 'twotone' | 'cutout';
export type BrushMetric = 'geodesic' | 'euclidean';
export type BrushMode = 'paint' | 'erase';

export interface DisplayQuery {
  mode: RenderMode;
  lo0: number;
  hi0: number;
  lo1: number;
  hi1: number;
}

export interface UndoDelta {
  kind: string;
  [key: string]: unknown;
}

export class ApiError extends Error {
  readonly status: number;
  readonly type: string;
  readonly detail: Record<string, unknown>;

  constructor(status: number, type: string, message: string, detail: Record<string, unknown>) {
    super(message);
    this.name = 'ApiError';
    this.status = status;
    this.type = type;
    this.detail = detail;
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let type = 'error';
  let message = `${response.status} ${response.statusText}`;
  let detail: Record<string, unknown> = {};
  try {
    const body = await response.json();
    if (body && body.error) {
      type = body.error.type ?? type;
      message = body.error.message ?? message;
      detail = body.error;
    }
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(response.status, type, message, detail);
}

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;

  constructor(baseUrl = '', fetchFn: typeof fetch = fetch) {
    this.baseUrl = baseUrl.replace(/\/$/, '') + '/api/v1';
    this.fetchFn = fetchFn;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    await raiseForStatus(response);
    return response.json() as Promise<T>;
  }

  private async getBinary(path: string): Promise<ArrayBuffer> {
    const response = await this.fetchFn(this.baseUrl + path);
    await raiseForStatus(response);
    return response.arrayBuffer();
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    await raiseForStatus(response);
    return response.json() as Promise<T>;
  }

  project(): Promise<ProjectSummary> {
    return this.getJson('/project');
  }

  async geometry(frame: number): Promise<GeometryBuffers> {
    return parseGeometry(await this.getBinary(`/frames/${frame}/geometry`));
  }

  async display(frame: number, query: DisplayQuery, vertexCount: number): Promise<Uint8Array> {
    const params = new URLSearchParams({
      mode: query.mode,
      lo0: String(query.lo0),
      hi0: String(query.hi0),
      lo1: String(query.lo1),
      hi1: String(query.hi1),
    });
    return parseDisplay(
      await this.getBinary(`/frames/${frame}/display?${params}`),
      vertexCount,
    );
  }

  pick(frame: number, ray: RayLike): Promise<{ hit: PickHit | null; version: number }> {
    return this.postJson(`/frames/${frame}/pick`, { ray });
  }

  addMarker(frame: number, pick: PickHit, version?: number): Promise<{ marker: Marker; version: number }> {
    return this.postJson('/markers', { frame, pick, version });
  }

  async deleteMarker(markerId: number, version?: number): Promise<{ marker: Marker; version: number }> {
    const query = version === undefined ? '' : `?version=${version}`;
    const response = await this.fetchFn(`${this.baseUrl}/markers/${markerId}${query}`, {
      method: 'DELETE',
    });
    await raiseForStatus(response);
    return response.json();
  }

  stroke(
    frame: number,
    seed: number,
    radius: number,
    metric: BrushMetric = 'geodesic',
    mode: BrushMode = 'paint',
    version?: number,
  ): Promise<{ changed: number[]; version: number }> {
    return this.postJson(`/frames/${frame}/strokes`, { seed, radius, metric, mode, version });
  }

  undo(version?: number): Promise<{ undone: UndoDelta | null; version: number }> {
    return this.postJson('/undo', { version });
  }

  redo(version?: number): Promise<{ redone: UndoDelta | null; version: number }> {
    return this.postJson('/redo', { version });
  }

  setOpacity(
    frame: number,
    seed: number,
    radius: number,
    alpha: number,
    metric: BrushMetric = 'geodesic',
    version?: number,
  ): Promise<{ region: number[]; version: number }> {
    return this.postJson(`/frames/${frame}/opacity`, { seed, radius, alpha, metric, version });
  }

  resetOpacity(version?: number): Promise<{ version: number }> {
    return this.postJson('/opacity/reset', { version });
  }

  cursor(): Promise<CursorState> {
    return this.getJson('/cursor');
  }

  moveCursor(update: {
    frame?: number;
    play?: boolean;
    pause?: boolean;
    step?: number;
    rate?: number;
    version?: number;
  }): Promise<CursorState> {
    return this.postJson('/cursor', update);
  }

  save(directory: string, version?: number): Promise<{ manifest: unknown; version: number }> {
    return this.postJson('/save', { directory, version });
  }

  async markersCsv(): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/markers.csv`);
    await raiseForStatus(response);
    return response.text();
  }

  async tracksCsv(channel: 0 | 1, threshold: number): Promise<string> {
    const response = await this.fetchFn(
      `${this.baseUrl}/tracks.csv?channel=${channel}&threshold=${threshold}`,
    );
    await raiseForStatus(response);
    return response.text();
  }
}
