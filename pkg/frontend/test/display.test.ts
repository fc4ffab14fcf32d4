/**
 * Display fidelity against a live service: the rgba bytes each render
 * mode produces are applied to the mesh view and classified per vertex.
 * TwoTone must paint the labelled region in the label colour on the
 * block-out base; CutOut must keep original colours on the region and
 * block out the rest; opacity overrides must show up as translucency.
 */

import { PerspectiveCamera } from 'three';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, DisplayQuery } from '../src/api';
import { pointerToRay, Viewport, worldToScreen } from '../src/picking';
import { MeshView } from '../src/view';
import { makeProjectDir, ServerHandle, startServer } from './server';

const PORT = 8212;
const SIDE = 7;
const VERTICES = SIDE * SIDE;
const FULL_WINDOWS = { lo0: 0, hi0: 255, lo1: 0, hi1: 255 };

const viewport: Viewport = { width: 800, height: 600 };
const camera = new PerspectiveCamera(45, viewport.width / viewport.height, 0.1, 100);
camera.position.set(3, 3, 14);
camera.lookAt(3, 3, 0);
camera.updateMatrixWorld(true);

// channel ramps of the fixture project, frame 0
const ch0 = (v: number) => (v * 5) % 256;
const ch1 = (v: number) => ((VERTICES - 1 - v) * 3) % 256;

let server: ServerHandle;
let api: ApiClient;
let version: number;
let labelled: Set<number>;

beforeAll(async () => {
  server = await startServer(makeProjectDir(), PORT);
  api = new ApiClient(server.baseUrl);
  const project = await api.project();
  const stroke = await api.stroke(0, 24, 1.5, 'geodesic', 'paint', project.version);
  version = stroke.version;
  labelled = new Set(stroke.changed);
  expect(labelled.size).toBeGreaterThan(0);
});

afterAll(async () => {
  await server?.stop();
});

async function frameView(query: DisplayQuery): Promise<MeshView> {
  const view = new MeshView();
  view.setGeometry(await api.geometry(0));
  view.applyDisplay(await api.display(0, query, VERTICES));
  return view;
}

/**
 * One character per vertex, laid out as the grid:
 * Y label colour, # block-out, c channel colours, t translucent.
 */
function classMap(view: MeshView): string {
  const rows: string[] = [];
  for (let i = 0; i < SIDE; i++) {
    let row = '';
    for (let j = 0; j < SIDE; j++) {
      const [r, g, b, a] = view.colourAt(i * SIDE + j);
      if (r === 255 && g === 255 && b === 0) row += 'Y';
      else if (r === 40 && g === 40 && b === 40) row += '#';
      else row += a < 255 ? 't' : 'c';
    }
    rows.push(row);
  }
  return rows.join('\n');
}

describe('render modes over the wire', () => {
  it('twotone paints exactly the painted region yellow on a blocked-out base', async () => {
    const view = await frameView({ mode: 'twotone', ...FULL_WINDOWS });
    for (let v = 0; v < VERTICES; v++) {
      expect(view.colourAt(v), `vertex ${v}`).toEqual(
        labelled.has(v) ? [255, 255, 0, 255] : [40, 40, 40, 255],
      );
    }
    expect(classMap(view)).toMatchSnapshot('twotone-classes');
  });

  it('cutout keeps original colours on the region and blocks out the rest', async () => {
    const view = await frameView({ mode: 'cutout', ...FULL_WINDOWS });
    for (let v = 0; v < VERTICES; v++) {
      expect(view.colourAt(v), `vertex ${v}`).toEqual(
        labelled.has(v) ? [ch0(v), ch1(v), 0, 255] : [40, 40, 40, 255],
      );
    }
    expect(classMap(view)).toMatchSnapshot('cutout-classes');
  });

  it('original mode shows thresholded channels untouched by labels', async () => {
    const view = await frameView({ mode: 'original', ...FULL_WINDOWS });
    for (let v = 0; v < VERTICES; v++) {
      expect(view.colourAt(v), `vertex ${v}`).toEqual([ch0(v), ch1(v), 0, 255]);
    }
  });

  it('an alpha 0.2 region reads back visibly translucent', async () => {
    const result = await api.setOpacity(0, 40, 1.0, 0.2, 'geodesic', version);
    version = result.version;
    const region = new Set(result.region);
    expect(region.size).toBeGreaterThan(0);
    const view = await frameView({ mode: 'original', ...FULL_WINDOWS });
    for (let v = 0; v < VERTICES; v++) {
      const alpha = view.colourAt(v)[3];
      expect(alpha, `vertex ${v}`).toBe(region.has(v) ? 51 : 255); // 0.2 * 255 rounded
    }
    expect(classMap(view)).toMatchSnapshot('opacity-classes');
  });

  it('a pointer ray lands on the triangle under the cursor', async () => {
    // centroid of the first grid triangle, vertices 0, 7, 1
    const screen = worldToScreen([1 / 3, 1 / 3, 0], viewport, camera);
    const ray = pointerToRay(screen.x, screen.y, viewport, camera);
    const picked = await api.pick(0, ray);
    expect(picked.hit).not.toBeNull();
    expect(picked.hit!.triangle_index).toBe(0);
    expect(picked.hit!.nearest_vertex).toBe(0);
  });
});
