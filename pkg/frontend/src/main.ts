/**
 * Browser entry point: renderer, DOM controls, and the render loop.
 * All annotation logic lives in SessionController; this file only
 * forwards events and draws.
 */

import {
  AmbientLight,
  DirectionalLight,
  DoubleSide,
  Mesh,
  MeshBasicMaterial,
  PerspectiveCamera,
  Scene,
  SphereGeometry,
  Group,
  MeshLambertMaterial,
  Vector3,
  WebGLRenderer,
} from 'three';
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js';

import { ApiClient } from './api';
import { SessionController } from './controller';
import { legendLines } from './keymap';
import { MeshView } from './view';

const canvas = document.getElementById('scene') as HTMLCanvasElement;
const toast = document.getElementById('toast') as HTMLDivElement;
const banner = document.getElementById('banner') as HTMLDivElement;
const legend = document.getElementById('legend') as HTMLDivElement;
const scrubber = document.getElementById('scrubber') as HTMLInputElement;
const status = document.getElementById('status') as HTMLDivElement;

legend.textContent = legendLines().join('\n');

const renderer = new WebGLRenderer({ canvas, antialias: true });
const scene = new Scene();
const camera = new PerspectiveCamera(45, 1, 0.01, 1000);
camera.position.set(5, 5, 18);
const controls = new OrbitControls(camera, canvas);
scene.add(new AmbientLight(0xffffff, 0.7));
const sun = new DirectionalLight(0xffffff, 0.8);
sun.position.set(10, 10, 20);
scene.add(sun);

const view = new MeshView();
const material = new MeshLambertMaterial({
  vertexColors: true,
  transparent: true,
  side: DoubleSide,
});
scene.add(new Mesh(view.geometry, material));

const glyphs = new Group();
scene.add(glyphs);

let toastTimer = 0;
function showToast(message: string): void {
  toast.textContent = message;
  toast.style.opacity = '1';
  window.clearTimeout(toastTimer);
  toastTimer = window.setTimeout(() => {
    toast.style.opacity = '0';
  }, 2500);
}

const controller = new SessionController(new ApiClient(), {
  events: {
    onToast: showToast,
    onBanner: (message) => {
      banner.textContent = message;
      banner.style.display = 'block';
    },
    onMarkers: (markers) => {
      glyphs.clear();
      for (const marker of markers) {
        if (marker.frame !== controller.state.cursor.frame) continue;
        const glyph = new Mesh(
          new SphereGeometry(0.12, 12, 12),
          new MeshBasicMaterial({ color: 0xff00ff }),
        );
        glyph.position.set(...marker.position);
        glyphs.add(glyph);
      }
    },
    onCursor: (cursor) => {
      scrubber.value = String(cursor.frame);
      status.textContent =
        `frame ${cursor.frame + 1}/${controller.project?.frame_count ?? '?'}` +
        `${cursor.playing ? ' playing' : ''}  tool: ${controller.state.tool}` +
        `  brush: ${controller.state.brushRadius.toFixed(2)}`;
    },
    onSaveRequested: () => {
      const directory = window.prompt('save to directory');
      if (directory) void controller.save(directory);
    },
  },
});
controller.attachView(view);

function viewport() {
  return { width: canvas.clientWidth, height: canvas.clientHeight };
}

canvas.addEventListener('pointerdown', (event) => {
  if (event.button !== 0 || event.shiftKey) return; // shift-drag orbits
  controls.enabled = false;
  void controller.clickAt(event.offsetX, event.offsetY, viewport(), camera);
});
canvas.addEventListener('pointermove', (event) => {
  if (!(event.buttons & 1) || event.shiftKey) return;
  void controller.dragTo(event.offsetX, event.offsetY, viewport(), camera);
});
canvas.addEventListener('pointerup', () => {
  controls.enabled = true;
});
canvas.addEventListener('wheel', (event) => {
  if (!event.ctrlKey) return; // plain wheel zooms the camera
  event.preventDefault();
  controller.scrollRadius(event.deltaY);
});
window.addEventListener('keydown', (event) => {
  if (event.target instanceof HTMLInputElement) return;
  void controller.handleKey(event.key);
});
scrubber.addEventListener('input', () => {
  void controller.scrubTo(Number(scrubber.value));
});

// playback: while the shared cursor says playing, step at its rate
let lastStep = performance.now();
function frameLoop(now: number): void {
  const cursor = controller.state.cursor;
  if (cursor.playing && now - lastStep > 1000 / cursor.rate) {
    lastStep = now;
    void controller.step(1);
  }
  const width = canvas.clientWidth;
  const height = canvas.clientHeight;
  if (canvas.width !== width || canvas.height !== height) {
    renderer.setSize(width, height, false);
    camera.aspect = width / height;
    camera.updateProjectionMatrix();
  }
  controls.update();
  renderer.render(scene, camera);
  requestAnimationFrame(frameLoop);
}

async function start(): Promise<void> {
  const project = await controller.open();
  scrubber.max = String(project.frame_count - 1);
  const first = project.frames[0];
  camera.lookAt(new Vector3(first ? 5 : 0, 5, 0));
  await controller.showCurrentFrame();
  status.textContent = `frame 1/${project.frame_count}  tool: marker`;
  requestAnimationFrame(frameLoop);
}

void start().catch((error) => {
  banner.textContent = String(error);
  banner.style.display = 'block';
});
