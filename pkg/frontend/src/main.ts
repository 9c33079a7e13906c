/** DOM bootstrap: file load/save buttons around the viewer and state. */

import { BBox } from './bbox.js';
import { assertValid } from './schema.js';
import {
  GizmoMode, PointCloud, ViewerState, exportBBoxJson, initialState, setBBox,
  setMode,
} from './state.js';
import { createViewer } from './viewer.js';

const canvas = document.getElementById('viewport') as HTMLCanvasElement;
const statusEl = document.getElementById('status') as HTMLElement;
const viewer = createViewer(canvas);

// canonical schema files live in the pipeline repo's docs/schemas; serve
// the repository root so they resolve (see frontend/README.md)
const SCHEMA_BASE = new URL('../../docs/schemas/', import.meta.url);
let bboxSchema: Record<string, unknown> = {};
let cloudSchema: Record<string, unknown> = {};

async function loadSchemas(): Promise<void> {
  bboxSchema = await (await fetch(new URL('bbox.schema.json', SCHEMA_BASE))).json();
  cloudSchema = await (await fetch(new URL('pointcloud.schema.json', SCHEMA_BASE))).json();
}

let state: ViewerState = initialState({ points: [], colors: [] });
viewer.syncFromState(state);

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.className = isError ? 'error' : '';
}

export function loadPointCloudJson(text: string): void {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (e) {
    setStatus(`not valid JSON: ${e}`, true);
    return;
  }
  try {
    assertValid(data, cloudSchema, 'point cloud');
  } catch (e) {
    setStatus(String(e), true);
    return;
  }
  const cloud = data as PointCloud;
  state = initialState(cloud);
  viewer.setCloud(cloud);
  viewer.syncFromState(state);
  setStatus(`loaded ${cloud.points.length} points; box placed at the centroid`);
}

export function loadBBoxJson(text: string): void {
  try {
    const data = JSON.parse(text);
    assertValid(data, bboxSchema, 'bbox');
    state = setBBox(state, data as BBox);
    viewer.syncFromState(state);
    setStatus('bbox loaded');
  } catch (e) {
    setStatus(String(e), true);
  }
}

function download(name: string, text: string): void {
  const blob = new Blob([text], { type: 'application/json' });
  const a = document.createElement('a');
  a.href = URL.createObjectURL(blob);
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

document.getElementById('cloud-file')!.addEventListener('change', async (ev) => {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (file) loadPointCloudJson(await file.text());
});

document.getElementById('bbox-file')!.addEventListener('change', async (ev) => {
  const input = ev.target as HTMLInputElement;
  const file = input.files?.[0];
  if (file) loadBBoxJson(await file.text());
});

document.getElementById('export')!.addEventListener('click', () => {
  state = setBBox(state, viewer.readBBox(state.bbox));
  const json = exportBBoxJson(state);
  assertValid(JSON.parse(json), bboxSchema, 'export');
  download('bbox.json', json);
  setStatus('bbox.json exported');
});

for (const mode of ['translate', 'rotate', 'scale'] as GizmoMode[]) {
  document.getElementById(`mode-${mode}`)!.addEventListener('click', () => {
    state = setMode(state, mode);
    viewer.syncFromState(state);
    setStatus(`gizmo: ${mode}`);
  });
}

function frame(): void {
  viewer.render();
  requestAnimationFrame(frame);
}

loadSchemas()
  .then(() => setStatus('load a point cloud JSON to begin'))
  .catch((e) => setStatus(`could not load schemas: ${e}`, true));
frame();
