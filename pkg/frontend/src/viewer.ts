/**
 * three.js scene wiring: point-cloud scatter, box outline, orbit and
 * transform controls.  All state transitions go through state.ts; this
 * module only mirrors the current state into the scene graph.
 */

import * as THREE from 'three';
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js';
import { TransformControls } from 'three/examples/jsm/controls/TransformControls.js';

import { BBox } from './bbox.js';
import { GizmoMode, PointCloud, ViewerState } from './state.js';

export interface ViewerHandles {
  renderer: THREE.WebGLRenderer;
  scene: THREE.Scene;
  camera: THREE.PerspectiveCamera;
  orbit: OrbitControls;
  gizmo: TransformControls;
  boxAnchor: THREE.Object3D;
  setCloud(cloud: PointCloud): void;
  syncFromState(state: ViewerState): void;
  readBBox(base: BBox): BBox;
  render(): void;
}

export function createViewer(canvas: HTMLCanvasElement): ViewerHandles {
  const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
  renderer.setPixelRatio(window.devicePixelRatio);
  const scene = new THREE.Scene();
  scene.background = new THREE.Color(0x10141a);
  // world is z-up everywhere in this pipeline
  const camera = new THREE.PerspectiveCamera(55, 1, 0.01, 500);
  camera.up.set(0, 0, 1);
  camera.position.set(4, -6, 3);

  const orbit = new OrbitControls(camera, canvas);
  const gizmo = new TransformControls(camera, canvas);
  gizmo.addEventListener('dragging-changed', (e: any) => {
    orbit.enabled = !e.value;
  });

  const boxAnchor = new THREE.Object3D();
  const outline = new THREE.LineSegments(
    new THREE.EdgesGeometry(new THREE.BoxGeometry(2, 2, 2)),
    new THREE.LineBasicMaterial({ color: 0xffaa33 }),
  );
  boxAnchor.add(outline);
  scene.add(boxAnchor);
  gizmo.attach(boxAnchor);
  scene.add(gizmo as unknown as THREE.Object3D);

  scene.add(new THREE.AxesHelper(1));

  let pointsObject: THREE.Points | null = null;

  function setCloud(cloud: PointCloud): void {
    if (pointsObject) {
      scene.remove(pointsObject);
      pointsObject.geometry.dispose();
      (pointsObject.material as THREE.Material).dispose();
    }
    const n = cloud.points.length;
    const positions = new Float32Array(n * 3);
    const colors = new Float32Array(n * 3);
    for (let i = 0; i < n; i++) {
      positions.set(cloud.points[i], i * 3);
      colors.set(cloud.colors[i], i * 3);
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute('position', new THREE.BufferAttribute(positions, 3));
    geometry.setAttribute('color', new THREE.BufferAttribute(colors, 3));
    const material = new THREE.PointsMaterial({ size: 0.03, vertexColors: true });
    pointsObject = new THREE.Points(geometry, material);
    scene.add(pointsObject);
  }

  function syncFromState(state: ViewerState): void {
    const b = state.bbox;
    boxAnchor.position.set(...b.center);
    const [w, x, y, z] = b.rotation_wxyz;
    boxAnchor.quaternion.set(x, y, z, w);
    boxAnchor.scale.set(...b.half_extents);
    gizmo.setMode(state.mode as GizmoMode);
  }

  /** Current anchor transform as a BBox (after interactive dragging). */
  function readBBox(base: BBox): BBox {
    const q = boxAnchor.quaternion;
    return {
      center: [boxAnchor.position.x, boxAnchor.position.y, boxAnchor.position.z],
      half_extents: [
        Math.max(Math.abs(boxAnchor.scale.x), 1e-6),
        Math.max(Math.abs(boxAnchor.scale.y), 1e-6),
        Math.max(Math.abs(boxAnchor.scale.z), 1e-6),
      ],
      rotation_wxyz: [q.w, q.x, q.y, q.z],
    };
  }

  function render(): void {
    const width = canvas.clientWidth || canvas.width;
    const height = canvas.clientHeight || canvas.height;
    renderer.setSize(width, height, false);
    camera.aspect = width / height;
    camera.updateProjectionMatrix();
    renderer.render(scene, camera);
  }

  return {
    renderer, scene, camera, orbit, gizmo, boxAnchor,
    setCloud, syncFromState, readBBox, render,
  };
}
