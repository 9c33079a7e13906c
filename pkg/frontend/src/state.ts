/** Pure viewer state and gizmo transitions; rendering lives in viewer.ts. */

import {
  BBox, MIN_HALF_EXTENT, QuatWXYZ, Vec3, cloneBBox, quatFromAxisAngle,
  quatMultiply, quatNormalize,
} from './bbox.js';

export interface PointCloud {
  points: Vec3[];
  colors: Vec3[];
}

export type GizmoMode = 'translate' | 'rotate' | 'scale';

export interface ViewerState {
  cloud: PointCloud;
  bbox: BBox;
  mode: GizmoMode;
}

export type GizmoAction =
  | { kind: 'translate'; delta: Vec3 }
  | { kind: 'rotate'; axis: Vec3; angleRad: number }
  | { kind: 'scale'; factors: Vec3 };

export function cloudCentroid(cloud: PointCloud): Vec3 {
  if (cloud.points.length === 0) return [0, 0, 0];
  const c: Vec3 = [0, 0, 0];
  for (const p of cloud.points) {
    c[0] += p[0];
    c[1] += p[1];
    c[2] += p[2];
  }
  const n = cloud.points.length;
  return [c[0] / n, c[1] / n, c[2] / n];
}

/** Default editing region: a unit cube sitting at the cloud centroid. */
export function defaultBBox(cloud: PointCloud): BBox {
  return {
    center: cloudCentroid(cloud),
    half_extents: [0.5, 0.5, 0.5],
    rotation_wxyz: [1, 0, 0, 0],
  };
}

export function initialState(cloud: PointCloud): ViewerState {
  return { cloud, bbox: defaultBBox(cloud), mode: 'translate' };
}

export function applyGizmo(state: ViewerState, action: GizmoAction): ViewerState {
  const bbox = cloneBBox(state.bbox);
  switch (action.kind) {
    case 'translate':
      bbox.center = [
        bbox.center[0] + action.delta[0],
        bbox.center[1] + action.delta[1],
        bbox.center[2] + action.delta[2],
      ];
      break;
    case 'rotate': {
      const dq = quatFromAxisAngle(action.axis, action.angleRad);
      bbox.rotation_wxyz = quatNormalize(quatMultiply(dq, bbox.rotation_wxyz));
      break;
    }
    case 'scale':
      bbox.half_extents = bbox.half_extents.map((h, i) =>
        Math.max(h * action.factors[i], MIN_HALF_EXTENT)) as Vec3;
      break;
  }
  return { ...state, bbox };
}

export function setMode(state: ViewerState, mode: GizmoMode): ViewerState {
  return { ...state, mode };
}

export function setBBox(state: ViewerState, bbox: BBox): ViewerState {
  const q = quatNormalize(bbox.rotation_wxyz as QuatWXYZ);
  if (bbox.half_extents.some((h) => !(h > 0))) {
    throw new Error('half_extents must be strictly positive');
  }
  return { ...state, bbox: { ...cloneBBox(bbox), rotation_wxyz: q } };
}

export function exportBBox(state: ViewerState): BBox {
  return cloneBBox(state.bbox);
}

export function exportBBoxJson(state: ViewerState): string {
  return JSON.stringify(exportBBox(state), null, 2);
}
