import { describe, expect, it } from 'vitest';

import { MIN_HALF_EXTENT, pointInBBox, quatMultiply, quatNormalize } from '../src/bbox.js';
import {
  PointCloud, applyGizmo, defaultBBox, exportBBox, initialState, setBBox,
} from '../src/state.js';

const cloud: PointCloud = {
  points: [[0, 0, 0], [2, 0, 0], [0, 2, 0], [2, 2, 4]],
  colors: [[0.5, 0.5, 0.5], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
};

describe('default box', () => {
  it('is a unit cube at the cloud centroid', () => {
    const box = defaultBBox(cloud);
    expect(box.center).toEqual([1, 1, 1]);
    expect(box.half_extents).toEqual([0.5, 0.5, 0.5]);
    expect(box.rotation_wxyz).toEqual([1, 0, 0, 0]);
  });

  it('empty cloud still yields a placeable box', () => {
    const box = defaultBBox({ points: [], colors: [] });
    expect(box.center).toEqual([0, 0, 0]);
    expect(box.half_extents).toEqual([0.5, 0.5, 0.5]);
  });
});

describe('gizmo actions', () => {
  it('identity drag leaves the box unchanged', () => {
    const s0 = initialState(cloud);
    const s1 = applyGizmo(s0, { kind: 'translate', delta: [0, 0, 0] });
    const s2 = applyGizmo(s1, { kind: 'rotate', axis: [0, 0, 1], angleRad: 0 });
    const s3 = applyGizmo(s2, { kind: 'scale', factors: [1, 1, 1] });
    expect(exportBBox(s3)).toEqual(exportBBox(s0));
  });

  it('90-degree yaw about the vertical axis gives (sqrt2/2, 0, 0, sqrt2/2)', () => {
    const s = applyGizmo(initialState(cloud),
      { kind: 'rotate', axis: [0, 0, 1], angleRad: Math.PI / 2 });
    const q = s.bbox.rotation_wxyz;
    const h = Math.SQRT1_2;
    expect(q[0]).toBeCloseTo(h, 12);
    expect(q[1]).toBeCloseTo(0, 12);
    expect(q[2]).toBeCloseTo(0, 12);
    expect(q[3]).toBeCloseTo(h, 12);
  });

  it('scaling to zero is blocked at the epsilon floor', () => {
    const s = applyGizmo(initialState(cloud), { kind: 'scale', factors: [0, 0.5, 1] });
    expect(s.bbox.half_extents[0]).toBe(MIN_HALF_EXTENT);
    expect(s.bbox.half_extents[1]).toBeCloseTo(0.25, 12);
    expect(s.bbox.half_extents[2]).toBeCloseTo(0.5, 12);
  });

  it('consecutive translates compose to the summed delta', () => {
    const s0 = initialState(cloud);
    const a = applyGizmo(applyGizmo(s0, { kind: 'translate', delta: [0.25, -1, 2] }),
      { kind: 'translate', delta: [0.75, 1, -1] });
    const b = applyGizmo(s0, { kind: 'translate', delta: [1, 0, 1] });
    expect(a.bbox.center).toEqual(b.bbox.center);
  });

  it('rotations keep the quaternion unit', () => {
    let s = initialState(cloud);
    for (let i = 0; i < 50; i++) {
      s = applyGizmo(s, { kind: 'rotate', axis: [1, 2, 3], angleRad: 0.37 });
    }
    const q = s.bbox.rotation_wxyz;
    expect(Math.hypot(...q)).toBeCloseTo(1, 9);
  });

  it('does not mutate the previous state', () => {
    const s0 = initialState(cloud);
    const before = JSON.stringify(s0.bbox);
    applyGizmo(s0, { kind: 'translate', delta: [9, 9, 9] });
    expect(JSON.stringify(s0.bbox)).toBe(before);
  });
});

describe('setBBox', () => {
  it('rejects non-positive extents', () => {
    expect(() => setBBox(initialState(cloud), {
      center: [0, 0, 0], half_extents: [0, 1, 1], rotation_wxyz: [1, 0, 0, 0],
    })).toThrow(/positive/);
  });

  it('keeps an already-unit quaternion bit-exact', () => {
    const q: [number, number, number, number] =
      [0.5, 0.5, 0.5, 0.5]; // exactly unit in float64
    const s = setBBox(initialState(cloud),
      { center: [1, 2, 3], half_extents: [1, 1, 1], rotation_wxyz: q });
    expect(s.bbox.rotation_wxyz).toEqual(q);
  });
});

describe('pointInBBox', () => {
  it('matches simple axis-aligned membership', () => {
    const box = {
      center: [0, 0, 0] as [number, number, number],
      half_extents: [1, 2, 3] as [number, number, number],
      rotation_wxyz: [1, 0, 0, 0] as [number, number, number, number],
    };
    expect(pointInBBox(box, [0.9, -1.9, 2.9])).toBe(true);
    expect(pointInBBox(box, [1.1, 0, 0])).toBe(false);
  });

  it('respects rotation', () => {
    const q = quatNormalize(quatMultiply([Math.SQRT1_2, 0, 0, Math.SQRT1_2], [1, 0, 0, 0]));
    const box = {
      center: [0, 0, 0] as [number, number, number],
      half_extents: [2, 0.1, 0.1] as [number, number, number],
      rotation_wxyz: q,
    };
    // the long local-x axis now points along world y
    expect(pointInBBox(box, [0, 1.5, 0])).toBe(true);
    expect(pointInBBox(box, [1.5, 0, 0])).toBe(false);
  });
});
