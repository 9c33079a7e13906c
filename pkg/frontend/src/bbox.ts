/** Oriented editing box and the quaternion math the gizmo needs. */

export type Vec3 = [number, number, number];
export type QuatWXYZ = [number, number, number, number];

export interface BBox {
  center: Vec3;
  half_extents: Vec3;
  rotation_wxyz: QuatWXYZ;
}

export const MIN_HALF_EXTENT = 1e-6;

export function quatNormalize(q: QuatWXYZ): QuatWXYZ {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (!(n > 0)) throw new Error('degenerate quaternion');
  // keep already-unit quaternions bit-exact so exports round-trip losslessly
  if (Math.abs(n - 1) <= 1e-9) return [...q];
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

/** Hamilton product a * b, both (w, x, y, z). */
export function quatMultiply(a: QuatWXYZ, b: QuatWXYZ): QuatWXYZ {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatFromAxisAngle(axis: Vec3, angleRad: number): QuatWXYZ {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  if (!(n > 0)) throw new Error('zero rotation axis');
  const s = Math.sin(angleRad / 2) / n;
  return [Math.cos(angleRad / 2), axis[0] * s, axis[1] * s, axis[2] * s];
}

/** Column-major-free 3x3 rotation from a (w, x, y, z) quaternion. */
export function quatToMatrix(q: QuatWXYZ): number[][] {
  const [w, x, y, z] = quatNormalize(q);
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
    [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
    [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
  ];
}

/** True iff p falls inside the box (inclusive faces). */
export function pointInBBox(box: BBox, p: Vec3): boolean {
  const r = quatToMatrix(box.rotation_wxyz);
  const d = [p[0] - box.center[0], p[1] - box.center[1], p[2] - box.center[2]];
  for (let axis = 0; axis < 3; axis++) {
    // local coordinate = column `axis` of R dotted with d
    const local = r[0][axis] * d[0] + r[1][axis] * d[1] + r[2][axis] * d[2];
    if (Math.abs(local) > box.half_extents[axis]) return false;
  }
  return true;
}

export function cloneBBox(box: BBox): BBox {
  return {
    center: [...box.center],
    half_extents: [...box.half_extents],
    rotation_wxyz: [...box.rotation_wxyz],
  };
}
