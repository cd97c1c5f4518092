/** Small 3-vector and rotation helpers shared by camera and gesture math. */

export type Vec3 = [number, number, number];

/** Rotation quaternion in [w, x, y, z] order, matching the wire format. */
export type Quat = [number, number, number, number];

export const WORLD_UP: Vec3 = [0, 0, 1];

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  if (!Number.isFinite(n) || n === 0) {
    throw new Error("cannot normalize a zero vector");
  }
  return [a[0] / n, a[1] / n, a[2] / n];
}

export function distance(a: Vec3, b: Vec3): number {
  return norm(sub(a, b));
}

/** Camera axes expressed in world coordinates; columns of the rotation. */
export interface Basis {
  right: Vec3;
  down: Vec3;
  forward: Vec3;
}

/** Apply the basis as a rotation: camera-frame v to world frame. */
export function rotate(b: Basis, v: Vec3): Vec3 {
  return add(add(scale(b.right, v[0]), scale(b.down, v[1])), scale(b.forward, v[2]));
}

/** Rotate v by a unit quaternion (w, x, y, z). */
export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const u: Vec3 = [x, y, z];
  const uv = cross(u, v);
  const uuv = cross(u, uv);
  return add(v, add(scale(uv, 2 * w), scale(uuv, 2)));
}

/** Convert an orthonormal basis to the equivalent unit quaternion. */
export function quatFromBasis(b: Basis): Quat {
  return quatFromColumns(b.right, b.down, b.forward);
}

/** Quaternion for the rotation whose matrix has these columns. */
export function quatFromColumns(c0: Vec3, c1: Vec3, c2: Vec3): Quat {
  const m00 = c0[0], m01 = c1[0], m02 = c2[0];
  const m10 = c0[1], m11 = c1[1], m12 = c2[1];
  const m20 = c0[2], m21 = c1[2], m22 = c2[2];
  const trace = m00 + m11 + m22;
  let w: number, x: number, y: number, z: number;
  if (trace > 0) {
    const s = Math.sqrt(trace + 1) * 2;
    w = s / 4;
    x = (m21 - m12) / s;
    y = (m02 - m20) / s;
    z = (m10 - m01) / s;
  } else if (m00 > m11 && m00 > m22) {
    const s = Math.sqrt(1 + m00 - m11 - m22) * 2;
    w = (m21 - m12) / s;
    x = s / 4;
    y = (m01 + m10) / s;
    z = (m02 + m20) / s;
  } else if (m11 > m22) {
    const s = Math.sqrt(1 + m11 - m00 - m22) * 2;
    w = (m02 - m20) / s;
    x = (m01 + m10) / s;
    y = s / 4;
    z = (m12 + m21) / s;
  } else {
    const s = Math.sqrt(1 + m22 - m00 - m11) * 2;
    w = (m10 - m01) / s;
    x = (m02 + m20) / s;
    y = (m12 + m21) / s;
    z = s / 4;
  }
  const n = Math.hypot(w, x, y, z);
  return [w / n, x / n, y / n, z / n];
}
