/** Client-side axis-aligned plane fit used to seed the primitive gizmo.
 *
 * This is a display aid only: the committed prism always goes through the
 * service's create_primitive tool, so a local fit never mutates the cloud.
 */

import { add, cross, dot, norm, normalize, scale, sub, type Vec3 } from "./vec.js";

export const PLANE_RANSAC_ITERATIONS = 200;
export const PLANE_INLIER_THRESHOLD = 0.01; // meters
export const PLANE_MIN_INLIER_RATIO = 0.5;
export const PLANE_AXIS_TOLERANCE_DEG = 15;

export type PlaneFitFailure = "too_few_points" | "no_plane" | "not_axis_aligned";

export type PlaneFitResult =
  | { ok: true; point: Vec3; normal: Vec3; inlierCount: number }
  | { ok: false; reason: PlaneFitFailure };

/** Deterministic 32-bit PRNG in [0, 1); good enough for RANSAC sampling. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function pointAt(positions: Float32Array, index: number): Vec3 {
  return [positions[index * 3], positions[index * 3 + 1], positions[index * 3 + 2]];
}

/** Fit a plane to the cloud near seedPoint and snap-check its orientation.
 *
 * RANSAC over the ball neighborhood, then a least-squares normal from the
 * winning inliers. The normal sign is canonicalized (largest component
 * positive) and flipped to face querySide when that point is off-plane.
 */
export function fitSupportPlane(
  positions: Float32Array,
  seedPoint: Vec3,
  radius: number,
  querySide?: Vec3,
  seed = 0,
): PlaneFitResult {
  const count = positions.length / 3;
  const near: number[] = [];
  for (let i = 0; i < count; i++) {
    if (distanceTo(positions, i, seedPoint) <= radius) near.push(i);
  }
  if (near.length < 3) return { ok: false, reason: "too_few_points" };

  const rand = mulberry32(seed);
  const pick = () => near[Math.floor(rand() * near.length)];
  let bestCount = 0;
  let bestInliers: number[] = [];
  for (let iter = 0; iter < PLANE_RANSAC_ITERATIONS; iter++) {
    const i = pick();
    let j = pick();
    let k = pick();
    if (i === j || i === k || j === k) continue;
    const a = pointAt(positions, i);
    const n = cross(sub(pointAt(positions, j), a), sub(pointAt(positions, k), a));
    const nn = norm(n);
    if (nn < 1e-12) continue;
    const unit = scale(n, 1 / nn);
    const inliers: number[] = [];
    for (const idx of near) {
      const d = Math.abs(dot(sub(pointAt(positions, idx), a), unit));
      if (d <= PLANE_INLIER_THRESHOLD) inliers.push(idx);
    }
    if (inliers.length > bestCount) {
      bestCount = inliers.length;
      bestInliers = inliers;
    }
  }
  if (bestCount / near.length < PLANE_MIN_INLIER_RATIO) {
    return { ok: false, reason: "no_plane" };
  }

  const centroid: Vec3 = [0, 0, 0];
  for (const idx of bestInliers) {
    centroid[0] += positions[idx * 3];
    centroid[1] += positions[idx * 3 + 1];
    centroid[2] += positions[idx * 3 + 2];
  }
  centroid[0] /= bestCount;
  centroid[1] /= bestCount;
  centroid[2] /= bestCount;

  let normal = smallestCovarianceDirection(positions, bestInliers, centroid);
  // canonical sign, then face the query side when it is off the plane
  const lead = maxAbsIndex(normal);
  if (normal[lead] < 0) normal = scale(normal, -1);
  if (querySide) {
    const side = dot(sub(querySide, centroid), normal);
    if (side < -1e-9) normal = scale(normal, -1);
  }

  const tilt = Math.abs(normal[2]);
  const toleranceRad = (PLANE_AXIS_TOLERANCE_DEG * Math.PI) / 180;
  const verticalOk = tilt >= Math.cos(toleranceRad);
  const horizontalOk = tilt <= Math.sin(toleranceRad);
  if (!verticalOk && !horizontalOk) return { ok: false, reason: "not_axis_aligned" };
  return { ok: true, point: centroid, normal, inlierCount: bestCount };
}

/** Snap a near-axis normal to the exact signed axis it leans toward. */
export function snapToAxis(normal: Vec3): Vec3 {
  const lead = maxAbsIndex(normal);
  const snapped: Vec3 = [0, 0, 0];
  snapped[lead] = Math.sign(normal[lead]) || 1;
  return snapped;
}

function distanceTo(positions: Float32Array, index: number, p: Vec3): number {
  return Math.hypot(
    positions[index * 3] - p[0],
    positions[index * 3 + 1] - p[1],
    positions[index * 3 + 2] - p[2],
  );
}

function maxAbsIndex(v: Vec3): number {
  const a = Math.abs(v[0]);
  const b = Math.abs(v[1]);
  const c = Math.abs(v[2]);
  return a >= b && a >= c ? 0 : b >= c ? 1 : 2;
}

/** Least-squares plane normal: eigenvector of the covariance's smallest
 * eigenvalue, found by power iteration on trace(C) * I - C. */
function smallestCovarianceDirection(
  positions: Float32Array,
  indices: number[],
  centroid: Vec3,
): Vec3 {
  let cxx = 0, cxy = 0, cxz = 0, cyy = 0, cyz = 0, czz = 0;
  for (const idx of indices) {
    const dx = positions[idx * 3] - centroid[0];
    const dy = positions[idx * 3 + 1] - centroid[1];
    const dz = positions[idx * 3 + 2] - centroid[2];
    cxx += dx * dx;
    cxy += dx * dy;
    cxz += dx * dz;
    cyy += dy * dy;
    cyz += dy * dz;
    czz += dz * dz;
  }
  const trace = cxx + cyy + czz;
  // rows of M = trace * I - C
  const m: Vec3[] = [
    [trace - cxx, -cxy, -cxz],
    [-cxy, trace - cyy, -cyz],
    [-cxz, -cyz, trace - czz],
  ];
  let v: Vec3 = [1, 0.598, 0.284]; // arbitrary non-axis start direction
  for (let i = 0; i < 64; i++) {
    const next: Vec3 = [dot(m[0], v), dot(m[1], v), dot(m[2], v)];
    const n = norm(next);
    if (n === 0) break;
    v = scale(next, 1 / n);
  }
  return normalize(v);
}

/** Prism pose resting on an axis-aligned plane: z axis along the normal. */
export interface GizmoPose {
  x: Vec3;
  y: Vec3;
  z: Vec3;
  translation: Vec3;
}

export function poseOnPlane(point: Vec3, normal: Vec3, height: number): GizmoPose {
  const zc = snapToAxis(normal);
  const lead = maxAbsIndex(zc);
  const xc: Vec3 = [0, 0, 0];
  xc[(lead + 1) % 3] = 1;
  const yc = cross(zc, xc);
  return { x: xc, y: yc, z: zc, translation: add(point, scale(zc, height / 2)) };
}
