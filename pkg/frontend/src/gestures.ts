/** Mouse gestures to tool records.
 *
 * Desktop replacements for the handheld motions: the spray apex is the
 * virtual camera, the sponge sweeps an oriented box along the view ray at
 * a fixed reach, and a click picks the cloud point that seeds the
 * primitive gizmo. One drag sample maps to exactly one stroke sample.
 */

import { OrbitCamera, type Viewport } from "./camera.js";
import { fitSupportPlane, type PlaneFitResult, poseOnPlane } from "./plane.js";
import type {
  EraserSize,
  PoseJson,
  SprayDepth,
  SpraySample,
  ToolRecord,
  Vec3Tuple,
} from "./protocol.js";
import { add, dot, norm, quatFromBasis, quatFromColumns, scale, sub, type Vec3 } from "./vec.js";

export interface DragSample {
  x: number;
  y: number;
}

/** Spray erase: one cone per drag sample, apex at the camera. */
export function sprayRecord(
  path: readonly DragSample[],
  camera: OrbitCamera,
  vp: Viewport,
  size: EraserSize,
  depth: SprayDepth,
): ToolRecord {
  if (path.length === 0) throw new Error("spray gesture needs at least one sample");
  const stroke: SpraySample[] = path.map((s) => {
    const ray = camera.unproject(s.x, s.y, vp);
    return { origin: asTuple(ray.origin), dir: asTuple(ray.dir), size, depth };
  });
  return { tool: "erase_spray", stroke };
}

/** Sponge erase: sweep view-oriented boxes along the drag at fixed reach. */
export function spongeRecord(
  path: readonly DragSample[],
  camera: OrbitCamera,
  vp: Viewport,
  reachMeters: number,
  size: EraserSize,
): ToolRecord {
  if (path.length === 0) throw new Error("sponge gesture needs at least one sample");
  if (!(reachMeters > 0)) throw new Error("sponge reach must be positive");
  const quaternion = quatFromBasis(camera.basis());
  const stroke: PoseJson[] = path.map((s) => {
    const ray = camera.unproject(s.x, s.y, vp);
    const center = add(ray.origin, scale(ray.dir, reachMeters));
    return { translation: asTuple(center), quaternion };
  });
  return { tool: "erase_sponge", stroke, size };
}

/** Index of the cloud point nearest along a click ray, or null on a miss.
 *
 * Candidates must lie within maxAngleDeg of the ray; the winner is the
 * candidate closest to the camera, so near surfaces occlude far ones.
 */
export function pickSeedPoint(
  click: DragSample,
  camera: OrbitCamera,
  vp: Viewport,
  positions: Float32Array,
  maxAngleDeg = 1.0,
): number | null {
  const ray = camera.unproject(click.x, click.y, vp);
  const sinLimit = Math.sin((maxAngleDeg * Math.PI) / 180);
  let best = -1;
  let bestT = Infinity;
  const count = positions.length / 3;
  for (let i = 0; i < count; i++) {
    const v: Vec3 = [
      positions[i * 3] - ray.origin[0],
      positions[i * 3 + 1] - ray.origin[1],
      positions[i * 3 + 2] - ray.origin[2],
    ];
    const t = dot(v, ray.dir);
    if (t <= 0 || t >= bestT) continue;
    const len = norm(v);
    if (len === 0) continue;
    const perp = Math.sqrt(Math.max(len * len - t * t, 0));
    if (perp / len > sinLimit) continue;
    best = i;
    bestT = t;
  }
  return best >= 0 ? best : null;
}

/** Fit the support plane around a clicked cloud point.
 *
 * The normal is flipped to face the viewer, matching where the gizmo
 * should grow from; failures surface as reasons for a UI notice.
 */
export function fitPlaneAtSeed(
  positions: Float32Array,
  seedIndex: number,
  camera: OrbitCamera,
  radius = 0.15,
): PlaneFitResult {
  const seed: Vec3 = [
    positions[seedIndex * 3],
    positions[seedIndex * 3 + 1],
    positions[seedIndex * 3 + 2],
  ];
  return fitSupportPlane(positions, seed, radius, camera.position());
}

/** Confirmed gizmo to a create_primitive record. */
export function primitiveRecord(
  planePoint: Vec3,
  planeNormal: Vec3,
  dimensions: Vec3Tuple,
  color?: [number, number, number],
): ToolRecord {
  const pose = poseOnPlane(planePoint, planeNormal, dimensions[2]);
  const record: Extract<ToolRecord, { tool: "create_primitive" }> = {
    tool: "create_primitive",
    pose: {
      translation: asTuple(pose.translation),
      quaternion: quatFromColumns(pose.x, pose.y, pose.z),
    },
    dimensions,
  };
  if (color) record.color = color;
  return record;
}

function asTuple(v: Vec3): Vec3Tuple {
  return [v[0], v[1], v[2]];
}
