/** Orbit camera: a virtual pinhole that circles a target point.
 *
 * Camera frame follows the capture convention: x right, y down, z forward,
 * so a pixel unprojects through [(px - cx) / f, (py - cy) / f, 1].
 */

import {
  add,
  type Basis,
  cross,
  normalize,
  rotate,
  scale,
  sub,
  type Vec3,
  WORLD_UP,
} from "./vec.js";

// straight-up viewing makes the world-up cross product degenerate
const MAX_ELEVATION_DEG = 89;
const MIN_DISTANCE = 1e-3;

export interface Viewport {
  width: number;
  height: number;
  fovYDeg: number;
}

export interface Ray {
  origin: Vec3;
  dir: Vec3;
}

export function focalLength(vp: Viewport): number {
  return vp.height / 2 / Math.tan((vp.fovYDeg * Math.PI) / 360);
}

export class OrbitCamera {
  target: Vec3;
  private distance_: number;
  private azimuthDeg_: number;
  private elevationDeg_: number;

  constructor(target: Vec3 = [0, 0, 0], distance = 1, azimuthDeg = 0, elevationDeg = 0) {
    this.target = [...target];
    this.distance_ = Math.max(distance, MIN_DISTANCE);
    this.azimuthDeg_ = azimuthDeg;
    this.elevationDeg_ = clampElevation(elevationDeg);
  }

  get distance(): number {
    return this.distance_;
  }

  get azimuthDeg(): number {
    return this.azimuthDeg_;
  }

  get elevationDeg(): number {
    return this.elevationDeg_;
  }

  position(): Vec3 {
    const az = (this.azimuthDeg_ * Math.PI) / 180;
    const el = (this.elevationDeg_ * Math.PI) / 180;
    const offset: Vec3 = [
      Math.cos(el) * Math.cos(az),
      Math.cos(el) * Math.sin(az),
      Math.sin(el),
    ];
    return add(this.target, scale(offset, this.distance_));
  }

  /** Camera axes in world space; right-handed with right x down = forward. */
  basis(): Basis {
    const forward = normalize(sub(this.target, this.position()));
    const right = normalize(cross(forward, WORLD_UP));
    const down = cross(forward, right);
    return { right, down, forward };
  }

  orbit(dAzimuthDeg: number, dElevationDeg: number): void {
    this.azimuthDeg_ += dAzimuthDeg;
    this.elevationDeg_ = clampElevation(this.elevationDeg_ + dElevationDeg);
  }

  zoom(factor: number): void {
    if (!(factor > 0)) throw new Error("zoom factor must be positive");
    this.distance_ = Math.max(this.distance_ * factor, MIN_DISTANCE);
  }

  /** Slide the target along the view plane; dx/dy are in pixels. */
  pan(dxPx: number, dyPx: number, vp: Viewport): void {
    const perPixel = this.distance_ / focalLength(vp);
    const { right, down } = this.basis();
    this.target = add(this.target, add(scale(right, dxPx * perPixel), scale(down, dyPx * perPixel)));
  }

  /** World-space ray through a screen pixel. */
  unproject(px: number, py: number, vp: Viewport): Ray {
    const f = focalLength(vp);
    const camDir: Vec3 = [(px - vp.width / 2) / f, (py - vp.height / 2) / f, 1];
    return { origin: this.position(), dir: normalize(rotate(this.basis(), camDir)) };
  }

  /** Inverse of unproject; null when the point is behind the camera. */
  project(world: Vec3, vp: Viewport): { x: number; y: number; depth: number } | null {
    const { right, down, forward } = this.basis();
    const rel = sub(world, this.position());
    const depth = rel[0] * forward[0] + rel[1] * forward[1] + rel[2] * forward[2];
    if (depth <= 0) return null;
    const camX = rel[0] * right[0] + rel[1] * right[1] + rel[2] * right[2];
    const camY = rel[0] * down[0] + rel[1] * down[1] + rel[2] * down[2];
    const f = focalLength(vp);
    return { x: (camX / depth) * f + vp.width / 2, y: (camY / depth) * f + vp.height / 2, depth };
  }
}

function clampElevation(deg: number): number {
  return Math.min(Math.max(deg, -MAX_ELEVATION_DEG), MAX_ELEVATION_DEG);
}
