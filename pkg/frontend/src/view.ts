/** Render-side state: committed snapshot, preview overlay, tool palette.
 *
 * The view never edits the cloud; every change round-trips through the
 * service, and the overlay mirrors the service's pending diff exactly.
 * Display subsampling only affects what is drawn, never what is edited.
 */

import { OrbitCamera } from "./camera.js";
import {
  type DiffPoint,
  emptyBatch,
  type EraserSize,
  type PointBatch,
  type PreviewDiff,
  type SprayDepth,
  type Strength,
  type ToolName,
} from "./protocol.js";

export const DISPLAY_POINT_CAP = 2_000_000;

export interface Overlay {
  added: DiffPoint[]; // tinted in the render pass
  removedIds: Set<number>; // ghosted in the render pass
}

export class ViewState {
  camera: OrbitCamera;
  activeTool: ToolName = "erase_spray";
  strength: Strength = "medium";
  eraserSize: EraserSize = "medium";
  sprayDepth: SprayDepth = "medium";

  private snapshot: PointBatch = emptyBatch();
  private overlayState: Overlay | null = null;

  constructor(camera = new OrbitCamera()) {
    this.camera = camera;
  }

  get snapshotCount(): number {
    return this.snapshot.ids.length;
  }

  get overlay(): Overlay | null {
    return this.overlayState;
  }

  selectTool(tool: ToolName): void {
    this.activeTool = tool;
  }

  setSnapshot(batch: PointBatch): void {
    this.snapshot = batch;
  }

  snapshotPositions(): Float32Array {
    return this.snapshot.positions;
  }

  setOverlay(diff: PreviewDiff): void {
    this.overlayState = { added: diff.added, removedIds: new Set(diff.removed) };
  }

  clearOverlay(): void {
    this.overlayState = null;
  }

  overlayCounts(): { added: number; removed: number } | null {
    if (this.overlayState === null) return null;
    return { added: this.overlayState.added.length, removed: this.overlayState.removedIds.size };
  }

  /** Removed points that are actually on screen, i.e. in the snapshot. */
  ghostedCount(): number {
    if (this.overlayState === null) return 0;
    let n = 0;
    for (const id of this.snapshot.ids) {
      if (this.overlayState.removedIds.has(Number(id))) n++;
    }
    return n;
  }

  /** Overlay present iff the service reports a pending edit. */
  syncPending(hasPending: boolean): void {
    if ((this.overlayState !== null) !== hasPending) {
      throw new Error(
        `overlay/pending mismatch: overlay ${this.overlayState !== null}, service ${hasPending}`,
      );
    }
  }

  /** Uniformly subsampled copy for rendering; the snapshot is untouched. */
  displayPoints(cap: number = DISPLAY_POINT_CAP): PointBatch {
    if (!(cap > 0)) throw new Error("display cap must be positive");
    const n = this.snapshot.ids.length;
    if (n <= cap) return this.snapshot;
    const out: PointBatch = {
      ids: new BigInt64Array(cap),
      positions: new Float32Array(cap * 3),
      colors: new Uint8Array(cap * 3),
    };
    for (let j = 0; j < cap; j++) {
      const i = Math.floor((j * n) / cap);
      out.ids[j] = this.snapshot.ids[i];
      out.positions[j * 3] = this.snapshot.positions[i * 3];
      out.positions[j * 3 + 1] = this.snapshot.positions[i * 3 + 1];
      out.positions[j * 3 + 2] = this.snapshot.positions[i * 3 + 2];
      out.colors[j * 3] = this.snapshot.colors[i * 3];
      out.colors[j * 3 + 1] = this.snapshot.colors[i * 3 + 1];
      out.colors[j * 3 + 2] = this.snapshot.colors[i * 3 + 2];
    }
    return out;
  }
}
